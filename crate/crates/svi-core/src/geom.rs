//! Polyhedral set representations.
//!
//! Two currencies are used throughout the crate: `GeneratorSet` carries a
//! V-representation `conv(points) + cone(rays)` and `PolyhedronH` carries an
//! intersection of closed half-spaces `<normal, x> <= offset`. Conversions
//! between the two live in the elimination module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_inf, scale};
use crate::lp::{solve_standard, StandardOutcome};
use crate::tol;

/// `conv(points) + cone(rays)`. An empty point list denotes the empty set:
/// adding anything to the empty set leaves it empty, so rays without points
/// still describe the empty set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    rays: Vec<Vec<f64>>,
}

impl GeneratorSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, rays: Vec<Vec<f64>>) -> Result<Self> {
        if points.iter().any(|p| p.len() != dim) || rays.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(
                "generator length differs from the ambient dimension".into(),
            ));
        }
        if rays.iter().any(|r| norm_inf(r) == 0.0) {
            return Err(Error::InvalidInput("zero vector listed as a ray".into()));
        }
        Ok(GeneratorSet { dim, points, rays })
    }

    pub fn empty(dim: usize) -> Self {
        GeneratorSet {
            dim,
            points: Vec::new(),
            rays: Vec::new(),
        }
    }

    pub fn from_points(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        GeneratorSet::new(dim, points, Vec::new())
    }

    pub fn singleton(point: Vec<f64>) -> Self {
        GeneratorSet {
            dim: point.len(),
            points: vec![point],
            rays: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn rays(&self) -> &[Vec<f64>] {
        &self.rays
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Shifts every point by `offset`; rays are direction data and stay put.
    pub fn translate(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch("translation offset length".into()));
        }
        Ok(GeneratorSet {
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|p| axpy(p, 1.0, offset))
                .collect(),
            rays: self.rays.clone(),
        })
    }

    /// Appends extra recession directions.
    pub fn with_extra_rays(mut self, rays: &[Vec<f64>]) -> Result<Self> {
        for r in rays {
            if r.len() != self.dim {
                return Err(Error::DimensionMismatch("ray length".into()));
            }
            if norm_inf(r) == 0.0 {
                return Err(Error::InvalidInput("zero vector listed as a ray".into()));
            }
            self.rays.push(r.clone());
        }
        Ok(self)
    }
}

/// Smallest total deviation (sum of absolute coordinate residuals) between
/// `y` and the set, found by one linear program over convex point weights and
/// nonnegative ray weights. `None` when the set is empty.
pub fn member_distance(set: &GeneratorSet, y: &[f64]) -> Result<Option<f64>> {
    if y.len() != set.dim {
        return Err(Error::DimensionMismatch(
            "query point length differs from the set dimension".into(),
        ));
    }
    if set.is_empty() {
        return Ok(None);
    }
    let d = set.dim;
    let np = set.points.len();
    let nr = set.rays.len();
    // Columns: point weights, ray weights, positive and negative residuals.
    let cols = np + nr + 2 * d;
    let mut rows = Vec::with_capacity(d + 1);
    let mut rhs = Vec::with_capacity(d + 1);
    for k in 0..d {
        let mut row = vec![0.0; cols];
        for (i, p) in set.points.iter().enumerate() {
            row[i] = p[k];
        }
        for (j, r) in set.rays.iter().enumerate() {
            row[np + j] = r[k];
        }
        row[np + nr + k] = 1.0;
        row[np + nr + d + k] = -1.0;
        rows.push(row);
        rhs.push(y[k]);
    }
    let mut convex = vec![0.0; cols];
    for c in convex.iter_mut().take(np) {
        *c = 1.0;
    }
    rows.push(convex);
    rhs.push(1.0);

    let mut cost = vec![0.0; cols];
    for c in cost.iter_mut().skip(np + nr) {
        *c = 1.0;
    }
    match solve_standard(&cost, &rows, &rhs)? {
        StandardOutcome::Optimal { value, .. } => Ok(Some(value.max(0.0))),
        // Residual columns make the system feasible and the cost is bounded
        // below by zero, so neither branch is reachable.
        StandardOutcome::Unbounded { .. } | StandardOutcome::Infeasible { .. } => Err(
            Error::InvalidInput("membership program failed to produce a residual".into()),
        ),
    }
}

/// Membership of `y` in `conv(points) + cone(rays)` up to slack `tol`.
/// The empty set contains nothing.
pub fn member(set: &GeneratorSet, y: &[f64], tolerance: f64) -> Result<bool> {
    Ok(match member_distance(set, y)? {
        None => false,
        Some(residual) => residual <= tolerance,
    })
}

/// `t * a + (1 - t) * b` for `t` in `[0, 1]`: convex points combine pairwise,
/// recession directions are pooled. The endpoints return the untouched input,
/// and an empty operand makes the sum empty.
pub fn minkowski_scale_sum(a: &GeneratorSet, b: &GeneratorSet, t: f64) -> Result<GeneratorSet> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(
            "scaled sum of sets in different dimensions".into(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!(
            "scale {t} outside [0, 1]"
        )));
    }
    if t == 1.0 {
        return Ok(a.clone());
    }
    if t == 0.0 {
        return Ok(b.clone());
    }
    if a.is_empty() || b.is_empty() {
        return Ok(GeneratorSet::empty(a.dim));
    }
    let mut points = Vec::with_capacity(a.points.len() * b.points.len());
    for pa in &a.points {
        for pb in &b.points {
            points.push(axpy(&scale(pa, t), 1.0 - t, pb));
        }
    }
    let mut rays = a.rays.clone();
    rays.extend(b.rays.iter().cloned());
    GeneratorSet::new(a.dim, points, rays)
}

/// Intersection of closed half-spaces `<normal, x> <= offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyhedronH {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl PolyhedronH {
    pub fn new(dim: usize, rows: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let mut poly = PolyhedronH::whole_space(dim);
        for (normal, offset) in rows {
            poly.add_row(normal, offset)?;
        }
        Ok(poly)
    }

    /// No rows: every point satisfies the (empty) system.
    pub fn whole_space(dim: usize) -> Self {
        PolyhedronH {
            dim,
            normals: Vec::new(),
            offsets: Vec::new(),
        }
    }

    /// A canonical two-row contradiction, used where an elimination step
    /// discovers that a system has no solutions at all.
    pub fn trivially_empty(dim: usize) -> Self {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        let mut ne = vec![0.0; dim];
        ne[0] = -1.0;
        PolyhedronH {
            dim,
            normals: vec![e, ne],
            offsets: vec![-1.0, -1.0],
        }
    }

    pub fn add_row(&mut self, normal: Vec<f64>, offset: f64) -> Result<()> {
        if normal.len() != self.dim {
            return Err(Error::DimensionMismatch("half-space normal length".into()));
        }
        if norm_inf(&normal) == 0.0 {
            return Err(Error::InvalidInput("zero normal in half-space row".into()));
        }
        self.normals.push(normal);
        self.offsets.push(offset);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.normals.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.normals
            .iter()
            .map(|n| n.as_slice())
            .zip(self.offsets.iter().copied())
    }

    /// Largest row violation `<n, x> - b`; negative deep inside, `-inf` when
    /// there are no rows.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.rows()
            .map(|(n, b)| dot(n, x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64], tolerance: f64) -> bool {
        self.margin(x) <= tolerance
    }
}

/// Default-tolerance membership helper.
pub fn member_default(set: &GeneratorSet, y: &[f64]) -> Result<bool> {
    member(set, y, tol::MEMBER)
}
