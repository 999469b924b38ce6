//! Polyhedral cones `{y : <a_j, y> >= 0}` and the calculus built on them:
//! distance, normal cones at boundary points, and the excess of a generator
//! set over the cone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{GeneratorSet, PolyhedronH};
use crate::linalg::{dot, norm2, null_space};
use crate::lp::{lp_solve, LpOutcome};
use crate::project::project_unchecked;
use crate::tol;

/// A closed convex polyhedral cone given by facet normals: membership means
/// every inner product `<a_j, y>` is nonnegative. At least one facet is
/// required, so the cone is always a proper subset of the space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralCone {
    dim: usize,
    facets: Vec<Vec<f64>>,
    /// Generating rays, extracted at construction for small dimensions;
    /// `None` above `tol::RAY_DIM_LIMIT`.
    extreme_rays: Option<Vec<Vec<f64>>>,
}

impl PolyhedralCone {
    pub fn new(dim: usize, facets: Vec<Vec<f64>>) -> Result<Self> {
        if facets.is_empty() {
            return Err(Error::InvalidInput(
                "a cone needs at least one facet normal".into(),
            ));
        }
        if facets.iter().any(|a| a.len() != dim) {
            return Err(Error::DimensionMismatch("facet normal length".into()));
        }
        if facets.iter().any(|a| norm2(a) == 0.0) {
            return Err(Error::InvalidInput("zero facet normal".into()));
        }
        let extreme_rays = if dim <= tol::RAY_DIM_LIMIT {
            Some(extract_rays(dim, &facets))
        } else {
            None
        };
        Ok(PolyhedralCone {
            dim,
            facets,
            extreme_rays,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Vec<f64>] {
        &self.facets
    }

    /// Rays generating the cone, when the dimension admits extraction.
    pub fn extreme_rays(&self) -> Result<&[Vec<f64>]> {
        self.extreme_rays
            .as_deref()
            .ok_or(Error::RaysUnavailable(self.dim))
    }

    /// The cone as half-space rows `<-a_j, y> <= 0`.
    pub fn halfspaces(&self) -> PolyhedronH {
        let rows = self
            .facets
            .iter()
            .map(|a| (a.iter().map(|v| -v).collect::<Vec<f64>>(), 0.0))
            .collect();
        PolyhedronH::new(self.dim, rows).expect("facet normals are nonzero")
    }

    pub fn contains(&self, y: &[f64], tolerance: f64) -> bool {
        self.facets.iter().all(|a| dot(a, y) >= -tolerance)
    }

    /// Euclidean projection onto the cone and the distance to it.
    pub fn project(&self, y: &[f64]) -> (Vec<f64>, f64) {
        if self.contains(y, 0.0) {
            return (y.to_vec(), 0.0);
        }
        project_unchecked(&self.halfspaces(), y)
    }

    pub fn dist(&self, y: &[f64]) -> f64 {
        self.project(y).1
    }

    /// Normal cone at a member point: the cone spanned by the negated normals
    /// of the facets active at `y` (active is judged relative to `1 + |y|`).
    /// At interior points this is the origin alone.
    pub fn normal_cone(&self, y: &[f64]) -> Result<GeneratorSet> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch("normal cone base point".into()));
        }
        let scale = 1.0 + norm2(y);
        let worst = self
            .facets
            .iter()
            .map(|a| -dot(a, y))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > tol::FEAS * scale {
            return Err(Error::PointNotInCone(worst));
        }
        let rays: Vec<Vec<f64>> = self
            .facets
            .iter()
            .filter(|a| dot(a, y).abs() <= tol::ACTIVE * scale)
            .map(|a| a.iter().map(|v| -v).collect())
            .collect();
        GeneratorSet::new(self.dim, vec![vec![0.0; self.dim]], rays)
    }

    /// Diagnostic: does the cone collapse to the origin? Decided by pushing
    /// each coordinate to its extremes over the cone clipped to a unit box.
    pub fn is_trivial(&self) -> Result<bool> {
        let mut region = self.halfspaces();
        for k in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[k] = 1.0;
            let mut ne = vec![0.0; self.dim];
            ne[k] = -1.0;
            region.add_row(e, 1.0)?;
            region.add_row(ne, 1.0)?;
        }
        for k in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut c = vec![0.0; self.dim];
                c[k] = sign;
                if let LpOutcome::Optimal { value, .. } = lp_solve(&c, &region)? {
                    if value < -1e-9 {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// Generating rays = (plus and minus the lineality basis) together with the
/// one-dimensional null spaces of facet subsets, filtered by membership.
fn extract_rays(dim: usize, facets: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let lineality = null_space(facets, dim, 1e-9);
    let l = lineality.len();
    let mut rays: Vec<Vec<f64>> = Vec::new();
    for v in &lineality {
        rays.push(v.clone());
        rays.push(v.iter().map(|x| -x).collect());
    }
    // Candidate rays of the pointed part: where d - l - 1 facets are active
    // and the lineality directions are orthogonal.
    let want = match (dim - l).checked_sub(1) {
        Some(w) => w,
        None => return dedupe(rays),
    };
    let contains = |y: &[f64]| facets.iter().all(|a| dot(a, y) >= -1e-9);
    for subset in subsets_of_size(facets.len(), want) {
        let mut stack: Vec<Vec<f64>> = subset.iter().map(|&j| facets[j].clone()).collect();
        stack.extend(lineality.iter().cloned());
        let ns = null_space(&stack, dim, 1e-9);
        if ns.len() != 1 {
            continue;
        }
        let v = &ns[0];
        if contains(v) {
            rays.push(v.clone());
        }
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        if contains(&neg) {
            rays.push(neg);
        }
    }
    dedupe(rays)
}

fn dedupe(rays: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in rays {
        let len = norm2(&r);
        if len <= 1e-12 {
            continue;
        }
        let unit: Vec<f64> = r.iter().map(|x| x / len).collect();
        if !out.iter().any(|u| dot(u, &unit) >= 1.0 - 1e-9) {
            out.push(unit);
        }
    }
    out
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Excess of a generator set over a cone: the largest distance from a point
/// of the set to the cone. A recession direction that leaves the cone makes
/// the excess infinite; the empty set has excess zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Excess {
    Finite(f64),
    /// Some ray escapes the cone, so distances grow without bound.
    Unbounded,
}

impl Excess {
    pub fn value(&self) -> f64 {
        match self {
            Excess::Finite(v) => *v,
            Excess::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Excess::Finite(_))
    }
}

pub fn excess_over_cone(set: &GeneratorSet, cone: &PolyhedralCone) -> Result<Excess> {
    if set.dim() != cone.dim() {
        return Err(Error::DimensionMismatch(
            "excess of a set over a cone in another dimension".into(),
        ));
    }
    if set.is_empty() {
        return Ok(Excess::Finite(0.0));
    }
    for r in set.rays() {
        // A direction stays in the cone exactly when all facet margins are
        // nonnegative along it.
        let scale = 1.0 + norm2(r);
        if !cone.contains(r, tol::FEAS * scale) {
            return Ok(Excess::Unbounded);
        }
    }
    // Distance to the cone is convex, so the supremum over the set sits at a
    // generator point.
    let worst = set
        .points()
        .iter()
        .map(|p| cone.dist(p))
        .fold(0.0f64, f64::max);
    Ok(Excess::Finite(worst))
}
