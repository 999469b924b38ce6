//! Set-valued maps `F(p, x)`.
//!
//! Two shapes are supported. A fan carries a list of affine generators and
//! its value is the convex hull of their images; an affine-plus-cone map
//! carries a single affine part `g` and its value is `g(p,x) + C`. Both share
//! one generator struct, so evaluation, feasibility rows, and adjoint
//! assembly run through a single code path.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::fm::polytope_to_h;
use crate::geom::{member_distance, minkowski_scale_sum, GeneratorSet};
use crate::linalg::{add, dot, Mat};
use crate::project::project_polyhedron;
use crate::tol;

/// One affine branch `p -> M p + L x + b`, the shared currency for fan
/// generators and affine-plus-cone maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineGenerator {
    /// Output-by-parameter matrix (m x s).
    pub p_mat: Mat,
    /// Output-by-state matrix (m x n).
    pub x_mat: Mat,
    /// Constant offset (length m).
    pub offset: Vec<f64>,
}

impl AffineGenerator {
    pub fn new(p_mat: Mat, x_mat: Mat, offset: Vec<f64>) -> Result<Self> {
        if p_mat.nrows() != x_mat.nrows() || p_mat.nrows() != offset.len() {
            return Err(Error::DimensionMismatch(
                "generator blocks disagree on the output dimension".into(),
            ));
        }
        Ok(AffineGenerator {
            p_mat,
            x_mat,
            offset,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn image(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        add(
            &add(&self.p_mat.mul_vec(p), &self.x_mat.mul_vec(x)),
            &self.offset,
        )
    }

    /// Joint matrix `[M | L]` over the stacked variable (p, x).
    pub fn joint_mat(&self) -> Mat {
        self.p_mat.hcat(&self.x_mat).expect("row counts agree")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetValuedMap {
    /// Value is `conv{ M_i p + L_i x + b_i }`.
    Fan {
        generators: Vec<AffineGenerator>,
        /// Set when the fan was compiled from separable blocks; evaluation at
        /// negative coordinates is then only an outer hull (see
        /// [`SetValuedMap::negative_block_warning`]).
        vertex_product: bool,
    },
    /// Value is `g(p,x) + C` for the cone the map is paired with.
    AffinePlusCone { map: AffineGenerator },
}

impl SetValuedMap {
    pub fn fan(generators: Vec<AffineGenerator>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::EmptyFan);
        }
        let (m, s, n) = (
            generators[0].output_dim(),
            generators[0].p_mat.ncols(),
            generators[0].x_mat.ncols(),
        );
        for g in &generators {
            if g.output_dim() != m || g.p_mat.ncols() != s || g.x_mat.ncols() != n {
                return Err(Error::DimensionMismatch(
                    "fan generators disagree on dimensions".into(),
                ));
            }
        }
        Ok(SetValuedMap::Fan {
            generators,
            vertex_product: false,
        })
    }

    pub fn affine_plus_cone(map: AffineGenerator) -> Self {
        SetValuedMap::AffinePlusCone { map }
    }

    /// (parameter, state, output) dimensions.
    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            SetValuedMap::Fan { generators, .. } => {
                let g = &generators[0];
                (g.p_mat.ncols(), g.x_mat.ncols(), g.output_dim())
            }
            SetValuedMap::AffinePlusCone { map } => {
                (map.p_mat.ncols(), map.x_mat.ncols(), map.output_dim())
            }
        }
    }

    /// All affine branches, regardless of kind.
    pub fn branches(&self) -> &[AffineGenerator] {
        match self {
            SetValuedMap::Fan { generators, .. } => generators,
            SetValuedMap::AffinePlusCone { map } => std::slice::from_ref(map),
        }
    }

    /// True when every branch has a zero offset, which is what the
    /// homogeneity and subadditivity laws require.
    pub fn is_homogeneous(&self) -> bool {
        self.branches()
            .iter()
            .all(|g| g.offset.iter().all(|v| *v == 0.0))
    }

    /// True when this map came from separable blocks and `x` has a negative
    /// coordinate, where the vertex-product hull may strictly contain the
    /// intended value. Callers record this in their reports.
    pub fn negative_block_warning(&self, x: &[f64]) -> bool {
        matches!(
            self,
            SetValuedMap::Fan {
                vertex_product: true,
                ..
            }
        ) && x.iter().any(|v| *v < 0.0)
    }

    /// State-only branch matrices, valid when the parameter action and the
    /// offsets are shared by all branches: for a fixed parameter the map is
    /// then a translate of the homogeneous state-only fan `{L_i x}`.
    pub fn state_only_matrices(&self) -> Option<Vec<Mat>> {
        let branches = self.branches();
        let first = &branches[0];
        let shared = branches
            .iter()
            .all(|g| g.p_mat == first.p_mat && g.offset == first.offset);
        shared.then(|| branches.iter().map(|g| g.x_mat.clone()).collect())
    }
}

/// Value of the map at `(p, x)` as a generator set.
pub fn eval_map(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p: &[f64],
    x: &[f64],
) -> Result<GeneratorSet> {
    let (s, n, m) = map.dims();
    if p.len() != s || x.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "eval at parameter length {} / state length {}, expected {s} / {n}",
            p.len(),
            x.len()
        )));
    }
    match map {
        SetValuedMap::Fan { generators, .. } => {
            let points = generators.iter().map(|g| g.image(p, x)).collect();
            GeneratorSet::from_points(m, points)
        }
        SetValuedMap::AffinePlusCone { map } => {
            let rays = cone.extreme_rays()?.to_vec();
            GeneratorSet::new(m, vec![map.image(p, x)], rays)
        }
    }
}

/// Compiles blocks `A_i` into the fan whose generators take one vertex from
/// each block: column `i` of every state matrix is a point of `A_i`. For
/// componentwise nonnegative states the value equals `sum A_i x_i`; for
/// negative coordinates it is an outer hull, which evaluation flags.
pub fn separable_fan(blocks: &[GeneratorSet]) -> Result<SetValuedMap> {
    if blocks.is_empty() {
        return Err(Error::EmptyFan);
    }
    let m = blocks[0].dim();
    for b in blocks {
        if b.dim() != m {
            return Err(Error::DimensionMismatch(
                "separable blocks live in different output spaces".into(),
            ));
        }
        if !b.rays().is_empty() {
            return Err(Error::InvalidInput(
                "separable blocks must be compact (points only)".into(),
            ));
        }
        if b.is_empty() {
            return Err(Error::InvalidInput("separable block is empty".into()));
        }
    }
    let n = blocks.len();
    let count: usize = blocks.iter().map(|b| b.points().len()).product();
    if count > 4096 {
        return Err(Error::InvalidInput(format!(
            "vertex product would need {count} generators"
        )));
    }
    let mut choices: Vec<Vec<&Vec<f64>>> = vec![Vec::new()];
    for b in blocks {
        let mut next = Vec::with_capacity(choices.len() * b.points().len());
        for partial in &choices {
            for v in b.points() {
                let mut c = partial.clone();
                c.push(v);
                next.push(c);
            }
        }
        choices = next;
    }
    let mut generators = Vec::with_capacity(choices.len());
    for choice in choices {
        let mut x_mat = Mat::zeros(m, n);
        for (i, v) in choice.iter().enumerate() {
            for k in 0..m {
                x_mat.set(k, i, v[k]);
            }
        }
        generators.push(AffineGenerator::new(
            Mat::zeros(m, 0),
            x_mat,
            vec![0.0; m],
        )?);
    }
    Ok(SetValuedMap::Fan {
        generators,
        vertex_product: true,
    })
}

/// One sampled failure of the concavity inclusion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcavityViolation {
    pub sample: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub samples: usize,
    pub violations: Vec<ConcavityViolation>,
    pub max_gap: f64,
}

impl ConcavityReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples the concavity inclusion for the map's own evaluation.
pub fn c_concavity_audit(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    sample_count: usize,
    seed: u64,
) -> Result<ConcavityReport> {
    let (s, n, _) = map.dims();
    c_concavity_audit_with(
        &|p, x| eval_map(map, cone, p, x),
        (s, n),
        cone,
        sample_count,
        seed,
    )
}

/// Concavity audit over an arbitrary evaluator: for sampled pairs and mixing
/// weight `t`, every point of the value at the mixed argument must belong to
/// the scaled sum of the endpoint values fattened by the cone.
pub fn c_concavity_audit_with(
    eval: &dyn Fn(&[f64], &[f64]) -> Result<GeneratorSet>,
    dims: (usize, usize),
    cone: &PolyhedralCone,
    sample_count: usize,
    seed: u64,
) -> Result<ConcavityReport> {
    if sample_count == 0 {
        return Err(Error::InvalidInput("audit needs at least one sample".into()));
    }
    let (s, n) = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |len: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()
    };
    let cone_rays: Vec<Vec<f64>> = cone.extreme_rays()?.to_vec();
    let mut violations = Vec::new();
    let mut max_gap = 0.0f64;
    for sample in 0..sample_count {
        let (p1, x1) = (draw(s, &mut rng), draw(n, &mut rng));
        let (p2, x2) = (draw(s, &mut rng), draw(n, &mut rng));
        let t: f64 = rng.gen_range(0.05..0.95);
        let pm = crate::linalg::axpy(&crate::linalg::scale(&p1, t), 1.0 - t, &p2);
        let xm = crate::linalg::axpy(&crate::linalg::scale(&x1, t), 1.0 - t, &x2);
        let v1 = eval(&p1, &x1)?;
        let v2 = eval(&p2, &x2)?;
        let vm = eval(&pm, &xm)?;
        let target = minkowski_scale_sum(&v1, &v2, t)?.with_extra_rays(&cone_rays)?;
        for point in vm.points() {
            let gap = member_distance(&target, point)?.unwrap_or(f64::INFINITY);
            max_gap = max_gap.max(gap);
            if gap > 1e-8 {
                violations.push(ConcavityViolation { sample, gap });
            }
        }
    }
    Ok(ConcavityReport {
        samples: sample_count,
        violations,
        max_gap,
    })
}

/// Whether the value at `(p, x)` is bounded relative to the cone. Fan values
/// are compact, hence always bounded; an affine-plus-cone value fails exactly
/// when some facet sees the affine part below zero while the cone recedes
/// inside that facet's hyperplane.
pub fn c_boundedness_check(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p: &[f64],
    x: &[f64],
) -> Result<bool> {
    let g = match map {
        SetValuedMap::Fan { .. } => return Ok(true),
        SetValuedMap::AffinePlusCone { map } => map.image(p, x),
    };
    for a in cone.facets() {
        if dot(a, &g) >= -tol::FEAS {
            continue;
        }
        if cone_has_direction_in_hyperplane(cone, a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Is there a nonzero direction of the cone orthogonal to `normal`? Decided
/// by pushing each coordinate over the clipped cone-and-hyperplane set.
fn cone_has_direction_in_hyperplane(cone: &PolyhedralCone, normal: &[f64]) -> Result<bool> {
    let dim = cone.dim();
    let mut region = cone.halfspaces();
    region.add_row(normal.to_vec(), 0.0)?;
    region.add_row(normal.iter().map(|v| -v).collect(), 0.0)?;
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        let mut ne = vec![0.0; dim];
        ne[k] = -1.0;
        region.add_row(e, 1.0)?;
        region.add_row(ne, 1.0)?;
    }
    for k in 0..dim {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; dim];
            c[k] = sign;
            if let crate::lp::LpOutcome::Optimal { value, .. } = crate::lp::lp_solve(&c, &region)? {
                if value < -1e-9 {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// Exact Pompeiu-Hausdorff distance between two compact generator sets,
/// computed vertex-against-polytope in both directions.
pub fn hausdorff_polytopes(a: &GeneratorSet, b: &GeneratorSet) -> Result<f64> {
    if !a.rays().is_empty() || !b.rays().is_empty() {
        return Err(Error::InvalidInput(
            "Hausdorff distance requires compact sets".into(),
        ));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput(
            "Hausdorff distance of an empty set".into(),
        ));
    }
    let ha = polytope_to_h(a)?;
    let hb = polytope_to_h(b)?;
    let mut worst = 0.0f64;
    for p in a.points() {
        worst = worst.max(project_polyhedron(&hb, p)?.1);
    }
    for q in b.points() {
        worst = worst.max(project_polyhedron(&ha, q)?.1);
    }
    Ok(worst)
}

/// Lipschitz bound for evaluation: the largest operator norm among the joint
/// branch matrices `[M | L]`.
pub fn map_lipschitz_bound(map: &SetValuedMap) -> f64 {
    map.branches()
        .iter()
        .map(|g| g.joint_mat().op_norm())
        .fold(0.0, f64::max)
}
