//! Sensitivity analysis at solved parameters: subdifferentials of the
//! optimal-value function, assembled exactly from objective subgradients and
//! the conic multipliers generated by the constraint map.
//!
//! The central routine is [`value_subdiff`]. Given a parameter where the
//! problem solves to a finite optimum, it builds the set
//!
//! ```text
//! { sum_k nu_k g_p^k  +  sum_l mu_l q_l }
//! ```
//!
//! over convex weights `nu` on the objective-subdifferential points and
//! nonnegative weights `mu` on the rays of the map's polar cone at the
//! solution, subject to the stationarity constraint that the state components
//! cancel: `sum_k nu_k g_x^k + sum_l mu_l y_l = 0`. For polyhedral data this
//! set is exactly the subdifferential of the value function.
//!
//! Depending on the parameter dimension, the set is extracted as an interval
//! (two bound problems), as an exact planar polyhedron (variable elimination
//! followed by vertex recovery), or as a sampled inner approximation together
//! with outer supporting half-spaces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{excess_over_cone, PolyhedralCone};
use crate::error::{Error, Result};
use crate::feasible::feasible_region;
use crate::fm::fm_project;
use crate::geom::{GeneratorSet, PolyhedronH};
use crate::increase::sampled_directions;
use crate::instance::{ConvexObjective, ProblemInstance};
use crate::linalg::{dist2, dot, norm2, solve_square};
use crate::lp::{lp_solve, region_is_empty, LpOutcome};
use crate::map::{eval_map, SetValuedMap};
use crate::tol;
use crate::value::{solve, SolveStatus};

/// Seed for the fixed direction sample used by the sampled support fallback.
const SUPPORT_SEED: u64 = 0x5_EED;

/// Points closer than this are merged when vertex lists are assembled.
const POINT_MERGE: f64 = 1e-7;

/// How certain we are that the assembled set equals the true subdifferential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualification {
    /// Fully polyhedral data: the assembly is exact with no further
    /// assumptions.
    PolyhedralCertified,
    /// A quadratic term is present; the assembly formula is used as stated
    /// but no constraint-qualification certificate is produced.
    Unverified,
}

/// Checks whether the exactness of the subdifferential assembly is certified
/// by the structure of the instance alone.
pub fn qualification_check(instance: &ProblemInstance) -> Qualification {
    if instance.objective.is_max_affine() {
        Qualification::PolyhedralCertified
    } else {
        Qualification::Unverified
    }
}

/// How the value subdifferential was extracted from the weight system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubdiffMode {
    /// One-dimensional parameter: the exact interval endpoints from two
    /// bound problems.
    ExactLp,
    /// Two-dimensional parameter: exact variable elimination onto the
    /// parameter slots, then vertex recovery.
    ExactFm,
    /// Sampled support functions: the point list is an inner approximation
    /// and `outer_halfspaces` an outer one.
    SupportSampled,
}

/// Subdifferential of the value function at one parameter, together with the
/// ingredients it was assembled from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubdiffReport {
    pub p_bar: Vec<f64>,
    /// The minimizer the assembly was anchored at.
    pub x_bar: Vec<f64>,
    /// Subdifferential of the objective at `(p_bar, x_bar)`, over joint
    /// `(parameter, state)` coordinates.
    pub objective_subdiff: GeneratorSet,
    /// Polar cone of the constraint map at `(p_bar, x_bar)`: origin plus the
    /// rays `(M_i^T u, L_i^T u)` over active branches and active cone facets.
    pub coderivative_cone: GeneratorSet,
    /// The assembled subdifferential of the value function at `p_bar`.
    pub value_subdiff: GeneratorSet,
    /// Supporting half-spaces recorded by the non-exact extraction paths;
    /// `None` when the generator description is already exact.
    pub outer_halfspaces: Option<PolyhedronH>,
    pub qualification: Qualification,
    pub mode: SubdiffMode,
    /// Whether the minimizer face at `p_bar` has more than one point. The
    /// assembly is anchored at a single minimizer; for polyhedral data the
    /// result is independent of which one, so this flag is diagnostic.
    pub argmin_nonsingleton: bool,
}

impl SubdiffReport {
    /// Endpoints `(lo, hi)` of a one-dimensional, bounded subdifferential.
    pub fn interval_1d(&self) -> Option<(f64, f64)> {
        let set = &self.value_subdiff;
        if set.dim() != 1 || !set.rays().is_empty() || set.points().is_empty() {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for pt in set.points() {
            lo = lo.min(pt[0]);
            hi = hi.max(pt[0]);
        }
        Some((lo, hi))
    }
}

/// Subdifferential of the objective at `(p, x)` in joint
/// `(parameter, state)` coordinates: the convex hull of the active affine
/// slopes, each shifted by the gradient of the quadratic term.
pub fn objective_subdiff(
    objective: &ConvexObjective,
    p: &[f64],
    x: &[f64],
) -> Result<GeneratorSet> {
    let (s, n) = objective.dims();
    if p.len() != s || x.len() != n {
        return Err(Error::DimensionMismatch(
            "objective subdifferential base point".into(),
        ));
    }
    let quad = objective.quad_gradient(p, x);
    let points: Vec<Vec<f64>> = objective
        .active_pieces(p, x, tol::ACTIVE)
        .into_iter()
        .map(|k| {
            let piece = &objective.pieces()[k];
            piece
                .g_p
                .iter()
                .chain(piece.g_x.iter())
                .zip(&quad)
                .map(|(g, q)| g + q)
                .collect()
        })
        .collect();
    GeneratorSet::new(s + n, points, Vec::new())
}

/// Indices of the branches whose images sit deepest outside the cone,
/// judged relative to the worst violation. At feasible points every branch
/// qualifies.
pub fn active_generators(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p: &[f64],
    x: &[f64],
    tolerance: f64,
) -> Result<Vec<usize>> {
    let branches = map.branches();
    if branches.is_empty() {
        return Err(Error::EmptyFan);
    }
    let dists: Vec<f64> = branches
        .iter()
        .map(|b| cone.dist(&b.image(p, x)))
        .collect();
    let worst = dists.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = worst - tolerance * (1.0 + worst.abs());
    Ok((0..branches.len()).filter(|&i| dists[i] >= cut).collect())
}

/// Polar cone of the constraint map at a solution point `(p_bar, x_bar)`:
/// the conic hull of `(M_i^T u, L_i^T u)` over active branches `i` and rays
/// `u` of the cone's normal cone at the branch image. The base point must be
/// feasible; otherwise the distance of the worst branch image is reported.
pub fn coderivative_cone(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p_bar: &[f64],
    x_bar: &[f64],
) -> Result<GeneratorSet> {
    let image = eval_map(map, cone, p_bar, x_bar)?;
    let excess = excess_over_cone(&image, cone)?;
    if !excess.is_finite() || excess.value() > tol::FEAS {
        return Err(Error::NotASolutionPoint(excess.value()));
    }
    let (s, n, _) = map.dims();
    let mut rays: Vec<Vec<f64>> = Vec::new();
    for &i in &active_generators(map, cone, p_bar, x_bar, tol::ACTIVE)? {
        let branch = &map.branches()[i];
        let normal = cone.normal_cone(&branch.image(p_bar, x_bar))?;
        for u in normal.rays() {
            let mapped: Vec<f64> = branch
                .p_mat
                .tr_mul_vec(u)
                .into_iter()
                .chain(branch.x_mat.tr_mul_vec(u))
                .collect();
            push_ray_unique(&mut rays, mapped);
        }
    }
    GeneratorSet::new(s + n, vec![vec![0.0; s + n]], rays)
}

/// Appends `ray` unless it is numerically zero or a positive multiple of a
/// ray already present.
fn push_ray_unique(rays: &mut Vec<Vec<f64>>, ray: Vec<f64>) {
    let len = norm2(&ray);
    if len <= 1e-12 {
        return;
    }
    let duplicate = rays
        .iter()
        .any(|r| dot(r, &ray) >= (1.0 - 1e-12) * norm2(r) * len);
    if !duplicate {
        rays.push(ray);
    }
}

/// Exact subdifferential of the optimal-value function at `p_bar`.
///
/// Solves the instance at `p_bar` (the status must be optimal), anchors the
/// assembly at the returned minimizer, and extracts the set of parameter
/// slopes compatible with stationarity. With a quadratic objective term the
/// formula is not certified exact; pass `allow_unverified` to run it anyway
/// with the report flagged accordingly.
pub fn value_subdiff(
    instance: &ProblemInstance,
    p_bar: &[f64],
    allow_unverified: bool,
) -> Result<SubdiffReport> {
    instance.validate()?;
    let qualification = qualification_check(instance);
    if qualification == Qualification::Unverified && !allow_unverified {
        return Err(Error::QualificationUnverified);
    }
    let solved = solve(instance, p_bar)?;
    let (value, x_bar) = match &solved.status {
        SolveStatus::Optimal { value, argmin } => (*value, argmin.clone()),
        _ => {
            return Err(Error::InvalidInput(
                "the value subdifferential needs a finite optimum at the base parameter".into(),
            ))
        }
    };
    let objective_subdiff = objective_subdiff(&instance.objective, p_bar, &x_bar)?;
    let coderivative = coderivative_cone(&instance.map, &instance.cone, p_bar, &x_bar)?;

    let s = instance.dims.s;
    let n = instance.dims.n;
    let kk = objective_subdiff.points().len();
    let rr = coderivative.rays().len();
    let cols = kk + rr;

    // Column t of `out` maps weight t to its parameter-slope contribution;
    // column t of `state` to its state-slot contribution.
    let mut out = vec![vec![0.0; cols]; s];
    let mut state = vec![vec![0.0; cols]; n];
    for (k, pt) in objective_subdiff.points().iter().enumerate() {
        for i in 0..s {
            out[i][k] = pt[i];
        }
        for j in 0..n {
            state[j][k] = pt[s + j];
        }
    }
    for (l, ray) in coderivative.rays().iter().enumerate() {
        for i in 0..s {
            out[i][kk + l] = ray[i];
        }
        for j in 0..n {
            state[j][kk + l] = ray[s + j];
        }
    }

    // Weight polytope: nu >= 0 summing to one, mu >= 0, state slots cancel.
    let mut weights = PolyhedronH::whole_space(cols);
    for t in 0..cols {
        let mut row = vec![0.0; cols];
        row[t] = -1.0;
        weights.add_row(row, 0.0)?;
    }
    let mut ones = vec![0.0; cols];
    for slot in ones.iter_mut().take(kk) {
        *slot = 1.0;
    }
    weights.add_row(ones.clone(), 1.0)?;
    weights.add_row(ones.iter().map(|v| -v).collect(), -1.0)?;
    for j in 0..n {
        weights.add_row(state[j].clone(), 0.0)?;
        weights.add_row(state[j].iter().map(|v| -v).collect(), 0.0)?;
    }

    let (value_subdiff, outer_halfspaces, mode) = if s == 1 {
        let (points, rays) = interval_by_bounds(&out[0], &weights)?;
        (GeneratorSet::new(1, points, rays)?, None, SubdiffMode::ExactLp)
    } else if s == 2 && s + cols <= tol::FM_MAX_DIM {
        let projected = project_onto_parameter_slots(&out, &weights, cols)?;
        let (points, rays) = planar_h_to_v(&projected)?;
        (
            GeneratorSet::new(2, points, rays)?,
            Some(projected),
            SubdiffMode::ExactFm,
        )
    } else {
        let (points, rays, outer) = support_sampled(&out, &weights, s)?;
        (
            GeneratorSet::new(s, points, rays)?,
            Some(outer),
            SubdiffMode::SupportSampled,
        )
    };

    let argmin_nonsingleton = argmin_is_nonsingleton(instance, p_bar, value)?;
    Ok(SubdiffReport {
        p_bar: p_bar.to_vec(),
        x_bar,
        objective_subdiff,
        coderivative_cone: coderivative,
        value_subdiff,
        outer_halfspaces,
        qualification,
        mode,
        argmin_nonsingleton,
    })
}

/// One-dimensional extraction: minimize and maximize the output slope over
/// the weight polytope. An unbounded bound problem becomes a ray.
fn interval_by_bounds(
    out_row: &[f64],
    weights: &PolyhedronH,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut rays: Vec<Vec<f64>> = Vec::new();
    let mut endpoints: Vec<f64> = Vec::new();
    for sign in [1.0, -1.0] {
        let c: Vec<f64> = out_row.iter().map(|v| sign * v).collect();
        match lp_solve(&c, weights)? {
            LpOutcome::Optimal { value, .. } => endpoints.push(sign * value),
            LpOutcome::Unbounded { .. } => rays.push(vec![-sign]),
            LpOutcome::Infeasible { .. } => return Ok((Vec::new(), Vec::new())),
        }
    }
    endpoints.sort_by(f64::total_cmp);
    endpoints.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    for e in endpoints {
        points.push(vec![e]);
    }
    if points.is_empty() {
        // Both directions unbounded: anchor the ray pair at any feasible
        // weight vector.
        if let LpOutcome::Optimal { point, .. } =
            lp_solve(&vec![0.0; weights.dim()], weights)?
        {
            points.push(vec![dot(out_row, &point)]);
        }
    }
    Ok((points, rays))
}

/// Eliminates the weight variables from the joint system over
/// `(parameter slopes, weights)`, leaving half-spaces over the slopes alone.
fn project_onto_parameter_slots(
    out: &[Vec<f64>],
    weights: &PolyhedronH,
    cols: usize,
) -> Result<PolyhedronH> {
    let s = out.len();
    let dim = s + cols;
    let mut system = PolyhedronH::whole_space(dim);
    for (i, row_i) in out.iter().enumerate() {
        let mut row = vec![0.0; dim];
        row[i] = 1.0;
        for t in 0..cols {
            row[s + t] = -row_i[t];
        }
        system.add_row(row.iter().map(|v| -v).collect(), 0.0)?;
        system.add_row(row, 0.0)?;
    }
    for (normal, offset) in weights.rows() {
        let mut row = vec![0.0; dim];
        row[s..].copy_from_slice(normal);
        system.add_row(row, offset)?;
    }
    fm_project(&system, &(0..s).collect::<Vec<_>>())
}

/// Recovers a generator description of a planar polyhedron from its
/// half-space description: basic vertices from row pairs, recession rays
/// from the extreme rays of the recession cone.
fn planar_h_to_v(region: &PolyhedronH) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    debug_assert_eq!(region.dim(), 2);
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (normal, offset) in region.rows() {
        let len = norm2(normal);
        if len <= 1e-12 {
            if offset < -tol::FEAS {
                return Ok((Vec::new(), Vec::new()));
            }
            continue;
        }
        rows.push((normal.iter().map(|v| v / len).collect(), offset / len));
    }
    if rows.is_empty() {
        // No constraints left: the whole plane.
        return Ok((
            vec![vec![0.0, 0.0]],
            vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
        ));
    }
    if region_is_empty(region)? {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut points: Vec<Vec<f64>> = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let a = vec![rows[i].0.clone(), rows[j].0.clone()];
            let b = vec![rows[i].1, rows[j].1];
            let Some(v) = solve_square(&a, &b, 1e-10) else {
                continue;
            };
            let feasible = rows.iter().all(|(n, o)| dot(n, &v) <= o + POINT_MERGE);
            if feasible && !points.iter().any(|q| dist2(q, &v) <= POINT_MERGE) {
                points.push(v);
            }
        }
    }
    let facets: Vec<Vec<f64>> = rows
        .iter()
        .map(|(n, _)| n.iter().map(|v| -v).collect())
        .collect();
    let rays = PolyhedralCone::new(2, facets)?.extreme_rays()?.to_vec();
    if points.is_empty() {
        // Nonempty with no basic vertex (a line or half-plane): anchor with
        // one feasible point.
        if let LpOutcome::Optimal { point, .. } = lp_solve(&[0.0, 0.0], region)? {
            points.push(point);
        }
    }
    Ok((points, rays))
}

/// Sampled support-function extraction for three or more parameters:
/// maximizes a fixed direction sample over the weight polytope. The argmax
/// points form an inner approximation; the recorded support half-spaces an
/// outer one.
fn support_sampled(
    out: &[Vec<f64>],
    weights: &PolyhedronH,
    s: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, PolyhedronH)> {
    let cols = weights.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(SUPPORT_SEED);
    let dirs = sampled_directions(s, 6 * s + 18, &mut rng);
    let mut outer = PolyhedronH::whole_space(s);
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut rays: Vec<Vec<f64>> = Vec::new();
    for d in dirs {
        // Maximize <d, slopes> over the weights.
        let mut c = vec![0.0; cols];
        for (row_i, di) in out.iter().zip(&d) {
            for (ct, rt) in c.iter_mut().zip(row_i) {
                *ct -= di * rt;
            }
        }
        match lp_solve(&c, weights)? {
            LpOutcome::Optimal { value, point, .. } => {
                let w = apply_columns(out, &point);
                if !points.iter().any(|q| dist2(q, &w) <= POINT_MERGE) {
                    points.push(w);
                }
                outer.add_row(d, -value)?;
            }
            LpOutcome::Unbounded { direction, .. } => {
                push_ray_unique(&mut rays, apply_columns(out, &direction));
            }
            LpOutcome::Infeasible { .. } => {
                return Ok((Vec::new(), Vec::new(), PolyhedronH::trivially_empty(s)))
            }
        }
    }
    Ok((points, rays, outer))
}

fn apply_columns(out: &[Vec<f64>], z: &[f64]) -> Vec<f64> {
    out.iter().map(|row| dot(row, z)).collect()
}

/// Whether the optimal face at `p_bar` holds more than one minimizer.
/// Decided by pushing each state coordinate to its extremes over the face;
/// only meaningful for purely polyhedral objectives, `false` otherwise.
fn argmin_is_nonsingleton(
    instance: &ProblemInstance,
    p_bar: &[f64],
    value: f64,
) -> Result<bool> {
    if !instance.objective.is_max_affine() {
        return Ok(false);
    }
    let n = instance.dims.n;
    let mut face = feasible_region(&instance.map, &instance.cone, p_bar)?;
    for piece in instance.objective.pieces() {
        if norm2(&piece.g_x) <= 1e-12 {
            continue;
        }
        let cut = value + tol::FEAS - dot(&piece.g_p, p_bar) - piece.c;
        face.add_row(piece.g_x.clone(), cut)?;
    }
    for j in 0..n {
        let mut c = vec![0.0; n];
        c[j] = 1.0;
        let lo = match lp_solve(&c, &face)? {
            LpOutcome::Optimal { value, .. } => value,
            LpOutcome::Unbounded { .. } => return Ok(true),
            LpOutcome::Infeasible { .. } => return Ok(false),
        };
        for slot in c.iter_mut() {
            *slot = -*slot;
        }
        let hi = match lp_solve(&c, &face)? {
            LpOutcome::Optimal { value, .. } => -value,
            LpOutcome::Unbounded { .. } => return Ok(true),
            LpOutcome::Infeasible { .. } => return Ok(false),
        };
        if hi - lo > POINT_MERGE {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Two-sided difference-quotient probe of the value function along a
/// one-dimensional parameter. Returns `(left derivative, right derivative)`
/// estimated from the smallest step `h0 * shrink^(steps-1)`; every probe
/// must solve to a finite optimum.
pub fn subdiff_oracle_1d(
    instance: &ProblemInstance,
    p_bar: f64,
    h0: f64,
    shrink: f64,
    steps: usize,
) -> Result<(f64, f64)> {
    if instance.dims.s != 1 {
        return Err(Error::InvalidInput(
            "the difference-quotient probe needs a one-dimensional parameter".into(),
        ));
    }
    if h0 <= 0.0 || shrink <= 0.0 || shrink >= 1.0 || steps == 0 {
        return Err(Error::InvalidInput(
            "the probe needs h0 > 0, 0 < shrink < 1 and at least one step".into(),
        ));
    }
    let probe = |p: f64, offset: f64| -> Result<f64> {
        match solve(instance, &[p])?.status {
            SolveStatus::Optimal { value, .. } => Ok(value),
            _ => Err(Error::OracleProbeFailed(offset)),
        }
    };
    let v0 = probe(p_bar, 0.0)?;
    let mut h = h0;
    let mut forward = f64::INFINITY;
    let mut backward = f64::NEG_INFINITY;
    for _ in 0..steps {
        let f = (probe(p_bar + h, h)? - v0) / h;
        let b = (v0 - probe(p_bar - h, -h)?) / h;
        // Convexity drives the forward quotients down and the backward ones
        // up as the step shrinks.
        debug_assert!(f <= forward + 1e-6, "forward quotient grew as the step shrank");
        debug_assert!(b >= backward - 1e-6, "backward quotient fell as the step shrank");
        forward = f;
        backward = b;
        h *= shrink;
    }
    Ok((backward, forward))
}
