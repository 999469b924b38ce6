//! Metric increase machinery relative to the cone: open-covering bounds,
//! fan certificates, the rescaled-rotation bound, sampled verification of
//! the defining inclusion, and the problem constant derived from per-point
//! bounds over a grid.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{excess_over_cone, Excess, PolyhedralCone};
use crate::error::{Error, Result};
use crate::fm::polytope_to_h;
use crate::linalg::{norm2, scale, Mat};
use crate::lp::{lp_solve, LpOutcome};
use crate::map::{eval_map, SetValuedMap};
use crate::project::project_polyhedron;
use crate::tol;

/// Largest `η` such that the image of the unit ball under the matrix covers
/// `η` times the unit ball: the smallest singular value of the adjoint,
/// computed through the Gram matrix of the rows. Zero for genuinely
/// non-covering (wide-kernel or rank-deficient) matrices.
pub fn open_covering_bound(mat: &Mat) -> f64 {
    mat.min_singular_value()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertMethod {
    FanAnalytic,
    RotationAnalytic,
    NumericSampled,
    /// Certification failed; `alpha_lower` is absent.
    None,
}

/// Which variable block a fan certificate talks about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertScope {
    /// The joint variable (parameter and state stacked).
    Joint,
    /// The state alone, treating the parameter action as a translation.
    /// Valid only when all branches share the parameter matrix and offset.
    XOnly,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncreaseCertificate {
    /// Certified lower bound on the increase constant; `None` when
    /// certification failed (`method` is then [`CertMethod::None`]).
    pub alpha_lower: Option<f64>,
    pub method: CertMethod,
    /// Covering bound over the generator hull (when applicable).
    pub eta: f64,
    /// A direction mapped strictly inside the cone by every generator.
    pub interior_witness: Option<Vec<f64>>,
    pub notes: String,
}

/// Number of hull samples taken between each generator pair when refining
/// the covering bound; the bound is not concave over the hull, so vertices
/// alone could overestimate the minimum.
const HULL_SAMPLES_PER_PAIR: usize = 20;

/// Certificate for a homogeneous fan: the covering bound over the sampled
/// generator hull plus an interior condition checked by LP. On success the
/// increase constant is at least `eta + 1`.
pub fn fan_increase_certificate(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    scope: CertScope,
) -> Result<IncreaseCertificate> {
    let mats: Vec<Mat> = match scope {
        CertScope::Joint => {
            if !map.is_homogeneous() {
                return Err(Error::InvalidInput(
                    "joint certificate needs zero offsets in every branch".into(),
                ));
            }
            map.branches().iter().map(|g| g.joint_mat()).collect()
        }
        CertScope::XOnly => map.state_only_matrices().ok_or_else(|| {
            Error::InvalidInput(
                "state-only certificate needs a shared parameter action and offset".into(),
            )
        })?,
    };
    let mut eta = f64::INFINITY;
    for m in &mats {
        eta = eta.min(open_covering_bound(m));
    }
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            for k in 1..=HULL_SAMPLES_PER_PAIR {
                let t = k as f64 / (HULL_SAMPLES_PER_PAIR + 1) as f64;
                eta = eta.min(open_covering_bound(&convex_combination(&mats[i], &mats[j], t)));
            }
        }
    }
    let witness = interior_direction(&mats, cone)?;
    let ok = eta > 0.0 && witness.is_some();
    Ok(IncreaseCertificate {
        alpha_lower: ok.then_some(eta + 1.0),
        method: if ok { CertMethod::FanAnalytic } else { CertMethod::None },
        eta,
        interior_witness: witness,
        notes: format!(
            "{} generators, {} hull samples per pair, scope {scope:?}",
            mats.len(),
            HULL_SAMPLES_PER_PAIR
        ),
    })
}

fn convex_combination(a: &Mat, b: &Mat, t: f64) -> Mat {
    let mut rows = a.to_rows();
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = t * *v + (1.0 - t) * b.get(i, j);
        }
    }
    Mat::from_rows(rows).expect("rectangular by construction")
}

/// Searches for a direction `z` with `⟨a_j, G_i z⟩ ≥ ε` for every generator
/// and facet, by maximizing the worst margin over the unit box.
fn interior_direction(mats: &[Mat], cone: &PolyhedralCone) -> Result<Option<Vec<f64>>> {
    let k = mats[0].ncols();
    if k == 0 {
        return Ok(None);
    }
    // Variables (z, m): maximize m subject to m ≤ ⟨a_j, G_i z⟩, |z| ≤ 1, m ≤ 1.
    let mut region = crate::geom::PolyhedronH::whole_space(k + 1);
    for g in mats {
        for facet in cone.facets() {
            let mut row = g.tr_mul_vec(facet).iter().map(|v| -v).collect::<Vec<_>>();
            row.push(1.0);
            region.add_row(row, 0.0)?;
        }
    }
    for idx in 0..k {
        let mut e = vec![0.0; k + 1];
        e[idx] = 1.0;
        let mut ne = vec![0.0; k + 1];
        ne[idx] = -1.0;
        region.add_row(e, 1.0)?;
        region.add_row(ne, 1.0)?;
    }
    let mut cap = vec![0.0; k + 1];
    cap[k] = 1.0;
    region.add_row(cap, 1.0)?;
    let mut cost = vec![0.0; k + 1];
    cost[k] = -1.0;
    match lp_solve(&cost, &region)? {
        LpOutcome::Optimal { value, point, .. } => {
            let margin = -value;
            if margin >= tol::INTERIOR {
                Ok(Some(point[..k].to_vec()))
            } else {
                Ok(None)
            }
        }
        _ => Ok(None),
    }
}

/// `(1 − ell)·√n` for a rescaled rotation with an additive Lipschitz
/// perturbation, under the validity constraints on the rescale factor and
/// the perturbation modulus.
pub fn rotation_increase_bound(n: usize, lambda: f64, ell: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput("rotation bound needs n ≥ 2".into()));
    }
    let root = (n as f64).sqrt();
    if lambda <= n as f64 {
        return Err(Error::RescaleTooSmall {
            lambda,
            bound: n as f64,
        });
    }
    let ell_bound = 1.0 - 1.0 / root;
    if ell >= ell_bound {
        return Err(Error::PerturbationTooLarge {
            ell,
            bound: ell_bound,
        });
    }
    if ell < 0.0 {
        return Err(Error::InvalidInput("perturbation modulus must be ≥ 0".into()));
    }
    Ok((1.0 - ell) * root)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncreaseVerification {
    pub alpha: f64,
    pub delta: f64,
    pub radii: usize,
    pub dirs: usize,
    /// True when every sampled radius admitted a sampled witness passing
    /// every inclusion check. Sampling evidence, not a proof.
    pub holds_at_sampling: bool,
    /// Minimum over radii of the best witness margin `r − dist`; negative
    /// when some radius has no passing witness.
    pub worst_margin: f64,
}

/// Samples the defining inclusion: for each radius `r` there must be a point
/// `u` within `r` of `x0` whose value, fattened by `alpha·r`, stays within
/// distance `r` of the base value fattened by the cone.
#[allow(clippy::too_many_arguments)]
pub fn verify_increase_numeric(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p: &[f64],
    x0: &[f64],
    alpha: f64,
    delta: f64,
    radii: usize,
    dirs: usize,
    seed: u64,
) -> Result<IncreaseVerification> {
    if alpha <= 1.0 || delta <= 0.0 || radii == 0 || dirs == 0 {
        return Err(Error::InvalidInput(
            "verification needs alpha > 1, delta > 0, and positive sample counts".into(),
        ));
    }
    let (_, n, m) = map.dims();
    let base = eval_map(map, cone, p, x0)?;
    match excess_over_cone(&base, cone)? {
        Excess::Finite(e) if e > tol::FEAS => {}
        _ => {
            return Err(Error::InvalidInput(
                "verification requires a strictly infeasible base point".into(),
            ))
        }
    }
    // S = value at x0 fattened by the cone, as an H-representation.
    let fat = base.with_extra_rays(cone.extreme_rays()?)?;
    let target = polytope_to_h(&fat).map_err(|e| match e {
        Error::FmDimExceeded { dim, limit } => Error::VerificationUnavailable(format!(
            "elimination dimension {dim} exceeds limit {limit}"
        )),
        other => other,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state_dirs = sampled_directions(n, dirs, &mut rng);
    let image_dirs = sampled_directions(m, dirs, &mut rng);
    let mut worst_margin = f64::INFINITY;
    let mut holds = true;
    for ri in 1..=radii {
        let r = delta * ri as f64 / radii as f64;
        let mut best_for_r = f64::NEG_INFINITY;
        for w in &state_dirs {
            let u = crate::linalg::axpy(x0, r, w);
            let value_u = eval_map(map, cone, p, &u)?;
            let mut margin_u = f64::INFINITY;
            'checks: for y in value_u.points() {
                for v in &image_dirs {
                    let probe = crate::linalg::axpy(y, alpha * r, v);
                    let dist = project_polyhedron(&target, &probe)?.1;
                    margin_u = margin_u.min(r - dist);
                    if margin_u < best_for_r {
                        // This candidate cannot beat the current best.
                        break 'checks;
                    }
                }
            }
            best_for_r = best_for_r.max(margin_u);
        }
        worst_margin = worst_margin.min(best_for_r);
        if best_for_r < -1e-9 {
            holds = false;
        }
    }
    Ok(IncreaseVerification {
        alpha,
        delta,
        radii,
        dirs,
        holds_at_sampling: holds,
        worst_margin,
    })
}

/// Unit directions: the signed coordinate axes first (they include the 1-D
/// witnesses used by hand computations), then seeded random unit vectors.
pub(crate) fn sampled_directions(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(count + 2 * dim);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = sign;
            dirs.push(e);
        }
    }
    while dirs.len() < count.max(2 * dim) {
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                // Box-Muller from two uniforms gives a Gaussian coordinate.
                let (u1, u2): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen_range(0.0..1.0));
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let len = norm2(&v);
        if len > 1e-9 {
            dirs.push(scale(&v, 1.0 / len));
        }
    }
    dirs
}

/// How each grid point is certified when estimating the problem constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum IncreaseMethod {
    /// Fan certificate, point-independent.
    Analytic(CertScope),
    /// Per-point bisection on alpha through sampled verification.
    NumericBisect {
        delta: f64,
        radii: usize,
        dirs: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaFBound {
    /// Certified lower bound over the infeasible grid points.
    CertifiedAtLeast { alpha: f64 },
    /// No grid point is infeasible: the defining infimum ranges over an
    /// empty set and the constant is +∞ by convention.
    Vacuous,
    /// Some grid point failed to certify any constant above 1.
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlphaFReport {
    pub bound: AlphaFBound,
    /// The estimate only speaks about the supplied grid, never the global
    /// infimum; the label travels with every report.
    pub label: String,
    pub points_checked: usize,
    pub infeasible_points: usize,
}

/// Estimates the problem constant over a grid: the infimum over infeasible
/// grid points of the certified per-point increase bound.
pub fn alpha_f_estimate(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p_grid: &[Vec<f64>],
    x_grid: &[Vec<f64>],
    method: &IncreaseMethod,
) -> Result<AlphaFReport> {
    if p_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let mut checked = 0;
    let mut infeasible: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for p in p_grid {
        for x in x_grid {
            checked += 1;
            let value = eval_map(map, cone, p, x)?;
            match excess_over_cone(&value, cone)? {
                Excess::Finite(e) if e > tol::FEAS => infeasible.push((p.clone(), x.clone())),
                _ => {}
            }
        }
    }
    let label = "grid_restricted".to_string();
    if infeasible.is_empty() {
        return Ok(AlphaFReport {
            bound: AlphaFBound::Vacuous,
            label,
            points_checked: checked,
            infeasible_points: 0,
        });
    }
    let bound = match method {
        IncreaseMethod::Analytic(scope) => {
            let cert = fan_increase_certificate(map, cone, *scope)?;
            match cert.alpha_lower {
                Some(alpha) => AlphaFBound::CertifiedAtLeast { alpha },
                None => AlphaFBound::None,
            }
        }
        IncreaseMethod::NumericBisect {
            delta,
            radii,
            dirs,
            seed,
        } => {
            let mut inf = f64::INFINITY;
            let mut failed = false;
            for (p, x) in &infeasible {
                match bisect_alpha(map, cone, p, x, *delta, *radii, *dirs, *seed)? {
                    Some(alpha) => inf = inf.min(alpha),
                    None => {
                        failed = true;
                        break;
                    }
                }
            }
            if failed {
                AlphaFBound::None
            } else {
                AlphaFBound::CertifiedAtLeast { alpha: inf }
            }
        }
    };
    Ok(AlphaFReport {
        bound,
        label,
        points_checked: checked,
        infeasible_points: infeasible.len(),
    })
}

/// Largest alpha (to the bisection resolution) whose sampled verification
/// holds at the point; `None` when not even a constant just above 1 holds.
#[allow(clippy::too_many_arguments)]
fn bisect_alpha(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p: &[f64],
    x: &[f64],
    delta: f64,
    radii: usize,
    dirs: usize,
    seed: u64,
) -> Result<Option<f64>> {
    let passes = |alpha: f64| -> Result<bool> {
        Ok(
            verify_increase_numeric(map, cone, p, x, alpha, delta, radii, dirs, seed)?
                .holds_at_sampling,
        )
    };
    let floor = 1.0 + tol::ALPHA_BISECT;
    if !passes(floor)? {
        return Ok(None);
    }
    // Grow until failure, then bisect the bracket.
    let mut lo = floor;
    let mut hi = 2.0;
    let mut growths = 0;
    while passes(hi)? {
        lo = hi;
        hi *= 2.0;
        growths += 1;
        if growths > 20 {
            return Ok(Some(lo));
        }
    }
    while hi - lo > tol::ALPHA_BISECT {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}
