//! Penalty and calmness diagnostics: exact-penalty thresholds, restricted
//! calmness estimates from parameter probes, and sampled uniform
//! subregularity checks for the constraint map.
//!
//! The penalized objective replaces the inclusion constraint with a charge
//! proportional to the constraint excess:
//!
//! ```text
//! psi_lambda(x) = phi(p_bar, x) + lambda * excess(F(p_bar, x), C)
//! ```
//!
//! The exact-penalty threshold is the smallest `lambda` at which the
//! unconstrained minimizer of `psi_lambda` lands back on the constrained
//! minimizer; [`penalty_threshold`] brackets it by bisection over a
//! multi-start subgradient descent. [`calmness_estimate`] bounds the same
//! quantity from below through one-sided difference quotients of the
//! locally restricted value function, and [`uniform_subreg_check`] samples
//! the distance-to-feasibility against the constraint excess.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::feasible::{dist_to_feasible, feasible_region};
use crate::geom::PolyhedronH;
use crate::increase::sampled_directions;
use crate::instance::ProblemInstance;
use crate::linalg::{axpy, dot, norm2, sub};
use crate::lp::{lp_solve, region_is_empty, LpOutcome};
use crate::map::SetValuedMap;
use crate::tol;
use crate::value::{solve, SolveStatus};

/// Seed for the deterministic multi-start perturbations.
const START_SEED: u64 = 0xA1;

/// Descent schedule: epochs of fixed-length normalized steps, geometrically
/// shrunk between epochs.
const EPOCHS: usize = 45;
const ITERS_PER_EPOCH: usize = 60;
const STEP_DECAY: f64 = 0.7;

/// A minimizer matching the anchor within this distance counts as "the
/// penalty held".
const MATCH_TOL: f64 = 1e-5;

/// Objective plus `lambda` times the constraint excess at a single state.
///
/// The excess of a fan is the worst distance of a branch image to the cone;
/// for an affine-plus-cone map it is the distance of the affine part, which
/// the cone shift cannot improve. An unbounded excess leaves the penalty
/// undefined.
pub fn penalized_value(
    instance: &ProblemInstance,
    p_bar: &[f64],
    lambda: f64,
    x: &[f64],
) -> Result<f64> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidInput(
            "the penalty weight must be finite and nonnegative".into(),
        ));
    }
    instance.validate()?;
    let image = crate::map::eval_map(&instance.map, &instance.cone, p_bar, x)?;
    let excess = crate::cone::excess_over_cone(&image, &instance.cone)?;
    if !excess.is_finite() {
        return Err(Error::PenaltyUndefined);
    }
    Ok(instance.objective.eval(p_bar, x) + lambda * excess.value())
}

/// Worst branch distance to the cone and one subgradient of it with respect
/// to the state. Feasible points get the zero subgradient.
fn excess_and_subgradient(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p: &[f64],
    x: &[f64],
) -> (f64, Vec<f64>) {
    let n = map.dims().1;
    let mut worst = 0.0_f64;
    let mut grad = vec![0.0; n];
    for branch in map.branches() {
        let y = branch.image(p, x);
        let (proj, dist) = cone.project(&y);
        if dist > worst {
            worst = dist;
            grad = if dist <= tol::FEAS {
                vec![0.0; n]
            } else {
                let residual: Vec<f64> = y
                    .iter()
                    .zip(&proj)
                    .map(|(yi, pi)| (yi - pi) / dist)
                    .collect();
                branch.x_mat.tr_mul_vec(&residual)
            };
        }
    }
    (worst, grad)
}

/// Best state found by normalized subgradient descent on the penalized
/// objective, over the anchor start plus seeded perturbations of it.
/// Ties keep the earlier start, so an anchor that stays optimal is returned
/// verbatim. Returns the state and its penalized value.
pub fn penalized_minimizer(
    instance: &ProblemInstance,
    p_bar: &[f64],
    lambda: f64,
    x_anchor: &[f64],
) -> (Vec<f64>, f64) {
    let n = x_anchor.len();
    let psi = |x: &[f64]| -> f64 {
        let (excess, _) = excess_and_subgradient(&instance.map, &instance.cone, p_bar, x);
        instance.objective.eval(p_bar, x) + lambda * excess
    };

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut starts = vec![x_anchor.to_vec()];
    let radii = [0.25, 0.5, 1.0, 2.0];
    let dirs = sampled_directions(n, 8, &mut rng);
    for (k, dir) in dirs.into_iter().take(8).enumerate() {
        starts.push(axpy(x_anchor, radii[k % radii.len()], &dir));
    }

    let mut best_x = x_anchor.to_vec();
    let mut best_f = f64::INFINITY;
    for start in starts {
        let mut x = start.clone();
        let mut local_f = psi(&x);
        let mut local_x = x.clone();
        let mut step = 0.5 * (1.0 + norm2(&start));
        for _ in 0..EPOCHS {
            for _ in 0..ITERS_PER_EPOCH {
                let (_, e_grad) =
                    excess_and_subgradient(&instance.map, &instance.cone, p_bar, &x);
                let mut g = instance.objective.state_subgradient(p_bar, &x);
                for (gi, ei) in g.iter_mut().zip(&e_grad) {
                    *gi += lambda * ei;
                }
                let len = norm2(&g);
                if len <= 1e-14 {
                    break;
                }
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi -= step * gi / len;
                }
                let f = psi(&x);
                if f < local_f {
                    local_f = f;
                    local_x = x.clone();
                }
            }
            step *= STEP_DECAY;
        }
        if local_f < best_f {
            best_f = local_f;
            best_x = local_x;
        }
    }
    (best_x, best_f)
}

/// Bracketing report for the exact-penalty threshold at one solution pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PenaltyReport {
    pub p_bar: Vec<f64>,
    pub x_bar: Vec<f64>,
    /// Upper end of the final bracket; the smallest probed weight at which
    /// the penalized minimizer matched the anchor.
    pub lambda_star_estimate: f64,
    /// `(largest failing weight, smallest holding weight)`. The lower end is
    /// zero when even the smallest probes held; the upper end is infinite
    /// when no probe held.
    pub bracket: (f64, f64),
    /// Every probed weight with the minimizer it produced and that
    /// minimizer's distance to the anchor.
    pub verified_lambdas: Vec<(f64, Vec<f64>, f64)>,
    /// Set when the threshold exceeds the probe ceiling `lambda_max`.
    pub threshold_above_lambda_max: bool,
}

/// Brackets the exact-penalty threshold by bisection on the penalty weight.
///
/// The anchor `x_bar` must solve the instance at `p_bar`: it must be
/// feasible and attain the optimal value. A weight "holds" when the
/// multi-start penalized descent lands within `1e-5` of the anchor.
pub fn penalty_threshold(
    instance: &ProblemInstance,
    p_bar: &[f64],
    x_bar: &[f64],
    lambda_max: f64,
    bisect_tol: f64,
) -> Result<PenaltyReport> {
    if lambda_max <= 0.0 || bisect_tol <= 0.0 {
        return Err(Error::InvalidInput(
            "the threshold search needs lambda_max > 0 and a positive bisection width".into(),
        ));
    }
    instance.validate()?;
    check_solution_pair(instance, p_bar, x_bar)?;

    let mut verified: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let mut probe = |lambda: f64| -> bool {
        let (x, _) = penalized_minimizer(instance, p_bar, lambda, x_bar);
        let gap = dist_between(&x, x_bar);
        verified.push((lambda, x, gap));
        gap <= MATCH_TOL
    };

    if probe(0.0) {
        return Ok(PenaltyReport {
            p_bar: p_bar.to_vec(),
            x_bar: x_bar.to_vec(),
            lambda_star_estimate: 0.0,
            bracket: (0.0, 0.0),
            verified_lambdas: verified,
            threshold_above_lambda_max: false,
        });
    }
    if !probe(lambda_max) {
        return Ok(PenaltyReport {
            p_bar: p_bar.to_vec(),
            x_bar: x_bar.to_vec(),
            lambda_star_estimate: lambda_max,
            bracket: (lambda_max, f64::INFINITY),
            verified_lambdas: verified,
            threshold_above_lambda_max: true,
        });
    }
    let mut lo = 0.0;
    let mut hi = lambda_max;
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PenaltyReport {
        p_bar: p_bar.to_vec(),
        x_bar: x_bar.to_vec(),
        lambda_star_estimate: hi,
        bracket: (lo, hi),
        verified_lambdas: verified,
        threshold_above_lambda_max: false,
    })
}

fn dist_between(a: &[f64], b: &[f64]) -> f64 {
    norm2(&sub(a, b))
}

/// The anchor must be feasible and attain the optimal value at `p_bar`.
fn check_solution_pair(
    instance: &ProblemInstance,
    p_bar: &[f64],
    x_bar: &[f64],
) -> Result<f64> {
    let image = crate::map::eval_map(&instance.map, &instance.cone, p_bar, x_bar)?;
    let excess = crate::cone::excess_over_cone(&image, &instance.cone)?;
    if !excess.is_finite() || excess.value() > tol::FEAS {
        return Err(Error::NotASolutionPoint(excess.value()));
    }
    let anchored = instance.objective.eval(p_bar, x_bar);
    match solve(instance, p_bar)?.status {
        SolveStatus::Optimal { value, .. } => {
            let gap = anchored - value;
            if gap.abs() > 1e-6 * (1.0 + value.abs()) {
                return Err(Error::NotASolutionPoint(gap));
            }
            Ok(value)
        }
        _ => Err(Error::NotASolutionPoint(f64::INFINITY)),
    }
}

/// Calmness bound extracted from parameter probes around a solution pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalmnessEstimate {
    pub p_bar: Vec<f64>,
    pub x_bar: Vec<f64>,
    /// Probe radius for both the parameter ball and the state box.
    pub r: f64,
    /// Number of probes with a nonempty restricted feasible set.
    pub samples: usize,
    /// Smallest observed quotient
    /// `(restricted value at p - value at p_bar) / |p - p_bar|`.
    pub inf_quotient: f64,
    /// `max(0, -inf_quotient)`: any exact-penalty weight must reach this.
    pub lambda_bound: f64,
}

/// Estimates a calmness lower bound for the value function at a solution
/// pair by sampling parameters in a punctured ball and minimizing the
/// objective over the feasible set restricted to a box around the anchor.
///
/// With a purely polyhedral objective each probe is solved exactly; with a
/// quadratic term the restricted minimum is approximated from `x_samples`
/// feasible box samples. Probes whose restricted region is empty are
/// dropped; when every probe is dropped there is no data to estimate from.
pub fn calmness_estimate(
    instance: &ProblemInstance,
    p_bar: &[f64],
    x_bar: &[f64],
    r: f64,
    p_samples: usize,
    x_samples: usize,
    seed: u64,
) -> Result<CalmnessEstimate> {
    if r <= 0.0 || p_samples == 0 {
        return Err(Error::InvalidInput(
            "the calmness probe needs a positive radius and at least one parameter sample".into(),
        ));
    }
    instance.validate()?;
    check_solution_pair(instance, p_bar, x_bar)?;
    let v_bar = instance.objective.eval(p_bar, x_bar);
    let s = instance.dims.s;
    let n = instance.dims.n;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inf_quotient = f64::INFINITY;
    let mut used = 0usize;
    for _ in 0..p_samples {
        let dir = random_unit(&mut rng, s);
        let rho = r * rng.gen_range(0.05..=1.0);
        let p = axpy(p_bar, rho, &dir);

        let mut region = feasible_region(&instance.map, &instance.cone, &p)?;
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            region.add_row(e.clone(), x_bar[j] + r)?;
            for v in e.iter_mut() {
                *v = -*v;
            }
            region.add_row(e, r - x_bar[j])?;
        }
        let Some(v) = restricted_minimum(instance, &p, &region, x_samples, &mut rng)? else {
            continue;
        };
        used += 1;
        let q = (v - v_bar) / rho;
        inf_quotient = inf_quotient.min(q);
    }
    if used == 0 {
        return Err(Error::NoFeasibleProbes);
    }
    Ok(CalmnessEstimate {
        p_bar: p_bar.to_vec(),
        x_bar: x_bar.to_vec(),
        r,
        samples: used,
        inf_quotient,
        lambda_bound: (-inf_quotient).max(0.0),
    })
}

/// Minimum of the objective over a bounded restricted region; `None` when
/// the region is empty. Polyhedral objectives go through the epigraph
/// program, quadratic ones through feasible box samples.
fn restricted_minimum(
    instance: &ProblemInstance,
    p: &[f64],
    region: &PolyhedronH,
    x_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<f64>> {
    let n = instance.dims.n;
    if region_is_empty(region)? {
        return Ok(None);
    }
    if instance.objective.is_max_affine() {
        // Epigraph variables (x, t): each piece bounds t from below.
        let mut epi = PolyhedronH::whole_space(n + 1);
        for (normal, offset) in region.rows() {
            let mut row = normal.to_vec();
            row.push(0.0);
            epi.add_row(row, offset)?;
        }
        for piece in instance.objective.pieces() {
            let mut row = piece.g_x.clone();
            row.push(-1.0);
            epi.add_row(row, -(dot(&piece.g_p, p) + piece.c))?;
        }
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        return match lp_solve(&c, &epi)? {
            LpOutcome::Optimal { point, .. } => {
                Ok(Some(instance.objective.eval(p, &point[..n])))
            }
            // The region is boxed, so the program cannot be unbounded; treat
            // any other outcome as an empty probe.
            _ => Ok(None),
        };
    }
    // Quadratic term: sample the box, keep feasible states.
    if x_samples == 0 {
        return Err(Error::InvalidInput(
            "a quadratic objective needs state samples for the restricted minimum".into(),
        ));
    }
    // Recover the box bounds from the region rows by probing each coordinate.
    let mut best: Option<f64> = None;
    let mut corners = vec![(f64::NEG_INFINITY, f64::INFINITY); n];
    for (normal, offset) in region.rows() {
        for j in 0..n {
            if normal[j] == 1.0 && normal.iter().filter(|v| **v != 0.0).count() == 1 {
                corners[j].1 = corners[j].1.min(offset);
            }
            if normal[j] == -1.0 && normal.iter().filter(|v| **v != 0.0).count() == 1 {
                corners[j].0 = corners[j].0.max(-offset);
            }
        }
    }
    for _ in 0..x_samples {
        let x: Vec<f64> = corners
            .iter()
            .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
            .collect();
        if region.contains(&x, tol::FEAS) {
            let v = instance.objective.eval(p, &x);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    Ok(best)
}

/// Sampled check of uniform subregularity around a solution pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubregReport {
    pub p_bar: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub r: f64,
    /// Largest observed `distance-to-feasible / excess` over infeasible
    /// probes: the sampled modulus.
    pub beta_estimate: f64,
    /// False when no infeasible probe produced a ratio or a probe hit a
    /// parameter with an empty feasible set.
    pub holds_at_sampling: bool,
    /// Number of probes contributing a ratio.
    pub ratios: usize,
    /// Probes skipped because the state was already feasible.
    pub skipped_feasible: usize,
    /// Probes at parameters whose feasible set is empty; these refute the
    /// sampled property.
    pub infeasible_in_p: usize,
}

/// Samples joint `(parameter, state)` perturbations in a box of radius
/// `r_beta` around the pair and compares the distance to the feasible set
/// with the constraint excess at each infeasible probe.
pub fn uniform_subreg_check(
    instance: &ProblemInstance,
    p_bar: &[f64],
    x_bar: &[f64],
    r_beta: f64,
    samples: usize,
    seed: u64,
) -> Result<SubregReport> {
    if r_beta <= 0.0 || samples == 0 {
        return Err(Error::InvalidInput(
            "the subregularity probe needs a positive radius and at least one sample".into(),
        ));
    }
    instance.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beta: f64 = 0.0;
    let mut ratios = 0usize;
    let mut skipped_feasible = 0usize;
    let mut infeasible_in_p = 0usize;
    for _ in 0..samples {
        let p: Vec<f64> = p_bar
            .iter()
            .map(|v| v + rng.gen_range(-r_beta..=r_beta))
            .collect();
        let x: Vec<f64> = x_bar
            .iter()
            .map(|v| v + rng.gen_range(-r_beta..=r_beta))
            .collect();
        let image = crate::map::eval_map(&instance.map, &instance.cone, &p, &x)?;
        let excess = crate::cone::excess_over_cone(&image, &instance.cone)?;
        if !excess.is_finite() {
            return Err(Error::PenaltyUndefined);
        }
        let e = excess.value();
        if e <= tol::FEAS {
            skipped_feasible += 1;
            continue;
        }
        match dist_to_feasible(&instance.map, &instance.cone, &p, &x) {
            Ok(d) => {
                beta = beta.max(d / e);
                ratios += 1;
            }
            Err(Error::InfeasibleParameter) => infeasible_in_p += 1,
            Err(other) => return Err(other),
        }
    }
    Ok(SubregReport {
        p_bar: p_bar.to_vec(),
        x_bar: x_bar.to_vec(),
        r: r_beta,
        beta_estimate: beta,
        holds_at_sampling: ratios > 0 && infeasible_in_p == 0,
        ratios,
        skipped_feasible,
        infeasible_in_p,
    })
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                // Box-Muller for a rotation-invariant direction.
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let len = norm2(&v);
        if len > 1e-9 {
            return v.iter().map(|x| x / len).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{AffinePiece, ConvexObjective, Dims};
    use crate::linalg::Mat;
    use crate::map::AffineGenerator;

    fn gen_1d(m: f64, l: f64) -> AffineGenerator {
        AffineGenerator::new(
            Mat::from_rows(vec![vec![m]]).unwrap(),
            Mat::from_rows(vec![vec![l]]).unwrap(),
            vec![0.0],
        )
        .unwrap()
    }

    fn worked_instance() -> ProblemInstance {
        ProblemInstance::new(
            Dims { s: 1, n: 1, m: 1 },
            ConvexObjective::max_affine(vec![
                AffinePiece {
                    g_p: vec![1.0],
                    g_x: vec![1.0],
                    c: 0.0,
                },
                AffinePiece {
                    g_p: vec![-1.0],
                    g_x: vec![1.0],
                    c: 0.0,
                },
            ])
            .unwrap(),
            SetValuedMap::fan(vec![gen_1d(-1.0, 1.0), gen_1d(-1.0, 2.0)]).unwrap(),
            PolyhedralCone::new(1, vec![vec![1.0]]).unwrap(),
        )
        .unwrap()
    }

    /// Feasible only at p = 0, where every state is allowed.
    fn pinned_parameter_instance() -> ProblemInstance {
        ProblemInstance::new(
            Dims { s: 1, n: 1, m: 2 },
            ConvexObjective::max_affine(vec![
                AffinePiece {
                    g_p: vec![0.0],
                    g_x: vec![1.0],
                    c: 0.0,
                },
                AffinePiece {
                    g_p: vec![0.0],
                    g_x: vec![-1.0],
                    c: 0.0,
                },
            ])
            .unwrap(),
            SetValuedMap::fan(vec![AffineGenerator::new(
                Mat::from_rows(vec![vec![1.0], vec![-1.0]]).unwrap(),
                Mat::from_rows(vec![vec![0.0], vec![0.0]]).unwrap(),
                vec![0.0, 0.0],
            )
            .unwrap()])
            .unwrap(),
            PolyhedralCone::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn penalized_value_charges_the_excess() {
        let inst = worked_instance();
        // phi(1, 0) = 1, excess = 1, lambda = 2.
        let v = penalized_value(&inst, &[1.0], 2.0, &[0.0]).unwrap();
        assert!((v - 3.0).abs() <= 1e-12, "{v}");
        // Feasible states are not charged.
        let clean = penalized_value(&inst, &[1.0], 5.0, &[2.0]).unwrap();
        assert!((clean - 3.0).abs() <= 1e-12, "{clean}");
        assert!(matches!(
            penalized_value(&inst, &[1.0], -0.5, &[0.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn threshold_at_the_positive_anchor() {
        let inst = worked_instance();
        let report = penalty_threshold(&inst, &[1.0], &[1.0], 4.0, 1e-3).unwrap();
        assert!(!report.threshold_above_lambda_max);
        assert!(
            (report.lambda_star_estimate - 1.0).abs() <= 1e-3,
            "estimate {}",
            report.lambda_star_estimate
        );
        let (lo, hi) = report.bracket;
        assert!(lo < 1.0 + 1e-3 && hi >= 1.0 - 1e-3, "bracket ({lo}, {hi})");
        assert!(!report.verified_lambdas.is_empty());
        // Above the threshold the descent returns the anchor itself.
        let (x, _) = penalized_minimizer(&inst, &[1.0], 2.0, &[1.0]);
        assert!((x[0] - 1.0).abs() <= 1e-5, "minimizer {x:?}");
    }

    #[test]
    fn threshold_at_the_negative_anchor() {
        let inst = worked_instance();
        let report = penalty_threshold(&inst, &[-1.0], &[-0.5], 4.0, 1e-3).unwrap();
        assert!(!report.threshold_above_lambda_max);
        assert!(
            (report.lambda_star_estimate - 0.5).abs() <= 1e-3,
            "estimate {}",
            report.lambda_star_estimate
        );
    }

    #[test]
    fn low_ceiling_is_reported_not_bisected() {
        let inst = worked_instance();
        let report = penalty_threshold(&inst, &[1.0], &[1.0], 0.3, 1e-3).unwrap();
        assert!(report.threshold_above_lambda_max);
        assert_eq!(report.lambda_star_estimate, 0.3);
        assert_eq!(report.bracket, (0.3, f64::INFINITY));
    }

    #[test]
    fn threshold_rejects_non_solutions() {
        let inst = worked_instance();
        // Feasible but not optimal.
        assert!(matches!(
            penalty_threshold(&inst, &[1.0], &[3.0], 4.0, 1e-3),
            Err(Error::NotASolutionPoint(_))
        ));
        // Infeasible.
        assert!(matches!(
            penalty_threshold(&inst, &[1.0], &[0.0], 4.0, 1e-3),
            Err(Error::NotASolutionPoint(_))
        ));
    }

    #[test]
    fn calmness_matches_the_local_slopes() {
        let inst = worked_instance();
        let right = calmness_estimate(&inst, &[1.0], &[1.0], 0.3, 200, 0, 42).unwrap();
        assert!(
            (right.lambda_bound - 2.0).abs() <= 1e-9,
            "bound {}",
            right.lambda_bound
        );
        assert_eq!(right.samples, 200);
        let left = calmness_estimate(&inst, &[-1.0], &[-0.5], 0.3, 200, 0, 42).unwrap();
        assert!(
            (left.lambda_bound - 0.5).abs() <= 1e-9,
            "bound {}",
            left.lambda_bound
        );
    }

    #[test]
    fn calmness_is_deterministic_per_seed() {
        let inst = worked_instance();
        let a = calmness_estimate(&inst, &[1.0], &[1.0], 0.3, 60, 0, 9).unwrap();
        let b = calmness_estimate(&inst, &[1.0], &[1.0], 0.3, 60, 0, 9).unwrap();
        assert_eq!(a.inf_quotient, b.inf_quotient);
        assert_eq!(a.lambda_bound, b.lambda_bound);
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn calmness_quadratic_fallback_brackets_the_slope() {
        // 0.5 x^2 over x >= p: the restricted value near p_bar = 1 slopes
        // with derivative 1 from the left.
        let inst = ProblemInstance::new(
            Dims { s: 1, n: 1, m: 1 },
            ConvexObjective::new(
                vec![AffinePiece {
                    g_p: vec![0.0],
                    g_x: vec![0.0],
                    c: 0.0,
                }],
                Some(Mat::from_rows(vec![vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap()),
            )
            .unwrap(),
            SetValuedMap::affine_plus_cone(gen_1d(-1.0, 1.0)),
            PolyhedralCone::new(1, vec![vec![1.0]]).unwrap(),
        )
        .unwrap();
        let est = calmness_estimate(&inst, &[1.0], &[1.0], 0.3, 120, 400, 5).unwrap();
        assert!(
            est.lambda_bound > 0.5 && est.lambda_bound < 1.1,
            "bound {}",
            est.lambda_bound
        );
    }

    #[test]
    fn calmness_without_feasible_probes_errors() {
        let inst = pinned_parameter_instance();
        assert!(matches!(
            calmness_estimate(&inst, &[0.0], &[0.0], 0.3, 40, 0, 3),
            Err(Error::NoFeasibleProbes)
        ));
    }

    #[test]
    fn subregularity_ratio_is_one_on_the_smooth_side() {
        let inst = worked_instance();
        let report = uniform_subreg_check(&inst, &[1.0], &[1.0], 0.5, 300, 17).unwrap();
        assert!(report.holds_at_sampling);
        assert_eq!(report.infeasible_in_p, 0);
        assert!(report.ratios > 0);
        assert!(
            (report.beta_estimate - 1.0).abs() <= 1e-9,
            "beta {}",
            report.beta_estimate
        );
    }

    #[test]
    fn subregularity_sees_the_halved_ratio_across_the_kink() {
        let inst = worked_instance();
        let report = uniform_subreg_check(&inst, &[0.0], &[0.0], 1.0, 400, 17).unwrap();
        assert!(report.holds_at_sampling);
        // Ratios range over [1/2, 1]; the extremes are both realized.
        assert!(
            report.beta_estimate <= 1.0 + 1e-9 && report.beta_estimate >= 1.0 - 1e-6,
            "beta {}",
            report.beta_estimate
        );
    }

    #[test]
    fn subregularity_flags_empty_parameter_slices() {
        let inst = pinned_parameter_instance();
        let report = uniform_subreg_check(&inst, &[0.0], &[0.0], 0.5, 200, 23).unwrap();
        assert!(!report.holds_at_sampling);
        assert!(report.infeasible_in_p > 0);
    }

    #[test]
    fn descent_handles_a_quadratic_penalty_surface() {
        // 0.5 x^2 with x >= p at p_bar = 1: psi_lambda(x) = x^2/2 +
        // lambda max(0, 1 - x); above lambda = 1 the anchor x = 1 wins.
        let inst = ProblemInstance::new(
            Dims { s: 1, n: 1, m: 1 },
            ConvexObjective::new(
                vec![AffinePiece {
                    g_p: vec![0.0],
                    g_x: vec![0.0],
                    c: 0.0,
                }],
                Some(Mat::from_rows(vec![vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap()),
            )
            .unwrap(),
            SetValuedMap::affine_plus_cone(gen_1d(-1.0, 1.0)),
            PolyhedralCone::new(1, vec![vec![1.0]]).unwrap(),
        )
        .unwrap();
        let (x, _) = penalized_minimizer(&inst, &[1.0], 2.0, &[1.0]);
        assert!((x[0] - 1.0).abs() <= 1e-4, "minimizer {x:?}");
        // Below the threshold the unconstrained quadratic pulls toward
        // x = lambda.
        let (x_low, _) = penalized_minimizer(&inst, &[1.0], 0.5, &[1.0]);
        assert!((x_low[0] - 0.5).abs() <= 1e-3, "minimizer {x_low:?}");
    }
}
