//! Solving the program at a fixed parameter, tabulating the optimal value
//! over grids, and auditing convexity and local Lipschitz continuity of the
//! value function.
//!
//! Max-affine objectives go through an exact epigraph LP. Objectives with a
//! quadratic term use a projected subgradient method: step `c/√k` with `c`
//! set from the initial objective magnitude, iterate averaging, and
//! projection onto the feasible region each step.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::feasible::feasible_region;
use crate::geom::PolyhedronH;
use crate::instance::ProblemInstance;
use crate::linalg::{axpy, norm2, scale};
use crate::lp::{lp_solve, region_is_empty, LpOutcome};
use crate::project::project_polyhedron;
use crate::tol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal {
        value: f64,
        argmin: Vec<f64>,
    },
    Unbounded {
        /// Recession direction of the region with decreasing objective;
        /// absent on the subgradient path.
        certificate: Option<Vec<f64>>,
        /// True when unboundedness was inferred from iterate divergence
        /// rather than an exact certificate.
        suspected: bool,
    },
    /// Empty feasible region; the value is +∞ by convention.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub p: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
}

impl SolveReport {
    /// The optimal value under the conventions −∞ for unbounded programs and
    /// +∞ for empty regions.
    pub fn value(&self) -> f64 {
        match &self.status {
            SolveStatus::Optimal { value, .. } => *value,
            SolveStatus::Unbounded { .. } => f64::NEG_INFINITY,
            SolveStatus::Infeasible => f64::INFINITY,
        }
    }

    pub fn argmin(&self) -> Option<&[f64]> {
        match &self.status {
            SolveStatus::Optimal { argmin, .. } => Some(argmin),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal { .. })
    }
}

/// Minimizes the objective over `S(p)`.
pub fn solve(instance: &ProblemInstance, p: &[f64]) -> Result<SolveReport> {
    instance.validate()?;
    if p.len() != instance.dims.s {
        return Err(Error::DimensionMismatch(format!(
            "parameter length {} against declared {}",
            p.len(),
            instance.dims.s
        )));
    }
    let region = feasible_region(&instance.map, &instance.cone, p)?;
    if region_is_empty(&region)? {
        return Ok(SolveReport {
            p: p.to_vec(),
            status: SolveStatus::Infeasible,
            iterations: 0,
        });
    }
    if instance.objective.is_max_affine() {
        solve_epigraph_lp(instance, p, &region)
    } else {
        solve_projected_subgradient(instance, p, &region)
    }
}

/// Exact path: minimize `t` over `{(x, t) : pieces ≤ t, x ∈ region}`.
fn solve_epigraph_lp(
    instance: &ProblemInstance,
    p: &[f64],
    region: &PolyhedronH,
) -> Result<SolveReport> {
    let n = instance.dims.n;
    let mut epi = PolyhedronH::whole_space(n + 1);
    for piece in instance.objective.pieces() {
        // ⟨g_x, x⟩ − t ≤ −(⟨g_p, p⟩ + c)
        let mut normal = piece.g_x.clone();
        normal.push(-1.0);
        let offset = -(crate::linalg::dot(&piece.g_p, p) + piece.c);
        epi.add_row(normal, offset)?;
    }
    for (normal, offset) in region.rows() {
        let mut row = normal.to_vec();
        row.push(0.0);
        epi.add_row(row, offset)?;
    }
    let mut cost = vec![0.0; n + 1];
    cost[n] = 1.0;
    match lp_solve(&cost, &epi)? {
        LpOutcome::Optimal {
            value,
            point,
            iterations,
        } => {
            let argmin = point[..n].to_vec();
            // The epigraph row is tight at the optimum, so the LP value and
            // the objective at the argmin agree up to roundoff; reporting the
            // latter keeps value = φ(p, argmin) exact.
            debug_assert!((instance.objective.eval(p, &argmin) - value).abs() < 1e-7);
            let value = instance.objective.eval(p, &argmin);
            Ok(SolveReport {
                p: p.to_vec(),
                status: SolveStatus::Optimal { value, argmin },
                iterations,
            })
        }
        LpOutcome::Unbounded {
            direction,
            iterations,
        } => {
            let d = direction[..n].to_vec();
            let len = norm2(&d);
            let certificate = if len > 1e-12 {
                Some(scale(&d, 1.0 / len))
            } else {
                None
            };
            Ok(SolveReport {
                p: p.to_vec(),
                status: SolveStatus::Unbounded {
                    certificate,
                    suspected: false,
                },
                iterations,
            })
        }
        LpOutcome::Infeasible { iterations } => Ok(SolveReport {
            p: p.to_vec(),
            status: SolveStatus::Infeasible,
            iterations,
        }),
    }
}

/// Subgradient path for objectives with a quadratic term.
fn solve_projected_subgradient(
    instance: &ProblemInstance,
    p: &[f64],
    region: &PolyhedronH,
) -> Result<SolveReport> {
    let objective = &instance.objective;
    let start = project_polyhedron(region, &vec![0.0; instance.dims.n])?.0;
    let c_step = 1.0 + objective.eval(p, &start).abs();
    let mut x = start.clone();
    let mut best_x = x.clone();
    let mut best_f = objective.eval(p, &x);
    let mut avg = x.clone();
    let mut last_check = best_f;
    let mut iterations = 0;
    for k in 1..=tol::SUBGRAD_MAX_ITERS {
        iterations = k;
        let g = objective.state_subgradient(p, &x);
        if norm2(&g) <= 1e-14 {
            // Unconstrained stationary point of a convex function.
            best_f = objective.eval(p, &x);
            best_x = x.clone();
            break;
        }
        let step = c_step / (k as f64).sqrt();
        let moved = axpy(&x, -step, &g);
        x = project_polyhedron(region, &moved)?.0;
        // Running average of iterates; the classical convergent estimate.
        let w = 1.0 / (k as f64 + 1.0);
        avg = axpy(&scale(&avg, 1.0 - w), w, &x);
        let fx = objective.eval(p, &x);
        if fx < best_f {
            best_f = fx;
            best_x = x.clone();
        }
        if norm2(&x) > 1e8 {
            return Ok(SolveReport {
                p: p.to_vec(),
                status: SolveStatus::Unbounded {
                    certificate: None,
                    suspected: true,
                },
                iterations,
            });
        }
        if k % 1000 == 0 {
            if (last_check - best_f).abs() < tol::SUBGRAD_STOP {
                break;
            }
            last_check = best_f;
        }
    }
    let f_avg = objective.eval(p, &avg);
    if f_avg < best_f {
        best_f = f_avg;
        best_x = avg;
    }
    Ok(SolveReport {
        p: p.to_vec(),
        status: SolveStatus::Optimal {
            value: best_f,
            argmin: best_x,
        },
        iterations,
    })
}

/// One solve per grid point, in grid order.
pub fn value_grid(instance: &ProblemInstance, grid: &[Vec<f64>]) -> Result<Vec<SolveReport>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty parameter grid".into()));
    }
    grid.iter().map(|p| solve(instance, p)).collect()
}

/// Uniform 1-D grid `lo, lo+step, …, hi` (inclusive; `hi` must be a whole
/// number of steps above `lo`).
pub fn grid_1d(lo: f64, hi: f64, step: f64) -> Result<Vec<Vec<f64>>> {
    if !(step > 0.0) || !(hi > lo) {
        return Err(Error::InvalidInput("grid needs hi > lo and step > 0".into()));
    }
    let count = ((hi - lo) / step).round() as usize;
    if ((hi - lo) - count as f64 * step).abs() > 1e-9 {
        return Err(Error::InvalidInput(
            "grid span is not a whole number of steps".into(),
        ));
    }
    Ok((0..=count).map(|i| vec![lo + i as f64 * step]).collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexityAuditReport {
    pub triples: usize,
    pub max_midpoint_violation: f64,
}

/// Quantized key for locating exact grid neighbours.
fn grid_key(p: &[f64]) -> Vec<i64> {
    p.iter().map(|v| (v * 1e9).round() as i64).collect()
}

/// Midpoint-convexity audit over aligned triples of an all-optimal table:
/// `val(mid) ≤ (val(a) + val(b))/2 + tol` whenever the midpoint of two rows
/// is itself a row. Works for 1-D and product grids alike.
pub fn convexity_audit(table: &[SolveReport]) -> Result<ConvexityAuditReport> {
    require_all_optimal(table)?;
    let index: HashMap<Vec<i64>, usize> = table
        .iter()
        .enumerate()
        .map(|(i, row)| (grid_key(&row.p), i))
        .collect();
    let mut triples = 0;
    let mut worst = 0.0f64;
    for i in 0..table.len() {
        for j in (i + 1)..table.len() {
            let mid: Vec<f64> = table[i]
                .p
                .iter()
                .zip(&table[j].p)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            if let Some(&k) = index.get(&grid_key(&mid)) {
                if k == i || k == j {
                    continue;
                }
                triples += 1;
                let violation =
                    table[k].value() - 0.5 * (table[i].value() + table[j].value());
                worst = worst.max(violation);
            }
        }
    }
    Ok(ConvexityAuditReport {
        triples,
        max_midpoint_violation: worst,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzAuditReport {
    /// Absolute difference quotient of each adjacent grid pair, in order.
    pub local_constants: Vec<f64>,
    pub max_constant: f64,
}

/// Difference-quotient audit of a 1-D all-optimal table. The value function
/// is locally Lipschitz; the audit reports the observed constants.
pub fn lipschitz_audit(table: &[SolveReport]) -> Result<LipschitzAuditReport> {
    if table.len() < 3 {
        return Err(Error::GridTooSmall);
    }
    require_all_optimal(table)?;
    if table.iter().any(|row| row.p.len() != 1) {
        return Err(Error::InvalidInput(
            "Lipschitz audit needs a one-dimensional grid".into(),
        ));
    }
    let mut rows: Vec<(f64, f64)> = table.iter().map(|r| (r.p[0], r.value())).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut local = Vec::with_capacity(rows.len() - 1);
    for pair in rows.windows(2) {
        let h = pair[1].0 - pair[0].0;
        if h <= 1e-12 {
            return Err(Error::InvalidInput("duplicate grid points".into()));
        }
        local.push((pair[1].1 - pair[0].1).abs() / h);
    }
    let max_constant = local.iter().copied().fold(0.0, f64::max);
    Ok(LipschitzAuditReport {
        local_constants: local,
        max_constant,
    })
}

fn require_all_optimal(table: &[SolveReport]) -> Result<()> {
    if table.is_empty() {
        return Err(Error::InvalidInput("empty table".into()));
    }
    let optimal = table.iter().filter(|r| r.is_optimal()).count();
    if optimal != table.len() {
        return Err(Error::NonuniformStatus);
    }
    Ok(())
}
