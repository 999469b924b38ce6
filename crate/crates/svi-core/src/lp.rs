//! Dense two-phase simplex.
//!
//! The solver works on the standard form `min c'z  s.t.  Ez = f, z >= 0` and
//! uses Bland's smallest-index pivot rule throughout, which rules out cycling
//! on the degenerate inputs that show up routinely in cone geometry. Problems
//! over free variables and inequality rows are reduced to standard form by
//! variable splitting and slacks. Everything is desk scale, so the tableau is
//! kept dense and no factorization is reused.

use crate::error::{Error, Result};
use crate::geom::PolyhedronH;
use crate::linalg::norm2;
use crate::tol;

/// Outcome of a standard-form solve.
#[derive(Clone, Debug)]
pub(crate) enum StandardOutcome {
    Optimal {
        z: Vec<f64>,
        value: f64,
        iterations: usize,
    },
    /// `ray` is a feasible direction with strictly negative cost.
    Unbounded { ray: Vec<f64>, iterations: usize },
    Infeasible { iterations: usize },
}

/// Outcome of a solve over an H-polyhedron with free variables.
#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal {
        value: f64,
        point: Vec<f64>,
        iterations: usize,
    },
    /// `direction` is a unit recession direction of the region along which the
    /// objective strictly decreases.
    Unbounded {
        direction: Vec<f64>,
        iterations: usize,
    },
    Infeasible {
        iterations: usize,
    },
}

const COST_EPS: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-9;
const PHASE1_EPS: f64 = 1e-8;

struct Tableau {
    /// Row-major coefficient matrix, `m x ncols`.
    t: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced-cost row for the current objective.
    cr: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[row][col];
        let inv = 1.0 / piv;
        for v in self.t[row].iter_mut() {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        for i in 0..self.t.len() {
            if i == row {
                continue;
            }
            let factor = self.t[i][col];
            if factor != 0.0 {
                for j in 0..self.t[i].len() {
                    self.t[i][j] -= factor * self.t[row][j];
                }
                self.t[i][col] = 0.0;
                self.rhs[i] -= factor * self.rhs[row];
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-12 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let cf = self.cr[col];
        if cf != 0.0 {
            for j in 0..self.cr.len() {
                self.cr[j] -= cf * self.t[row][j];
            }
            self.cr[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs Bland-rule pivoting on the current objective until optimality or
    /// unboundedness. `allowed` bounds the usable column range.
    fn run(&mut self, allowed: usize, max_pivots: usize) -> Result<Option<usize>> {
        loop {
            if self.pivots > max_pivots {
                return Err(Error::LpStalled(self.pivots));
            }
            // Bland: smallest index with a negative reduced cost enters.
            let entering = (0..allowed).find(|&j| self.cr[j] < -COST_EPS);
            let Some(e) = entering else {
                return Ok(None);
            };
            // Ratio test; ties resolved by the smallest basis index.
            let mut best: Option<(f64, usize)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][e];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[i] / a;
                    match best {
                        None => best = Some((ratio, i)),
                        Some((r, bi)) => {
                            if ratio < r - 1e-12
                                || (ratio < r + 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                best = Some((ratio.min(r), i));
                            }
                        }
                    }
                }
            }
            match best {
                Some((_, row)) => self.pivot(row, e),
                None => return Ok(Some(e)),
            }
        }
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, &v)| if b < cost.len() { cost[b] * v } else { 0.0 })
            .sum()
    }

    fn reduced_costs_for(&mut self, cost: &[f64], ncols: usize) {
        let mut cr = vec![0.0; ncols];
        for (j, c) in cr.iter_mut().enumerate() {
            *c = if j < cost.len() { cost[j] } else { 0.0 };
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = if b < cost.len() { cost[b] } else { 0.0 };
            if cb != 0.0 {
                for j in 0..ncols {
                    cr[j] -= cb * self.t[i][j];
                }
            }
        }
        // Basis columns are unit columns, so their reduced costs are exactly 0.
        for &b in &self.basis {
            if b < ncols {
                cr[b] = 0.0;
            }
        }
        self.cr = cr;
    }
}

/// Solves `min cost'z  s.t.  rows[i]'z = rhs[i], z >= 0`.
pub(crate) fn solve_standard(
    cost: &[f64],
    rows: &[Vec<f64>],
    rhs: &[f64],
) -> Result<StandardOutcome> {
    let n = cost.len();
    let m = rows.len();
    debug_assert!(rows.iter().all(|r| r.len() == n));
    debug_assert_eq!(rhs.len(), m);

    // Orient every row so its right-hand side is nonnegative, then append one
    // artificial variable per row to form the phase-1 basis.
    let total = n + m;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let flip = rhs[i] < 0.0;
        let mut row: Vec<f64> = rows[i]
            .iter()
            .map(|&v| if flip { -v } else { v })
            .collect();
        row.resize(total, 0.0);
        row[n + i] = 1.0;
        t.push(row);
        b.push(rhs[i].abs());
    }
    let mut tab = Tableau {
        t,
        rhs: b,
        basis: (n..total).collect(),
        cr: Vec::new(),
        pivots: 0,
    };

    // Phase 1: minimize the artificial sum.
    let mut phase1_cost = vec![0.0; total];
    for c in phase1_cost.iter_mut().skip(n) {
        *c = 1.0;
    }
    tab.reduced_costs_for(&phase1_cost, total);
    let unb = tab.run(total, tol::LP_MAX_PIVOTS)?;
    debug_assert!(unb.is_none(), "phase 1 objective is bounded below by zero");
    if tab.objective_value(&phase1_cost) > PHASE1_EPS {
        return Ok(StandardOutcome::Infeasible {
            iterations: tab.pivots,
        });
    }

    // Drive leftover artificials out of the basis; rows that offer no real
    // pivot are redundant and dropped.
    let mut i = 0;
    while i < tab.basis.len() {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.t[i][j].abs() > PIVOT_EPS) {
                tab.pivot(i, j);
                i += 1;
            } else {
                tab.t.remove(i);
                tab.rhs.remove(i);
                tab.basis.remove(i);
            }
        } else {
            i += 1;
        }
    }

    // Phase 2 on the real objective, with artificial columns retired.
    tab.reduced_costs_for(cost, n);
    for row in tab.t.iter_mut() {
        row.truncate(n);
    }
    tab.cr.truncate(n);
    match tab.run(n, tol::LP_MAX_PIVOTS)? {
        None => {
            let mut z = vec![0.0; n];
            for (i, &bi) in tab.basis.iter().enumerate() {
                z[bi] = tab.rhs[i];
            }
            Ok(StandardOutcome::Optimal {
                value: tab.objective_value(cost),
                z,
                iterations: tab.pivots,
            })
        }
        Some(e) => {
            // Entering column never blocked: moving along it is feasible and
            // strictly improving for all step sizes.
            let mut ray = vec![0.0; n];
            ray[e] = 1.0;
            for (i, &bi) in tab.basis.iter().enumerate() {
                ray[bi] = (-tab.t[i][e]).max(0.0);
            }
            Ok(StandardOutcome::Unbounded {
                ray,
                iterations: tab.pivots,
            })
        }
    }
}

/// Solves `min objective'x` over an H-polyhedron with free variables.
pub fn lp_solve(objective: &[f64], region: &PolyhedronH) -> Result<LpOutcome> {
    let n = region.dim();
    if objective.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "objective has {} entries, region dimension is {}",
            objective.len(),
            n
        )));
    }
    let mr = region.n_rows();
    // z = (x+, x-, slack): x = x+ - x-, rows become equalities.
    let total = 2 * n + mr;
    let mut rows = Vec::with_capacity(mr);
    for (normal, _) in region.rows() {
        let mut row = vec![0.0; total];
        for j in 0..n {
            row[j] = normal[j];
            row[n + j] = -normal[j];
        }
        rows.push(row);
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row[2 * n + i] = 1.0;
    }
    let mut cost = vec![0.0; total];
    for j in 0..n {
        cost[j] = objective[j];
        cost[n + j] = -objective[j];
    }
    let rhs: Vec<f64> = region.rows().map(|(_, b)| b).collect();

    match solve_standard(&cost, &rows, &rhs)? {
        StandardOutcome::Optimal {
            z,
            value,
            iterations,
        } => {
            let point: Vec<f64> = (0..n).map(|j| z[j] - z[n + j]).collect();
            Ok(LpOutcome::Optimal {
                value,
                point,
                iterations,
            })
        }
        StandardOutcome::Unbounded { ray, iterations } => {
            let mut direction: Vec<f64> = (0..n).map(|j| ray[j] - ray[n + j]).collect();
            let len = norm2(&direction);
            if len > 0.0 {
                for d in direction.iter_mut() {
                    *d /= len;
                }
            }
            Ok(LpOutcome::Unbounded {
                direction,
                iterations,
            })
        }
        StandardOutcome::Infeasible { iterations } => Ok(LpOutcome::Infeasible { iterations }),
    }
}

/// Phase-1 emptiness test for an H-polyhedron.
pub fn region_is_empty(region: &PolyhedronH) -> Result<bool> {
    let zero = vec![0.0; region.dim()];
    Ok(matches!(
        lp_solve(&zero, region)?,
        LpOutcome::Infeasible { .. }
    ))
}
