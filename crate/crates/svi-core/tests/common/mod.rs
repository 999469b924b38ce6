//! Brute-force reference implementations used to cross-check the kernel.
//!
//! Everything here is deliberately independent of the library internals:
//! the linear solves, the vertex enumeration and the feasibility filters are
//! written from scratch so that a kernel bug cannot hide on both sides of a
//! comparison.

use svi_core::PolyhedronH;

/// Plain Gaussian elimination with partial pivoting; `None` on a singular
/// system. Independent of the library's solver on purpose.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = Vec::new();
    fn rec(start: usize, n: usize, k: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if stack.len() == k {
            out.push(stack.clone());
            return;
        }
        for i in start..n {
            stack.push(i);
            rec(i + 1, n, k, stack, out);
            stack.pop();
        }
    }
    rec(0, n, k, &mut stack, &mut out);
    out
}

/// Every basic feasible point of the region: solve each d-subset of rows as
/// equalities, keep solutions satisfying all rows, merge near-duplicates.
pub fn enumerate_vertices(region: &PolyhedronH) -> Vec<Vec<f64>> {
    let d = region.dim();
    let rows: Vec<(Vec<f64>, f64)> = region
        .rows()
        .map(|(n, o)| (n.to_vec(), o))
        .collect();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for subset in combinations(rows.len(), d) {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| rows[i].1).collect();
        let Some(v) = gauss_solve(a, b) else { continue };
        let feasible = rows
            .iter()
            .all(|(n, o)| n.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() <= o + 1e-7);
        if !feasible {
            continue;
        }
        let dup = vertices.iter().any(|w| {
            w.iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                <= 1e-7
        });
        if !dup {
            vertices.push(v);
        }
    }
    vertices
}

/// Minimum of a linear objective over the enumerated vertices. Only valid
/// for regions known to be bounded; `None` when no vertex exists.
pub fn brute_force_min(objective: &[f64], region: &PolyhedronH) -> Option<(f64, Vec<f64>)> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for v in enumerate_vertices(region) {
        let val: f64 = objective.iter().zip(&v).map(|(c, x)| c * x).sum();
        if best.as_ref().map_or(true, |(b, _)| val < *b) {
            best = Some((val, v));
        }
    }
    best
}
