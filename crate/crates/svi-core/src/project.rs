//! Euclidean projection onto an H-polyhedron.
//!
//! Dykstra's alternating projection scheme over the half-space rows. Each
//! half-space projection is closed form, and the correction vectors make the
//! limit the true nearest point rather than just some feasible point.

use crate::error::{Error, Result};
use crate::geom::PolyhedronH;
use crate::linalg::{dist2, dot};
use crate::lp::region_is_empty;
use crate::tol;

/// Nearest point of `region` to `x` and the distance to it.
/// Fails with `EmptyRegion` when the region has no points at all.
pub fn project_polyhedron(region: &PolyhedronH, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    if x.len() != region.dim() {
        return Err(Error::DimensionMismatch(
            "projection query length differs from the region dimension".into(),
        ));
    }
    if region.n_rows() == 0 {
        return Ok((x.to_vec(), 0.0));
    }
    if region.contains(x, 0.0) {
        return Ok((x.to_vec(), 0.0));
    }
    if region_is_empty(region)? {
        return Err(Error::EmptyRegion);
    }
    Ok(project_unchecked(region, x))
}

/// Projection loop without the emptiness precheck; the caller vouches that
/// the region is nonempty (cones, for example, always hold the origin).
pub(crate) fn project_unchecked(region: &PolyhedronH, x: &[f64]) -> (Vec<f64>, f64) {
    let dim = region.dim();
    let rows: Vec<(&[f64], f64, f64)> = region
        .rows()
        .map(|(n, b)| (n, b, dot(n, n)))
        .collect();
    let mut y = x.to_vec();
    let mut corrections = vec![vec![0.0; dim]; rows.len()];
    for _sweep in 0..tol::DYKSTRA_MAX_SWEEPS {
        let before = y.clone();
        // The iterate alone can sit still for a sweep while the correction
        // vectors keep drifting toward the dual solution, so convergence is
        // judged on both.
        let mut correction_shift = 0.0_f64;
        for (i, (normal, offset, nn)) in rows.iter().enumerate() {
            // Re-add this row's correction before projecting onto it.
            let mut w = y.clone();
            for (wk, ck) in w.iter_mut().zip(&corrections[i]) {
                *wk += ck;
            }
            let violation = dot(normal, &w) - offset;
            if violation > 0.0 {
                let step = violation / nn;
                for k in 0..dim {
                    let fresh = step * normal[k];
                    correction_shift = correction_shift.max((fresh - corrections[i][k]).abs());
                    y[k] = w[k] - fresh;
                    corrections[i][k] = fresh;
                }
            } else {
                y = w;
                for c in corrections[i].iter_mut() {
                    correction_shift = correction_shift.max(c.abs());
                    *c = 0.0;
                }
            }
        }
        if dist2(&y, &before).max(correction_shift) < tol::DYKSTRA_STOP {
            break;
        }
    }
    let d = dist2(x, &y);
    (y, d)
}
