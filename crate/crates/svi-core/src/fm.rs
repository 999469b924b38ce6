//! Fourier-Motzkin elimination over floating-point rows.
//!
//! Eliminating a variable combines every positive-coefficient row with every
//! negative-coefficient row, so the method is restricted to small joint
//! dimensions (`tol::FM_MAX_DIM`). Coefficients below `tol::FM_DROP` are
//! treated as zero, and parallel dominated rows are pruned after each step to
//! keep the row count in check.

use crate::error::{Error, Result};
use crate::geom::{GeneratorSet, PolyhedronH};
use crate::linalg::{dot, norm2};
use crate::tol;

/// Upper bound on intermediate rows; desk-scale systems stay far below it.
const ROW_CAP: usize = 20_000;

type Row = (Vec<f64>, f64);

/// Projects the solution set of `system` onto the coordinates listed in
/// `keep` (output coordinates appear in `keep` order). An infeasible input
/// projects to a canonical empty polyhedron.
pub fn fm_project(system: &PolyhedronH, keep: &[usize]) -> Result<PolyhedronH> {
    let dim = system.dim();
    if dim > tol::FM_MAX_DIM {
        return Err(Error::FmDimExceeded {
            dim,
            limit: tol::FM_MAX_DIM,
        });
    }
    if keep.is_empty() {
        return Err(Error::InvalidInput("no coordinates kept".into()));
    }
    let mut seen = vec![false; dim];
    for &k in keep {
        if k >= dim {
            return Err(Error::InvalidInput(format!(
                "kept coordinate {k} outside dimension {dim}"
            )));
        }
        if seen[k] {
            return Err(Error::InvalidInput(format!("coordinate {k} kept twice")));
        }
        seen[k] = true;
    }

    let mut rows: Vec<Row> = system.rows().map(|(n, b)| (n.to_vec(), b)).collect();
    let mut targets: Vec<usize> = (0..dim).filter(|j| !seen[*j]).collect();

    while !targets.is_empty() {
        // Cheapest column first: fewest pos * neg combinations.
        let (pick, _) = targets
            .iter()
            .enumerate()
            .map(|(slot, &j)| {
                let pos = rows.iter().filter(|(n, _)| n[j] > tol::FM_DROP).count();
                let neg = rows.iter().filter(|(n, _)| n[j] < -tol::FM_DROP).count();
                (slot, pos * neg)
            })
            .min_by_key(|&(slot, cost)| (cost, slot))
            .expect("targets nonempty");
        let j = targets.remove(pick);

        match eliminate(&rows, j)? {
            Some(next) => rows = next,
            None => return Ok(PolyhedronH::trivially_empty(keep.len())),
        }
        rows = prune(rows);
        if rows.len() > ROW_CAP {
            return Err(Error::InvalidInput(format!(
                "elimination produced more than {ROW_CAP} rows"
            )));
        }
    }

    // Restrict surviving rows to the kept coordinates.
    let mut out = PolyhedronH::whole_space(keep.len());
    for (n, b) in rows {
        let restricted: Vec<f64> = keep.iter().map(|&k| n[k]).collect();
        if restricted.iter().all(|c| c.abs() <= tol::FM_DROP) {
            if b < -tol::FEAS {
                return Ok(PolyhedronH::trivially_empty(keep.len()));
            }
            continue;
        }
        out.add_row(restricted, b)?;
    }
    Ok(out)
}

/// One elimination step. `None` signals a discovered contradiction.
fn eliminate(rows: &[Row], j: usize) -> Result<Option<Vec<Row>>> {
    let mut zero = Vec::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (n, b) in rows {
        let c = n[j];
        if c > tol::FM_DROP {
            pos.push((n, *b));
        } else if c < -tol::FM_DROP {
            neg.push((n, *b));
        } else {
            let mut n2 = n.clone();
            n2[j] = 0.0;
            zero.push((n2, *b));
        }
    }
    let mut out = zero;
    for (np, bp) in &pos {
        for (nn, bn) in &neg {
            let a = np[j];
            let c = -nn[j];
            // c * pos_row + a * neg_row zeroes the column; both weights > 0.
            let mut n2: Vec<f64> = np
                .iter()
                .zip(nn.iter())
                .map(|(x, y)| c * x + a * y)
                .collect();
            n2[j] = 0.0;
            let b2 = c * bp + a * bn;
            // Rescale so the largest coefficient is order one.
            let m = n2
                .iter()
                .fold(b2.abs(), |acc, v| acc.max(v.abs()))
                .max(1e-300);
            let n2: Vec<f64> = n2.iter().map(|v| v / m).collect();
            let b2 = b2 / m;
            if n2.iter().all(|v| v.abs() <= tol::FM_DROP) {
                if b2 < -tol::FEAS {
                    return Ok(None);
                }
                continue;
            }
            out.push((n2, b2));
        }
    }
    Ok(Some(out))
}

/// Drops rows made redundant by a parallel row with a smaller offset.
fn prune(rows: Vec<Row>) -> Vec<Row> {
    // Normalize to unit normals so parallel rows are directly comparable.
    let normalized: Vec<Row> = rows
        .into_iter()
        .filter_map(|(n, b)| {
            let len = norm2(&n);
            if len <= tol::FM_DROP {
                // Pure offset rows: trivial when satisfiable, kept otherwise
                // so the contradiction is not silently dropped.
                return if b >= -tol::FEAS { None } else { Some((n, b)) };
            }
            Some((n.iter().map(|v| v / len).collect(), b / len))
        })
        .collect();
    let mut keep = vec![true; normalized.len()];
    for i in 0..normalized.len() {
        if !keep[i] {
            continue;
        }
        for k in (i + 1)..normalized.len() {
            if !keep[k] {
                continue;
            }
            let (ni, bi) = &normalized[i];
            let (nk, bk) = &normalized[k];
            if dot(ni, nk) >= 1.0 - 1e-9 {
                // Same direction: the larger offset is implied.
                if bi <= bk {
                    keep[k] = false;
                } else {
                    keep[i] = false;
                    break;
                }
            }
        }
    }
    normalized
        .into_iter()
        .zip(keep)
        .filter_map(|(row, k)| k.then_some(row))
        .collect()
}

/// H-representation of a compact-plus-cone generator set, obtained by
/// eliminating the combination weights from the lifted incidence system.
pub fn polytope_to_h(set: &GeneratorSet) -> Result<PolyhedronH> {
    let d = set.dim();
    if set.is_empty() {
        return Ok(PolyhedronH::trivially_empty(d));
    }
    let np = set.points().len();
    let nr = set.rays().len();
    let joint = d + np + nr;
    if joint > tol::FM_MAX_DIM {
        return Err(Error::FmDimExceeded {
            dim: joint,
            limit: tol::FM_MAX_DIM,
        });
    }
    // Variables (y, point weights, ray weights).
    let mut sys = PolyhedronH::whole_space(joint);
    for k in 0..d {
        let mut row = vec![0.0; joint];
        row[k] = 1.0;
        for (i, p) in set.points().iter().enumerate() {
            row[d + i] = -p[k];
        }
        for (j, r) in set.rays().iter().enumerate() {
            row[d + np + j] = -r[k];
        }
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        sys.add_row(row, 0.0)?;
        sys.add_row(neg, 0.0)?;
    }
    let mut ones = vec![0.0; joint];
    for i in 0..np {
        ones[d + i] = 1.0;
    }
    let neg_ones: Vec<f64> = ones.iter().map(|v| -v).collect();
    sys.add_row(ones, 1.0)?;
    sys.add_row(neg_ones, -1.0)?;
    for w in 0..(np + nr) {
        let mut row = vec![0.0; joint];
        row[d + w] = -1.0;
        sys.add_row(row, 0.0)?;
    }
    let keep: Vec<usize> = (0..d).collect();
    fm_project(&sys, &keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::region_is_empty;

    /// Tight bounds of a one-dimensional polyhedron; `lo > hi` means empty.
    fn interval(poly: &PolyhedronH) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (n, b) in poly.rows() {
            if n[0] > 0.0 {
                hi = hi.min(b / n[0]);
            } else if n[0] < 0.0 {
                lo = lo.max(b / n[0]);
            }
        }
        (lo, hi)
    }

    #[test]
    fn weights_eliminate_to_an_interval() {
        // (q, -1) built from nonnegative weights on (1,-1) and (1,-2):
        // q = w1 + w2, w1 + 2 w2 = 1, w >= 0, so q runs over [1/2, 1].
        let sys = PolyhedronH::new(
            3,
            vec![
                (vec![1.0, -1.0, -1.0], 0.0),
                (vec![-1.0, 1.0, 1.0], 0.0),
                (vec![0.0, -1.0, -2.0], -1.0),
                (vec![0.0, 1.0, 2.0], 1.0),
                (vec![0.0, -1.0, 0.0], 0.0),
                (vec![0.0, 0.0, -1.0], 0.0),
            ],
        )
        .unwrap();
        let projected = fm_project(&sys, &[0]).unwrap();
        let (lo, hi) = interval(&projected);
        assert!((lo - 0.5).abs() < 1e-9, "lo = {lo}");
        assert!((hi - 1.0).abs() < 1e-9, "hi = {hi}");
    }

    #[test]
    fn cube_projects_to_square() {
        let mut rows = Vec::new();
        for k in 0..3 {
            let mut e = vec![0.0; 3];
            e[k] = 1.0;
            let mut ne = vec![0.0; 3];
            ne[k] = -1.0;
            rows.push((e, 1.0));
            rows.push((ne, 1.0));
        }
        let cube = PolyhedronH::new(3, rows).unwrap();
        let square = fm_project(&cube, &[0, 2]).unwrap();
        assert!(square.contains(&[0.9, -0.9], 1e-12));
        assert!(!square.contains(&[1.1, 0.0], 1e-9));
        assert!(!square.contains(&[0.0, -1.1], 1e-9));
    }

    #[test]
    fn contradiction_projects_to_empty() {
        // x <= -1 and x >= 0 with a free second coordinate.
        let sys = PolyhedronH::new(
            2,
            vec![(vec![1.0, 0.0], -1.0), (vec![-1.0, 0.0], 0.0)],
        )
        .unwrap();
        let projected = fm_project(&sys, &[1]).unwrap();
        assert!(region_is_empty(&projected).unwrap());
    }

    #[test]
    fn dimension_guard() {
        let sys = PolyhedronH::whole_space(9);
        assert!(matches!(
            fm_project(&sys, &[0]),
            Err(Error::FmDimExceeded { dim: 9, limit: 8 })
        ));
    }

    #[test]
    fn segment_to_halfspaces() {
        let seg = GeneratorSet::from_points(1, vec![vec![1.0], vec![2.0]]).unwrap();
        let h = polytope_to_h(&seg).unwrap();
        let (lo, hi) = interval(&h);
        assert!((lo - 1.0).abs() < 1e-9);
        assert!((hi - 2.0).abs() < 1e-9);
    }

    #[test]
    fn point_plus_ray_to_halfspaces() {
        // {-1} + cone{1} is the half-line [-1, inf).
        let s = GeneratorSet::new(1, vec![vec![-1.0]], vec![vec![1.0]]).unwrap();
        let h = polytope_to_h(&s).unwrap();
        let (lo, hi) = interval(&h);
        assert!((lo + 1.0).abs() < 1e-9);
        assert_eq!(hi, f64::INFINITY);
    }

    #[test]
    fn triangle_roundtrip_membership() {
        let tri = GeneratorSet::from_points(
            2,
            vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]],
        )
        .unwrap();
        let h = polytope_to_h(&tri).unwrap();
        assert!(h.contains(&[0.5, 0.5], 1e-9));
        assert!(h.contains(&[1.0, 1.0], 1e-8));
        assert!(!h.contains(&[1.2, 1.2], 1e-6));
        assert!(!h.contains(&[-0.1, 0.5], 1e-6));
    }

    #[test]
    fn empty_generator_set_maps_to_empty_region() {
        let h = polytope_to_h(&GeneratorSet::empty(2)).unwrap();
        assert!(region_is_empty(&h).unwrap());
    }
}
