//! The feasible-region multifunction `S(p) = {x : F(p, x) ⊆ C}` and its
//! audits: H-representation, distance, the global error bound, region
//! convexity, and the parametric-in-p region for fixed state.
//!
//! The central reduction: a polytope lies in the convex cone `C` exactly when
//! all its vertices do, and `g + C ⊆ C` exactly when `g ∈ C`. Either way the
//! inclusion becomes one linear inequality per (branch, facet) pair.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{excess_over_cone, PolyhedralCone};
use crate::error::{Error, Result};
use crate::geom::PolyhedronH;
use crate::linalg::dot;
use crate::lp::region_is_empty;
use crate::map::{eval_map, SetValuedMap};
use crate::project::project_polyhedron;
use crate::tol;

/// Builds a region from raw rows, routing constant rows (zero normals) to
/// the vacuous/infeasible special cases instead of storing them.
fn assemble_rows(dim: usize, rows: Vec<(Vec<f64>, f64)>) -> PolyhedronH {
    let mut region = PolyhedronH::whole_space(dim);
    for (normal, offset) in rows {
        if normal.iter().all(|v| v.abs() <= 1e-14) {
            // Constant constraint 0 ≤ offset: either vacuous or infeasible.
            if offset < -tol::FEAS {
                return PolyhedronH::trivially_empty(dim);
            }
            continue;
        }
        region
            .add_row(normal, offset)
            .expect("nonzero normal of checked dimension");
    }
    region
}

/// H-representation of `S(p) = {x : F(p, x) ⊆ C}`. Empty regions are
/// ordinary values, not errors.
pub fn feasible_region(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p: &[f64],
) -> Result<PolyhedronH> {
    let (s, n, m) = map.dims();
    if p.len() != s || cone.dim() != m {
        return Err(Error::DimensionMismatch(
            "parameter or cone dimension does not match the map".into(),
        ));
    }
    let mut rows = Vec::new();
    for branch in map.branches() {
        let fixed = crate::linalg::add(&branch.p_mat.mul_vec(p), &branch.offset);
        for facet in cone.facets() {
            // ⟨a, L x⟩ + ⟨a, M p + b⟩ ≥ 0  ⟺  ⟨−Lᵀ a, x⟩ ≤ ⟨a, M p + b⟩.
            let normal: Vec<f64> = branch
                .x_mat
                .tr_mul_vec(facet)
                .iter()
                .map(|v| -v)
                .collect();
            rows.push((normal, dot(facet, &fixed)));
        }
    }
    Ok(assemble_rows(n, rows))
}

/// Region over the parameter for a frozen state: `{p : F(p, x) ⊆ C}`.
pub fn parametric_feasible_in_p(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    x: &[f64],
) -> Result<PolyhedronH> {
    let (s, n, m) = map.dims();
    if x.len() != n || cone.dim() != m {
        return Err(Error::DimensionMismatch(
            "state or cone dimension does not match the map".into(),
        ));
    }
    let mut rows = Vec::new();
    for branch in map.branches() {
        let fixed = crate::linalg::add(&branch.x_mat.mul_vec(x), &branch.offset);
        for facet in cone.facets() {
            let normal: Vec<f64> = branch
                .p_mat
                .tr_mul_vec(facet)
                .iter()
                .map(|v| -v)
                .collect();
            rows.push((normal, dot(facet, &fixed)));
        }
    }
    Ok(assemble_rows(s, rows))
}

/// Euclidean distance from `x` to `S(p)`.
pub fn dist_to_feasible(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    p: &[f64],
    x: &[f64],
) -> Result<f64> {
    let region = feasible_region(map, cone, p)?;
    if region_is_empty(&region)? {
        return Err(Error::InfeasibleParameter);
    }
    Ok(project_polyhedron(&region, x)?.1)
}

/// One grid point where the error-bound inequality failed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBoundViolation {
    pub p: Vec<f64>,
    pub x: Vec<f64>,
    pub distance: f64,
    pub excess: f64,
    pub ratio: f64,
}

/// Outcome of sweeping `dist(x, S(p)) ≤ excess / (alpha − 1)` over a grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBoundReport {
    pub alpha: f64,
    pub checked: usize,
    pub skipped_feasible: usize,
    pub skipped_unbounded_excess: usize,
    pub max_ratio: f64,
    pub violations: Vec<ErrorBoundViolation>,
}

impl ErrorBoundReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits the global error bound with modulus `1/(alpha − 1)` on the product
/// grid `p_grid × x_grid`. Feasible points satisfy the bound trivially and
/// are skipped but counted.
pub fn error_bound_audit(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    alpha: f64,
    p_grid: &[Vec<f64>],
    x_grid: &[Vec<f64>],
) -> Result<ErrorBoundReport> {
    if alpha <= 1.0 {
        return Err(Error::InvalidInput(
            "error bound requires a modulus with alpha > 1".into(),
        ));
    }
    let mut report = ErrorBoundReport {
        alpha,
        checked: 0,
        skipped_feasible: 0,
        skipped_unbounded_excess: 0,
        max_ratio: 0.0,
        violations: Vec::new(),
    };
    for p in p_grid {
        // One region per parameter serves the whole state slice.
        let region = feasible_region(map, cone, p)?;
        let empty = region_is_empty(&region)?;
        for x in x_grid {
            let value = eval_map(map, cone, p, x)?;
            let excess = match excess_over_cone(&value, cone)? {
                crate::cone::Excess::Finite(e) => e,
                crate::cone::Excess::Unbounded => {
                    report.skipped_unbounded_excess += 1;
                    continue;
                }
            };
            if excess <= tol::FEAS {
                report.skipped_feasible += 1;
                continue;
            }
            let distance = if empty {
                f64::INFINITY
            } else {
                project_polyhedron(&region, x)?.1
            };
            let bound = excess / (alpha - 1.0);
            let ratio = distance / bound;
            report.checked += 1;
            report.max_ratio = report.max_ratio.max(ratio);
            if distance > bound + 1e-7 {
                report.violations.push(ErrorBoundViolation {
                    p: p.clone(),
                    x: x.clone(),
                    distance,
                    excess,
                    ratio,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionConvexityReport {
    pub samples: usize,
    /// Samples where points in both endpoint regions were found.
    pub tested: usize,
    /// Samples skipped because rejection sampling found no region point.
    pub skipped: usize,
    pub violations: usize,
}

impl RegionConvexityReport {
    pub fn clean(&self) -> bool {
        self.violations == 0
    }
}

/// Convexity audit of `S` against an arbitrary membership predicate: for
/// sampled parameters `p₁, p₂`, weight `t`, and states `xᵢ ∈ S(pᵢ)`, the
/// combination must lie in `S(t p₁ + (1−t) p₂)`.
pub fn region_convexity_audit_with(
    member: &dyn Fn(&[f64], &[f64]) -> Result<bool>,
    s: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<RegionConvexityReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("audit needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = RegionConvexityReport {
        samples,
        tested: 0,
        skipped: 0,
        violations: 0,
    };
    let draw = |len: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..len).map(|_| rng.gen_range(lo..hi)).collect()
    };
    for _ in 0..samples {
        let p1 = draw(s, -2.0, 2.0, &mut rng);
        let p2 = draw(s, -2.0, 2.0, &mut rng);
        let t: f64 = rng.gen_range(0.05..0.95);
        let find = |p: &[f64], rng: &mut ChaCha8Rng| -> Result<Option<Vec<f64>>> {
            for _ in 0..60 {
                let x = draw(n, -3.0, 3.0, rng);
                if member(p, &x)? {
                    return Ok(Some(x));
                }
            }
            Ok(None)
        };
        let (x1, x2) = match (find(&p1, &mut rng)?, find(&p2, &mut rng)?) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                report.skipped += 1;
                continue;
            }
        };
        let pm = crate::linalg::axpy(&crate::linalg::scale(&p1, t), 1.0 - t, &p2);
        let xm = crate::linalg::axpy(&crate::linalg::scale(&x1, t), 1.0 - t, &x2);
        report.tested += 1;
        if !member(&pm, &xm)? {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Convexity audit for the region of an actual map, with membership decided
/// by the assembled H-representation.
pub fn region_convexity_audit(
    map: &SetValuedMap,
    cone: &PolyhedralCone,
    samples: usize,
    seed: u64,
) -> Result<RegionConvexityReport> {
    let (s, n, _) = map.dims();
    region_convexity_audit_with(
        &|p, x| Ok(feasible_region(map, cone, p)?.contains(x, tol::FEAS)),
        s,
        n,
        samples,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::map::AffineGenerator;

    pub(crate) fn halfline() -> PolyhedralCone {
        PolyhedralCone::new(1, vec![vec![1.0]]).unwrap()
    }

    fn worked_map() -> SetValuedMap {
        let gen = |l: f64| {
            AffineGenerator::new(
                Mat::from_rows(vec![vec![-1.0]]).unwrap(),
                Mat::from_rows(vec![vec![l]]).unwrap(),
                vec![0.0],
            )
            .unwrap()
        };
        SetValuedMap::fan(vec![gen(1.0), gen(2.0)]).unwrap()
    }

    fn first_map() -> SetValuedMap {
        SetValuedMap::affine_plus_cone(
            AffineGenerator::new(
                Mat::from_rows(vec![vec![1.0]]).unwrap(),
                Mat::from_rows(vec![vec![-1.0]]).unwrap(),
                vec![0.0],
            )
            .unwrap(),
        )
    }

    fn interval_of(region: &PolyhedronH, lo_probe: f64, hi_probe: f64) -> (bool, bool) {
        (
            region.contains(&[lo_probe], 1e-9),
            region.contains(&[hi_probe], 1e-9),
        )
    }

    #[test]
    fn region_of_the_slope_fan() {
        let region = feasible_region(&worked_map(), &halfline(), &[1.0]).unwrap();
        // Expect [1, ∞): both −p+x ≥ 0 and −p+2x ≥ 0 with p=1.
        assert_eq!(interval_of(&region, 0.99, 1.01), (false, true));
        assert!(region.contains(&[1.0], 1e-9));
        let region = feasible_region(&worked_map(), &halfline(), &[-2.0]).unwrap();
        // Expect [−1, ∞): binding row is −p+2x ≥ 0 at p=−2.
        assert_eq!(interval_of(&region, -1.01, -0.99), (false, true));
        assert!(region.contains(&[100.0], 1e-9));
    }

    #[test]
    fn region_of_the_affine_plus_cone_map() {
        let region = feasible_region(&first_map(), &halfline(), &[3.0]).unwrap();
        // Expect (−∞, 3]: p − x ≥ 0.
        assert_eq!(interval_of(&region, 2.99, 3.01), (true, false));
        assert!(region.contains(&[-50.0], 1e-9));
    }

    #[test]
    fn distance_to_the_region() {
        let map = worked_map();
        let c = halfline();
        assert!(dist_to_feasible(&map, &c, &[1.0], &[1.0]).unwrap().abs() < 1e-12);
        assert!((dist_to_feasible(&map, &c, &[1.0], &[0.0]).unwrap() - 1.0).abs() < 1e-9);
        assert!((dist_to_feasible(&map, &c, &[-2.0], &[-3.0]).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_region_is_an_error_for_distance_only() {
        // Force emptiness: two branches demanding x ≥ 1 and −x ≥ 1.
        let gen = |l: f64, b: f64| {
            AffineGenerator::new(
                Mat::zeros(1, 0),
                Mat::from_rows(vec![vec![l]]).unwrap(),
                vec![b],
            )
            .unwrap()
        };
        let map = SetValuedMap::fan(vec![gen(1.0, -1.0), gen(-1.0, -1.0)]).unwrap();
        let region = feasible_region(&map, &halfline(), &[]).unwrap();
        assert!(crate::lp::region_is_empty(&region).unwrap());
        let err = dist_to_feasible(&map, &halfline(), &[], &[0.0]).unwrap_err();
        assert_eq!(err.code(), "infeasible_parameter");
    }

    #[test]
    fn membership_matches_excess() {
        use crate::cone::Excess;
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let map = worked_map();
        let c = halfline();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = vec![rng.gen_range(-2.0..2.0)];
            let x = vec![rng.gen_range(-3.0..3.0)];
            let in_region = feasible_region(&map, &c, &p)
                .unwrap()
                .contains(&x, tol::FEAS);
            let value = eval_map(&map, &c, &p, &x).unwrap();
            let excess = match excess_over_cone(&value, &c).unwrap() {
                Excess::Finite(e) => e,
                Excess::Unbounded => f64::INFINITY,
            };
            assert_eq!(in_region, excess <= 1e-9, "p={p:?} x={x:?} exc={excess}");
        }
    }

    #[test]
    fn error_bound_on_dense_grids() {
        let grid = |lo: f64, hi: f64, step: f64| -> Vec<Vec<f64>> {
            let count = ((hi - lo) / step).round() as usize;
            (0..=count).map(|i| vec![lo + i as f64 * step]).collect()
        };
        for map in [worked_map(), first_map()] {
            let report = error_bound_audit(
                &map,
                &halfline(),
                1.9,
                &grid(-2.0, 2.0, 0.1),
                &grid(-3.0, 3.0, 0.1),
            )
            .unwrap();
            assert!(report.clean(), "violations: {:?}", report.violations);
            assert!(report.max_ratio <= 1.0 + 1e-9, "ratio {}", report.max_ratio);
            assert!(report.checked > 0);
            assert!(report.skipped_feasible > 0);
        }
    }

    #[test]
    fn parametric_region_in_p() {
        let region = parametric_feasible_in_p(&worked_map(), &halfline(), &[1.0]).unwrap();
        // {p : −p + 1 ≥ 0 and −p + 2 ≥ 0} = (−∞, 1].
        assert_eq!(interval_of(&region, 0.99, 1.01), (true, false));
        let region = parametric_feasible_in_p(&worked_map(), &halfline(), &[0.0]).unwrap();
        assert_eq!(interval_of(&region, -0.01, 0.01), (true, false));
        assert!(region.contains(&[0.0], 1e-9));
        let region = parametric_feasible_in_p(&first_map(), &halfline(), &[0.0]).unwrap();
        // g(p, 0) = p ≥ 0.
        assert_eq!(interval_of(&region, -0.01, 0.01), (false, true));
    }

    #[test]
    fn region_convexity_holds_for_shipped_maps() {
        for map in [worked_map(), first_map()] {
            let report = region_convexity_audit(&map, &halfline(), 300, 17).unwrap();
            assert!(report.clean());
            assert!(report.tested > 100);
        }
    }

    #[test]
    fn region_convexity_audit_catches_a_disconnected_hook() {
        // Membership in (−∞, p] ∪ [p+1, p+2]: nonconvex in x.
        let member = |p: &[f64], x: &[f64]| -> Result<bool> {
            let (p, x) = (p[0], x[0]);
            Ok(x <= p || (x >= p + 1.0 && x <= p + 2.0))
        };
        let report = region_convexity_audit_with(&member, 1, 1, 500, 29).unwrap();
        assert!(report.violations > 0);
    }

    #[test]
    fn assembled_rows_match_objective_free_membership() {
        // Cross-check on a 2-D cone: C = {y : y₁ ≥ 0, y₁ + y₂ ≥ 0}.
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let cone = PolyhedralCone::new(2, vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let gen = AffineGenerator::new(
            Mat::from_rows(vec![vec![1.0], vec![0.0]]).unwrap(),
            Mat::from_rows(vec![vec![-1.0, 0.0], vec![0.5, -1.0]]).unwrap(),
            vec![0.0, 0.25],
        )
        .unwrap();
        let map = SetValuedMap::affine_plus_cone(gen);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let p = vec![rng.gen_range(-2.0..2.0)];
            let x = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let region = feasible_region(&map, &cone, &p).unwrap();
            let value = eval_map(&map, &cone, &p, &x).unwrap();
            let inside = value
                .points()
                .iter()
                .all(|y| cone.contains(y, 1e-9))
                && value.rays().iter().all(|r| cone.contains(r, 1e-9));
            assert_eq!(region.contains(&x, 1e-9), inside);
        }
    }
}
