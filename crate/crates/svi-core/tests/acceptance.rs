//! End-to-end checks of the full pipeline on the two bundled fixtures plus
//! randomized cross-validation against independent reference computations.
//! Each test prints one summary line when it passes; a failing test reports
//! which quantity drifted and by how much.

mod common;

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use svi_core::fixtures::{kinked_fan, kinked_fan_value, unbounded_shift};
use svi_core::{
    alpha_f_estimate, calmness_estimate, convexity_audit, dist_to_feasible, error_bound_audit,
    fan_increase_certificate, fm_project, grid_1d, lp_solve, open_covering_bound,
    penalized_minimizer, penalized_value, penalty_threshold, region_convexity_audit,
    rotation_increase_bound, solve, subdiff_oracle_1d, value_grid, value_subdiff, AlphaFBound,
    CertScope, IncreaseMethod, LpOutcome, Mat, PolyhedronH, SolveStatus,
};

const BUDGET_SECS: f64 = 5.0;

#[test]
fn c1_solver_matches_the_closed_form_on_a_dense_grid() {
    let started = Instant::now();
    let instance = kinked_fan();
    let grid = grid_1d(-2.0, 2.0, 0.01).unwrap();
    assert_eq!(grid.len(), 401, "dense grid should hold 401 points");
    let table = value_grid(&instance, &grid).unwrap();
    for row in &table {
        let p = row.p[0];
        let (want_value, want_argmin) = kinked_fan_value(p);
        match &row.status {
            SolveStatus::Optimal { value, argmin } => {
                assert!(
                    (value - want_value).abs() <= 1e-8,
                    "value at p = {p}: got {value}, closed form {want_value}"
                );
                assert!(
                    (argmin[0] - want_argmin).abs() <= 1e-8,
                    "argmin at p = {p}: got {}, closed form {want_argmin}",
                    argmin[0]
                );
            }
            other => panic!("solver returned {other:?} at p = {p}"),
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed <= BUDGET_SECS,
        "grid solve took {elapsed:.2}s, budget {BUDGET_SECS}s"
    );
    println!("c1 [PASS] 401 values and argmins within 1e-8 in {elapsed:.2}s");
}

#[test]
fn c2_value_subdifferentials_match_closed_form_and_difference_quotients() {
    let instance = kinked_fan();
    let cases = [(1.0, 2.0, 2.0), (0.0, -0.5, 2.0), (-1.0, -0.5, -0.5)];
    for (p_bar, want_lo, want_hi) in cases {
        let report = value_subdiff(&instance, &[p_bar], false).unwrap();
        let (lo, hi) = report
            .interval_1d()
            .expect("one-parameter output should reduce to an interval");
        assert!(
            (lo - want_lo).abs() <= 1e-6 && (hi - want_hi).abs() <= 1e-6,
            "subdifferential at p = {p_bar}: got [{lo}, {hi}], want [{want_lo}, {want_hi}]"
        );
        let (backward, forward) = subdiff_oracle_1d(&instance, p_bar, 0.5, 0.5, 20).unwrap();
        assert!(
            (backward - want_lo).abs() <= 1e-5,
            "backward quotient at p = {p_bar}: got {backward}, want {want_lo}"
        );
        assert!(
            (forward - want_hi).abs() <= 1e-5,
            "forward quotient at p = {p_bar}: got {forward}, want {want_hi}"
        );
    }
    println!("c2 [PASS] intervals at p = 1, 0, -1 within 1e-6; quotient oracle within 1e-5");
}

#[test]
fn c3_unbounded_family_is_flagged_with_certificates_and_a_certified_constant() {
    let started = Instant::now();
    let instance = unbounded_shift();
    let grid = grid_1d(-2.0, 2.0, 0.1).unwrap();
    for p in &grid {
        let report = solve(&instance, p).unwrap();
        match &report.status {
            SolveStatus::Unbounded { certificate, .. } => {
                let dir = certificate
                    .as_ref()
                    .expect("unbounded verdicts should carry a recession direction");
                assert!(
                    dir[0] < 0.0,
                    "certificate at p = {} should point down the objective, got {dir:?}",
                    p[0]
                );
                // Walking the certified direction from a feasible anchor must
                // stay feasible.
                let shifted = vec![p[0] + 5.0 * dir[0]];
                let dist = dist_to_feasible(&instance.map, &instance.cone, p, &shifted).unwrap();
                assert!(
                    dist <= 1e-7,
                    "certificate leaves the region at p = {}: distance {dist}",
                    p[0]
                );
            }
            other => panic!("expected an unbounded verdict at p = {}, got {other:?}", p[0]),
        }
    }
    let coarse = grid_1d(-2.0, 2.0, 0.5).unwrap();
    let report = alpha_f_estimate(
        &instance.map,
        &instance.cone,
        &coarse,
        &coarse,
        &IncreaseMethod::Analytic(CertScope::XOnly),
    )
    .unwrap();
    let alpha = match report.bound {
        AlphaFBound::CertifiedAtLeast { alpha } => alpha,
        ref other => panic!("expected a certified constant, got {other:?}"),
    };
    assert!(
        alpha >= 2.0 - 1e-3,
        "certified increase constant {alpha} fell below 2"
    );
    assert!(
        report.infeasible_points > 0,
        "the audit grid should contain infeasible points"
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed <= BUDGET_SECS,
        "unbounded sweep took {elapsed:.2}s, budget {BUDGET_SECS}s"
    );
    println!(
        "c3 [PASS] 41 certified unbounded verdicts; increase constant {alpha:.3} in {elapsed:.2}s"
    );
}

#[test]
fn c4_error_bound_audit_is_clean_on_both_fixtures() {
    let p_grid = grid_1d(-2.0, 2.0, 0.1).unwrap();
    let x_grid = grid_1d(-3.0, 3.0, 0.1).unwrap();
    for (name, instance) in [("kinked fan", kinked_fan()), ("unbounded shift", unbounded_shift())] {
        let report =
            error_bound_audit(&instance.map, &instance.cone, 1.9, &p_grid, &x_grid).unwrap();
        assert!(
            report.clean(),
            "{name}: {} violations, worst ratio {}",
            report.violations.len(),
            report.max_ratio
        );
        assert_eq!(
            report.checked + report.skipped_feasible + report.skipped_unbounded_excess,
            p_grid.len() * x_grid.len(),
            "{name}: audit should cover the whole product grid"
        );
        assert!(
            report.checked > 0,
            "{name}: the grid should contain infeasible points to audit"
        );
        assert!(
            report.max_ratio <= 1.0 + 1e-9,
            "{name}: distance exceeded the certified bound, ratio {}",
            report.max_ratio
        );
    }
    println!("c4 [PASS] 2501-point error-bound audit clean on both fixtures at alpha = 1.9");
}

#[test]
fn c5_value_excess_and_region_all_pass_convexity_audits() {
    let instance = kinked_fan();
    let table = value_grid(&instance, &grid_1d(-2.0, 2.0, 0.01).unwrap()).unwrap();
    let audit = convexity_audit(&table).unwrap();
    assert!(audit.triples > 0, "audit found no aligned triples");
    assert!(
        audit.max_midpoint_violation <= 1e-7,
        "value function broke midpoint convexity by {}",
        audit.max_midpoint_violation
    );

    // Constraint violation as a function of (p, x): recovered from the
    // penalized objective at unit weight, then checked on random midpoints.
    let excess = |p: f64, x: f64| -> f64 {
        penalized_value(&instance, &[p], 1.0, &[x]).unwrap()
            - instance.objective.eval(&[p], &[x])
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (pa, xa) = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0));
        let (pb, xb) = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0));
        let mid = excess(0.5 * (pa + pb), 0.5 * (xa + xb));
        let gap = mid - 0.5 * (excess(pa, xa) + excess(pb, xb));
        worst = worst.max(gap);
    }
    assert!(
        worst <= 1e-8,
        "constraint violation broke midpoint convexity by {worst}"
    );

    let regions = region_convexity_audit(&instance.map, &instance.cone, 1000, 0xC5).unwrap();
    assert!(regions.tested > 0, "region audit tested no segments");
    assert!(
        regions.clean(),
        "feasible-region audit found {} violations",
        regions.violations
    );
    println!(
        "c5 [PASS] value audit over {} triples, 1000 excess midpoints, {} region segments",
        audit.triples, regions.tested
    );
}

#[test]
fn c6_penalty_thresholds_match_a_dense_scan_oracle() {
    // Closed-form penalized objective of the kinked fixture, written out
    // independently of the library: phi(p, x) = |p| + x and the violation is
    // max(0, p - x, p - 2x).
    let psi = |p: f64, lambda: f64, x: f64| -> f64 {
        p.abs() + x + lambda * (0.0f64).max(p - x).max(p - 2.0 * x)
    };
    let instance = kinked_fan();
    for (p_bar, x_bar, want) in [(1.0, 1.0, 1.0), (-1.0, -0.5, 0.5)] {
        // Dense scan first: the smallest weight on a 0.01 grid at which the
        // anchor value matches the grid minimum of the penalized objective.
        let mut oracle = None;
        for k in 0..=200 {
            let lambda = k as f64 * 0.01;
            let mut grid_min = f64::INFINITY;
            for j in 0..=8000 {
                let x = -4.0 + j as f64 * 1e-3;
                grid_min = grid_min.min(psi(p_bar, lambda, x));
            }
            let holds = psi(p_bar, lambda, x_bar) <= grid_min + 1e-9;
            match (oracle, holds) {
                (None, true) => oracle = Some(lambda),
                (Some(at), false) => {
                    panic!("exactness held at weight {at} but failed again at {lambda}")
                }
                _ => {}
            }
        }
        let oracle = oracle.expect("dense scan found no exact weight up to 2");
        assert!(
            (oracle - want).abs() <= 0.01 + 1e-12,
            "dense scan at p = {p_bar} located {oracle}, closed form says {want}"
        );

        let report = penalty_threshold(&instance, &[p_bar], &[x_bar], 4.0, 1e-4).unwrap();
        assert!(
            !report.threshold_above_lambda_max,
            "threshold at p = {p_bar} escaped the probe ceiling"
        );
        assert!(
            (report.lambda_star_estimate - want).abs() <= 1e-3,
            "threshold at p = {p_bar}: got {}, want {want}",
            report.lambda_star_estimate
        );
        let (lo, hi) = report.bracket;
        assert!(
            lo <= report.lambda_star_estimate && report.lambda_star_estimate <= hi,
            "estimate {} left its own bracket ({lo}, {hi})",
            report.lambda_star_estimate
        );

        // At twice the threshold the penalized minimizer must sit on the
        // solution of the constrained problem.
        let (minimizer, _) = penalized_minimizer(&instance, &[p_bar], 2.0 * want, &[x_bar + 0.7]);
        assert!(
            (minimizer[0] - x_bar).abs() <= 1e-5,
            "penalized minimizer at p = {p_bar}, weight {}: got {}, want {x_bar}",
            2.0 * want,
            minimizer[0]
        );
    }
    println!("c6 [PASS] thresholds 1 and 1/2 within 1e-3 of the dense scan; minimizers on target");
}

#[test]
fn c7_calmness_bounds_match_the_one_sided_value_slopes() {
    let instance = kinked_fan();
    for (p_bar, x_bar, want) in [(1.0, 1.0, 2.0), (-1.0, -0.5, 0.5)] {
        let estimate =
            calmness_estimate(&instance, &[p_bar], &[x_bar], 0.3, 500, 400, 0xC7).unwrap();
        assert!(
            estimate.samples > 0,
            "no probe at p = {p_bar} had a nonempty restricted region"
        );
        assert!(
            (estimate.lambda_bound - want).abs() <= 1e-4,
            "calmness bound at p = {p_bar}: got {}, want {want}",
            estimate.lambda_bound
        );
    }
    println!("c7 [PASS] calmness bounds 2 and 1/2 within 1e-4 over 500 probes each");
}

#[test]
fn c8_covering_bounds_are_exact_for_rescaled_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut checked = 0;
    for n in [2usize, 3, 4] {
        for _ in 0..20 {
            let i = rng.gen_range(0..n - 1);
            let j = rng.gen_range(i + 1..n);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let lambda: f64 = rng.gen_range(1.5..6.0);
            let mut rows = vec![vec![0.0; n]; n];
            for (k, row) in rows.iter_mut().enumerate() {
                row[k] = lambda;
            }
            rows[i][i] = lambda * theta.cos();
            rows[i][j] = -lambda * theta.sin();
            rows[j][i] = lambda * theta.sin();
            rows[j][j] = lambda * theta.cos();
            let bound = open_covering_bound(&Mat::from_rows(rows).unwrap());
            assert!(
                (bound - lambda).abs() <= 1e-9,
                "rescaled rotation in dimension {n}: bound {bound}, scale {lambda}"
            );
            checked += 1;
        }
    }
    assert_eq!(
        rotation_increase_bound(4, 5.0, 0.0).unwrap(),
        2.0,
        "the exactly-solvable rotation case should come out on the nose"
    );
    let instance = kinked_fan();
    let cert = fan_increase_certificate(&instance.map, &instance.cone, CertScope::XOnly).unwrap();
    let alpha = cert
        .alpha_lower
        .expect("the fixture fan should certify a state-space increase constant");
    assert!(
        alpha >= 2.0 - 1e-9,
        "state-space certificate reached only {alpha}"
    );
    println!("c8 [PASS] {checked} rotation bounds exact to 1e-9; fixture certificate at {alpha}");
}

#[test]
fn c9_lp_and_elimination_agree_with_brute_force_references() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC9);

    // Random bounded integer-data programs against exhaustive vertex
    // enumeration (Gaussian elimination in tests/common, written without the
    // library's linear algebra).
    let mut solved = 0;
    while solved < 200 {
        let dim = rng.gen_range(1..=3usize);
        let mut region = PolyhedronH::whole_space(dim);
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            region.add_row(e.clone(), 2.0).unwrap();
            for v in e.iter_mut() {
                *v = -*v;
            }
            region.add_row(e, 2.0).unwrap();
        }
        for _ in 0..rng.gen_range(0..=(8 - 2 * dim)) {
            let normal: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2..=2i32) as f64).collect();
            if normal.iter().all(|v| *v == 0.0) {
                continue;
            }
            let offset = rng.gen_range(1..=3i32) as f64;
            region.add_row(normal, offset).unwrap();
        }
        let objective: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3..=3i32) as f64).collect();
        if objective.iter().all(|v| *v == 0.0) {
            continue;
        }
        let (want, _) = common::brute_force_min(&objective, &region)
            .expect("positive offsets keep the origin feasible");
        match lp_solve(&objective, &region).unwrap() {
            LpOutcome::Optimal { value, point, .. } => {
                assert!(
                    (value - want).abs() <= 1e-8,
                    "program {solved}: simplex value {value}, enumeration {want}"
                );
                assert!(
                    region.contains(&point, 1e-7),
                    "program {solved}: reported optimum lies outside the region"
                );
            }
            other => panic!("program {solved}: bounded program reported {other:?}"),
        }
        solved += 1;
    }

    // Elimination shadows against a hand-rolled one-variable interval check.
    let mut slices = 0;
    let mut skipped = 0;
    for system_idx in 0..100 {
        let mut system = PolyhedronH::whole_space(3);
        for k in 0..3 {
            let mut e = vec![0.0; 3];
            e[k] = 1.0;
            system.add_row(e.clone(), 2.0).unwrap();
            for v in e.iter_mut() {
                *v = -*v;
            }
            system.add_row(e, 2.0).unwrap();
        }
        for _ in 0..rng.gen_range(0..=2) {
            let normal: Vec<f64> = (0..3).map(|_| rng.gen_range(-2..=2i32) as f64).collect();
            if normal.iter().all(|v| *v == 0.0) {
                continue;
            }
            system.add_row(normal, rng.gen_range(1..=3i32) as f64).unwrap();
        }
        let shadow = fm_project(&system, &[0, 1]).unwrap();
        for ia in -4..=4i32 {
            for ib in -4..=4i32 {
                let (a, b) = (ia as f64 * 0.5 + 0.25, ib as f64 * 0.5 + 0.25);
                // Feasible y-interval of the slice x0 = a, x1 = b, by hand.
                let (mut lo, mut hi, mut flat_margin) = (f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY);
                for (normal, offset) in system.rows() {
                    let rhs = offset - normal[0] * a - normal[1] * b;
                    if normal[2] > 0.0 {
                        hi = hi.min(rhs / normal[2]);
                    } else if normal[2] < 0.0 {
                        lo = lo.max(rhs / normal[2]);
                    } else {
                        flat_margin = flat_margin.min(rhs);
                    }
                }
                let margin = (hi - lo).min(flat_margin);
                if margin.abs() < 1e-6 {
                    skipped += 1;
                    continue;
                }
                let inside = shadow.contains(&[a, b], if margin > 0.0 { 1e-7 } else { 1e-8 });
                assert_eq!(
                    inside,
                    margin > 0.0,
                    "system {system_idx} at ({a}, {b}): slice margin {margin}, shadow disagrees"
                );
                slices += 1;
            }
        }
    }
    assert!(
        skipped * 10 < (slices + skipped) * 3,
        "too many ambiguous slice points: {skipped} of {}",
        slices + skipped
    );
    println!("c9 [PASS] 200 programs against enumeration; {slices} slice points against elimination");
}
