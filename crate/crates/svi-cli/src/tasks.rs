//! Task execution: each configured analysis runs in a fixed order, writes
//! one CSV artifact, and reports a single headline quantity for the run
//! summary. A failing task is recorded and the run moves on, so one bad
//! analysis never hides the others.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use svi_core::{
    calmness_estimate, convexity_audit, dist_to_feasible, error_bound_audit,
    fan_increase_certificate, grid_1d, lipschitz_audit, penalty_threshold, solve, subdiff_oracle_1d,
    uniform_subreg_check, value_subdiff, Error as CoreError, ProblemInstance, SolveReport,
    SolveStatus,
};

use crate::config::{ConfigError, TasksConfig};

/// Canonical execution order; `run-all` walks this list and runs whatever
/// the config enables.
pub const TASK_ORDER: [&str; 10] = [
    "feasibility",
    "value-grid",
    "convexity-audit",
    "lipschitz-audit",
    "subdiff",
    "increase-cert",
    "audit-error-bound",
    "penalty",
    "calmness",
    "subreg",
];

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    Error,
}

#[derive(Debug, Serialize)]
pub struct TaskResult {
    pub name: &'static str,
    pub status: TaskStatus,
    /// Headline number of the task, when it produced one.
    pub quantity: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// CSV artifact file name inside the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Quantity {
    pub name: &'static str,
    pub value: f64,
}

/// Everything a single run needs beyond the config itself.
pub struct RunContext<'a> {
    pub instance: &'a ProblemInstance,
    pub tasks: &'a TasksConfig,
    pub out_dir: &'a Path,
    pub seed: u64,
    pub threads: usize,
    pub p_override: Option<Vec<f64>>,
}

/// Tasks that accept a `--p` point override from the command line.
const POINT_TASKS: [&str; 5] = ["feasibility", "subdiff", "penalty", "calmness", "subreg"];

pub fn run(
    ctx: &RunContext<'_>,
    selection: Option<&'static str>,
) -> Result<Vec<TaskResult>, ConfigError> {
    validate(ctx, selection)?;
    fs::create_dir_all(ctx.out_dir)
        .map_err(|e| ConfigError::Task(format!("cannot create {}: {e}", ctx.out_dir.display())))?;
    let names: Vec<&'static str> = match selection {
        Some(name) => vec![name],
        None => TASK_ORDER
            .iter()
            .copied()
            .filter(|name| is_configured(ctx.tasks, name))
            .collect(),
    };
    let mut value_table: Option<Vec<SolveReport>> = None;
    let mut results = Vec::new();
    for name in names {
        let outcome = run_one(ctx, name, &mut value_table);
        results.push(match outcome {
            Ok((quantity, csv)) => TaskResult {
                name,
                status: TaskStatus::Ok,
                quantity,
                error: None,
                csv,
            },
            Err(message) => TaskResult {
                name,
                status: TaskStatus::Error,
                quantity: None,
                error: Some(message),
                csv: None,
            },
        });
    }
    Ok(results)
}

fn is_configured(tasks: &TasksConfig, name: &str) -> bool {
    match name {
        "feasibility" => tasks.feasibility.is_some(),
        "value-grid" => tasks.value_grid.is_some(),
        "convexity-audit" => tasks.convexity_audit.is_some(),
        "lipschitz-audit" => tasks.lipschitz_audit.is_some(),
        "subdiff" => tasks.subdiff.is_some(),
        "increase-cert" => tasks.increase_cert.is_some(),
        "audit-error-bound" => tasks.error_bound.is_some(),
        "penalty" => tasks.penalty.is_some(),
        "calmness" => tasks.calmness.is_some(),
        "subreg" => tasks.subreg.is_some(),
        _ => false,
    }
}

/// Rejects bad task setups before anything runs: unknown or unconfigured
/// selections, audits without a value grid to audit, dimension mismatches in
/// task points, and overrides that no selected task consumes.
fn validate(ctx: &RunContext<'_>, selection: Option<&'static str>) -> Result<(), ConfigError> {
    let tasks = ctx.tasks;
    let (s, n) = (ctx.instance.dims.s, ctx.instance.dims.n);
    if let Some(name) = selection {
        if !is_configured(tasks, name) {
            return Err(ConfigError::Task(format!(
                "task {name} is not configured in the tasks table"
            )));
        }
    }
    let wants = |name: &str| selection.map_or_else(|| is_configured(tasks, name), |w| w == name);
    if (wants("convexity-audit") || wants("lipschitz-audit")) && tasks.value_grid.is_none() {
        return Err(ConfigError::Task(
            "value table audits need a value_grid task to supply the table".into(),
        ));
    }
    if (wants("value-grid") || wants("convexity-audit") || wants("lipschitz-audit")) && s != 1 {
        return Err(ConfigError::Task(format!(
            "value grids are one-parameter sweeps; the instance has s = {s}"
        )));
    }
    if let Some(task) = &tasks.value_grid {
        if wants("value-grid") && (!(task.step > 0.0) || !(task.hi > task.lo)) {
            return Err(ConfigError::Task(
                "value_grid needs hi > lo and step > 0".into(),
            ));
        }
    }
    let check_point = |task: &str, label: &str, point: &[f64], want: usize| {
        if point.len() == want {
            Ok(())
        } else {
            Err(ConfigError::Task(format!(
                "{task}.{label} has {} entries, the instance needs {want}",
                point.len()
            )))
        }
    };
    if let (true, Some(t)) = (wants("feasibility"), &tasks.feasibility) {
        check_point("feasibility", "p", &t.p, s)?;
        check_point("feasibility", "x", &t.x, n)?;
    }
    if let (true, Some(t)) = (wants("subdiff"), &tasks.subdiff) {
        for (i, point) in t.points.iter().enumerate() {
            check_point("subdiff", &format!("points[{i}]"), point, s)?;
        }
        if t.points.is_empty() {
            return Err(ConfigError::Task("subdiff.points is empty".into()));
        }
    }
    if let (true, Some(t)) = (wants("penalty"), &tasks.penalty) {
        check_point("penalty", "p", &t.p, s)?;
        check_point("penalty", "x", &t.x, n)?;
    }
    if let (true, Some(t)) = (wants("calmness"), &tasks.calmness) {
        check_point("calmness", "p", &t.p, s)?;
        check_point("calmness", "x", &t.x, n)?;
    }
    if let (true, Some(t)) = (wants("subreg"), &tasks.subreg) {
        check_point("subreg", "p", &t.p, s)?;
        check_point("subreg", "x", &t.x, n)?;
    }
    if let Some(point) = &ctx.p_override {
        if point.len() != s {
            return Err(ConfigError::Task(format!(
                "--p has {} entries, the instance needs {s}",
                point.len()
            )));
        }
        match selection {
            Some(name) if POINT_TASKS.contains(&name) => {}
            Some(name) => {
                return Err(ConfigError::Task(format!(
                    "--p does not apply to {name}; it overrides the base point of {}",
                    POINT_TASKS.join(", ")
                )))
            }
            None => {
                return Err(ConfigError::Task(
                    "--p needs a single point task, not run-all".into(),
                ))
            }
        }
    }
    if ctx.threads == 0 {
        return Err(ConfigError::Task("--threads must be at least 1".into()));
    }
    Ok(())
}

type TaskOutput = Result<(Option<Quantity>, Option<String>), String>;

fn run_one(
    ctx: &RunContext<'_>,
    name: &'static str,
    value_table: &mut Option<Vec<SolveReport>>,
) -> TaskOutput {
    match name {
        "feasibility" => feasibility(ctx),
        "value-grid" => value_grid(ctx, value_table),
        "convexity-audit" => convexity(ctx, value_table),
        "lipschitz-audit" => lipschitz(ctx, value_table),
        "subdiff" => subdiff(ctx),
        "increase-cert" => increase_cert(ctx),
        "audit-error-bound" => error_bound(ctx),
        "penalty" => penalty(ctx),
        "calmness" => calmness(ctx),
        "subreg" => subreg(ctx),
        other => Err(format!("unknown task {other}")),
    }
}

fn quantity(name: &'static str, value: f64) -> Option<Quantity> {
    Some(Quantity { name, value })
}

/// `{:.16e}` keeps every bit of the double; infinities print as `inf`.
fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")
}

/// Writes a CSV artifact. The first line is a generation-time comment;
/// consumers comparing runs for determinism skip it.
fn write_csv(out_dir: &Path, file: &str, header: &str, rows: &[String]) -> Result<String, String> {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let path = out_dir.join(file);
    let mut out = fs::File::create(&path).map_err(|e| format!("cannot write {file}: {e}"))?;
    let body = format!("# generated_unix {stamp}\n{header}\n{}\n", rows.join("\n"));
    out.write_all(body.as_bytes())
        .map_err(|e| format!("cannot write {file}: {e}"))?;
    Ok(file.to_string())
}

fn feasibility(ctx: &RunContext<'_>) -> TaskOutput {
    let task = ctx.tasks.feasibility.as_ref().expect("validated");
    let p = ctx.p_override.as_deref().unwrap_or(&task.p);
    let distance = match dist_to_feasible(&ctx.instance.map, &ctx.instance.cone, p, &task.x) {
        Ok(d) => d,
        // An empty region is a finding, not a failure: the distance is
        // infinite and the row records it.
        Err(CoreError::InfeasibleParameter) => f64::INFINITY,
        Err(e) => return Err(e.to_string()),
    };
    let mut row = p.to_vec();
    row.extend_from_slice(&task.x);
    row.push(distance);
    let header = csv_header(&["p"], ctx.instance.dims.s, &["x"], ctx.instance.dims.n, "distance");
    let csv = write_csv(ctx.out_dir, "feasibility.csv", &header, &[fmt_row(&row)])?;
    Ok((quantity("distance", distance), Some(csv)))
}

fn csv_header(p_tag: &[&str], s: usize, x_tag: &[&str], n: usize, tail: &str) -> String {
    let mut cols = Vec::new();
    for tag in p_tag {
        for j in 0..s {
            cols.push(format!("{tag}{j}"));
        }
    }
    for tag in x_tag {
        for j in 0..n {
            cols.push(format!("{tag}{j}"));
        }
    }
    if !tail.is_empty() {
        cols.push(tail.to_string());
    }
    cols.join(",")
}

/// Solves the grid, splitting it across `--threads` workers; reports are
/// reassembled in grid order so the artifact is independent of the split.
fn solve_grid(ctx: &RunContext<'_>, grid: &[Vec<f64>]) -> Result<Vec<SolveReport>, String> {
    if ctx.threads <= 1 || grid.len() < 2 * ctx.threads {
        return grid
            .iter()
            .map(|p| solve(ctx.instance, p).map_err(|e| e.to_string()))
            .collect();
    }
    let chunk = grid.len().div_ceil(ctx.threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|p| solve(ctx.instance, p).map_err(|e| e.to_string()))
                        .collect::<Result<Vec<_>, _>>()
                })
            })
            .collect();
        let mut all = Vec::with_capacity(grid.len());
        for handle in handles {
            all.extend(handle.join().map_err(|_| "solver thread panicked")??);
        }
        Ok(all)
    })
}

fn ensure_table(
    ctx: &RunContext<'_>,
    value_table: &mut Option<Vec<SolveReport>>,
) -> Result<(), String> {
    if value_table.is_some() {
        return Ok(());
    }
    let task = ctx.tasks.value_grid.as_ref().expect("validated");
    let grid = grid_1d(task.lo, task.hi, task.step).map_err(|e| e.to_string())?;
    *value_table = Some(solve_grid(ctx, &grid)?);
    Ok(())
}

fn value_grid(ctx: &RunContext<'_>, value_table: &mut Option<Vec<SolveReport>>) -> TaskOutput {
    ensure_table(ctx, value_table)?;
    let table = value_table.as_ref().expect("just built");
    let n = ctx.instance.dims.n;
    let mut rows = Vec::with_capacity(table.len());
    for report in table {
        let mut cols = vec![fmt(report.p[0])];
        let (status, argmin): (&str, Option<&[f64]>) = match &report.status {
            SolveStatus::Optimal { argmin, .. } => ("optimal", Some(argmin)),
            SolveStatus::Unbounded { .. } => ("unbounded", None),
            SolveStatus::Infeasible => ("infeasible", None),
        };
        cols.push(status.to_string());
        cols.push(fmt(report.value()));
        for j in 0..n {
            cols.push(argmin.map_or_else(String::new, |a| fmt(a[j])));
        }
        rows.push(cols.join(","));
    }
    let mut header = vec!["p0".to_string(), "status".into(), "value".into()];
    for j in 0..n {
        header.push(format!("argmin{j}"));
    }
    let csv = write_csv(ctx.out_dir, "value_grid.csv", &header.join(","), &rows)?;
    let last = table.last().expect("grids are nonempty");
    Ok((quantity("val", last.value()), Some(csv)))
}

fn convexity(ctx: &RunContext<'_>, value_table: &mut Option<Vec<SolveReport>>) -> TaskOutput {
    ensure_table(ctx, value_table)?;
    let table = value_table.as_ref().expect("just built");
    let report = convexity_audit(table).map_err(|e| e.to_string())?;
    let rows = vec![format!(
        "{},{}",
        report.triples,
        fmt(report.max_midpoint_violation)
    )];
    let csv = write_csv(
        ctx.out_dir,
        "convexity_audit.csv",
        "triples,max_midpoint_violation",
        &rows,
    )?;
    Ok((
        quantity("max_midpoint_violation", report.max_midpoint_violation),
        Some(csv),
    ))
}

fn lipschitz(ctx: &RunContext<'_>, value_table: &mut Option<Vec<SolveReport>>) -> TaskOutput {
    ensure_table(ctx, value_table)?;
    let table = value_table.as_ref().expect("just built");
    let report = lipschitz_audit(table).map_err(|e| e.to_string())?;
    let rows: Vec<String> = report
        .local_constants
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{i},{}", fmt(*c)))
        .collect();
    let csv = write_csv(
        ctx.out_dir,
        "lipschitz_audit.csv",
        "pair_index,local_constant",
        &rows,
    )?;
    Ok((quantity("max_constant", report.max_constant), Some(csv)))
}

fn subdiff(ctx: &RunContext<'_>) -> TaskOutput {
    let task = ctx.tasks.subdiff.as_ref().expect("validated");
    // Interval rows carry two endpoints even in one parameter dimension.
    let cols = ctx.instance.dims.s.max(2);
    let override_points;
    let points: &[Vec<f64>] = match &ctx.p_override {
        Some(p) => {
            override_points = vec![p.clone()];
            &override_points
        }
        None => &task.points,
    };
    let mut rows = Vec::new();
    let mut headline = f64::NAN;
    for (idx, p_bar) in points.iter().enumerate() {
        let report =
            value_subdiff(ctx.instance, p_bar, task.allow_unverified).map_err(|e| e.to_string())?;
        let mode = serde_mode(&report.mode);
        if let Some((lo, hi)) = report.interval_1d() {
            rows.push(subdiff_row(idx, &mode, "interval", &[lo, hi], cols));
            headline = hi - lo;
            // Cross-check one-parameter intervals against one-sided
            // difference quotients of the solved value function.
            if let Ok((backward, forward)) = subdiff_oracle_1d(ctx.instance, p_bar[0], 0.5, 0.5, 20)
            {
                rows.push(subdiff_row(
                    idx,
                    &mode,
                    "quotients",
                    &[backward, forward],
                    cols,
                ));
            }
        } else {
            for point in report.value_subdiff.points() {
                rows.push(subdiff_row(idx, &mode, "vertex", point, cols));
            }
            for ray in report.value_subdiff.rays() {
                rows.push(subdiff_row(idx, &mode, "ray", ray, cols));
            }
            headline = report.value_subdiff.points().len() as f64;
        }
    }
    let mut header = vec!["point_index".to_string(), "mode".into(), "kind".into()];
    for j in 0..cols {
        header.push(format!("c{j}"));
    }
    let csv = write_csv(ctx.out_dir, "subdiff.csv", &header.join(","), &rows)?;
    let name = if ctx.instance.dims.s == 1 { "dval_width" } else { "dval_items" };
    Ok((quantity(name, headline), Some(csv)))
}

fn serde_mode(mode: &svi_core::SubdiffMode) -> String {
    serde_json::to_string(mode)
        .unwrap_or_else(|_| "?".into())
        .trim_matches('"')
        .to_string()
}

fn subdiff_row(idx: usize, mode: &str, kind: &str, coords: &[f64], width: usize) -> String {
    let mut cols = vec![idx.to_string(), mode.to_string(), kind.to_string()];
    for j in 0..width {
        cols.push(coords.get(j).map_or_else(String::new, |v| fmt(*v)));
    }
    cols.join(",")
}

fn increase_cert(ctx: &RunContext<'_>) -> TaskOutput {
    let task = ctx.tasks.increase_cert.as_ref().expect("validated");
    let cert = fan_increase_certificate(&ctx.instance.map, &ctx.instance.cone, task.scope.into())
        .map_err(|e| e.to_string())?;
    let alpha = cert
        .alpha_lower
        .ok_or_else(|| format!("certification failed: {}", cert.notes))?;
    let witness = cert
        .interior_witness
        .as_deref()
        .map_or_else(String::new, fmt_row);
    let rows = vec![format!("{},{},\"{}\"", fmt(alpha), fmt(cert.eta), witness)];
    let csv = write_csv(
        ctx.out_dir,
        "increase_cert.csv",
        "alpha_lower,eta,interior_witness",
        &rows,
    )?;
    Ok((quantity("alpha_f", alpha), Some(csv)))
}

fn error_bound(ctx: &RunContext<'_>) -> TaskOutput {
    let task = ctx.tasks.error_bound.as_ref().expect("validated");
    let p_grid = grid_1d(task.p_lo, task.p_hi, task.p_step).map_err(|e| e.to_string())?;
    let x_grid = grid_1d(task.x_lo, task.x_hi, task.x_step).map_err(|e| e.to_string())?;
    if ctx.instance.dims.s != 1 || ctx.instance.dims.n != 1 {
        return Err("the error-bound sweep is wired for one-parameter, one-state instances".into());
    }
    let report = error_bound_audit(
        &ctx.instance.map,
        &ctx.instance.cone,
        task.alpha,
        &p_grid,
        &x_grid,
    )
    .map_err(|e| e.to_string())?;
    let rows = vec![format!(
        "{},{},{},{},{},{}",
        fmt(report.alpha),
        report.checked,
        report.skipped_feasible,
        report.skipped_unbounded_excess,
        fmt(report.max_ratio),
        report.violations.len()
    )];
    let csv = write_csv(
        ctx.out_dir,
        "error_bound.csv",
        "alpha,checked,skipped_feasible,skipped_unbounded_excess,max_ratio,violations",
        &rows,
    )?;
    Ok((quantity("max_ratio", report.max_ratio), Some(csv)))
}

fn penalty(ctx: &RunContext<'_>) -> TaskOutput {
    let task = ctx.tasks.penalty.as_ref().expect("validated");
    let p = ctx.p_override.as_deref().unwrap_or(&task.p);
    let report = penalty_threshold(ctx.instance, p, &task.x, task.lambda_max, task.bisect_tol)
        .map_err(|e| e.to_string())?;
    let rows = vec![format!(
        "{},{},{},{},{}",
        fmt(report.lambda_star_estimate),
        fmt(report.bracket.0),
        fmt(report.bracket.1),
        report.threshold_above_lambda_max,
        report.verified_lambdas.len()
    )];
    let csv = write_csv(
        ctx.out_dir,
        "penalty.csv",
        "lambda_star,bracket_lo,bracket_hi,above_ceiling,probes",
        &rows,
    )?;
    Ok((
        quantity("lambda_star", report.lambda_star_estimate),
        Some(csv),
    ))
}

fn calmness(ctx: &RunContext<'_>) -> TaskOutput {
    let task = ctx.tasks.calmness.as_ref().expect("validated");
    let p = ctx.p_override.as_deref().unwrap_or(&task.p);
    let estimate = calmness_estimate(
        ctx.instance,
        p,
        &task.x,
        task.r,
        task.p_samples,
        task.x_samples,
        ctx.seed,
    )
    .map_err(|e| e.to_string())?;
    let rows = vec![format!(
        "{},{},{},{}",
        fmt(estimate.r),
        estimate.samples,
        fmt(estimate.inf_quotient),
        fmt(estimate.lambda_bound)
    )];
    let csv = write_csv(
        ctx.out_dir,
        "calmness.csv",
        "r,samples,inf_quotient,lambda_bound",
        &rows,
    )?;
    Ok((
        quantity("calmness_lambda", estimate.lambda_bound),
        Some(csv),
    ))
}

fn subreg(ctx: &RunContext<'_>) -> TaskOutput {
    let task = ctx.tasks.subreg.as_ref().expect("validated");
    let p = ctx.p_override.as_deref().unwrap_or(&task.p);
    let report = uniform_subreg_check(ctx.instance, p, &task.x, task.r, task.samples, ctx.seed)
        .map_err(|e| e.to_string())?;
    let rows = vec![format!(
        "{},{},{},{},{},{}",
        fmt(report.r),
        report.ratios,
        report.skipped_feasible,
        report.infeasible_in_p,
        fmt(report.beta_estimate),
        report.holds_at_sampling
    )];
    let csv = write_csv(
        ctx.out_dir,
        "subreg.csv",
        "r,ratios,skipped_feasible,infeasible_in_p,beta_estimate,holds_at_sampling",
        &rows,
    )?;
    Ok((quantity("beta_subreg", report.beta_estimate), Some(csv)))
}
