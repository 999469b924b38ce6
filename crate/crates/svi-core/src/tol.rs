//! Central numeric tolerances.
//!
//! All comparisons in the crate go through these constants so the choices are
//! auditable in one place. They are ordered: projection stops below the
//! feasibility slack, and the active-set slack sits above both because it is
//! applied relatively.

/// Slack for feasibility checks on inequality rows.
pub const FEAS: f64 = 1e-9;

/// Accuracy target for Euclidean projections onto polyhedra.
pub const PROJ: f64 = 1e-8;

/// Default slack for membership tests on generator sets.
pub const MEMBER: f64 = 1e-9;

/// Relative slack used when deciding which generators or facets are active.
pub const ACTIVE: f64 = 1e-7;

/// Coefficients below this magnitude are treated as zero during elimination.
pub const FM_DROP: f64 = 1e-12;

/// Joint dimension limit for Fourier-Motzkin elimination.
pub const FM_MAX_DIM: usize = 8;

/// Per-sweep movement threshold that stops the alternating projection loop.
pub const DYKSTRA_STOP: f64 = 1e-10;

/// Hard cap on alternating projection sweeps.
pub const DYKSTRA_MAX_SWEEPS: usize = 100_000;

/// Hard cap on simplex pivots (anti-cycling is handled by the pivot rule;
/// this guards against pathological inputs).
pub const LP_MAX_PIVOTS: usize = 50_000;

/// Margin required of an interior witness in cone-interior linear programs.
pub const INTERIOR: f64 = 1e-6;

/// Resolution of the bisection that certifies increase constants numerically.
pub const ALPHA_BISECT: f64 = 1e-3;

/// Stopping tolerance for the projected subgradient solver.
pub const SUBGRAD_STOP: f64 = 1e-6;

/// Iteration cap for the projected subgradient solver.
pub const SUBGRAD_MAX_ITERS: usize = 200_000;

/// Extreme-ray extraction is attempted only up to this cone dimension.
pub const RAY_DIM_LIMIT: usize = 4;
