use thiserror::Error;

/// Failures surfaced by the kernel and the analysis passes built on it.
///
/// Every variant carries a stable machine-readable code (see [`Error::code`])
/// so downstream tooling can match on failures without parsing messages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("linear program stalled after {0} pivots")]
    LpStalled(usize),
    #[error("projection target region is empty")]
    EmptyRegion,
    #[error("elimination requested on a system of dimension {dim}, limit {limit}")]
    FmDimExceeded { dim: usize, limit: usize },
    #[error("extreme rays unavailable for cone of dimension {0}")]
    RaysUnavailable(usize),
    #[error("point lies outside the cone (violation {0:.3e})")]
    PointNotInCone(f64),
    #[error("base point is not a solution point (residual {0:.3e})")]
    NotASolutionPoint(f64),
    #[error("fan has no generators")]
    EmptyFan,
    #[error("qualification unverified and no override requested")]
    QualificationUnverified,
    #[error("oracle probe at offset {0:.3e} did not return a finite optimum")]
    OracleProbeFailed(f64),
    #[error("grid has too few points for the requested audit")]
    GridTooSmall,
    #[error("grid statuses are not uniform; audit undefined")]
    NonuniformStatus,
    #[error("no feasible point for the given parameter")]
    InfeasibleParameter,
    #[error("penalized value undefined: excess is unbounded")]
    PenaltyUndefined,
    #[error("no feasible probe points in the sampled neighbourhood")]
    NoFeasibleProbes,
    #[error("numeric increase verification unavailable: {0}")]
    VerificationUnavailable(String),
    #[error("rescale factor {lambda} must exceed the dimension bound {bound}")]
    RescaleTooSmall { lambda: f64, bound: f64 },
    #[error("perturbation bound {ell} must lie below {bound}")]
    PerturbationTooLarge { ell: f64, bound: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable short code for each failure class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::LpStalled(_) => "lp_stalled",
            Error::EmptyRegion => "empty_region",
            Error::FmDimExceeded { .. } => "fm_dim_exceeded",
            Error::RaysUnavailable(_) => "rays_unavailable",
            Error::PointNotInCone(_) => "point_not_in_cone",
            Error::NotASolutionPoint(_) => "not_a_solution_point",
            Error::EmptyFan => "empty_fan",
            Error::QualificationUnverified => "qualification_unverified",
            Error::OracleProbeFailed(_) => "oracle_probe_failed",
            Error::GridTooSmall => "grid_too_small",
            Error::NonuniformStatus => "nonuniform_status",
            Error::InfeasibleParameter => "infeasible_parameter",
            Error::PenaltyUndefined => "penalty_undefined",
            Error::NoFeasibleProbes => "no_feasible_probes",
            Error::VerificationUnavailable(_) => "verification_unavailable",
            Error::RescaleTooSmall { .. } => "rescale_too_small",
            Error::PerturbationTooLarge { .. } => "perturbation_too_large",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidInput(_) => "invalid_input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
