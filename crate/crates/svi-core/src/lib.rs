//! Kernel for parametric convex optimization under set-valued inclusion
//! constraints: polyhedral geometry, cone calculus, feasibility and error
//! bounds, value-function analysis, subdifferentials, and penalty diagnostics.

pub mod cone;
pub mod error;
pub mod feasible;
pub mod fixtures;
pub mod fm;
pub mod geom;
pub mod increase;
pub mod linalg;
pub mod instance;
pub mod lp;
pub mod map;
pub mod penalty;
pub mod project;
pub mod sensitivity;
pub mod value;

pub mod tol;

pub use cone::{excess_over_cone, Excess, PolyhedralCone};
pub use error::{Error, Result};
pub use feasible::{
    dist_to_feasible, error_bound_audit, feasible_region, parametric_feasible_in_p,
    region_convexity_audit, ErrorBoundReport, RegionConvexityReport,
};
pub use fm::{fm_project, polytope_to_h};
pub use geom::{member, member_distance, minkowski_scale_sum, GeneratorSet, PolyhedronH};
pub use increase::{
    alpha_f_estimate, fan_increase_certificate, open_covering_bound, rotation_increase_bound,
    verify_increase_numeric, AlphaFBound, AlphaFReport, CertMethod, CertScope, IncreaseCertificate,
    IncreaseMethod, IncreaseVerification,
};
pub use instance::{AffinePiece, ConvexObjective, Dims, ProblemInstance};
pub use linalg::Mat;
pub use lp::{lp_solve, region_is_empty, LpOutcome};
pub use map::{
    c_boundedness_check, c_concavity_audit, c_concavity_audit_with, eval_map, hausdorff_polytopes,
    map_lipschitz_bound, separable_fan, AffineGenerator, ConcavityReport, SetValuedMap,
};
pub use penalty::{
    calmness_estimate, penalized_minimizer, penalized_value, penalty_threshold,
    uniform_subreg_check, CalmnessEstimate, PenaltyReport, SubregReport,
};
pub use project::project_polyhedron;
pub use sensitivity::{
    active_generators, coderivative_cone, objective_subdiff, qualification_check,
    subdiff_oracle_1d, value_subdiff, Qualification, SubdiffMode, SubdiffReport,
};
pub use value::{
    convexity_audit, grid_1d, lipschitz_audit, solve, value_grid, ConvexityAuditReport,
    LipschitzAuditReport, SolveReport, SolveStatus,
};
