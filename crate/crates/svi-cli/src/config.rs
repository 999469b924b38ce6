//! JSON problem descriptions and their translation into core types.
//!
//! A config carries the instance (dimensions, objective, constraint map,
//! cone) plus an optional `tasks` table saying which analyses to run and
//! with what parameters. Unknown keys are rejected everywhere so typos
//! surface as load errors instead of silently ignored settings.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use svi_core::{
    AffineGenerator, AffinePiece, CertScope, ConvexObjective, Dims, Mat, PolyhedralCone,
    ProblemInstance, SetValuedMap,
};

/// Configuration problems, split by the exit code they should produce.
/// All three are reported before any task runs.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// The file is unreadable or not valid JSON for the schema.
    #[error("config_syntax: {0}")]
    Syntax(String),
    /// The pieces do not fit together dimensionally.
    #[error("config_dims: {0}")]
    Dims(String),
    /// A task is missing, misconfigured, or incompatible with the instance.
    #[error("config_task: {0}")]
    Task(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dims: DimsConfig,
    pub objective: ObjectiveConfig,
    pub map: MapConfig,
    pub cone: ConeConfig,
    #[serde(default)]
    pub tasks: TasksConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsConfig {
    pub s: usize,
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub pieces: Vec<PieceConfig>,
    /// Optional positive-semidefinite state-space quadratic term, row major.
    #[serde(default)]
    pub quadratic: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub g_p: Vec<f64>,
    pub g_x: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    /// Finitely many affine branches; the image is their union.
    Fan { branches: Vec<BranchConfig> },
    /// A single affine branch thickened by the cone itself.
    AffinePlusCone { branch: BranchConfig },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    /// Parameter matrix, `m` rows of `s` entries.
    pub p_mat: Vec<Vec<f64>>,
    /// State matrix, `m` rows of `n` entries.
    pub x_mat: Vec<Vec<f64>>,
    /// Constant offset of length `m`; defaults to zero.
    #[serde(default)]
    pub offset: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    /// Inner-normal facet rows: the cone is where every row dots nonnegative.
    pub facets: Vec<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TasksConfig {
    pub feasibility: Option<FeasibilityTask>,
    pub value_grid: Option<ValueGridTask>,
    /// Midpoint-convexity audit of the solved value table; needs `value_grid`.
    pub convexity_audit: Option<EmptyTask>,
    /// Difference-quotient audit of the solved value table; needs `value_grid`.
    pub lipschitz_audit: Option<EmptyTask>,
    pub subdiff: Option<SubdiffTask>,
    pub increase_cert: Option<IncreaseTask>,
    pub error_bound: Option<ErrorBoundTask>,
    pub penalty: Option<PenaltyTask>,
    pub calmness: Option<CalmnessTask>,
    pub subreg: Option<SubregTask>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptyTask {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityTask {
    pub p: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueGridTask {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubdiffTask {
    pub points: Vec<Vec<f64>>,
    /// Run even when the structural qualification check does not certify.
    #[serde(default)]
    pub allow_unverified: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncreaseTask {
    pub scope: ScopeConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeConfig {
    Joint,
    XOnly,
}

impl From<ScopeConfig> for CertScope {
    fn from(scope: ScopeConfig) -> Self {
        match scope {
            ScopeConfig::Joint => CertScope::Joint,
            ScopeConfig::XOnly => CertScope::XOnly,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBoundTask {
    pub alpha: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub p_step: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub x_step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyTask {
    pub p: Vec<f64>,
    pub x: Vec<f64>,
    pub lambda_max: f64,
    pub bisect_tol: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalmnessTask {
    pub p: Vec<f64>,
    pub x: Vec<f64>,
    pub r: f64,
    pub p_samples: usize,
    pub x_samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubregTask {
    pub p: Vec<f64>,
    pub x: Vec<f64>,
    pub r: f64,
    pub samples: usize,
}

/// Reads and parses a config file, returning the parsed form together with
/// the raw bytes (the run summary records their digest).
pub fn load(path: &Path) -> Result<(Config, Vec<u8>), ConfigError> {
    let bytes = fs::read(path)
        .map_err(|e| ConfigError::Syntax(format!("cannot read {}: {e}", path.display())))?;
    let config: Config = serde_json::from_slice(&bytes)
        .map_err(|e| ConfigError::Syntax(format!("{}: {e}", path.display())))?;
    Ok((config, bytes))
}

impl Config {
    /// Builds the core instance, translating any structural rejection into a
    /// dimension error.
    pub fn build_instance(&self) -> Result<ProblemInstance, ConfigError> {
        let dims = Dims {
            s: self.dims.s,
            n: self.dims.n,
            m: self.dims.m,
        };
        let pieces = self
            .objective
            .pieces
            .iter()
            .map(|p| AffinePiece {
                g_p: p.g_p.clone(),
                g_x: p.g_x.clone(),
                c: p.c,
            })
            .collect();
        let quadratic = match &self.objective.quadratic {
            None => None,
            Some(rows) => Some(
                Mat::from_rows(rows.clone())
                    .map_err(|e| ConfigError::Dims(format!("objective.quadratic: {e}")))?,
            ),
        };
        let objective = ConvexObjective::new(pieces, quadratic)
            .map_err(|e| ConfigError::Dims(format!("objective: {e}")))?;
        let branch = |b: &BranchConfig, at: &str| -> Result<AffineGenerator, ConfigError> {
            let p_mat = Mat::from_rows(b.p_mat.clone())
                .map_err(|e| ConfigError::Dims(format!("{at}.p_mat: {e}")))?;
            let x_mat = Mat::from_rows(b.x_mat.clone())
                .map_err(|e| ConfigError::Dims(format!("{at}.x_mat: {e}")))?;
            let offset = b.offset.clone().unwrap_or_else(|| vec![0.0; self.dims.m]);
            AffineGenerator::new(p_mat, x_mat, offset)
                .map_err(|e| ConfigError::Dims(format!("{at}: {e}")))
        };
        let map = match &self.map {
            MapConfig::Fan { branches } => {
                let gens = branches
                    .iter()
                    .enumerate()
                    .map(|(i, b)| branch(b, &format!("map.branches[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                SetValuedMap::fan(gens).map_err(|e| ConfigError::Dims(format!("map: {e}")))?
            }
            MapConfig::AffinePlusCone { branch: b } => {
                SetValuedMap::affine_plus_cone(branch(b, "map.branch")?)
            }
        };
        let cone = PolyhedralCone::new(self.dims.m, self.cone.facets.clone())
            .map_err(|e| ConfigError::Dims(format!("cone: {e}")))?;
        let instance = ProblemInstance::new(dims, objective, map, cone)
            .map_err(|e| ConfigError::Dims(format!("instance: {e}")))?;
        instance
            .validate()
            .map_err(|e| ConfigError::Dims(format!("instance: {e}")))?;
        Ok(instance)
    }
}
