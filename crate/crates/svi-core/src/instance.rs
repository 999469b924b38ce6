//! Problem data: dimensions, the convex objective, and the assembled
//! parametric program `minimize φ(p, x) subject to F(p, x) ⊆ C`.

use serde::{Deserialize, Serialize};

use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};
use crate::map::SetValuedMap;

/// Parameter, state, and constraint-space dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// Parameter dimension.
    pub s: usize,
    /// State dimension.
    pub n: usize,
    /// Constraint-space dimension (where the cone lives).
    pub m: usize,
}

/// One affine piece of a max-affine objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub g_p: Vec<f64>,
    pub g_x: Vec<f64>,
    pub c: f64,
}

/// Finite convex objective `φ(p, x) = max_k (⟨g_pᵏ, p⟩ + ⟨g_xᵏ, x⟩ + cᵏ)`
/// plus an optional quadratic term `½ zᵀ Q z` in the joint variable
/// `z = (p, x)`, with `Q` symmetric positive semidefinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexObjective {
    pieces: Vec<AffinePiece>,
    quadratic: Option<Mat>,
}

impl ConvexObjective {
    pub fn new(pieces: Vec<AffinePiece>, quadratic: Option<Mat>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput(
                "objective needs at least one affine piece".into(),
            ));
        }
        let (s, n) = (pieces[0].g_p.len(), pieces[0].g_x.len());
        for piece in &pieces {
            if piece.g_p.len() != s || piece.g_x.len() != n {
                return Err(Error::DimensionMismatch(
                    "objective pieces disagree on dimensions".into(),
                ));
            }
        }
        if let Some(q) = &quadratic {
            if q.nrows() != s + n || q.ncols() != s + n {
                return Err(Error::DimensionMismatch(format!(
                    "quadratic term is {}x{}, expected {}x{}",
                    q.nrows(),
                    q.ncols(),
                    s + n,
                    s + n
                )));
            }
            let min_eig = q.min_symmetric_eigenvalue();
            if min_eig < -1e-10 {
                return Err(Error::InvalidInput(format!(
                    "quadratic term is not positive semidefinite (eigenvalue {min_eig:.3e})"
                )));
            }
        }
        Ok(ConvexObjective { pieces, quadratic })
    }

    pub fn max_affine(pieces: Vec<AffinePiece>) -> Result<Self> {
        ConvexObjective::new(pieces, None)
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn quadratic(&self) -> Option<&Mat> {
        self.quadratic.as_ref()
    }

    pub fn is_max_affine(&self) -> bool {
        self.quadratic.is_none()
    }

    /// (parameter, state) dimensions.
    pub fn dims(&self) -> (usize, usize) {
        (self.pieces[0].g_p.len(), self.pieces[0].g_x.len())
    }

    fn joint(p: &[f64], x: &[f64]) -> Vec<f64> {
        let mut z = p.to_vec();
        z.extend_from_slice(x);
        z
    }

    pub fn eval(&self, p: &[f64], x: &[f64]) -> f64 {
        let affine = self
            .pieces
            .iter()
            .map(|k| dot(&k.g_p, p) + dot(&k.g_x, x) + k.c)
            .fold(f64::NEG_INFINITY, f64::max);
        match &self.quadratic {
            None => affine,
            Some(q) => {
                let z = Self::joint(p, x);
                affine + 0.5 * dot(&q.mul_vec(&z), &z)
            }
        }
    }

    /// Indices of pieces within a relative activity tolerance of the max.
    pub fn active_pieces(&self, p: &[f64], x: &[f64], tol: f64) -> Vec<usize> {
        let values: Vec<f64> = self
            .pieces
            .iter()
            .map(|k| dot(&k.g_p, p) + dot(&k.g_x, x) + k.c)
            .collect();
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cut = top - tol * (1.0 + top.abs());
        (0..values.len()).filter(|&k| values[k] >= cut).collect()
    }

    /// Gradient of the quadratic term at `z = (p, x)`, zero when absent.
    pub fn quad_gradient(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        match &self.quadratic {
            None => vec![0.0; p.len() + x.len()],
            Some(q) => q.mul_vec(&Self::joint(p, x)),
        }
    }

    /// A subgradient of `x ↦ φ(p, x)`: the state gradient of the first
    /// active piece plus the state block of the quadratic gradient.
    pub fn state_subgradient(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        let k = self.active_pieces(p, x, crate::tol::ACTIVE)[0];
        let mut g = self.pieces[k].g_x.clone();
        let quad = self.quad_gradient(p, x);
        for (j, gj) in g.iter_mut().enumerate() {
            *gj += quad[p.len() + j];
        }
        g
    }
}

/// The full parametric program.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub dims: Dims,
    pub objective: ConvexObjective,
    pub map: SetValuedMap,
    pub cone: PolyhedralCone,
}

impl ProblemInstance {
    pub fn new(
        dims: Dims,
        objective: ConvexObjective,
        map: SetValuedMap,
        cone: PolyhedralCone,
    ) -> Result<Self> {
        let inst = ProblemInstance {
            dims,
            objective,
            map,
            cone,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let Dims { s, n, m } = self.dims;
        if self.objective.dims() != (s, n) {
            return Err(Error::DimensionMismatch(format!(
                "objective dims {:?} do not match declared ({s}, {n})",
                self.objective.dims()
            )));
        }
        if self.map.dims() != (s, n, m) {
            return Err(Error::DimensionMismatch(format!(
                "map dims {:?} do not match declared ({s}, {n}, {m})",
                self.map.dims()
            )));
        }
        if self.cone.dim() != m {
            return Err(Error::DimensionMismatch(format!(
                "cone lives in dimension {}, expected {m}",
                self.cone.dim()
            )));
        }
        Ok(())
    }
}
