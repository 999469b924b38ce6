//! Ready-made instances used across tests, benchmarks and the command-line
//! examples.

use crate::cone::PolyhedralCone;
use crate::instance::{AffinePiece, ConvexObjective, Dims, ProblemInstance};
use crate::linalg::Mat;
use crate::map::{AffineGenerator, SetValuedMap};

/// `min |p| + x` subject to `{-p} x [x, 2x]` inside `[0, inf)`.
///
/// The feasible set is `[p, inf)` for `p >= 0` and `[p/2, inf)` for
/// `p < 0`, so the value function has a kink at the origin:
/// see [`kinked_fan_value`].
pub fn kinked_fan() -> ProblemInstance {
    let gen = |l: f64| {
        AffineGenerator::new(
            Mat::from_rows(vec![vec![-1.0]]).expect("1x1 matrix"),
            Mat::from_rows(vec![vec![l]]).expect("1x1 matrix"),
            vec![0.0],
        )
        .expect("consistent generator")
    };
    ProblemInstance::new(
        Dims { s: 1, n: 1, m: 1 },
        ConvexObjective::max_affine(vec![
            AffinePiece {
                g_p: vec![1.0],
                g_x: vec![1.0],
                c: 0.0,
            },
            AffinePiece {
                g_p: vec![-1.0],
                g_x: vec![1.0],
                c: 0.0,
            },
        ])
        .expect("valid objective"),
        SetValuedMap::fan(vec![gen(1.0), gen(2.0)]).expect("two generators"),
        PolyhedralCone::new(1, vec![vec![1.0]]).expect("half-line"),
    )
    .expect("consistent instance")
}

/// Closed-form `(value, argmin)` of [`kinked_fan`].
pub fn kinked_fan_value(p: f64) -> (f64, f64) {
    if p >= 0.0 {
        (2.0 * p, p)
    } else {
        (-p / 2.0, p / 2.0)
    }
}

/// `min p + x` subject to `p - x + [0, inf)` inside `[0, inf)`.
///
/// Feasible states are `x <= p`; the objective falls without bound along
/// them, so the value function is negative infinity at every parameter.
pub fn unbounded_shift() -> ProblemInstance {
    ProblemInstance::new(
        Dims { s: 1, n: 1, m: 1 },
        ConvexObjective::max_affine(vec![AffinePiece {
            g_p: vec![1.0],
            g_x: vec![1.0],
            c: 0.0,
        }])
        .expect("valid objective"),
        SetValuedMap::affine_plus_cone(
            AffineGenerator::new(
                Mat::from_rows(vec![vec![1.0]]).expect("1x1 matrix"),
                Mat::from_rows(vec![vec![-1.0]]).expect("1x1 matrix"),
                vec![0.0],
            )
            .expect("consistent generator"),
        ),
        PolyhedralCone::new(1, vec![vec![1.0]]).expect("half-line"),
    )
    .expect("consistent instance")
}
