//! Built-in problems with closed-form oracles.

use crate::ext::{ExtReal, ParameterInterval};
use crate::problem::{ConstrainedProblem, DomainSpec, KnownBounds, Objective, ObjectivePair, Smoothness};

/// Interior nodes used by [`grid_variational`].
pub const GRID_NODES: usize = 16;

pub const NAMES: [&str; 5] = ["quad1d", "quad2d_c34", "finite3", "doublewell1d", "grid_variational"];

pub fn by_name(name: &str) -> Option<ConstrainedProblem> {
    Some(match name {
        "quad1d" => quad1d(),
        "quad2d_c34" => quad2d_c34(),
        "finite3" => finite3(),
        "doublewell1d" => doublewell1d(),
        "grid_variational" => grid_variational(GRID_NODES),
        _ => return None,
    })
}

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "quad1d" => "J = (x-1)^2, Phi = x^2 on R, ]0, +inf[",
        "quad2d_c34" => "J = |x - (3,4)|^2, Phi = |x|^2 on R^2, ]0, +inf[",
        "finite3" => "table {p0: (0,2), p1: (1,1), p2: (4,0)}, ]-inf, +inf[",
        "doublewell1d" => "J = (x^2-1)^2, Phi = x^2 on R, ]0, +inf[ (two minima for lambda < 2)",
        "grid_variational" => {
            "J(u) = sum h (1/2 ((u_{i+1}-u_i)/h)^2) - sum h sin(u_i), Phi(u) = sum h u_i^2 on a 16-node grid, ]0, +inf["
        }
        _ => return None,
    })
}

pub fn all() -> Vec<ConstrainedProblem> {
    NAMES.iter().filter_map(|n| by_name(n)).collect()
}

fn coercive_bounds() -> KnownBounds {
    KnownBounds {
        inf_j: Some(ExtReal::ZERO),
        sup_j: Some(ExtReal::PosInf),
        inf_phi: Some(ExtReal::ZERO),
        sup_phi: Some(ExtReal::PosInf),
    }
}

fn real_line(dimension: usize) -> DomainSpec {
    DomainSpec::EuclideanSpace {
        dimension,
        bounds: None,
    }
}

fn squared_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `J = (x - 1)^2`, `Phi = x^2`. `y_lambda = 1 / (1 + lambda)`.
pub fn quad1d() -> ConstrainedProblem {
    ConstrainedProblem::new(
        "quad1d",
        real_line(1),
        ObjectivePair {
            j: Objective::with_gradient(|x| (x[0] - 1.0) * (x[0] - 1.0), |x| vec![2.0 * (x[0] - 1.0)]),
            phi: Objective::with_gradient(|x| x[0] * x[0], |x| vec![2.0 * x[0]]),
            smoothness: Smoothness::TwiceDifferentiable,
            bounds: coercive_bounds(),
        },
        ParameterInterval::positive_half_line(),
    )
    .expect("valid built-in")
}

/// `J = |x - c|^2` with `c = (3, 4)`, `Phi = |x|^2`. `y_lambda = c / (1 + lambda)`.
pub fn quad2d_c34() -> ConstrainedProblem {
    const C: [f64; 2] = [3.0, 4.0];
    ConstrainedProblem::new(
        "quad2d_c34",
        real_line(2),
        ObjectivePair {
            j: Objective::with_gradient(
                |x| (x[0] - C[0]).powi(2) + (x[1] - C[1]).powi(2),
                |x| vec![2.0 * (x[0] - C[0]), 2.0 * (x[1] - C[1])],
            ),
            phi: Objective::with_gradient(squared_norm, |x| x.iter().map(|v| 2.0 * v).collect()),
            smoothness: Smoothness::TwiceDifferentiable,
            bounds: coercive_bounds(),
        },
        ParameterInterval::positive_half_line(),
    )
    .expect("valid built-in")
}

pub fn finite3() -> ConstrainedProblem {
    ConstrainedProblem::finite(
        "finite3",
        [("p0", 0.0, 2.0), ("p1", 1.0, 1.0), ("p2", 4.0, 0.0)],
        ParameterInterval::whole_line(),
    )
    .expect("valid built-in")
}

/// `J = (x^2 - 1)^2`, `Phi = x^2`. For `lambda < 2` the family has the two
/// minimizers `+-sqrt((2 - lambda) / 2)`, so uniqueness fails there.
pub fn doublewell1d() -> ConstrainedProblem {
    ConstrainedProblem::new(
        "doublewell1d",
        real_line(1),
        ObjectivePair {
            j: Objective::with_gradient(
                |x| (x[0] * x[0] - 1.0).powi(2),
                |x| vec![4.0 * x[0] * (x[0] * x[0] - 1.0)],
            ),
            phi: Objective::with_gradient(|x| x[0] * x[0], |x| vec![2.0 * x[0]]),
            smoothness: Smoothness::TwiceDifferentiable,
            bounds: coercive_bounds(),
        },
        ParameterInterval::positive_half_line(),
    )
    .expect("valid built-in")
}

/// Discretized Dirichlet energy minus `sin(u)` on `m` interior nodes with
/// zero boundary values; `Phi` is the discrete squared L2 norm.
pub fn grid_variational(nodes: usize) -> ConstrainedProblem {
    let h = 1.0 / (nodes as f64 + 1.0);
    let j = move |u: &[f64]| {
        let mut energy = 0.0;
        let mut prev = 0.0;
        for &v in u.iter().chain(std::iter::once(&0.0)) {
            let d = (v - prev) / h;
            energy += 0.5 * h * d * d;
            prev = v;
        }
        energy - h * u.iter().map(|v| v.sin()).sum::<f64>()
    };
    let grad_j = move |u: &[f64]| {
        let n = u.len();
        (0..n)
            .map(|k| {
                let left = if k == 0 { 0.0 } else { u[k - 1] };
                let right = if k + 1 == n { 0.0 } else { u[k + 1] };
                (2.0 * u[k] - left - right) / h - h * u[k].cos()
            })
            .collect()
    };
    ConstrainedProblem::new(
        "grid_variational",
        DomainSpec::GridFunctionSpace { nodes },
        ObjectivePair {
            j: Objective::with_gradient(j, grad_j),
            phi: Objective::with_gradient(
                move |u| h * squared_norm(u),
                move |u| u.iter().map(|v| 2.0 * h * v).collect(),
            ),
            smoothness: Smoothness::TwiceDifferentiable,
            bounds: KnownBounds {
                inf_j: None,
                sup_j: Some(ExtReal::PosInf),
                inf_phi: Some(ExtReal::ZERO),
                sup_phi: Some(ExtReal::PosInf),
            },
        },
        ParameterInterval::positive_half_line(),
    )
    .expect("valid built-in")
}

/// `J = x2^2`, `Phi = |x|^2` on `R^2`. On the unit circle `J` is minimal at
/// both `(1, 0)` and `(-1, 0)`, so the level-set problem at `r = 1` is not
/// well posed. Not part of [`NAMES`].
pub fn symmetric_pair() -> ConstrainedProblem {
    ConstrainedProblem::new(
        "symmetric_pair",
        real_line(2),
        ObjectivePair {
            j: Objective::with_gradient(|x| x[1] * x[1], |x| vec![0.0, 2.0 * x[1]]),
            phi: Objective::with_gradient(squared_norm, |x| x.iter().map(|v| 2.0 * v).collect()),
            smoothness: Smoothness::TwiceDifferentiable,
            bounds: coercive_bounds(),
        },
        ParameterInterval::positive_half_line(),
    )
    .expect("valid built-in")
}
