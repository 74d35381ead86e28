//! Constrained minimization of `J` over a level set `Phi^-1(r)` through the
//! multiplier curve `lambda -> y_lambda`, where `y_lambda` is the global
//! minimizer of `J + lambda Phi`.
//!
//! Because `lambda -> Phi(y_lambda)` is non-increasing, the multiplier that
//! places `y_lambda` on the level set can be found by bracketing and
//! bisection; the pair `(y, lambda)` is then a saddle point of
//! `J(x) + lambda (Phi(x) - r)`. Around that core the crate provides the
//! admissible windows, a brute-force minimax verifier, and well-posedness
//! diagnostics.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bank;
pub mod error;
pub mod expr;
pub mod ext;
pub mod format;
pub mod inner;
pub mod minimax;
pub mod options;
pub mod problem;
pub mod search;
pub mod wellposed;
pub mod window;

pub use error::{Error, Result};
pub use expr::{parse_expression, Expr};
pub use ext::{ExtReal, ParameterInterval};
pub use inner::{minimize, uniqueness_probe, MinimizerRecord, SolveStatus, UniquenessReport, Verdict};
pub use options::SolverOptions;
pub use problem::{ConstrainedProblem, DomainSpec, KnownBounds, Objective, ObjectivePair, Point, Smoothness, Which};
pub use window::{compute_gamma_delta, compute_window, DualWindow, FeasibilityWindow, Provenance};
pub use search::{
    lambda_set, limit_at_zero, solve_level, solve_level_auto, solve_level_dual, trace_curve, uniform_grid, verify_monotone,
    verify_saddle, LambdaSet, LimitOptions, LimitReport, MonotoneReport, MonotoneViolation, MultiplierCurve,
    SaddlePointResult, SolveMode, ViolationKind,
};
pub use minimax::{
    brute_force_gap, check_hypotheses, random_instances, verify as verify_minimax, Kernel, MinimaxInstance,
    MinimaxReport, MinimaxVerdict,
};
pub use wellposed::{
    continuity_scan, minimizing_sequences, minimizing_sequences_for, plateau_constancy, ContinuityScan, PlateauReport,
    SequenceParams, SequenceTrial, WellPosedVerdict, WellPosednessReport,
};
