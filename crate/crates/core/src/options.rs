use serde::{Deserialize, Serialize};

/// Solver tunables shared by every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Gradient-norm tolerance, relative to `1 + |value|`.
    pub g_tol: f64,
    pub max_iterations: usize,
    /// Number of starts for each inner minimization.
    pub k_starts: usize,
    /// Radius of the start ball on unbounded domains.
    pub start_radius: f64,
    /// Iterate norm beyond which a descent is declared divergent.
    pub divergence_bound: f64,
    /// Distance under which two minimizers are the same point.
    pub sep_tol: f64,
    /// Relative value tolerance for "equally optimal".
    pub val_tol: f64,
    /// Absolute constraint tolerance; `None` means `1e-8 * max(1, |r|)`.
    pub r_tol: Option<f64>,
    /// Bracket width in the unit parameter at which bisection stops.
    pub lam_tol: f64,
    pub mono_tol: f64,
    pub s_tol: f64,
    pub max_expansions: usize,
    /// Starts used by probes (window bounds, endpoint minima, saddle check).
    pub probe_budget: usize,
    /// Take Newton steps on twice differentiable problems.
    pub newton: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            g_tol: 1e-10,
            max_iterations: 10_000,
            k_starts: 8,
            start_radius: 10.0,
            divergence_bound: 1e8,
            sep_tol: 1e-6,
            val_tol: 1e-10,
            r_tol: None,
            lam_tol: 1e-10,
            mono_tol: 1e-9,
            s_tol: 1e-7,
            max_expansions: 60,
            probe_budget: 16,
            newton: true,
        }
    }
}

impl SolverOptions {
    pub fn r_tol_for(&self, r: f64) -> f64 {
        self.r_tol.unwrap_or(1e-8 * r.abs().max(1.0))
    }

    /// `a` and `b` are equally optimal values.
    pub fn values_tie(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.val_tol * (1.0 + a.abs().max(b.abs()))
    }
}
