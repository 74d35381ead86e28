//! Admissible constraint values: the primal window `]alpha, beta[` and the
//! dual window `]gamma, delta[`.
//!
//! With `M_a`, `M_b` the sets of global minima of `J + a Phi` and
//! `J + b Phi` (empty when the endpoint is infinite),
//!
//! ```text
//! alpha = max(inf_X Phi, sup_{M_b} Phi)      beta = min(sup_X Phi, inf_{M_a} Phi)
//! ```
//!
//! with `sup(empty) = -inf` and `inf(empty) = +inf`. The dual window is the
//! primal window of the role-swapped problem on `]1/b, 1/a[`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::inner::{local_minima, optimal_clusters, Target};
use crate::options::SolverOptions;
use crate::problem::{ConstrainedProblem, Point, Which};

/// Whether a bound is exact (finite scan, closed form, empty-set
/// convention) or estimated by probe minimizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Probed,
}

impl Provenance {
    fn and(self, other: Provenance) -> Provenance {
        if self == Provenance::Exact && other == Provenance::Exact {
            Provenance::Exact
        } else {
            Provenance::Probed
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowProvenance {
    pub alpha: Provenance,
    pub beta: Provenance,
    pub inf_phi: Provenance,
    pub sup_phi: Provenance,
    pub sup_phi_on_mb: Provenance,
    pub inf_phi_on_ma: Provenance,
}

/// Approximations of `M_a` and `M_b`; `None` for an infinite endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointMinima {
    pub m_a: Option<Vec<Point>>,
    pub m_b: Option<Vec<Point>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityWindow {
    pub alpha: ExtReal,
    pub beta: ExtReal,
    pub inf_phi: ExtReal,
    pub sup_phi: ExtReal,
    pub sup_phi_on_mb: ExtReal,
    pub inf_phi_on_ma: ExtReal,
    pub endpoint_minima: EndpointMinima,
    pub provenance: WindowProvenance,
}

impl FeasibilityWindow {
    /// `alpha < r < beta`.
    pub fn contains(&self, r: f64) -> bool {
        self.alpha.lt_f64(r) && self.beta.gt_f64(r)
    }

    pub fn check(&self, r: f64) -> Result<()> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(Error::WindowViolation {
                r,
                lower: self.alpha.to_string(),
                upper: self.beta.to_string(),
            })
        }
    }

    /// Finite endpoints of the window, when both are finite.
    pub fn finite_bounds(&self) -> Option<(f64, f64)> {
        Some((self.alpha.finite()?, self.beta.finite()?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualWindow {
    pub gamma: ExtReal,
    pub delta: ExtReal,
    /// `M_a` entered `gamma` (only when `a > 0`).
    pub hat_ma_used: bool,
    /// `M_b` entered `delta` (only when `b < +inf`).
    pub hat_mb_used: bool,
    /// How the `b = +inf` branch of the upper set was read.
    pub hat_mb_interpretation: &'static str,
    /// The primal window of the role-swapped problem this was read from.
    pub swapped: FeasibilityWindow,
}

impl DualWindow {
    pub fn contains(&self, r: f64) -> bool {
        self.gamma.lt_f64(r) && self.delta.gt_f64(r)
    }
}

/// Like [`compute_window`] but returns the window even when it is empty.
pub fn window_bounds(
    problem: &ConstrainedProblem,
    probe_budget: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<FeasibilityWindow> {
    let finite = problem.domain().is_finite();
    let known = problem.objectives().bounds;

    let (inf_phi, inf_phi_p) = extreme(problem, known.inf_phi, 1.0, probe_budget, seed, opts)?;
    let (sup_phi, sup_phi_p) = extreme(problem, known.sup_phi, -1.0, probe_budget, seed, opts)?;

    let interval = problem.interval();
    let m_a = endpoint_set(problem, interval.a(), probe_budget, seed, opts)?;
    let m_b = endpoint_set(problem, interval.b(), probe_budget, seed, opts)?;
    let set_provenance = |endpoint: ExtReal| {
        if finite || !endpoint.is_finite() {
            Provenance::Exact
        } else {
            Provenance::Probed
        }
    };

    let phi_values = |set: &Option<Vec<Point>>| -> Vec<f64> {
        set.iter()
            .flatten()
            .map(|p| problem.eval_unchecked(Which::Phi, p))
            .collect()
    };
    let sup_phi_on_mb = phi_values(&m_b)
        .into_iter()
        .fold(ExtReal::NegInf, |acc, v| acc.max(ExtReal::Finite(v)));
    let inf_phi_on_ma = phi_values(&m_a)
        .into_iter()
        .fold(ExtReal::PosInf, |acc, v| acc.min(ExtReal::Finite(v)));
    let mb_p = set_provenance(interval.b());
    let ma_p = set_provenance(interval.a());

    Ok(FeasibilityWindow {
        alpha: inf_phi.max(sup_phi_on_mb),
        beta: sup_phi.min(inf_phi_on_ma),
        inf_phi,
        sup_phi,
        sup_phi_on_mb,
        inf_phi_on_ma,
        endpoint_minima: EndpointMinima { m_a, m_b },
        provenance: WindowProvenance {
            alpha: inf_phi_p.and(mb_p),
            beta: sup_phi_p.and(ma_p),
            inf_phi: inf_phi_p,
            sup_phi: sup_phi_p,
            sup_phi_on_mb: mb_p,
            inf_phi_on_ma: ma_p,
        },
    })
}

/// The primal window; `WindowEmpty` when `alpha >= beta`.
pub fn compute_window(
    problem: &ConstrainedProblem,
    probe_budget: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<FeasibilityWindow> {
    let w = window_bounds(problem, probe_budget, seed, opts)?;
    if w.alpha >= w.beta {
        return Err(Error::WindowEmpty {
            lower: w.alpha.to_string(),
            upper: w.beta.to_string(),
        });
    }
    Ok(w)
}

/// The dual window. When `b = +inf` the upper set is read as the set of
/// global minima of `Phi`, which is what the role swap produces.
pub fn compute_gamma_delta(
    problem: &ConstrainedProblem,
    probe_budget: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<DualWindow> {
    let swapped = problem.swapped()?;
    let w = window_bounds(&swapped, probe_budget, seed, opts)?;
    let interval = problem.interval();
    let dual = DualWindow {
        gamma: w.alpha,
        delta: w.beta,
        hat_ma_used: interval.a() > ExtReal::ZERO,
        hat_mb_used: interval.b() != ExtReal::PosInf,
        hat_mb_interpretation: if interval.b() == ExtReal::PosInf {
            "b = +inf: set of global minima of Phi"
        } else {
            "M_b"
        },
        swapped: w,
    };
    if dual.gamma >= dual.delta {
        return Err(Error::WindowEmpty {
            lower: dual.gamma.to_string(),
            upper: dual.delta.to_string(),
        });
    }
    Ok(dual)
}

/// `inf_X Phi` (`sign = 1`) or `sup_X Phi` (`sign = -1`).
fn extreme(
    problem: &ConstrainedProblem,
    known: Option<ExtReal>,
    sign: f64,
    budget: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<(ExtReal, Provenance)> {
    if let Some(v) = known {
        return Ok((v, Provenance::Exact));
    }
    let provenance = if problem.domain().is_finite() {
        Provenance::Exact
    } else {
        Provenance::Probed
    };
    match local_minima(problem, Target::Single(Which::Phi, sign), budget, seed, opts) {
        Ok(results) => {
            let best = results.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
            Ok((ExtReal::from_f64(sign * best)?, provenance))
        }
        Err(Error::Diverged { .. }) => Ok((
            if sign > 0.0 {
                ExtReal::NegInf
            } else {
                ExtReal::PosInf
            },
            provenance,
        )),
        Err(e) => Err(e),
    }
}

/// Global minima of `J + e Phi`; `None` for an infinite endpoint, empty when
/// the infimum is not attained (the descent diverges).
fn endpoint_set(
    problem: &ConstrainedProblem,
    endpoint: ExtReal,
    budget: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Option<Vec<Point>>> {
    let Some(e) = endpoint.finite() else {
        return Ok(None);
    };
    match local_minima(problem, Target::Family(e), budget, seed, opts) {
        Ok(results) => Ok(Some(
            optimal_clusters(&results, opts)
                .into_iter()
                .map(|(p, _)| p)
                .collect(),
        )),
        Err(Error::Diverged { .. }) => Ok(Some(Vec::new())),
        Err(e) => Err(e),
    }
}
