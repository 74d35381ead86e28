//! The multiplier curve `lambda -> y_lambda` and root-finding on it.
//!
//! `lambda -> Phi(y_lambda)` is non-increasing, so the multiplier whose
//! minimizer lands on `Phi^-1(r)` is found by bracketing and bisection in a
//! bounded parameter `t` in `]0, 1[` (see [`Reparam`]). The minimizer at
//! that multiplier is the constrained minimizer, and with the multiplier it
//! forms a saddle point of `J(x) + lambda (Phi(x) - r)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::{ExtReal, Reparam};
use crate::format::float17;
use crate::inner::{local_minima, minimize, minimize_at, optimal_clusters, uniqueness_probe, MinimizerRecord, SolveStatus, Target, Verdict};
use crate::options::SolverOptions;
use crate::problem::{ConstrainedProblem, Point, Which};
use crate::window::{compute_window, FeasibilityWindow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierCurve {
    pub samples: Vec<MinimizerRecord>,
    /// Adjacent pairs breaking monotonicity; each one falsifies the
    /// uniqueness or compactness hypothesis.
    pub warnings: Vec<MonotoneViolation>,
}

impl MultiplierCurve {
    /// CSV with header `lambda,phi,j,m`, values formatted by [`float17`].
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "phi", "j", "m"])?;
        for s in &self.samples {
            w.write_record([
                float17(s.lambda),
                float17(s.phi_at_argmin),
                float17(s.j_at_argmin),
                float17(s.value),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// `Phi(y)` increased by more than `mono_tol`.
    Increase,
    /// Distinct minimizers with no strict decrease of `Phi(y)`.
    NotStrict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneViolation {
    /// Index of the left sample of the pair.
    pub index: usize,
    pub lambda_left: f64,
    pub lambda_right: f64,
    pub phi_left: f64,
    pub phi_right: f64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub pairs_checked: usize,
    pub violations: Vec<MonotoneViolation>,
    /// Multipliers whose inner solve did not report convergence.
    pub unconverged: Vec<f64>,
}

impl MonotoneReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveMode {
    /// Minimize `J` over `Phi^-1(r)`.
    Primal,
    /// Minimize `Phi` over `J^-1(r)`; the multiplier belongs to the
    /// role-swapped family `Phi + mu J`.
    Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddlePointResult {
    pub mode: SolveMode,
    pub r: f64,
    pub lambda_hat: f64,
    pub x_hat: Point,
    pub j_value: f64,
    pub phi_value: f64,
    /// `|Phi(x) - r|`, or `|J(x) - r|` in dual mode.
    pub constraint_residual: f64,
    pub saddle_residual: f64,
    pub bisection_steps: usize,
    /// Final multiplier bracket; an interval endpoint when that side was
    /// never evaluated.
    pub bracket: (ExtReal, ExtReal),
    pub uniqueness: Verdict,
    pub inner_status: SolveStatus,
    /// Every `(lambda, constraint value)` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// Multipliers around `lambda_hat` whose minimizer stays on the level set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaSet {
    pub r: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn trace_curve(
    problem: &ConstrainedProblem,
    lambda_grid: &[f64],
    seed: u64,
    opts: &SolverOptions,
) -> Result<MultiplierCurve> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    if lambda_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("lambda grid must be strictly increasing".into()));
    }
    let samples = lambda_grid
        .par_iter()
        .map(|&l| minimize(problem, l, seed, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = MultiplierCurve {
        samples,
        warnings: Vec::new(),
    };
    curve.warnings = verify_monotone(&curve, opts).violations;
    Ok(curve)
}

/// `n` multipliers evenly spaced in the unit parameter, excluding its ends.
pub fn uniform_grid(problem: &ConstrainedProblem, n: usize) -> Vec<f64> {
    let p = problem.interval().reparam();
    (1..=n).map(|k| p.lambda(k as f64 / (n as f64 + 1.0))).collect()
}

pub fn verify_monotone(curve: &MultiplierCurve, opts: &SolverOptions) -> MonotoneReport {
    let mut violations = Vec::new();
    for (i, w) in curve.samples.windows(2).enumerate() {
        let (l, r) = (&w[0], &w[1]);
        let kind = if r.phi_at_argmin > l.phi_at_argmin + opts.mono_tol {
            Some(ViolationKind::Increase)
        } else if l.argmin.distance(&r.argmin) > opts.sep_tol && !(r.phi_at_argmin < l.phi_at_argmin) {
            Some(ViolationKind::NotStrict)
        } else {
            None
        };
        if let Some(kind) = kind {
            violations.push(MonotoneViolation {
                index: i,
                lambda_left: l.lambda,
                lambda_right: r.lambda,
                phi_left: l.phi_at_argmin,
                phi_right: r.phi_at_argmin,
                kind,
            });
        }
    }
    MonotoneReport {
        pairs_checked: curve.samples.len().saturating_sub(1),
        violations,
        unconverged: curve
            .samples
            .iter()
            .filter(|s| s.status != SolveStatus::Converged)
            .map(|s| s.lambda)
            .collect(),
    }
}

/// One bracket endpoint in the unit parameter with its constraint value.
#[derive(Debug, Clone, Copy)]
struct Side {
    t: f64,
    phi: f64,
}

struct Bisection<'a> {
    problem: &'a ConstrainedProblem,
    reparam: Reparam,
    r: f64,
    tol: f64,
    seed: u64,
    opts: &'a SolverOptions,
    evaluations: Vec<(f64, f64)>,
}

enum Probe {
    Hit(MinimizerRecord),
    Above(f64),
    Below(f64),
}

impl Bisection<'_> {
    fn probe(&mut self, t: f64) -> Result<Option<Probe>> {
        let lambda = self.reparam.lambda(t);
        if !(t > 0.0 && t < 1.0) || !self.problem.interval().contains(lambda) {
            return Ok(None);
        }
        let rec = minimize(self.problem, lambda, self.seed, self.opts)?;
        let phi = rec.phi_at_argmin;
        self.evaluations.push((lambda, phi));
        Ok(Some(if (phi - self.r).abs() <= self.tol {
            Probe::Hit(rec)
        } else if phi > self.r {
            Probe::Above(phi)
        } else {
            Probe::Below(phi)
        }))
    }

    fn failure(&self, reason: String) -> Error {
        Error::BracketFailure {
            r: self.r,
            reason,
            samples: self.evaluations.clone(),
        }
    }

    /// Returns the hit record and the final bracket in `t`.
    fn run(&mut self) -> Result<(MinimizerRecord, Option<Side>, Option<Side>, usize)> {
        let (mut lo, mut hi): (Option<Side>, Option<Side>) = (None, None);
        match self.probe(0.5)?.expect("anchor is interior") {
            Probe::Hit(rec) => return Ok((rec, lo, hi, 0)),
            Probe::Above(phi) => lo = Some(Side { t: 0.5, phi }),
            Probe::Below(phi) => hi = Some(Side { t: 0.5, phi }),
        }

        // Halve the distance to the open end until r is bracketed.
        let mut k = 1;
        while lo.is_none() || hi.is_none() {
            if k > self.opts.max_expansions {
                return Err(self.failure(format!(
                    "no bracket after {} expansions",
                    self.opts.max_expansions
                )));
            }
            let step = 0.5 * 0.5f64.powi(k as i32);
            let t = if lo.is_some() { 1.0 - step } else { step };
            let Some(outcome) = self.probe(t)? else {
                return Err(self.failure(format!(
                    "expansion reached the end of the parameter range after {k} steps"
                )));
            };
            match outcome {
                Probe::Hit(rec) => return Ok((rec, lo, hi, 0)),
                Probe::Above(phi) => lo = Some(Side { t, phi }),
                Probe::Below(phi) => hi = Some(Side { t, phi }),
            }
            k += 1;
        }

        let (mut lo, mut hi) = (lo.expect("bracketed"), hi.expect("bracketed"));
        let mut steps = 0;
        while hi.t - lo.t > self.opts.lam_tol {
            debug_assert!(lo.phi >= self.r - self.tol && hi.phi <= self.r + self.tol);
            let mid = 0.5 * (lo.t + hi.t);
            if !(mid > lo.t && mid < hi.t) {
                break;
            }
            steps += 1;
            match self.probe(mid)? {
                Some(Probe::Hit(rec)) => return Ok((rec, Some(lo), Some(hi), steps)),
                Some(Probe::Above(phi)) => lo = Side { t: mid, phi },
                Some(Probe::Below(phi)) => hi = Side { t: mid, phi },
                None => break,
            }
        }
        Err(self.failure(format!(
            "bracket collapsed at lambda in [{}, {}] with Phi(y) jumping from {} to {}",
            self.reparam.lambda(lo.t),
            self.reparam.lambda(hi.t),
            lo.phi,
            hi.phi
        )))
    }
}

/// Minimizes `J` over `Phi^-1(r)` for `r` inside the window.
pub fn solve_level(
    problem: &ConstrainedProblem,
    r: f64,
    window: &FeasibilityWindow,
    seed: u64,
    opts: &SolverOptions,
) -> Result<SaddlePointResult> {
    if !r.is_finite() {
        return Err(Error::InvalidArgument(format!("r = {r} is not finite")));
    }
    window.check(r)?;
    let interval = problem.interval();
    let mut bis = Bisection {
        problem,
        reparam: interval.reparam(),
        r,
        tol: opts.r_tol_for(r),
        seed,
        opts,
        evaluations: Vec::new(),
    };
    let (rec, lo, hi, steps) = bis.run()?;
    let bracket = (
        lo.map_or(interval.a(), |s| ExtReal::Finite(bis.reparam.lambda(s.t))),
        hi.map_or(interval.b(), |s| ExtReal::Finite(bis.reparam.lambda(s.t))),
    );
    let uniqueness = uniqueness_probe(problem, rec.lambda, opts.k_starts.max(2), seed, opts)?.verdict;
    let mut result = SaddlePointResult {
        mode: SolveMode::Primal,
        r,
        lambda_hat: rec.lambda,
        constraint_residual: (rec.phi_at_argmin - r).abs(),
        j_value: rec.j_at_argmin,
        phi_value: rec.phi_at_argmin,
        x_hat: rec.argmin,
        saddle_residual: 0.0,
        bisection_steps: steps,
        bracket,
        uniqueness,
        inner_status: rec.status,
        evaluations: bis.evaluations,
        warnings: Vec::new(),
    };
    result.saddle_residual = verify_saddle(problem, &result, opts.probe_budget, seed.wrapping_add(1), opts)?;
    annotate(&mut result, opts);
    Ok(result)
}

/// Computes the window with the default probe budget, then solves.
pub fn solve_level_auto(
    problem: &ConstrainedProblem,
    r: f64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<SaddlePointResult> {
    let window = compute_window(problem, opts.probe_budget, seed, opts)?;
    solve_level(problem, r, &window, seed, opts)
}

fn annotate(result: &mut SaddlePointResult, opts: &SolverOptions) {
    if result.saddle_residual > opts.s_tol {
        result.warnings.push(format!(
            "saddle residual {} exceeds s_tol {}",
            result.saddle_residual, opts.s_tol
        ));
    }
    if result.uniqueness == Verdict::Suspect {
        result
            .warnings
            .push("several global minimizers at lambda_hat; uniqueness hypothesis suspect".into());
    }
    if result.inner_status != SolveStatus::Converged {
        result
            .warnings
            .push(format!("inner solve ended with status {:?}", result.inner_status));
    }
}

/// `max(f(x, lambda) - inf_x f(., lambda), 0)` for the saddle function
/// `f(x, lambda) = J(x) + lambda (Phi(x) - r)`, the infimum taken by an
/// independent inner solve.
pub fn verify_saddle(
    problem: &ConstrainedProblem,
    result: &SaddlePointResult,
    probe_budget: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<f64> {
    let swapped;
    let p = match result.mode {
        SolveMode::Primal => problem,
        SolveMode::Dual => {
            swapped = problem.swapped()?;
            &swapped
        }
    };
    let (l, r) = (result.lambda_hat, result.r);
    let at_candidate = p.evaluate_saddle(&result.x_hat, l, r)?;
    let reference = minimize_at(p, l, probe_budget.max(1), seed, opts)?;
    let inf = p.evaluate_saddle(&reference.argmin, l, r)?;
    Ok((at_candidate - inf).max(0.0))
}

/// Minimizes `Phi` over `J^-1(r)` by solving the role-swapped problem on
/// `]1/b, 1/a[`; requires `a >= 0`.
pub fn solve_level_dual(
    problem: &ConstrainedProblem,
    r: f64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<SaddlePointResult> {
    let swapped = problem.swapped()?;
    let window = crate::window::window_bounds(&swapped, opts.probe_budget, seed, opts)?;
    if window.alpha >= window.beta {
        return Err(Error::WindowEmpty {
            lower: window.alpha.to_string(),
            upper: window.beta.to_string(),
        });
    }
    let mut result = solve_level(&swapped, r, &window, seed, opts)?;
    // Field names refer to the original roles.
    result.mode = SolveMode::Dual;
    result.j_value = problem.j(&result.x_hat)?;
    result.phi_value = problem.phi(&result.x_hat)?;
    result.constraint_residual = (result.j_value - r).abs();
    Ok(result)
}

/// Brackets the plateau of multipliers whose minimizer satisfies the
/// constraint, by bisection from `lambda_hat` towards both bracket ends.
pub fn lambda_set(
    problem: &ConstrainedProblem,
    result: &SaddlePointResult,
    seed: u64,
    opts: &SolverOptions,
) -> Result<LambdaSet> {
    let p = match result.mode {
        SolveMode::Primal => problem.clone(),
        SolveMode::Dual => problem.swapped()?,
    };
    let reparam = p.interval().reparam();
    let tol = opts.r_tol_for(result.r);
    let on_level = |t: f64| -> Result<bool> {
        let rec = minimize(&p, reparam.lambda(t), seed, opts)?;
        Ok((rec.phi_at_argmin - result.r).abs() <= tol)
    };
    let t_hat = reparam.t_of(result.lambda_hat);
    let to_t = |e: ExtReal, fallback: f64| e.finite().map_or(fallback, |l| reparam.t_of(l));
    let (t_lo, t_hi) = (to_t(result.bracket.0, 0.0), to_t(result.bracket.1, 1.0));

    // Invariant: `inside` is on the level set, `outside` is not (or is the
    // end of the parameter range).
    let boundary = |mut inside: f64, mut outside: f64| -> Result<f64> {
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside || mid <= 0.0 || mid >= 1.0 {
                break;
            }
            if on_level(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    };
    let lower = boundary(t_hat, t_lo)?;
    let upper = boundary(t_hat, t_hi)?;
    Ok(LambdaSet {
        r: result.r,
        lambda_min: reparam.lambda(lower),
        lambda_max: reparam.lambda(upper),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub lambdas: Vec<f64>,
    pub phis: Vec<f64>,
    pub raw_tail: f64,
    /// Richardson extrapolation of the last two samples.
    pub extrapolated: f64,
    /// `inf Phi` over the global minimizers of `J`, when computable.
    pub inf_phi_on_argmin_j: Option<f64>,
    pub discrepancy: Option<f64>,
    /// `lim Phi(y) < sup Phi`; the limit identity needs it.
    pub below_sup_phi: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOptions {
    /// First multiplier; `None` picks `min(1, b/2)`.
    pub lambda0: Option<f64>,
    pub ratio: f64,
    pub steps: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            lambda0: None,
            ratio: 0.5,
            steps: 20,
        }
    }
}

/// Estimates `lim Phi(y_lambda)` as `lambda -> 0+` along a geometric
/// sequence and compares it with `inf Phi` over the minimizers of `J`.
pub fn limit_at_zero(
    problem: &ConstrainedProblem,
    seed: u64,
    opts: &SolverOptions,
    limit: LimitOptions,
) -> Result<LimitReport> {
    let interval = problem.interval();
    if !(interval.b() > ExtReal::ZERO) || interval.a() > ExtReal::ZERO {
        return Err(Error::InvalidArgument(format!(
            "limit at zero needs ]0, b[ inside ]{}, {}[ with b > 0",
            interval.a(),
            interval.b()
        )));
    }
    if !(limit.ratio > 0.0 && limit.ratio < 1.0) || limit.steps < 2 {
        return Err(Error::InvalidArgument("ratio must lie in ]0, 1[ with at least 2 steps".into()));
    }
    let lambda0 = limit
        .lambda0
        .unwrap_or_else(|| interval.b().finite().map_or(1.0, |b| (0.5 * b).min(1.0)));
    if !interval.contains(lambda0) || lambda0 <= 0.0 {
        return Err(Error::InvalidArgument(format!("lambda0 = {lambda0} outside ]0, b[")));
    }
    let lambdas: Vec<f64> = (0..limit.steps)
        .map(|k| lambda0 * limit.ratio.powi(k as i32))
        .collect();
    let phis = lambdas
        .par_iter()
        .map(|&l| minimize_at(problem, l, opts.k_starts, seed, opts).map(|r| r.phi_at_argmin))
        .collect::<Result<Vec<_>>>()?;
    let (prev, last) = (phis[phis.len() - 2], phis[phis.len() - 1]);
    let extrapolated = if prev == last {
        last
    } else {
        (last - limit.ratio * prev) / (1.0 - limit.ratio)
    };

    let inf_m = inf_phi_on_argmin_j(problem, seed, opts)?;
    let sup_phi = match problem.objectives().bounds.sup_phi {
        Some(v) => Some(v),
        None if problem.domain().is_finite() => Some(
            (0..problem.table_len().expect("finite"))
                .map(|i| problem.eval_unchecked(Which::Phi, &Point::Index(i)))
                .fold(ExtReal::NegInf, |a, v| a.max(ExtReal::Finite(v))),
        ),
        None => None,
    };
    Ok(LimitReport {
        raw_tail: last,
        extrapolated,
        discrepancy: inf_m.map(|m| (extrapolated - m).abs()),
        inf_phi_on_argmin_j: inf_m,
        below_sup_phi: sup_phi.map(|s| s.gt_f64(extrapolated)),
        lambdas,
        phis,
    })
}

fn inf_phi_on_argmin_j(problem: &ConstrainedProblem, seed: u64, opts: &SolverOptions) -> Result<Option<f64>> {
    match local_minima(problem, Target::Single(Which::J, 1.0), opts.k_starts, seed, opts) {
        Ok(results) => Ok(Some(
            optimal_clusters(&results, opts)
                .iter()
                .map(|(p, _)| problem.eval_unchecked(Which::Phi, p))
                .fold(f64::INFINITY, f64::min),
        )),
        Err(Error::Diverged { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank;
    use crate::ext::ParameterInterval;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn phis(curve: &MultiplierCurve) -> Vec<f64> {
        curve.samples.iter().map(|s| s.phi_at_argmin).collect()
    }

    #[test]
    fn trace_quad1d() {
        let c = trace_curve(&bank::quad1d(), &[0.5, 1.0, 3.0], 0, &opts()).unwrap();
        for (got, want) in phis(&c).iter().zip([4.0 / 9.0, 0.25, 1.0 / 16.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(c.warnings.is_empty());
        let single = trace_curve(&bank::quad1d(), &[1.0], 0, &opts()).unwrap();
        assert_eq!(single.samples.len(), 1);
        assert!((single.samples[0].phi_at_argmin - 0.25).abs() < 1e-12);
    }

    #[test]
    fn trace_quad2d() {
        let c = trace_curve(&bank::quad2d_c34(), &[1.5, 4.0], 0, &opts()).unwrap();
        let p = phis(&c);
        assert!((p[0] - 4.0).abs() < 1e-10 && (p[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trace_rejects_bad_grids() {
        let p = bank::quad1d();
        assert!(trace_curve(&p, &[], 0, &opts()).is_err());
        assert!(trace_curve(&p, &[1.0, 1.0], 0, &opts()).is_err());
        assert!(trace_curve(&p, &[-1.0, 1.0], 0, &opts()).is_err());
    }

    #[test]
    fn monotone_on_constant_phi() {
        use crate::problem::{DomainSpec, KnownBounds, Objective, ObjectivePair, Smoothness};
        let p = ConstrainedProblem::new(
            "flat",
            DomainSpec::EuclideanSpace {
                dimension: 1,
                bounds: None,
            },
            ObjectivePair {
                j: Objective::with_gradient(|x| (x[0] - 2.0).powi(2), |x| vec![2.0 * (x[0] - 2.0)]),
                phi: Objective::with_gradient(|_| 1.0, |_| vec![0.0]),
                smoothness: Smoothness::TwiceDifferentiable,
                bounds: KnownBounds::default(),
            },
            ParameterInterval::whole_line(),
        )
        .unwrap();
        let c = trace_curve(&p, &[-3.0, -1.0, 0.0, 2.0, 5.0], 0, &opts()).unwrap();
        let report = verify_monotone(&c, &opts());
        assert!(report.is_clean());
        let first = &c.samples[0].argmin;
        assert!(c.samples.iter().all(|s| s.argmin.distance(first) < 1e-9));
    }

    #[test]
    fn corrupted_sample_is_flagged() {
        let mut c = trace_curve(&bank::quad1d(), &[0.5, 1.0, 2.0, 3.0], 0, &opts()).unwrap();
        c.samples[2].phi_at_argmin = 0.3;
        let report = verify_monotone(&c, &opts());
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].index, 1);
        assert_eq!(report.violations[0].kind, ViolationKind::Increase);
    }

    #[test]
    fn strict_clause() {
        let mut c = trace_curve(&bank::quad1d(), &[0.5, 1.0], 0, &opts()).unwrap();
        c.samples[1].phi_at_argmin = c.samples[0].phi_at_argmin;
        let report = verify_monotone(&c, &opts());
        assert_eq!(report.violations[0].kind, ViolationKind::NotStrict);
    }

    #[test]
    fn solve_quad1d() {
        let s = solve_level_auto(&bank::quad1d(), 0.25, 0, &opts()).unwrap();
        assert!((s.lambda_hat - 1.0).abs() < 1e-9);
        assert!((s.x_hat.as_vector().unwrap()[0] - 0.5).abs() < 1e-9);
        assert!((s.j_value - 0.25).abs() < 1e-9);
        assert!(s.saddle_residual <= 1e-9);
        assert_eq!(s.uniqueness, Verdict::Unique);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn solve_quad2d() {
        let s = solve_level_auto(&bank::quad2d_c34(), 4.0, 0, &opts()).unwrap();
        assert!((s.lambda_hat - 1.5).abs() < 1e-6);
        let x = s.x_hat.as_vector().unwrap();
        assert!((x[0] - 1.2).abs() < 1e-6 && (x[1] - 1.6).abs() < 1e-6);
        assert!((s.j_value - 9.0).abs() < 1e-6);
    }

    #[test]
    fn planted_root() {
        let p = bank::grid_variational(8);
        let rec = minimize(&p, 2.7, 0, &opts()).unwrap();
        let o = SolverOptions {
            r_tol: Some(1e-12),
            ..opts()
        };
        let s = solve_level_auto(&p, rec.phi_at_argmin, 0, &o).unwrap();
        assert!((s.lambda_hat - 2.7).abs() < 1e-6, "{}", s.lambda_hat);
    }

    #[test]
    fn window_violation() {
        let e = solve_level_auto(&bank::quad2d_c34(), 30.0, 0, &opts()).unwrap_err();
        assert!(matches!(e, Error::WindowViolation { .. }));
        let e = solve_level_auto(&bank::quad2d_c34(), 0.0, 0, &opts()).unwrap_err();
        assert!(matches!(e, Error::WindowViolation { .. }));
    }

    #[test]
    fn finite_plateau_and_jump() {
        let p = bank::finite3();
        let s = solve_level_auto(&p, 1.0, 0, &opts()).unwrap();
        assert_eq!(s.x_hat, Point::Index(1));
        assert_eq!(s.constraint_residual, 0.0);
        assert_eq!(s.saddle_residual, 0.0);
        assert!(s.lambda_hat > 1.0 && s.lambda_hat <= 3.0);
        let set = lambda_set(&p, &s, 0, &opts()).unwrap();
        assert!((set.lambda_min - 1.0).abs() < 1e-6 && (set.lambda_max - 3.0).abs() < 1e-6, "{set:?}");
        // No multiplier puts the table minimizer at Phi = 1.5.
        match solve_level_auto(&p, 1.5, 0, &opts()) {
            Err(Error::BracketFailure { samples, .. }) => assert!(!samples.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn saddle_residual_detects_perturbation() {
        let p = bank::quad1d();
        let mut s = solve_level_auto(&p, 0.25, 0, &opts()).unwrap();
        s.x_hat = Point::Vector(vec![0.6]);
        let res = verify_saddle(&p, &s, 8, 3, &opts()).unwrap();
        // (1 + lambda) * 0.1^2 with lambda = 1.
        assert!((res - 0.02).abs() < 1e-9, "{res}");
    }

    #[test]
    fn dual_examples() {
        let s = solve_level_dual(&bank::quad2d_c34(), 9.0, 0, &opts()).unwrap();
        let x = s.x_hat.as_vector().unwrap();
        assert!((x[0] - 1.2).abs() < 1e-6 && (x[1] - 1.6).abs() < 1e-6);
        assert!((s.phi_value - 4.0).abs() < 1e-6);
        assert_eq!(s.mode, SolveMode::Dual);
        let s = solve_level_dual(&bank::quad1d(), 0.25, 0, &opts()).unwrap();
        assert!((s.x_hat.as_vector().unwrap()[0] - 0.5).abs() < 1e-6);
        assert!((s.phi_value - 0.25).abs() < 1e-6);
        assert!(s.saddle_residual <= 1e-9);
        assert!(matches!(
            solve_level_dual(&bank::finite3(), 1.0, 0, &opts()),
            Err(Error::DualInapplicable { .. })
        ));
    }

    #[test]
    fn limits() {
        let l = limit_at_zero(&bank::quad1d(), 0, &opts(), LimitOptions::default()).unwrap();
        assert!((l.extrapolated - 1.0).abs() < 1e-4);
        assert!(l.discrepancy.unwrap() < 1e-4);
        assert_eq!(l.below_sup_phi, Some(true));
        let tied = ConstrainedProblem::finite(
            "tied",
            [("p0", 0.0, 2.0), ("p1", 0.0, 1.0), ("p2", 4.0, 0.0)],
            ParameterInterval::whole_line(),
        )
        .unwrap();
        let l = limit_at_zero(&tied, 0, &opts(), LimitOptions::default()).unwrap();
        assert_eq!(l.extrapolated, 1.0);
        assert_eq!(l.inf_phi_on_argmin_j, Some(1.0));
        assert_eq!(l.discrepancy, Some(0.0));
    }

    #[test]
    fn limit_needs_positive_b() {
        let p = bank::quad1d().with_interval(
            ParameterInterval::new(ExtReal::NegInf, ExtReal::ZERO).unwrap(),
        );
        assert!(limit_at_zero(&p, 0, &opts(), LimitOptions::default()).is_err());
    }

    #[test]
    fn curve_csv() {
        let c = trace_curve(&bank::quad1d(), &[1.0], 0, &opts()).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "lambda,phi,j,m\n1.0000000000000000e0,2.5000000000000000e-1,2.5000000000000000e-1,5.0000000000000000e-1\n"
        );
    }
}
