//! Falsification tests for well-posedness of `min J over Phi^-1(r)` and for
//! continuity of `r -> x_r`.
//!
//! Minimizing sequences are generated inside the level set: random points
//! are retracted onto `Phi^-1(r)` along rays from a minimizer of `Phi`, then
//! pushed downhill in `J` by tangent steps followed by retraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::float17;
use crate::inner::{best_of, local_minima, minimize, Target, Verdict};
use crate::minimax::linspace;
use crate::options::SolverOptions;
use crate::problem::{ConstrainedProblem, Point, Which};
use crate::search::{solve_level, SaddlePointResult, SolveMode};
use crate::window::compute_window;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceParams {
    pub trial_count: usize,
    /// Descent steps per trial.
    pub horizon: usize,
    pub seq_eps: f64,
    pub seq_delta: f64,
}

impl Default for SequenceParams {
    fn default() -> Self {
        Self {
            trial_count: 32,
            horizon: 500,
            seq_eps: 1e-7,
            seq_delta: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceTrial {
    pub label: String,
    pub distance: f64,
    /// `J(x_n) - J(x_hat)` at truncation.
    pub j_gap: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WellPosedVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellPosednessReport {
    pub r: f64,
    pub x_hat: Point,
    pub sequence_trials: Vec<SequenceTrial>,
    pub uniqueness_on_levelset: Verdict,
    pub verdict: WellPosedVerdict,
    /// `radial`, `newton` or `finite`.
    pub retraction: &'static str,
}

/// Retraction onto `Phi^-1(r)` along rays from `anchor`.
struct Retraction<'a> {
    problem: &'a ConstrainedProblem,
    anchor: Vec<f64>,
    phi_anchor: f64,
    r: f64,
    tol: f64,
    radial: bool,
}

impl<'a> Retraction<'a> {
    fn new(problem: &'a ConstrainedProblem, r: f64, seed: u64, opts: &SolverOptions) -> Result<Self> {
        let anchor = match local_minima(problem, Target::Single(Which::Phi, 1.0), opts.probe_budget, seed, opts) {
            Ok(results) => best_of(&results, opts).point.as_vector().expect("continuous").to_vec(),
            Err(Error::Diverged { .. }) => {
                return Err(Error::RetractionFailure("Phi is unbounded below; no anchor".into()))
            }
            Err(e) => return Err(e),
        };
        let phi_anchor = problem.eval_vec(Which::Phi, &anchor);
        if !(phi_anchor < r) {
            return Err(Error::RetractionFailure(format!(
                "min Phi = {phi_anchor} is not below r = {r}"
            )));
        }
        let mut ret = Retraction {
            problem,
            anchor,
            phi_anchor,
            r,
            tol: opts.r_tol_for(r),
            radial: false,
        };
        ret.radial = ret.homogeneous(seed);
        Ok(ret)
    }

    fn along(&self, d: &[f64], s: f64) -> Vec<f64> {
        self.anchor.iter().zip(d).map(|(a, v)| s.mul_add(*v, *a)).collect()
    }

    fn excess(&self, d: &[f64], s: f64) -> f64 {
        self.problem.eval_vec(Which::Phi, &self.along(d, s)) - self.phi_anchor
    }

    /// `Phi(a + s d) - Phi(a) = s^2 (Phi(a + d) - Phi(a))` at `s = 2, 3`.
    fn homogeneous(&self, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let d: Vec<f64> = self.anchor.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e1 = self.excess(&d, 1.0);
        e1 > 0.0
            && [2.0, 3.0]
                .iter()
                .all(|&s| (self.excess(&d, s) - s * s * e1).abs() <= 1e-9 * s * s * e1)
    }

    /// The point of the ray through `y` where `Phi = r`.
    fn retract(&self, y: &[f64]) -> Result<Vec<f64>> {
        let d: Vec<f64> = y.iter().zip(&self.anchor).map(|(v, a)| v - a).collect();
        if d.iter().all(|v| *v == 0.0) {
            return Err(Error::RetractionFailure("point coincides with the anchor".into()));
        }
        let target = self.r - self.phi_anchor;
        if self.radial {
            let s = (target / self.excess(&d, 1.0)).sqrt();
            return Ok(self.along(&d, s));
        }
        self.newton(&d, target)
    }

    /// Safeguarded Newton on `s -> Phi(a + s d) - r` over an expanding bracket.
    fn newton(&self, d: &[f64], target: f64) -> Result<Vec<f64>> {
        let g = |s: f64| self.excess(d, s) - target;
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut expansions = 0;
        while g(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 60 || !hi.is_finite() {
                return Err(Error::RetractionFailure("Phi never reaches r along the ray".into()));
            }
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let x = self.along(d, s);
            let value = self.problem.eval_vec(Which::Phi, &x) - self.r;
            if value.abs() <= self.tol {
                return Ok(x);
            }
            if value < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let grad = self.problem.gradient_unchecked(Which::Phi, &x);
            let slope: f64 = grad.iter().zip(d).map(|(g, v)| g * v).sum();
            let step = s - value / slope;
            s = if slope.is_finite() && slope != 0.0 && step > lo && step < hi {
                step
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        Err(Error::RetractionFailure("Newton retraction stalled".into()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Descends `J` along the level set from `x0`; returns the final point and
/// the number of accepted steps.
fn descend_on_level(
    problem: &ConstrainedProblem,
    ret: &Retraction,
    x0: Vec<f64>,
    horizon: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, usize)> {
    let mut x = x0;
    let mut jx = problem.eval_vec(Which::J, &x);
    let mut alpha: f64 = 1.0;
    for step in 0..horizon {
        let g = problem.gradient_unchecked(Which::J, &x);
        let n = problem.gradient_unchecked(Which::Phi, &x);
        let nn = dot(&n, &n);
        let coef = if nn > 0.0 { dot(&g, &n) / nn } else { 0.0 };
        let tangent: Vec<f64> = g.iter().zip(&n).map(|(gi, ni)| coef.mul_add(-ni, *gi)).collect();
        let tt = dot(&tangent, &tangent);
        if tt.sqrt() <= opts.g_tol * (1.0 + jx.abs()) {
            return Ok((x, step));
        }
        alpha *= 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let y: Vec<f64> = x.iter().zip(&tangent).map(|(xi, ti)| alpha.mul_add(-ti, *xi)).collect();
            if let Ok(z) = ret.retract(&y) {
                let jz = problem.eval_vec(Which::J, &z);
                if jz <= jx - 0.25 * alpha * tt {
                    accepted = Some((z, jz));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((z, jz)) => {
                x = z;
                jx = jz;
            }
            None => return Ok((x, step)),
        }
    }
    Ok((x, horizon))
}

/// Level-set minimizing sequences started at `x_hat` and at random points.
pub fn minimizing_sequences(
    problem: &ConstrainedProblem,
    r: f64,
    x_hat: &Point,
    params: SequenceParams,
    seed: u64,
    opts: &SolverOptions,
) -> Result<WellPosednessReport> {
    problem.check_point(x_hat)?;
    if params.trial_count == 0 {
        return Err(Error::InvalidArgument("trial_count must be positive".into()));
    }
    if problem.domain().is_finite() {
        return finite_report(problem, r, x_hat, params, opts);
    }
    let ret = Retraction::new(problem, r, seed, opts)?;
    let j_hat = problem.j(x_hat)?;
    let hat = x_hat.as_vector().expect("continuous").to_vec();
    let dim = hat.len();

    let finals = (0..params.trial_count)
        .into_par_iter()
        .map(|n| {
            let (label, start) = if n == 0 {
                ("x_hat".to_string(), hat.clone())
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(n as u64);
                let y: Vec<f64> = ret
                    .anchor
                    .iter()
                    .map(|a| a + rng.gen_range(-1.0..1.0) * opts.start_radius.max(1.0))
                    .collect();
                (format!("random_{n}"), ret.retract(&y)?)
            };
            let (end, steps) = descend_on_level(problem, &ret, start, params.horizon, opts)?;
            Ok((label, end, steps))
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert!(finals.iter().all(|(_, p, _)| p.len() == dim));

    let trials: Vec<SequenceTrial> = finals
        .iter()
        .map(|(label, end, steps)| SequenceTrial {
            label: label.clone(),
            distance: Point::Vector(end.clone()).distance(x_hat),
            j_gap: problem.eval_vec(Which::J, end) - j_hat,
            steps: *steps,
        })
        .collect();
    let (uniqueness, verdict) = judge(&trials, params);
    Ok(WellPosednessReport {
        r,
        x_hat: x_hat.clone(),
        sequence_trials: trials,
        uniqueness_on_levelset: uniqueness,
        verdict,
        retraction: if ret.radial { "radial" } else { "newton" },
    })
}

/// Runs [`minimizing_sequences`] at a solved level; dual results are checked
/// on the role-swapped problem.
pub fn minimizing_sequences_for(
    problem: &ConstrainedProblem,
    result: &SaddlePointResult,
    params: SequenceParams,
    seed: u64,
    opts: &SolverOptions,
) -> Result<WellPosednessReport> {
    match result.mode {
        SolveMode::Primal => minimizing_sequences(problem, result.r, &result.x_hat, params, seed, opts),
        SolveMode::Dual => minimizing_sequences(&problem.swapped()?, result.r, &result.x_hat, params, seed, opts),
    }
}

fn judge(trials: &[SequenceTrial], params: SequenceParams) -> (Verdict, WellPosedVerdict) {
    let better = trials.iter().any(|t| t.j_gap < -params.seq_eps);
    let far_optimal = trials
        .iter()
        .any(|t| t.j_gap <= params.seq_eps && t.distance > params.seq_delta);
    let uniqueness = if better || far_optimal {
        Verdict::Suspect
    } else {
        Verdict::Unique
    };
    let verdict = if uniqueness == Verdict::Unique {
        WellPosedVerdict::Pass
    } else {
        WellPosedVerdict::Fail
    };
    (uniqueness, verdict)
}

/// On a finite set every sequence in the level set is eventually constant,
/// so well-posedness reduces to uniqueness of the best row.
fn finite_report(
    problem: &ConstrainedProblem,
    r: f64,
    x_hat: &Point,
    params: SequenceParams,
    opts: &SolverOptions,
) -> Result<WellPosednessReport> {
    let tol = opts.r_tol_for(r);
    let j_hat = problem.j(x_hat)?;
    let trials: Vec<SequenceTrial> = (0..problem.table_len().expect("finite"))
        .map(Point::Index)
        .filter(|p| (problem.eval_unchecked(Which::Phi, p) - r).abs() <= tol)
        .map(|p| SequenceTrial {
            label: problem.label(&p).unwrap_or_default().to_string(),
            distance: p.distance(x_hat),
            j_gap: problem.eval_unchecked(Which::J, &p) - j_hat,
            steps: 0,
        })
        .collect();
    let (uniqueness, verdict) = judge(&trials, params);
    Ok(WellPosednessReport {
        r,
        x_hat: x_hat.clone(),
        sequence_trials: trials,
        uniqueness_on_levelset: uniqueness,
        verdict,
        retraction: "finite",
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityScan {
    pub r_grid: Vec<f64>,
    pub x_hats: Vec<Point>,
    pub j_values: Vec<f64>,
    pub lambda_hats: Vec<f64>,
    pub max_x_jump: f64,
    pub max_j_jump: f64,
    pub lambda_non_increasing: bool,
}

impl ContinuityScan {
    /// CSV with columns `r, lambda_hat, x1..xn, j_value`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let dim = self.x_hats.first().map_or(0, |p| p.as_vector().map_or(1, <[f64]>::len));
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["r".to_string(), "lambda_hat".to_string()];
        header.extend((1..=dim).map(|k| format!("x{k}")));
        header.push("j_value".into());
        w.write_record(&header)?;
        for n in 0..self.r_grid.len() {
            let mut row = vec![float17(self.r_grid[n]), float17(self.lambda_hats[n])];
            match &self.x_hats[n] {
                Point::Vector(v) => row.extend(v.iter().copied().map(float17)),
                Point::Index(i) => row.push(i.to_string()),
            }
            row.push(float17(self.j_values[n]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves at `r_count` evenly spaced levels of the window trimmed by
/// `margin_fraction` of its width at each end.
pub fn continuity_scan(
    problem: &ConstrainedProblem,
    r_count: usize,
    margin_fraction: f64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<ContinuityScan> {
    if r_count < 3 {
        return Err(Error::InvalidArgument("continuity scan needs at least 3 levels".into()));
    }
    if !(margin_fraction > 0.0 && margin_fraction < 0.5) {
        return Err(Error::InvalidArgument("margin_fraction must lie in ]0, 0.5[".into()));
    }
    let window = compute_window(problem, opts.probe_budget, seed, opts)?;
    let (alpha, beta) = window.finite_bounds().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "continuity scan needs a bounded window, got ]{}, {}[",
            window.alpha, window.beta
        ))
    })?;
    let margin = margin_fraction * (beta - alpha);
    let r_grid = linspace(alpha + margin, beta - margin, r_count);
    let results = r_grid
        .par_iter()
        .map(|&r| solve_level(problem, r, &window, seed, opts))
        .collect::<Result<Vec<_>>>()?;

    let x_hats: Vec<Point> = results.iter().map(|s| s.x_hat.clone()).collect();
    let j_values: Vec<f64> = results.iter().map(|s| s.j_value).collect();
    let lambda_hats: Vec<f64> = results.iter().map(|s| s.lambda_hat).collect();
    let max_x_jump = x_hats.windows(2).map(|w| w[0].distance(&w[1])).fold(0.0, f64::max);
    let max_j_jump = j_values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(ContinuityScan {
        lambda_non_increasing: lambda_hats.windows(2).all(|w| w[1] <= w[0]),
        r_grid,
        x_hats,
        j_values,
        lambda_hats,
        max_x_jump,
        max_j_jump,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateauReport {
    pub passed: bool,
    pub max_distance: f64,
    /// Probes whose minimizer is off the level set.
    pub off_level: Vec<f64>,
}

/// The minimizer must not move while `lambda` stays in the plateau of `r`.
pub fn plateau_constancy(
    problem: &ConstrainedProblem,
    r: f64,
    probe_lambdas: &[f64],
    seed: u64,
    opts: &SolverOptions,
) -> Result<PlateauReport> {
    let tol = opts.r_tol_for(r);
    let records = probe_lambdas
        .par_iter()
        .map(|&l| minimize(problem, l, seed, opts))
        .collect::<Result<Vec<_>>>()?;
    let off_level = records
        .iter()
        .filter(|rec| (rec.phi_at_argmin - r).abs() > tol)
        .map(|rec| rec.lambda)
        .collect::<Vec<_>>();
    let mut max_distance: f64 = 0.0;
    for (n, a) in records.iter().enumerate() {
        for b in &records[n + 1..] {
            max_distance = max_distance.max(a.argmin.distance(&b.argmin));
        }
    }
    Ok(PlateauReport {
        passed: off_level.is_empty() && max_distance <= opts.sep_tol,
        max_distance,
        off_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank;
    use crate::search::solve_level_auto;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn quad2d_is_well_posed() {
        let p = bank::quad2d_c34();
        let s = solve_level_auto(&p, 4.0, 0, &opts()).unwrap();
        let rep = minimizing_sequences_for(&p, &s, SequenceParams::default(), 0, &opts()).unwrap();
        assert_eq!(rep.retraction, "radial");
        assert_eq!(rep.verdict, WellPosedVerdict::Pass);
        assert_eq!(rep.sequence_trials.len(), 32);
        assert_eq!(rep.sequence_trials[0].distance, 0.0);
        for t in &rep.sequence_trials {
            assert!(t.j_gap <= 1e-7 && t.distance <= 1e-4, "{t:?}");
        }
    }

    #[test]
    fn symmetric_pair_fails() {
        let p = bank::symmetric_pair();
        let rep = minimizing_sequences(&p, 1.0, &Point::Vector(vec![1.0, 0.0]), SequenceParams::default(), 0, &opts())
            .unwrap();
        assert_eq!(rep.verdict, WellPosedVerdict::Fail, "{:?}", rep.sequence_trials);
        assert_eq!(rep.uniqueness_on_levelset, Verdict::Suspect);
        assert!(rep
            .sequence_trials
            .iter()
            .any(|t| t.j_gap <= 1e-7 && (t.distance - 2.0).abs() < 1e-3));
    }

    #[test]
    fn newton_retraction() {
        let p = bank::doublewell1d().with_interval(crate::ext::ParameterInterval::positive_half_line());
        let p = crate::problem::ConstrainedProblem::new(
            "quartic_phi",
            crate::problem::DomainSpec::EuclideanSpace {
                dimension: 2,
                bounds: None,
            },
            crate::problem::ObjectivePair {
                j: crate::problem::Objective::with_gradient(
                    |x| (x[0] - 3.0).powi(2) + (x[1] - 4.0).powi(2),
                    |x| vec![2.0 * (x[0] - 3.0), 2.0 * (x[1] - 4.0)],
                ),
                phi: crate::problem::Objective::with_gradient(
                    |x| x[0].powi(4) + x[1].powi(4) + x[0] * x[0] + x[1] * x[1],
                    |x| vec![4.0 * x[0].powi(3) + 2.0 * x[0], 4.0 * x[1].powi(3) + 2.0 * x[1]],
                ),
                smoothness: crate::problem::Smoothness::TwiceDifferentiable,
                bounds: Default::default(),
            },
            p.interval(),
        )
        .unwrap();
        let s = solve_level_auto(&p, 2.0, 0, &opts()).unwrap();
        let params = SequenceParams {
            trial_count: 8,
            ..Default::default()
        };
        let rep = minimizing_sequences_for(&p, &s, params, 0, &opts()).unwrap();
        assert_eq!(rep.retraction, "newton");
        assert_eq!(rep.verdict, WellPosedVerdict::Pass, "{:?}", rep.sequence_trials);
    }

    #[test]
    fn retraction_needs_r_above_min_phi() {
        let e = minimizing_sequences(
            &bank::quad2d_c34(),
            -1.0,
            &Point::Vector(vec![0.0, 0.0]),
            SequenceParams::default(),
            0,
            &opts(),
        )
        .unwrap_err();
        assert!(matches!(e, Error::RetractionFailure(_)));
    }

    #[test]
    fn finite_sets() {
        let p = bank::finite3();
        let rep = minimizing_sequences(&p, 1.0, &Point::Index(1), SequenceParams::default(), 0, &opts()).unwrap();
        assert_eq!(rep.verdict, WellPosedVerdict::Pass);
        let tied = ConstrainedProblem::finite(
            "tied",
            [("a", 1.0, 1.0), ("b", 1.0, 1.0), ("c", 0.0, 3.0)],
            crate::ext::ParameterInterval::whole_line(),
        )
        .unwrap();
        let rep = minimizing_sequences(&tied, 1.0, &Point::Index(0), SequenceParams::default(), 0, &opts()).unwrap();
        assert_eq!(rep.uniqueness_on_levelset, Verdict::Suspect);
    }

    #[test]
    fn scan_quad2d() {
        let s9 = continuity_scan(&bank::quad2d_c34(), 9, 0.05, 0, &opts()).unwrap();
        let s17 = continuity_scan(&bank::quad2d_c34(), 17, 0.05, 0, &opts()).unwrap();
        assert!(s9.lambda_non_increasing && s17.lambda_non_increasing);
        let ratio = s9.max_x_jump / s17.max_x_jump;
        assert!((1.6..=2.4).contains(&ratio), "{ratio}");
        for (x, r) in s9.x_hats.iter().zip(&s9.r_grid) {
            let v = x.as_vector().unwrap();
            assert!((v[0] - 0.6 * r.sqrt()).abs() < 1e-6 && (v[1] - 0.8 * r.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn scan_quad1d_closed_form() {
        let s = continuity_scan(&bank::quad1d(), 3, 0.1, 0, &opts()).unwrap();
        for (j, r) in s.j_values.iter().zip(&s.r_grid) {
            assert!((j - (1.0 - r.sqrt()).powi(2)).abs() < 1e-8);
        }
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("r,lambda_hat,x1,j_value\n"));
    }

    #[test]
    fn scan_rejects_bad_arguments() {
        assert!(continuity_scan(&bank::quad1d(), 2, 0.1, 0, &opts()).is_err());
        assert!(continuity_scan(&bank::quad1d(), 5, 0.6, 0, &opts()).is_err());
    }

    #[test]
    fn plateau() {
        let p = bank::finite3();
        assert!(plateau_constancy(&p, 1.0, &[1.5, 2.0, 2.5], 0, &opts()).unwrap().passed);
        assert!(plateau_constancy(&p, 1.0, &[2.0], 0, &opts()).unwrap().passed);
        let bad = plateau_constancy(&p, 1.0, &[2.0, 4.0], 0, &opts()).unwrap();
        assert!(!bad.passed);
        assert_eq!(bad.off_level, vec![4.0]);
    }
}
