//! Global minimization of `J + lambda Phi` and the uniqueness spot-check.
//!
//! Finite sets are scanned exactly. Continuous domains use multi-start local
//! descent: Newton steps with a finite-difference Hessian when the problem is
//! twice differentiable, otherwise gradient steps with a Barzilai-Borwein
//! trial length; both under an Armijo backtracking line search.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::problem::{ConstrainedProblem, Point, Which};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Stalled,
}

/// `y_lambda` together with `m(lambda) = inf (J + lambda Phi)` as found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizerRecord {
    pub lambda: f64,
    pub argmin: Point,
    pub value: f64,
    pub phi_at_argmin: f64,
    pub j_at_argmin: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Unique,
    Suspect,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub lambda: f64,
    pub verdict: Verdict,
    /// One representative `(point, value)` per cluster of optimal results.
    pub witnesses: Vec<(Point, f64)>,
}

/// The function handed to the local solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Target {
    /// `J + lambda Phi`, fused as in `evaluate_family`.
    Family(f64),
    /// `sign * J` or `sign * Phi`.
    Single(Which, f64),
}

impl Target {
    fn value(self, p: &ConstrainedProblem, x: &[f64]) -> f64 {
        match self {
            Target::Family(l) => l.mul_add(p.eval_vec(Which::Phi, x), p.eval_vec(Which::J, x)),
            Target::Single(w, s) => s * p.eval_vec(w, x),
        }
    }

    fn value_at(self, p: &ConstrainedProblem, x: &Point) -> f64 {
        match self {
            Target::Family(l) => l.mul_add(p.eval_unchecked(Which::Phi, x), p.eval_unchecked(Which::J, x)),
            Target::Single(w, s) => s * p.eval_unchecked(w, x),
        }
    }

    fn gradient(self, p: &ConstrainedProblem, x: &[f64]) -> Vec<f64> {
        match self {
            Target::Family(l) => {
                let gj = p.gradient_unchecked(Which::J, x);
                let gp = p.gradient_unchecked(Which::Phi, x);
                gj.iter().zip(&gp).map(|(a, b)| l.mul_add(*b, *a)).collect()
            }
            Target::Single(w, s) => p.gradient_unchecked(w, x).into_iter().map(|g| s * g).collect(),
        }
    }
}

/// Outcome of one local descent (or one table row).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LocalResult {
    pub point: Point,
    pub value: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// `y_lambda` for `lambda` inside `]a, b[`.
pub fn minimize(
    problem: &ConstrainedProblem,
    lambda: f64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<MinimizerRecord> {
    check_lambda(problem, lambda)?;
    minimize_at(problem, lambda, opts.k_starts, seed, opts)
}

/// Like [`minimize`] without the interval check; used for endpoints and
/// limits where `lambda` may sit on the boundary.
pub(crate) fn minimize_at(
    problem: &ConstrainedProblem,
    lambda: f64,
    starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<MinimizerRecord> {
    let results = local_minima(problem, Target::Family(lambda), starts, seed, opts)?;
    let best = best_of(&results, opts);
    Ok(record(problem, lambda, best))
}

fn record(problem: &ConstrainedProblem, lambda: f64, best: &LocalResult) -> MinimizerRecord {
    let j = problem.eval_unchecked(Which::J, &best.point);
    let phi = problem.eval_unchecked(Which::Phi, &best.point);
    MinimizerRecord {
        lambda,
        argmin: best.point.clone(),
        value: lambda.mul_add(phi, j),
        phi_at_argmin: phi,
        j_at_argmin: j,
        iterations: best.iterations,
        status: best.status,
    }
}

fn check_lambda(problem: &ConstrainedProblem, lambda: f64) -> Result<()> {
    let interval = problem.interval();
    if interval.contains(lambda) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "lambda = {lambda} is outside ]{}, {}[",
            interval.a(),
            interval.b()
        )))
    }
}

/// Runs `k_starts` independent minimizations and clusters the value-optimal
/// results; `Unique` iff they form a single cluster.
pub fn uniqueness_probe(
    problem: &ConstrainedProblem,
    lambda: f64,
    k_starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<UniquenessReport> {
    check_lambda(problem, lambda)?;
    if k_starts < 2 && !problem.domain().is_finite() {
        return Err(Error::InvalidArgument("uniqueness probe needs at least 2 starts".into()));
    }
    let results = local_minima(problem, Target::Family(lambda), k_starts, seed, opts)?;
    let witnesses = optimal_clusters(&results, opts);
    Ok(UniquenessReport {
        lambda,
        verdict: if witnesses.len() == 1 {
            Verdict::Unique
        } else {
            Verdict::Suspect
        },
        witnesses,
    })
}

/// First result (by start index) among those tying for the smallest value.
pub(crate) fn best_of<'a>(results: &'a [LocalResult], opts: &SolverOptions) -> &'a LocalResult {
    let min = results
        .iter()
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    results
        .iter()
        .find(|r| opts.values_tie(r.value, min))
        .unwrap_or(&results[0])
}

/// Representatives of the clusters (by `sep_tol`) formed by the optimal results.
pub(crate) fn optimal_clusters(results: &[LocalResult], opts: &SolverOptions) -> Vec<(Point, f64)> {
    let min = results
        .iter()
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    let mut reps: Vec<(Point, f64)> = Vec::new();
    for r in results.iter().filter(|r| opts.values_tie(r.value, min)) {
        if !reps.iter().any(|(p, _)| p.distance(&r.point) <= opts.sep_tol) {
            reps.push((r.point.clone(), r.value));
        }
    }
    reps
}

/// All local results for `target`: every tied row on a finite set, one
/// result per start on continuous domains. Never empty.
pub(crate) fn local_minima(
    problem: &ConstrainedProblem,
    target: Target,
    starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Vec<LocalResult>> {
    if let Some(n) = problem.table_len() {
        let values: Vec<f64> = (0..n).map(|i| target.value_at(problem, &Point::Index(i))).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(values
            .iter()
            .enumerate()
            .filter(|(_, v)| opts.values_tie(**v, min))
            .map(|(i, v)| LocalResult {
                point: Point::Index(i),
                value: *v,
                iterations: n,
                status: SolveStatus::Converged,
            })
            .collect());
    }
    let lambda = match target {
        Target::Family(l) => l,
        Target::Single(..) => 0.0,
    };
    start_points(problem, starts.max(1), seed, opts)
        .into_iter()
        .map(|x0| descend(problem, target, x0, opts).map_err(|bound| Error::Diverged { lambda, bound }))
        .collect()
}

/// Deterministic starts: a Halton sequence with a seeded Cranley-Patterson
/// shift, mapped into the box bounds or into the ball of radius
/// `start_radius`.
pub(crate) fn start_points(
    problem: &ConstrainedProblem,
    count: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Vec<Vec<f64>> {
    let n = problem.domain().dimension().expect("continuous domain");
    let bases = primes(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    (0..count)
        .map(|k| {
            let u: Vec<f64> = bases
                .iter()
                .zip(&shift)
                .map(|(&b, s)| (radical_inverse(k as u64 + 1, b) + s).fract())
                .collect();
            match problem.domain().bounds() {
                Some(bounds) => u
                    .iter()
                    .zip(bounds)
                    .map(|(t, (lo, hi))| lo + t * (hi - lo))
                    .collect(),
                None => {
                    let v: Vec<f64> = u.iter().map(|t| 2.0 * t - 1.0).collect();
                    let scale = opts.start_radius / norm(&v).max(1.0);
                    v.iter().map(|c| c * scale).collect()
                }
            }
        })
        .collect()
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut r) = (inv, 0.0);
    while k > 0 {
        r += (k % base) as f64 * f;
        k /= base;
        f *= inv;
    }
    r
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut c = 2u64;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            out.push(c);
        }
        c += 1;
    }
    out
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(problem: &ConstrainedProblem, x: &mut [f64]) {
    if let Some(bounds) = problem.domain().bounds() {
        for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Norm of the projected gradient step `x - P(x - g)`.
fn stationarity(problem: &ConstrainedProblem, x: &[f64], g: &[f64]) -> f64 {
    match problem.domain().bounds() {
        None => norm(g),
        Some(_) => {
            let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
            project(problem, &mut y);
            x.iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        }
    }
}

fn newton_direction(problem: &ConstrainedProblem, target: Target, x: &[f64], g: &[f64]) -> Option<Vec<f64>> {
    let n = x.len();
    let base = f64::EPSILON.cbrt();
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut probe = x.to_vec();
    for i in 0..n {
        let step = base * x[i].abs().max(1.0);
        probe[i] = x[i] + step;
        let up = target.gradient(problem, &probe);
        probe[i] = x[i] - step;
        let down = target.gradient(problem, &probe);
        probe[i] = x[i];
        for r in 0..n {
            h[(r, i)] = (up[r] - down[r]) / (2.0 * step);
        }
    }
    let sym = (&h + h.transpose()) * 0.5;
    let chol = sym.cholesky()?;
    let d = chol.solve(&DVector::from_iterator(n, g.iter().map(|v| -v)));
    let d: Vec<f64> = d.iter().copied().collect();
    (d.iter().all(|v| v.is_finite()) && dot(&d, g) < 0.0).then_some(d)
}

/// Extra steps taken after the tolerance is met, kept only while the
/// gradient keeps shrinking.
const POLISH_STEPS: usize = 4;

/// One local descent. `Err(bound)` signals divergence.
fn descend(
    problem: &ConstrainedProblem,
    target: Target,
    mut x: Vec<f64>,
    opts: &SolverOptions,
) -> std::result::Result<LocalResult, f64> {
    project(problem, &mut x);
    let newton = opts.newton && problem.newton_enabled();
    let mut value = target.value(problem, &x);
    let mut g = target.gradient(problem, &x);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut t_prev = 1.0 / norm(&g).max(1.0);
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut polishing = 0usize;

    while iterations < opts.max_iterations {
        let gn = stationarity(problem, &x, &g);
        if !value.is_finite() || !gn.is_finite() {
            status = SolveStatus::Stalled;
            break;
        }
        let converged = gn <= opts.g_tol * (1.0 + value.abs());
        if converged {
            status = SolveStatus::Converged;
            if polishing >= POLISH_STEPS || gn == 0.0 {
                break;
            }
            polishing += 1;
        }
        iterations += 1;

        let (direction, mut t) = match newton.then(|| newton_direction(problem, target, &x, &g)).flatten() {
            Some(d) => (d, 1.0),
            None => {
                let bb = prev.as_ref().and_then(|(s, y)| {
                    let sy = dot(s, y);
                    (sy > 0.0).then(|| dot(s, s) / sy)
                });
                (g.iter().map(|v| -v).collect::<Vec<_>>(), bb.unwrap_or(2.0 * t_prev))
            }
        };

        let mut accepted = None;
        for _ in 0..80 {
            let mut trial: Vec<f64> = x.iter().zip(&direction).map(|(a, d)| a + t * d).collect();
            project(problem, &mut trial);
            if norm(&trial) > opts.divergence_bound {
                return Err(opts.divergence_bound);
            }
            let tv = target.value(problem, &trial);
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            if tv.is_finite() && tv <= value + 1e-4 * dot(&g, &step) {
                accepted = Some((trial, tv, step));
                break;
            }
            t *= 0.5;
        }

        let Some((trial, tv, step)) = accepted else {
            if !converged {
                status = SolveStatus::Stalled;
            }
            break;
        };
        if step.iter().all(|s| *s == 0.0) {
            if !converged {
                status = SolveStatus::Stalled;
            }
            break;
        }
        let gt = target.gradient(problem, &trial);
        if converged && !(stationarity(problem, &trial, &gt) < gn && tv <= value) {
            break;
        }
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        prev = Some((step, y));
        t_prev = t;
        x = trial;
        value = tv;
        g = gt;
    }
    Ok(LocalResult {
        point: Point::Vector(x),
        value,
        iterations,
        status,
    })
}
