//! Brute-force check of `sup_lambda inf_x f = inf_x sup_lambda f` on finite
//! grids, with finite proxies for the hypotheses under which equality holds.
//!
//! The hypotheses are checked for every level `rho` in a grid inside
//! `]sup inf f, rho*]`:
//!
//! * (i) `{lambda : f(x, lambda) > rho}` is a single run of grid indices;
//! * (ii) sublevel sets of `f(., lambda_hat)` stay away from the faces of the
//!   point grid's bounding box (vacuous on finite sets);
//! * (iii) some path `lambda -> x` keeps `f` below `rho`: the argmin path
//!   with bounded jumps on discretized spaces, a constant path on finite
//!   sets (the only continuous maps into a discrete space).
//!
//! The checks falsify; passing them proves nothing about the continuous
//! problem.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::problem::{ConstrainedProblem, Point};

/// How `f(x_i, lambda_k)` is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `J(x) + lambda (Phi(x) - r)` from precomputed `J` and `Phi` values.
    Saddle { j: Vec<f64>, phi: Vec<f64>, r: f64 },
    /// `intercept + slope * lambda`.
    Affine { intercept: Vec<f64>, slope: Vec<f64> },
    /// `values[i][k]`.
    Table { values: Vec<Vec<f64>> },
}

impl Kernel {
    #[inline]
    fn value(&self, i: usize, k: usize, lambda: f64) -> f64 {
        match self {
            Kernel::Saddle { j, phi, r } => lambda.mul_add(phi[i] - r, j[i]),
            Kernel::Affine { intercept, slope } => slope[i].mul_add(lambda, intercept[i]),
            Kernel::Table { values } => values[i][k],
        }
    }

    fn rows(&self) -> usize {
        match self {
            Kernel::Saddle { j, .. } => j.len(),
            Kernel::Affine { intercept, .. } => intercept.len(),
            Kernel::Table { values } => values.len(),
        }
    }

    fn check_shape(&self, columns: usize) -> Result<()> {
        let ok = match self {
            Kernel::Saddle { j, phi, r } => j.len() == phi.len() && r.is_finite(),
            Kernel::Affine { intercept, slope } => intercept.len() == slope.len(),
            Kernel::Table { values } => values.iter().all(|row| row.len() == columns),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("kernel shape does not match the grids".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxInstance {
    pub points: Vec<Point>,
    pub lambda_grid: Vec<f64>,
    pub kernel: Kernel,
    pub rho_star: f64,
    pub lambda_hat: f64,
    /// Largest step of an admissible path between neighbouring multipliers.
    pub path_jump_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaxValues {
    pub sup_inf: f64,
    pub inf_sup: f64,
    pub gap: f64,
    /// Grid index of a multiplier attaining `sup_inf`.
    pub lambda_index: usize,
    /// Point index attaining `inf_sup`.
    pub point_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisRecord {
    pub passed: bool,
    /// The check is a finite stand-in for a topological condition.
    pub proxy: bool,
    pub note: String,
    /// `(point index, rho)` of the first failure of (i) or (ii).
    pub witness: Option<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub passed: bool,
    /// `argmin`, `constant` or `none`.
    pub kind: &'static str,
    /// Point indices along the multiplier grid at the smallest level.
    pub path: Vec<usize>,
    /// First level at which no admissible path was found.
    pub failed_rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisChecks {
    pub rho_grid: Vec<f64>,
    pub hypothesis_i: HypothesisRecord,
    pub hypothesis_ii: HypothesisRecord,
    pub hypothesis_iii: PathRecord,
}

impl HypothesisChecks {
    pub fn all_pass(&self) -> bool {
        self.hypothesis_i.passed && self.hypothesis_ii.passed && self.hypothesis_iii.passed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MinimaxVerdict {
    EqualityHolds,
    GapFound,
    HypothesisViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaxReport {
    pub sup_inf: f64,
    pub inf_sup: f64,
    pub gap: f64,
    /// Gap attributable to the grids alone.
    pub resolution: f64,
    pub hypotheses: HypothesisChecks,
    pub verdict: MinimaxVerdict,
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { hi } else { step.mul_add(k as f64, lo) })
                .collect()
        }
    }
}

impl MinimaxInstance {
    /// Builds an instance with `lambda_hat` at a maximizer of `inf_x f` and
    /// `rho_star = inf_sup + 1`.
    pub fn new(points: Vec<Point>, lambda_grid: Vec<f64>, kernel: Kernel) -> Result<Self> {
        let path_jump_tol = 5.0 * min_spacing(&points);
        let mut inst = MinimaxInstance {
            points,
            lambda_grid,
            kernel,
            rho_star: f64::INFINITY,
            lambda_hat: f64::NAN,
            path_jump_tol,
        };
        inst.check_grids()?;
        let v = brute_force_gap(&inst);
        inst.lambda_hat = inst.lambda_grid[v.lambda_index];
        inst.rho_star = v.inf_sup + 1.0;
        Ok(inst)
    }

    /// A finite set `{0, .., n-1}` with `f(i, lambda_k) = values[i][k]`.
    pub fn table(values: Vec<Vec<f64>>, lambda_grid: Vec<f64>) -> Result<Self> {
        let points = (0..values.len()).map(Point::Index).collect();
        Self::new(points, lambda_grid, Kernel::Table { values })
    }

    /// The saddle function of `problem` at level `r`, sampled on the grids.
    pub fn saddle(problem: &ConstrainedProblem, r: f64, points: Vec<Point>, lambda_grid: Vec<f64>) -> Result<Self> {
        let j = points.iter().map(|p| problem.j(p)).collect::<Result<Vec<_>>>()?;
        let phi = points.iter().map(|p| problem.phi(p)).collect::<Result<Vec<_>>>()?;
        Self::new(points, lambda_grid, Kernel::Saddle { j, phi, r })
    }

    /// `saddle` on uniform grids of a one-dimensional problem.
    pub fn saddle_1d(
        problem: &ConstrainedProblem,
        r: f64,
        x_grid: (f64, f64, usize),
        lambda_grid: (f64, f64, usize),
    ) -> Result<Self> {
        let points = linspace(x_grid.0, x_grid.1, x_grid.2)
            .into_iter()
            .map(|x| Point::Vector(vec![x]))
            .collect();
        Self::saddle(problem, r, points, linspace(lambda_grid.0, lambda_grid.1, lambda_grid.2))
    }

    pub fn with_rho_star(mut self, rho_star: f64) -> Self {
        self.rho_star = rho_star;
        self
    }

    fn check_grids(&self) -> Result<()> {
        if self.points.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::InvalidArgument("minimax grids must be nonempty".into()));
        }
        if self.lambda_grid.iter().any(|l| !l.is_finite()) || self.lambda_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("lambda grid must be finite and strictly increasing".into()));
        }
        if self.kernel.rows() != self.points.len() {
            return Err(Error::InvalidArgument("kernel rows do not match the point grid".into()));
        }
        self.kernel.check_shape(self.lambda_grid.len())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_grids()?;
        if !self.lambda_grid.contains(&self.lambda_hat) {
            return Err(Error::InvalidArgument(format!("lambda_hat = {} is not a grid member", self.lambda_hat)));
        }
        let v = brute_force_gap(self);
        if !(self.rho_star > v.sup_inf) {
            return Err(Error::InvalidArgument(format!(
                "rho_star = {} must exceed sup inf f = {}",
                self.rho_star, v.sup_inf
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn f(&self, i: usize, k: usize) -> f64 {
        self.kernel.value(i, k, self.lambda_grid[k])
    }

    fn is_finite_set(&self) -> bool {
        self.points.iter().all(|p| matches!(p, Point::Index(_)))
    }

    /// Default levels: just above `sup_inf`, midway to `inf_sup`, `rho_star`.
    pub fn default_rho_grid(&self) -> Vec<f64> {
        let v = brute_force_gap(self);
        let lo = v.sup_inf + 1e-9 * (1.0 + v.sup_inf.abs());
        let mut grid = vec![lo];
        let mid = 0.5 * (v.sup_inf + v.inf_sup);
        if mid > lo {
            grid.push(mid);
        }
        grid.push(self.rho_star);
        grid.retain(|&r| r <= self.rho_star && r > v.sup_inf);
        grid.dedup();
        grid
    }

    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instances serialize");
        hex::encode(Sha256::digest(bytes))
    }
}

fn min_spacing(points: &[Point]) -> f64 {
    points
        .windows(2)
        .map(|w| w[0].distance(&w[1]))
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// Exact `sup_k min_i f` and `min_i sup_k f` by a double loop.
pub fn brute_force_gap(instance: &MinimaxInstance) -> MinimaxValues {
    let n_lambda = instance.lambda_grid.len();
    let mut column_min = vec![f64::INFINITY; n_lambda];
    let (mut inf_sup, mut point_index) = (f64::INFINITY, 0);
    for i in 0..instance.points.len() {
        let mut row_max = f64::NEG_INFINITY;
        for (k, cmin) in column_min.iter_mut().enumerate() {
            let v = instance.f(i, k);
            row_max = row_max.max(v);
            *cmin = cmin.min(v);
        }
        if row_max < inf_sup {
            inf_sup = row_max;
            point_index = i;
        }
    }
    let (mut sup_inf, mut lambda_index) = (f64::NEG_INFINITY, 0);
    for (k, &m) in column_min.iter().enumerate() {
        if m > sup_inf {
            sup_inf = m;
            lambda_index = k;
        }
    }
    MinimaxValues {
        sup_inf,
        inf_sup,
        gap: inf_sup - sup_inf,
        lambda_index,
        point_index,
    }
}

/// Smallest index minimizing `f(., lambda_k)`.
fn argmin_at(instance: &MinimaxInstance, k: usize) -> (usize, f64) {
    (0..instance.points.len())
        .map(|i| (i, instance.f(i, k)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

pub fn check_hypotheses(instance: &MinimaxInstance, rho_grid: &[f64]) -> Result<HypothesisChecks> {
    if let Some(&bad) = rho_grid.iter().find(|&&r| !(r <= instance.rho_star)) {
        return Err(Error::InvalidArgument(format!("rho = {bad} exceeds rho_star = {}", instance.rho_star)));
    }
    let n_lambda = instance.lambda_grid.len();
    let finite = instance.is_finite_set();

    // (i): superlevel index sets are runs.
    let mut witness_i = None;
    'outer: for i in 0..instance.points.len() {
        for &rho in rho_grid {
            let mut runs = 0;
            let mut inside = false;
            for k in 0..n_lambda {
                let above = instance.f(i, k) > rho;
                if above && !inside {
                    runs += 1;
                }
                inside = above;
            }
            if runs > 1 {
                witness_i = Some((i, rho));
                break 'outer;
            }
        }
    }
    let hypothesis_i = HypothesisRecord {
        passed: witness_i.is_none(),
        proxy: false,
        note: "superlevel sets in lambda checked as index runs".into(),
        witness: witness_i,
    };

    // (ii): sublevel sets at lambda_hat avoid the bounding-box faces.
    let hypothesis_ii = if finite {
        HypothesisRecord {
            passed: true,
            proxy: true,
            note: "finite set: closedness and compactness hold vacuously".into(),
            witness: None,
        }
    } else {
        let k_hat = instance
            .lambda_grid
            .iter()
            .position(|&l| l == instance.lambda_hat)
            .ok_or_else(|| Error::InvalidArgument("lambda_hat is not a grid member".into()))?;
        let faces = face_points(&instance.points);
        let mut witness = None;
        for &rho in rho_grid {
            if let Some(&i) = faces.iter().find(|&&i| instance.f(i, k_hat) <= rho) {
                witness = Some((i, rho));
                break;
            }
        }
        HypothesisRecord {
            passed: witness.is_none(),
            proxy: true,
            note: "compactness proxy: sublevel sets at lambda_hat do not reach the grid boundary; \
                   closedness for every lambda is not separately checked"
                .into(),
            witness,
        }
    };

    // (iii): an admissible path below each level.
    let argmin: Vec<(usize, f64)> = (0..n_lambda).map(|k| argmin_at(instance, k)).collect();
    let path: Vec<usize> = argmin.iter().map(|(i, _)| *i).collect();
    let argmin_continuous = !finite
        && path
            .windows(2)
            .all(|w| instance.points[w[0]].distance(&instance.points[w[1]]) <= instance.path_jump_tol);
    let values = brute_force_gap(instance);
    let mut hypothesis_iii = PathRecord {
        passed: true,
        kind: "none",
        path: Vec::new(),
        failed_rho: None,
    };
    let mut sorted = rho_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    for (n, &rho) in sorted.iter().enumerate() {
        let (kind, candidate) = if argmin_continuous && argmin.iter().all(|(_, v)| *v < rho) {
            ("argmin", path.clone())
        } else if values.inf_sup < rho {
            ("constant", vec![values.point_index; n_lambda])
        } else {
            hypothesis_iii = PathRecord {
                passed: false,
                kind: "none",
                path: Vec::new(),
                failed_rho: Some(rho),
            };
            break;
        };
        if n == 0 {
            hypothesis_iii.kind = kind;
            hypothesis_iii.path = candidate;
        }
    }

    Ok(HypothesisChecks {
        rho_grid: rho_grid.to_vec(),
        hypothesis_i,
        hypothesis_ii,
        hypothesis_iii,
    })
}

/// Points on a face of the grid's bounding box.
fn face_points(points: &[Point]) -> Vec<usize> {
    let vectors: Vec<&[f64]> = points.iter().filter_map(Point::as_vector).collect();
    let Some(first) = vectors.first() else {
        return Vec::new();
    };
    let dim = first.len();
    let lo: Vec<f64> = (0..dim)
        .map(|d| vectors.iter().map(|v| v[d]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..dim)
        .map(|d| vectors.iter().map(|v| v[d]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let v = p.as_vector()?;
            (0..dim).any(|d| v[d] == lo[d] || v[d] == hi[d]).then_some(i)
        })
        .collect()
}

/// Gap explained by the grids: the change of `f` at the neighbours of the
/// optimizers in list order. Finite sets carry no discretization error.
pub fn resolution_bound(instance: &MinimaxInstance) -> f64 {
    let v = brute_force_gap(instance);
    let floor = 1e-9 * (1.0 + v.sup_inf.abs().max(v.inf_sup.abs()));
    if instance.is_finite_set() {
        return floor;
    }
    let (n, m) = (instance.points.len(), instance.lambda_grid.len());
    let neighbours = |c: usize, len: usize| [c.checked_sub(1), (c + 1 < len).then_some(c + 1)];
    let x_side = (0..m)
        .map(|k| {
            let (i, best) = argmin_at(instance, k);
            neighbours(i, n)
                .into_iter()
                .flatten()
                .map(|j| (instance.f(j, k) - best).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let lambda_side = (0..n)
        .map(|i| {
            let (k, best) = (0..m)
                .map(|k| (k, instance.f(i, k)))
                .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
            neighbours(k, m)
                .into_iter()
                .flatten()
                .map(|l| (instance.f(i, l) - best).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    floor + x_side + lambda_side
}

/// Values, hypothesis checks and verdict on the default level grid.
pub fn verify(instance: &MinimaxInstance) -> Result<MinimaxReport> {
    verify_with(instance, &instance.default_rho_grid())
}

pub fn verify_with(instance: &MinimaxInstance, rho_grid: &[f64]) -> Result<MinimaxReport> {
    instance.validate()?;
    let v = brute_force_gap(instance);
    let hypotheses = check_hypotheses(instance, rho_grid)?;
    let resolution = resolution_bound(instance);
    let verdict = if !hypotheses.all_pass() {
        MinimaxVerdict::HypothesisViolated
    } else if v.gap > resolution {
        MinimaxVerdict::GapFound
    } else {
        MinimaxVerdict::EqualityHolds
    };
    Ok(MinimaxReport {
        sup_inf: v.sup_inf,
        inf_sup: v.inf_sup,
        gap: v.gap,
        resolution,
        hypotheses,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub max_points: usize,
    pub max_lambdas: usize,
    /// Coefficients and multipliers are drawn from `[-scale, scale]`.
    pub scale: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            max_points: 6,
            max_lambdas: 8,
            scale: 2.0,
        }
    }
}

/// Random finite instances with `f` affine in `lambda`, verified in
/// parallel. Instance `n` depends only on `(seed, n)`.
pub fn random_instances(
    count: usize,
    seed: u64,
    params: GeneratorParams,
) -> Result<Vec<(MinimaxInstance, MinimaxReport)>> {
    if params.max_points == 0 || params.max_lambdas == 0 || !(params.scale > 0.0) {
        return Err(Error::InvalidArgument("generator sizes and scale must be positive".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let points = rng.gen_range(1..=params.max_points);
            let lambdas = rng.gen_range(1..=params.max_lambdas);
            let s = params.scale;
            let mut grid: Vec<f64> = (0..lambdas).map(|_| rng.gen_range(-s..=s)).collect();
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let intercept = (0..points).map(|_| rng.gen_range(-s..=s)).collect();
            let slope = (0..points).map(|_| rng.gen_range(-s..=s)).collect();
            let inst = MinimaxInstance::new(
                (0..points).map(Point::Index).collect(),
                grid,
                Kernel::Affine { intercept, slope },
            )?;
            let report = verify(&inst)?;
            Ok((inst, report))
        })
        .collect()
}

/// Instances whose hypothesis proxies all pass yet show a gap.
pub fn counterexamples(results: &[(MinimaxInstance, MinimaxReport)]) -> Vec<&MinimaxInstance> {
    results
        .iter()
        .filter(|(_, r)| r.verdict == MinimaxVerdict::GapFound)
        .map(|(i, _)| i)
        .collect()
}

/// Writes `instance` to `<dir>/<sha256>.json`.
pub fn write_counterexample(dir: &Path, instance: &MinimaxInstance) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", instance.content_hash()));
    let text = serde_json::to_string_pretty(instance).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&path, text)?;
    Ok(path)
}
