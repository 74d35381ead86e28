//! Problem data: the domain, the pair of objectives `J` and `Phi`, and the
//! multiplier interval `]a, b[`.
//!
//! Problems are immutable once built and can be shared freely between
//! threads; every evaluator is a pure `Fn`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::ext::{ExtReal, ParameterInterval};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A point of the domain: a row index into a finite table, or a coordinate
/// vector (nodal values on the grid space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Index(usize),
    Vector(Vec<f64>),
}

impl Point {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Point::Vector(v) => Some(v),
            Point::Index(_) => None,
        }
    }

    /// Euclidean distance between vectors; the discrete metric (0 or 1)
    /// between table rows. Mixed kinds are infinitely far apart.
    pub fn distance(&self, other: &Point) -> f64 {
        match (self, other) {
            (Point::Index(i), Point::Index(j)) => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            (Point::Vector(u), Point::Vector(v)) if u.len() == v.len() => u
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Index(i) => write!(f, "#{i}"),
            Point::Vector(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Labeled points; the objective values live in [`Objective::Table`].
    FiniteSet { labels: Vec<String> },
    EuclideanSpace {
        dimension: usize,
        /// Per-coordinate `(low, high)`.
        bounds: Option<Vec<(f64, f64)>>,
    },
    /// Nodal values at `nodes` interior points of a uniform mesh on
    /// `[0, 1]` with zero boundary values.
    GridFunctionSpace { nodes: usize },
}

impl DomainSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            DomainSpec::FiniteSet { .. } => "finite set",
            DomainSpec::EuclideanSpace { .. } => "Euclidean",
            DomainSpec::GridFunctionSpace { .. } => "grid function",
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, DomainSpec::FiniteSet { .. })
    }

    /// Coordinate dimension of continuous domains.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            DomainSpec::FiniteSet { .. } => None,
            DomainSpec::EuclideanSpace { dimension, .. } => Some(*dimension),
            DomainSpec::GridFunctionSpace { nodes } => Some(*nodes),
        }
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        match self {
            DomainSpec::EuclideanSpace {
                bounds: Some(b), ..
            } => Some(b),
            _ => None,
        }
    }

    /// Mesh width `1 / (m + 1)` of the grid space.
    pub fn mesh_width(&self) -> Option<f64> {
        match self {
            DomainSpec::GridFunctionSpace { nodes } => Some(1.0 / (*nodes as f64 + 1.0)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::FiniteSet { labels } => {
                if labels.is_empty() {
                    return Err(Error::InvalidProblem("finite set has no points".into()));
                }
                let mut sorted: Vec<&String> = labels.iter().collect();
                sorted.sort();
                if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Error::InvalidProblem(format!("duplicate label `{}`", w[0])));
                }
            }
            DomainSpec::EuclideanSpace { dimension, bounds } => {
                if *dimension == 0 {
                    return Err(Error::InvalidProblem("dimension must be at least 1".into()));
                }
                if let Some(b) = bounds {
                    if b.len() != *dimension {
                        return Err(Error::InvalidProblem(format!(
                            "{} box bounds given for dimension {dimension}",
                            b.len()
                        )));
                    }
                    if let Some((i, _)) = b
                        .iter()
                        .enumerate()
                        .find(|(_, (lo, hi))| !(lo < hi && lo.is_finite() && hi.is_finite()))
                    {
                        return Err(Error::InvalidProblem(format!(
                            "box bound {} must satisfy low < high",
                            i + 1
                        )));
                    }
                }
            }
            DomainSpec::GridFunctionSpace { nodes } => {
                if *nodes < 2 {
                    return Err(Error::InvalidProblem(
                        "grid space needs at least 2 interior nodes".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    BlackBox,
    Differentiable,
    TwiceDifferentiable,
}

/// One of the two objectives.
#[derive(Clone)]
pub enum Objective {
    /// Per-row values of a finite set.
    Table(Vec<f64>),
    Function {
        value: ScalarFn,
        gradient: Option<GradientFn>,
    },
}

impl Objective {
    pub fn function<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Objective::Function {
            value: Arc::new(f),
            gradient: None,
        }
    }

    pub fn with_gradient<F, G>(f: F, g: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Objective::Function {
            value: Arc::new(f),
            gradient: Some(Arc::new(g)),
        }
    }

    /// Wraps a parsed expression. Domain errors (`log`, `sqrt`) evaluate to
    /// NaN, which the solvers treat as an infeasible trial point.
    pub fn expression(expr: Expr) -> Self {
        Self::function(move |x| expr.eval(x).unwrap_or(f64::NAN))
    }

    fn has_gradient(&self) -> bool {
        matches!(
            self,
            Objective::Function {
                gradient: Some(_),
                ..
            }
        )
    }
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Table(v) => f.debug_tuple("Table").field(v).finish(),
            Objective::Function { gradient, .. } => f
                .debug_struct("Function")
                .field("analytic_gradient", &gradient.is_some())
                .finish(),
        }
    }
}

/// Closed-form infima and suprema a built-in problem can declare; unknown
/// bounds are estimated by probing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnownBounds {
    pub inf_j: Option<ExtReal>,
    pub sup_j: Option<ExtReal>,
    pub inf_phi: Option<ExtReal>,
    pub sup_phi: Option<ExtReal>,
}

impl KnownBounds {
    fn swapped(self) -> Self {
        KnownBounds {
            inf_j: self.inf_phi,
            sup_j: self.sup_phi,
            inf_phi: self.inf_j,
            sup_phi: self.sup_j,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObjectivePair {
    pub j: Objective,
    pub phi: Objective,
    pub smoothness: Smoothness,
    pub bounds: KnownBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    J,
    Phi,
}

#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    name: String,
    domain: DomainSpec,
    objectives: ObjectivePair,
    interval: ParameterInterval,
}

impl ConstrainedProblem {
    pub fn new(
        name: impl Into<String>,
        domain: DomainSpec,
        objectives: ObjectivePair,
        interval: ParameterInterval,
    ) -> Result<Self> {
        domain.validate()?;
        let both = [&objectives.j, &objectives.phi];
        match &domain {
            DomainSpec::FiniteSet { labels } => {
                for o in both {
                    match o {
                        Objective::Table(v) if v.len() == labels.len() => {}
                        Objective::Table(v) => {
                            return Err(Error::InvalidProblem(format!(
                                "table has {} values for {} points",
                                v.len(),
                                labels.len()
                            )))
                        }
                        Objective::Function { .. } => {
                            return Err(Error::InvalidProblem(
                                "finite sets take tabulated objectives".into(),
                            ))
                        }
                    }
                }
                if let Some(Objective::Table(v)) = both.iter().find(|o| match o {
                    Objective::Table(v) => v.iter().any(|x| !x.is_finite()),
                    _ => false,
                }) {
                    return Err(Error::InvalidProblem(format!("non-finite table value in {v:?}")));
                }
            }
            _ => {
                if both.iter().any(|o| matches!(o, Objective::Table(_))) {
                    return Err(Error::InvalidProblem(
                        "continuous domains take function objectives".into(),
                    ));
                }
                let analytic = both.iter().all(|o| o.has_gradient());
                if !analytic && objectives.smoothness == Smoothness::TwiceDifferentiable {
                    return Err(Error::InvalidProblem(
                        "twice_differentiable requires analytic gradients for J and Phi".into(),
                    ));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            domain,
            objectives,
            interval,
        })
    }

    /// Finite problem from `(label, J, Phi)` rows.
    pub fn finite<S: Into<String>>(
        name: impl Into<String>,
        rows: impl IntoIterator<Item = (S, f64, f64)>,
        interval: ParameterInterval,
    ) -> Result<Self> {
        let (mut labels, mut j, mut phi) = (Vec::new(), Vec::new(), Vec::new());
        for (l, jv, pv) in rows {
            labels.push(l.into());
            j.push(jv);
            phi.push(pv);
        }
        Self::new(
            name,
            DomainSpec::FiniteSet { labels },
            ObjectivePair {
                j: Objective::Table(j),
                phi: Objective::Table(phi),
                smoothness: Smoothness::BlackBox,
                bounds: KnownBounds::default(),
            },
            interval,
        )
    }

    /// Loads a finite table from CSV with header `label,J,Phi`.
    pub fn from_csv(
        name: impl Into<String>,
        path: impl AsRef<Path>,
        interval: ParameterInterval,
    ) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        Self::finite(name, read_table(&mut reader)?, interval)
    }

    pub fn from_csv_reader<R: std::io::Read>(
        name: impl Into<String>,
        input: R,
        interval: ParameterInterval,
    ) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        Self::finite(name, read_table(&mut reader)?, interval)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn objectives(&self) -> &ObjectivePair {
        &self.objectives
    }

    pub fn interval(&self) -> ParameterInterval {
        self.interval
    }

    pub fn with_interval(&self, interval: ParameterInterval) -> Self {
        Self {
            interval,
            ..self.clone()
        }
    }

    /// Declares closed-form bounds; callers vouch for their correctness.
    pub fn with_known_bounds(&self, bounds: KnownBounds) -> Self {
        let mut out = self.clone();
        out.objectives.bounds = bounds;
        out
    }

    /// Number of rows of a finite problem.
    pub fn table_len(&self) -> Option<usize> {
        match &self.domain {
            DomainSpec::FiniteSet { labels } => Some(labels.len()),
            _ => None,
        }
    }

    pub fn label(&self, x: &Point) -> Option<&str> {
        match (&self.domain, x) {
            (DomainSpec::FiniteSet { labels }, Point::Index(i)) => labels.get(*i).map(|s| s.as_str()),
            _ => None,
        }
    }

    pub fn index_of(&self, label: &str) -> Option<Point> {
        match &self.domain {
            DomainSpec::FiniteSet { labels } => labels.iter().position(|l| l == label).map(Point::Index),
            _ => None,
        }
    }

    /// The role-swapped problem (`J' = Phi`, `Phi' = J`) on `]b^-1, a^-1[`.
    pub fn swapped(&self) -> Result<Self> {
        let interval = self.interval.reciprocal()?;
        let o = &self.objectives;
        Ok(Self {
            name: format!("{}~dual", self.name),
            domain: self.domain.clone(),
            objectives: ObjectivePair {
                j: o.phi.clone(),
                phi: o.j.clone(),
                smoothness: o.smoothness,
                bounds: o.bounds.swapped(),
            },
            interval,
        })
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        match (&self.domain, x) {
            (DomainSpec::FiniteSet { labels }, Point::Index(i)) => {
                if *i < labels.len() {
                    Ok(())
                } else {
                    Err(Error::DomainMismatch(format!(
                        "row {i} out of range for {} points",
                        labels.len()
                    )))
                }
            }
            (DomainSpec::FiniteSet { .. }, Point::Vector(_)) => Err(Error::DomainMismatch(
                "finite sets are indexed by row, not by coordinates".into(),
            )),
            (_, Point::Index(_)) => Err(Error::DomainMismatch(
                "continuous domains take coordinate vectors".into(),
            )),
            (d, Point::Vector(v)) => {
                let n = d.dimension().expect("continuous");
                if v.len() != n {
                    return Err(Error::DomainMismatch(format!(
                        "point has dimension {}, domain has {n}",
                        v.len()
                    )));
                }
                if let Some(b) = d.bounds() {
                    if let Some(i) = (0..n).find(|&i| !(b[i].0 <= v[i] && v[i] <= b[i].1)) {
                        return Err(Error::DomainMismatch(format!(
                            "coordinate {} = {} outside [{}, {}]",
                            i + 1,
                            v[i],
                            b[i].0,
                            b[i].1
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn evaluate(&self, which: Which, x: &Point) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(which, x))
    }

    pub fn j(&self, x: &Point) -> Result<f64> {
        self.evaluate(Which::J, x)
    }

    pub fn phi(&self, x: &Point) -> Result<f64> {
        self.evaluate(Which::Phi, x)
    }

    /// `J(x) + lambda Phi(x)` as one fused multiply-add, i.e. a single
    /// rounding of the exact value.
    pub fn evaluate_family(&self, x: &Point, lambda: f64) -> Result<f64> {
        self.check_point(x)?;
        Ok(lambda.mul_add(self.eval_unchecked(Which::Phi, x), self.eval_unchecked(Which::J, x)))
    }

    /// The saddle function `J(x) + lambda (Phi(x) - r)`, fused the same way.
    pub fn evaluate_saddle(&self, x: &Point, lambda: f64, r: f64) -> Result<f64> {
        self.check_point(x)?;
        Ok(lambda.mul_add(self.eval_unchecked(Which::Phi, x) - r, self.eval_unchecked(Which::J, x)))
    }

    /// Analytic gradient when supplied, otherwise central differences with
    /// per-coordinate step `cbrt(eps) * max(1, |x_i|)`.
    pub fn gradient(&self, which: Which, x: &Point) -> Result<Vec<f64>> {
        if self.domain.is_finite() {
            return Err(Error::UnsupportedDomain("finite set"));
        }
        self.check_point(x)?;
        Ok(self.gradient_unchecked(which, x.as_vector().expect("checked")))
    }

    pub(crate) fn objective(&self, which: Which) -> &Objective {
        match which {
            Which::J => &self.objectives.j,
            Which::Phi => &self.objectives.phi,
        }
    }

    pub(crate) fn eval_unchecked(&self, which: Which, x: &Point) -> f64 {
        match (self.objective(which), x) {
            (Objective::Table(v), Point::Index(i)) => v[*i],
            (Objective::Function { value, .. }, Point::Vector(v)) => value(v),
            _ => f64::NAN,
        }
    }

    pub(crate) fn eval_vec(&self, which: Which, x: &[f64]) -> f64 {
        match self.objective(which) {
            Objective::Function { value, .. } => value(x),
            Objective::Table(_) => f64::NAN,
        }
    }

    pub(crate) fn gradient_unchecked(&self, which: Which, x: &[f64]) -> Vec<f64> {
        match self.objective(which) {
            Objective::Function {
                gradient: Some(g), ..
            } => g(x),
            Objective::Function { value, .. } => central_difference(value.as_ref(), x),
            Objective::Table(_) => vec![f64::NAN; x.len()],
        }
    }

    /// Whether the inner solver may take Newton steps.
    pub(crate) fn newton_enabled(&self) -> bool {
        self.objectives.smoothness == Smoothness::TwiceDifferentiable
    }
}

pub(crate) fn central_difference(f: &(dyn Fn(&[f64]) -> f64 + Send + Sync), x: &[f64]) -> Vec<f64> {
    let base = f64::EPSILON.cbrt();
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = base * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn read_table<R: std::io::Read>(reader: &mut csv::Reader<R>) -> Result<Vec<(String, f64, f64)>> {
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    if headers != ["label", "j", "phi"] {
        return Err(Error::Table(format!(
            "expected header `label,J,Phi`, found `{}`",
            headers.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |k: usize| -> Result<f64> {
            record[k].parse().map_err(|_| {
                Error::Table(format!("row {}: `{}` is not a number", n + 1, &record[k]))
            })
        };
        rows.push((record[0].to_string(), parse(1)?, parse(2)?));
    }
    Ok(rows)
}
