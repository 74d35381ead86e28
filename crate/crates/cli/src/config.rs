//! JSON problem configuration.

use std::path::{Path, PathBuf};

use levelset_core::{
    bank, parse_expression, ConstrainedProblem, DomainSpec, ExtReal, KnownBounds, Objective, ObjectivePair,
    ParameterInterval, Smoothness, SolverOptions,
};
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: Option<String>,
    pub domain: Option<DomainConfig>,
    pub objectives: Option<ObjectiveConfig>,
    pub interval: Option<IntervalConfig>,
    #[serde(default)]
    pub bounds: KnownBounds,
    /// Solver tunables plus an optional `seed`; checked separately so that
    /// key errors point into this object.
    #[serde(default)]
    pub solver: Option<Value>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Euclidean {
        dimension: usize,
        #[serde(default)]
        bounds: Option<Vec<(f64, f64)>>,
    },
    /// CSV with header `label,J,Phi`; relative paths resolve against the
    /// config file's directory.
    Finite { table: PathBuf },
    Grid { nodes: usize },
}

#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ObjectiveConfig {
    Builtin { builtin: String },
    Expressions { j: String, phi: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalConfig {
    pub a: ExtReal,
    pub b: ExtReal,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedOnly {
    seed: Option<u64>,
}

#[derive(Debug)]
pub struct Loaded {
    pub problem: ConstrainedProblem,
    pub options: SolverOptions,
    pub seed: Option<u64>,
}

fn config_error(key: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.into(),
        message: message.into(),
    }
}

/// `--problem` is a bank name or a path to a JSON config.
pub fn load(spec: &str) -> Result<Loaded, CliError> {
    if let Some(problem) = bank::by_name(spec) {
        return Ok(Loaded {
            problem,
            options: SolverOptions::default(),
            seed: None,
        });
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error("", format!("`{spec}` is neither a built-in problem nor a readable file: {e}")))?;
    from_str(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn from_str(text: &str, base: &Path) -> Result<Loaded, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ProblemConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| config_error(e.path().to_string(), e.inner().to_string()))?;
    let (options, seed) = solver_section(config.solver.as_ref())?;
    let problem = build(&config, base)?;
    Ok(Loaded { problem, options, seed })
}

fn solver_section(value: Option<&Value>) -> Result<(SolverOptions, Option<u64>), CliError> {
    let Some(value) = value else {
        return Ok((SolverOptions::default(), None));
    };
    let mut object = value
        .as_object()
        .cloned()
        .ok_or_else(|| config_error("solver", "expected an object"))?;
    let seed_value = object.remove("seed");
    let seed: SeedOnly = match seed_value {
        Some(v) => {
            let wrapped = serde_json::json!({ "seed": v });
            serde_path_to_error::deserialize(wrapped)
                .map_err(|e| config_error(format!("solver.{}", e.path()), e.inner().to_string()))?
        }
        None => SeedOnly::default(),
    };
    let options: SolverOptions = serde_path_to_error::deserialize(Value::Object(object))
        .map_err(|e| config_error(format!("solver.{}", e.path()), e.inner().to_string()))?;
    Ok((options, seed.seed))
}

fn build(config: &ProblemConfig, base: &Path) -> Result<ConstrainedProblem, CliError> {
    let name = config.name.clone().unwrap_or_else(|| "config".into());
    let interval = match &config.interval {
        Some(i) => Some(ParameterInterval::new(i.a, i.b).map_err(|e| config_error("interval", e.to_string()))?),
        None => None,
    };

    let problem = match (&config.objectives, &config.domain) {
        (Some(ObjectiveConfig::Builtin { builtin }), domain) => {
            let mut problem = match (builtin.as_str(), domain) {
                ("grid_variational", Some(DomainConfig::Grid { nodes })) => bank::grid_variational(*nodes),
                (_, None) => bank::by_name(builtin)
                    .ok_or_else(|| config_error("objectives.builtin", format!("unknown built-in `{builtin}`")))?,
                _ => {
                    return Err(config_error(
                        "domain",
                        "a domain may accompany a built-in only as `grid` with `grid_variational`",
                    ))
                }
            };
            if let Some(i) = interval {
                problem = problem.with_interval(i);
            }
            return Ok(problem);
        }
        (None, Some(DomainConfig::Finite { table })) => {
            let path = base.join(table);
            ConstrainedProblem::from_csv(&name, &path, interval.unwrap_or_else(ParameterInterval::whole_line))
                .map_err(|e| config_error("domain.table", e.to_string()))?
        }
        (Some(ObjectiveConfig::Expressions { .. }), Some(DomainConfig::Finite { .. })) => {
            return Err(config_error("objectives", "finite domains take their objectives from the table"))
        }
        (Some(ObjectiveConfig::Expressions { j, phi }), Some(domain)) => {
            let spec = match domain {
                DomainConfig::Euclidean { dimension, bounds } => DomainSpec::EuclideanSpace {
                    dimension: *dimension,
                    bounds: bounds.clone(),
                },
                DomainConfig::Grid { nodes } => DomainSpec::GridFunctionSpace { nodes: *nodes },
                DomainConfig::Finite { .. } => unreachable!("handled above"),
            };
            let dim = spec.dimension().unwrap_or(0);
            let parse = |key: &str, text: &str| -> Result<Objective, CliError> {
                let expr = parse_expression(text).map_err(|error| CliError::Keyed {
                    key: key.to_string(),
                    error,
                })?;
                if expr.max_variable() > dim {
                    return Err(config_error(
                        key,
                        format!("uses x{} but the domain has dimension {dim}", expr.max_variable()),
                    ));
                }
                Ok(Objective::expression(expr))
            };
            let pair = ObjectivePair {
                j: parse("objectives.j", j)?,
                phi: parse("objectives.phi", phi)?,
                smoothness: Smoothness::Differentiable,
                bounds: KnownBounds::default(),
            };
            ConstrainedProblem::new(
                name,
                spec,
                pair,
                interval.ok_or_else(|| config_error("interval", "required for expression problems"))?,
            )
            .map_err(|e| config_error("", e.to_string()))?
        }
        (None, _) => return Err(config_error("objectives", "missing (required unless the domain is a table)")),
        (Some(ObjectiveConfig::Expressions { .. }), None) => {
            return Err(config_error("domain", "required for expression objectives"))
        }
    };
    let bounds = config.bounds;
    Ok(if bounds == KnownBounds::default() {
        problem
    } else {
        problem.with_known_bounds(bounds)
    })
}
