//! Experiment configuration documents.
//!
//! A config is a flat JSON object:
//!
//! ```json
//! {
//!   "coeffs": [0.3, 0.4],
//!   "noise_variance": 1.0,
//!   "horizon": 5000,
//!   "horizon_grid": [1000, 10000, 100000],
//!   "epsilon": "fraction-of-lambda_n: 0.5",
//!   "directions": ["e_1", "e_2", "uniform"],
//!   "trials": 10000,
//!   "seed": 7,
//!   "output_dir": "out",
//!   "allow_vacuous": true
//! }
//! ```
//!
//! `epsilon` accepts a bare number, `"fixed: <v>"`, `"corollary"` (meaning
//! `λ_n − N^{−1/2}`) or `"fraction-of-lambda_n: <f>"`. A direction is a
//! numeric vector, `"e_i"` (1-based) or `"uniform"`; use `direction` for a
//! single one or `directions` for a list.

use std::path::{Path, PathBuf};

use arcert::ArProcess;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

const KNOWN_FIELDS: &[&str] = &[
    "coeffs",
    "noise_variance",
    "horizon",
    "horizon_grid",
    "epsilon",
    "direction",
    "directions",
    "trials",
    "seed",
    "output_dir",
    "allow_vacuous",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "kebab-case")]
pub enum EpsilonPolicy {
    Fixed(f64),
    Corollary,
    FractionOfLambdaN(f64),
}

impl EpsilonPolicy {
    pub fn parse(value: &Value) -> Result<Self, CliError> {
        let bad = |why: String| CliError::config("epsilon", why);
        match value {
            Value::Number(n) => {
                let v = n.as_f64().ok_or_else(|| bad("not a finite number".into()))?;
                Self::fixed(v)
            }
            Value::String(s) => {
                let s = s.trim();
                if s == "corollary" {
                    return Ok(EpsilonPolicy::Corollary);
                }
                let (key, rest) = s
                    .split_once(':')
                    .ok_or_else(|| bad(format!("unrecognized policy {s:?}")))?;
                let v: f64 = rest
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("cannot parse {:?} as a number", rest.trim())))?;
                match key.trim() {
                    "fixed" => Self::fixed(v),
                    "fraction-of-lambda_n" => {
                        if !(v > 0.0 && v < 1.0) {
                            return Err(bad(format!("fraction must lie in (0, 1), got {v}")));
                        }
                        Ok(EpsilonPolicy::FractionOfLambdaN(v))
                    }
                    other => Err(bad(format!("unrecognized policy {other:?}"))),
                }
            }
            _ => Err(bad("expected a number or a policy string".into())),
        }
    }

    fn fixed(v: f64) -> Result<Self, CliError> {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::config("epsilon", format!("must be positive, got {v}")));
        }
        Ok(EpsilonPolicy::Fixed(v))
    }

    /// `ε` for horizon `N` given `λ_n`. The corollary policy may return a
    /// non-positive value when `N^{−1/2} ≥ λ_n`.
    pub fn resolve(&self, lambda_n: f64, horizon: usize) -> f64 {
        match *self {
            EpsilonPolicy::Fixed(v) => v,
            EpsilonPolicy::Corollary => lambda_n - (horizon as f64).powf(-0.5),
            EpsilonPolicy::FractionOfLambdaN(f) => f * lambda_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSpec {
    Vector(Vec<f64>),
    Axis(usize),
    Uniform,
}

impl DirectionSpec {
    fn parse(value: &Value, field: &str) -> Result<Self, CliError> {
        match value {
            Value::Array(items) => {
                let v = items
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| CliError::config(field, "vector entries must be numbers")))
                    .collect::<Result<Vec<f64>, _>>()?;
                Ok(DirectionSpec::Vector(v))
            }
            Value::String(s) if s == "uniform" => Ok(DirectionSpec::Uniform),
            Value::String(s) => {
                let i = s
                    .strip_prefix("e_")
                    .and_then(|i| i.parse::<usize>().ok())
                    .filter(|&i| i >= 1)
                    .ok_or_else(|| CliError::config(field, format!("expected \"e_<i>\" or \"uniform\", got {s:?}")))?;
                Ok(DirectionSpec::Axis(i))
            }
            _ => Err(CliError::config(field, "expected a vector, \"e_<i>\" or \"uniform\"")),
        }
    }

    pub fn resolve(&self, order: usize, field: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            DirectionSpec::Vector(v) => {
                if v.len() != order {
                    return Err(CliError::config(
                        field,
                        format!("vector has length {}, the process order is {order}", v.len()),
                    ));
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(norm.is_finite() && norm > 0.0) {
                    return Err(CliError::config(field, "vector must be non-zero and finite"));
                }
                v.iter().map(|x| x / norm).collect()
            }
            DirectionSpec::Axis(i) => {
                if *i > order {
                    return Err(CliError::config(field, format!("e_{i} exceeds the process order {order}")));
                }
                (1..=order).map(|j| if j == *i { 1.0 } else { 0.0 }).collect()
            }
            DirectionSpec::Uniform => vec![1.0 / (order as f64).sqrt(); order],
        };
        Ok(v)
    }

    pub fn label(&self) -> String {
        match self {
            DirectionSpec::Vector(v) => format!("{v:?}"),
            DirectionSpec::Axis(i) => format!("e_{i}"),
            DirectionSpec::Uniform => "uniform".into(),
        }
    }
}

/// Parsed and validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub process: ArProcess,
    pub horizon: Option<usize>,
    pub horizon_grid: Option<Vec<usize>>,
    pub epsilon: Option<EpsilonPolicy>,
    /// Empty means the default set `e_1, e_n, uniform`.
    pub directions: Vec<DirectionSpec>,
    pub trials: Option<usize>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub allow_vacuous: bool,
}

fn get_usize(map: &Map<String, Value>, field: &str) -> Result<Option<usize>, CliError> {
    match map.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|x| Some(x as usize))
            .ok_or_else(|| CliError::config(field, "expected a non-negative integer")),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::config("config", format!("invalid JSON: {e}")))?;
        let map = value
            .as_object()
            .ok_or_else(|| CliError::config("config", "top level must be a JSON object"))?;
        if let Some(unknown) = map.keys().find(|k| !KNOWN_FIELDS.contains(&k.as_str())) {
            return Err(CliError::config(unknown, "unknown field"));
        }

        let coeffs = match map.get("coeffs") {
            None => return Err(CliError::config("coeffs", "missing required field")),
            Some(Value::Array(items)) if !items.is_empty() => items
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| CliError::config("coeffs", "entries must be numbers")))
                .collect::<Result<Vec<f64>, _>>()?,
            Some(_) => return Err(CliError::config("coeffs", "expected a non-empty array of numbers")),
        };
        let noise_variance = match map.get("noise_variance") {
            None => 1.0,
            Some(v) => v
                .as_f64()
                .ok_or_else(|| CliError::config("noise_variance", "expected a number"))?,
        };
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(CliError::config("noise_variance", format!("must be positive, got {noise_variance}")));
        }
        let process = ArProcess::new(coeffs, noise_variance).map_err(|e| CliError::config("coeffs", e.to_string()))?;
        let n = process.order();

        let horizon = get_usize(map, "horizon")?;
        if let Some(h) = horizon {
            if h <= n + 1 {
                return Err(CliError::config("horizon", format!("must exceed order + 1 = {}, got {h}", n + 1)));
            }
        }
        let horizon_grid = match map.get("horizon_grid") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) if !items.is_empty() => {
                let grid = items
                    .iter()
                    .map(|x| {
                        x.as_u64()
                            .map(|v| v as usize)
                            .ok_or_else(|| CliError::config("horizon_grid", "entries must be positive integers"))
                    })
                    .collect::<Result<Vec<usize>, _>>()?;
                if grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(CliError::config("horizon_grid", "must be strictly increasing"));
                }
                if grid[0] <= n + 1 {
                    return Err(CliError::config("horizon_grid", format!("every entry must exceed order + 1 = {}", n + 1)));
                }
                Some(grid)
            }
            Some(_) => return Err(CliError::config("horizon_grid", "expected a non-empty array of integers")),
        };
        let epsilon = map.get("epsilon").map(EpsilonPolicy::parse).transpose()?;

        let directions = match (map.get("direction"), map.get("directions")) {
            (Some(_), Some(_)) => {
                return Err(CliError::config("directions", "give either `direction` or `directions`, not both"))
            }
            (Some(d), None) => vec![DirectionSpec::parse(d, "direction")?],
            (None, Some(Value::Array(items))) if !items.is_empty() => items
                .iter()
                .map(|d| DirectionSpec::parse(d, "directions"))
                .collect::<Result<Vec<_>, _>>()?,
            (None, Some(_)) => return Err(CliError::config("directions", "expected a non-empty array")),
            (None, None) => Vec::new(),
        };
        for (d, field) in directions.iter().zip(std::iter::repeat(if map.contains_key("direction") {
            "direction"
        } else {
            "directions"
        })) {
            d.resolve(n, field)?;
        }

        let trials = get_usize(map, "trials")?;
        let seed = match map.get("seed") {
            None => 0,
            Some(v) => v.as_u64().ok_or_else(|| CliError::config("seed", "expected an unsigned 64-bit integer"))?,
        };
        let output_dir = match map.get("output_dir") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::config("output_dir", "expected a string")),
        };
        let allow_vacuous = match map.get("allow_vacuous") {
            None => false,
            Some(v) => v.as_bool().ok_or_else(|| CliError::config("allow_vacuous", "expected true or false"))?,
        };

        Ok(ExperimentConfig {
            process,
            horizon,
            horizon_grid,
            epsilon,
            directions,
            trials,
            seed,
            output_dir,
            allow_vacuous,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn require_horizon(&self) -> Result<usize, CliError> {
        self.horizon.ok_or_else(|| CliError::config("horizon", "missing required field"))
    }

    pub fn require_epsilon(&self) -> Result<EpsilonPolicy, CliError> {
        self.epsilon.ok_or_else(|| CliError::config("epsilon", "missing required field"))
    }

    /// Labels and unit vectors of the configured directions.
    pub fn resolved_directions(&self) -> Result<Vec<(String, Vec<f64>)>, CliError> {
        let n = self.process.order();
        let specs = if self.directions.is_empty() {
            let mut d = vec![DirectionSpec::Axis(1)];
            if n > 1 {
                d.push(DirectionSpec::Axis(n));
                d.push(DirectionSpec::Uniform);
            }
            d
        } else {
            self.directions.clone()
        };
        specs
            .iter()
            .map(|d| Ok((d.label(), d.resolve(n, "directions")?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(err: CliError) -> String {
        match err {
            CliError::Config { field, .. } => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn epsilon_policies() {
        let p = |s: &str| EpsilonPolicy::parse(&serde_json::from_str(s).unwrap());
        assert_eq!(p("0.25").unwrap(), EpsilonPolicy::Fixed(0.25));
        assert_eq!(p("\"fixed: 0.1\"").unwrap(), EpsilonPolicy::Fixed(0.1));
        assert_eq!(p("\"corollary\"").unwrap(), EpsilonPolicy::Corollary);
        assert_eq!(
            p("\"fraction-of-lambda_n: 0.5\"").unwrap(),
            EpsilonPolicy::FractionOfLambdaN(0.5)
        );
        assert!(p("\"fraction-of-lambda_n: 1.5\"").is_err());
        assert!(p("-1").is_err());
        assert!(p("\"half\"").is_err());
        assert_eq!(EpsilonPolicy::Corollary.resolve(1.0, 100), 0.9);
    }

    #[test]
    fn defaults_and_directions() {
        let cfg = ExperimentConfig::from_json(r#"{"coeffs": [0.3, 0.4], "horizon": 100}"#).unwrap();
        assert_eq!(cfg.process.noise_variance(), 1.0);
        assert_eq!(cfg.seed, 0);
        let dirs = cfg.resolved_directions().unwrap();
        assert_eq!(dirs.len(), 3);
        assert_eq!(dirs[1].1, vec![0.0, 1.0]);
        assert!((dirs[2].1[0] - 0.5f64.sqrt()).abs() < 1e-15);
        let single = ExperimentConfig::from_json(r#"{"coeffs": [0.5], "direction": [3.0]}"#).unwrap();
        assert_eq!(single.resolved_directions().unwrap(), vec![("[3.0]".to_string(), vec![1.0])]);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"noise_variance": 1.0}"#, "coeffs"),
            (r#"{"coeffs": [1.2]}"#, "coeffs"),
            (r#"{"coeffs": [0.5], "noise_variance": 0}"#, "noise_variance"),
            (r#"{"coeffs": [0.5], "horizon": 2}"#, "horizon"),
            (r#"{"coeffs": [0.5], "horizon_grid": [100, 10]}"#, "horizon_grid"),
            (r#"{"coeffs": [0.5], "epsilon": "loose"}"#, "epsilon"),
            (r#"{"coeffs": [0.5], "direction": "e_2"}"#, "direction"),
            (r#"{"coeffs": [0.5, 0.1], "directions": [[1.0]]}"#, "directions"),
            (r#"{"coeffs": [0.5], "seed": -3}"#, "seed"),
            (r#"{"coeffs": [0.5], "trails": 10}"#, "trails"),
        ];
        for (json, field) in cases {
            assert_eq!(field_of(ExperimentConfig::from_json(json).unwrap_err()), field, "{json}");
        }
        let msg = ExperimentConfig::from_json(r#"{"coeffs": [1.2]}"#).unwrap_err().to_string();
        assert!(msg.contains("Schur"), "{msg}");
    }
}
