//! Experiment configuration files.
//!
//! A TOML document with four optional tables:
//!
//! ```toml
//! [scenario]           # overrides of ScenarioParams
//! shadow_std_db = 8.0
//!
//! [problem]
//! profile = "desk"     # required when the table is present: "desk" or "paper"
//! qos_target = "3 dB"  # any ProblemConfig field; powers accept "<x> dB"
//!
//! [solver]             # see SolverSettings
//! num_samples = 9
//!
//! [sweep]              # every key required
//! parameter = "gamma"  # gamma | lambda1 | lambda2 | M | J
//! values = [0.5, 1, 2, 4]
//! trials = 30
//! seed = 1
//! algorithms = ["no_control", "offline", "online_j3", "online_j9", "channel_strength"]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::Algorithm;
use crate::admm::AdmmOptions;
use crate::channel::ScenarioParams;
use crate::error::{Error, Result};
use crate::model::ProblemConfig;
use crate::par::Exec;

/// Keys whose values may be written in decibels.
const DB_KEYS: [&str; 3] = ["qos_target", "power_budget", "noise_power"];

/// Solver knobs that are not part of the problem definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Future samples `J` used by `online` without an explicit `_jN` suffix.
    pub num_samples: usize,
    pub relaxation: f64,
    pub precondition: bool,
    pub row_gain: f64,
    /// Run the ADMM node updates of one solve on the worker pool.
    pub parallel_nodes: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let base = AdmmOptions::default();
        Self {
            num_samples: 9,
            relaxation: base.relaxation,
            precondition: base.precondition,
            row_gain: base.row_gain,
            parallel_nodes: false,
        }
    }
}

impl SolverSettings {
    pub fn admm_options(&self, cfg: &ProblemConfig) -> AdmmOptions {
        AdmmOptions {
            relaxation: self.relaxation,
            precondition: self.precondition,
            row_gain: self.row_gain,
            exec: if self.parallel_nodes { Exec::Parallel } else { Exec::Sequential },
            ..AdmmOptions::from_config(cfg)
        }
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Gamma,
    Lambda1,
    Lambda2,
    Users,
    Samples,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::Lambda1 => "lambda1",
            SweepParam::Lambda2 => "lambda2",
            SweepParam::Users => "M",
            SweepParam::Samples => "J",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "gamma" => SweepParam::Gamma,
            "lambda1" => SweepParam::Lambda1,
            "lambda2" => SweepParam::Lambda2,
            "M" => SweepParam::Users,
            "J" => SweepParam::Samples,
            _ => {
                return Err(Error::Config(format!(
                    "unknown sweep parameter `{s}` (expected gamma, lambda1, lambda2, M or J)"
                )))
            }
        })
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepParam::Users | SweepParam::Samples)
    }
}

/// Swept parameter, values, trial count, master seed and algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("sweep.trials must be >= 1".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Config("sweep.values must be nonempty".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("sweep.algorithms must be nonempty".into()));
        }
        if self.param.is_integer() && self.values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::Config(format!("sweep over {} needs nonnegative integers", self.param.name())));
        }
        if self.param == SweepParam::Users && self.values.contains(&0.0) {
            return Err(Error::Config("sweep over M needs values >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioParams,
    pub problem: ProblemConfig,
    pub solver: SolverSettings,
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut root: Table = text.parse().map_err(|e| Error::Config(format!("invalid TOML: {e}")))?;
        for key in root.keys() {
            if !["scenario", "problem", "solver", "sweep"].contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown table `{key}`")));
            }
        }
        let scenario = match root.remove("scenario") {
            Some(v) => overlay(ScenarioParams::default(), table(v, "scenario")?, "scenario")?,
            None => ScenarioParams::default(),
        };
        let problem = match root.remove("problem") {
            Some(v) => parse_problem(table(v, "problem")?)?,
            None => ProblemConfig::desk(),
        };
        let solver = match root.remove("solver") {
            Some(v) => overlay(SolverSettings::default(), table(v, "solver")?, "solver")?,
            None => SolverSettings::default(),
        };
        let sweep = root.remove("sweep").map(|v| parse_sweep(table(v, "sweep")?)).transpose()?;
        let cfg = Self {
            scenario,
            problem,
            solver,
            sweep,
        };
        cfg.problem.validate()?;
        if let Some(s) = &cfg.sweep {
            s.validate()?;
        }
        Ok(cfg)
    }

    /// The sweep block, or a config error naming it.
    pub fn sweep_spec(&self) -> Result<&SweepSpec> {
        self.sweep.as_ref().ok_or_else(|| Error::Config("missing table `sweep`".into()))
    }
}

fn table(v: Value, name: &str) -> Result<Table> {
    match v {
        Value::Table(t) => Ok(t),
        _ => Err(Error::Config(format!("`{name}` must be a table"))),
    }
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing key `{key}`"))
}

/// Parses `"<x> dB"` into a linear ratio.
pub fn parse_level(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => {
            let db = s
                .trim()
                .strip_suffix("dB")
                .and_then(|x| x.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("`{key}`: expected a number or \"<x> dB\", got \"{s}\"")))?;
            Ok(10f64.powf(db / 10.0))
        }
        _ => Err(Error::Config(format!("`{key}`: expected a number"))),
    }
}

/// Replaces the keys of `base` by those in `user`, rejecting unknown keys.
fn overlay<T: Serialize + for<'de> Deserialize<'de>>(base: T, user: Table, name: &str) -> Result<T> {
    let mut merged = Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
    for (k, v) in user {
        if !merged.contains_key(&k) && !is_optional_field(&k) {
            return Err(Error::Config(format!("unknown key `{name}.{k}`")));
        }
        merged.insert(k, v);
    }
    merged
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(format!("`{name}`: {}", e.message())))
}

/// Fields serialised as absent when `None`.
fn is_optional_field(k: &str) -> bool {
    k == "initial_status"
}

fn parse_problem(mut t: Table) -> Result<ProblemConfig> {
    let profile = t.remove("profile").ok_or_else(|| missing("problem.profile"))?;
    let base = match profile.as_str() {
        Some("desk") => ProblemConfig::desk(),
        Some("paper") => ProblemConfig::paper(),
        _ => return Err(Error::Config(format!("`problem.profile` must be \"desk\" or \"paper\", got {profile}"))),
    };
    for key in DB_KEYS {
        if let Some(v) = t.get(key) {
            let x = parse_level(v, &format!("problem.{key}"))?;
            t.insert(key.to_string(), Value::Float(x));
        }
    }
    overlay(base, t, "problem")
}

fn parse_sweep(mut t: Table) -> Result<SweepSpec> {
    let mut take = |k: &str| t.remove(k).ok_or_else(|| missing(&format!("sweep.{k}")));
    let param = take("parameter")?;
    let values = take("values")?;
    let trials = take("trials")?;
    let seed = take("seed")?;
    let algorithms = take("algorithms")?;
    if let Some(k) = t.keys().next() {
        return Err(Error::Config(format!("unknown key `sweep.{k}`")));
    }
    let param = SweepParam::parse(param.as_str().ok_or_else(|| Error::Config("`sweep.parameter` must be a string".into()))?)?;
    let values = values
        .as_array()
        .ok_or_else(|| Error::Config("`sweep.values` must be an array".into()))?
        .iter()
        .map(|v| parse_level(v, "sweep.values"))
        .collect::<Result<Vec<f64>>>()?;
    let nonneg = |v: &Value, k: &str| {
        v.as_integer()
            .filter(|&i| i >= 0)
            .ok_or_else(|| Error::Config(format!("`sweep.{k}` must be a nonnegative integer")))
    };
    let trials = nonneg(&trials, "trials")? as usize;
    let seed = nonneg(&seed, "seed")? as u64;
    let algorithms = algorithms
        .as_array()
        .ok_or_else(|| Error::Config("`sweep.algorithms` must be an array".into()))?
        .iter()
        .map(|v| {
            v.as_str()
                .ok_or_else(|| Error::Config("`sweep.algorithms` entries must be strings".into()))
                .and_then(Algorithm::parse)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepSpec {
        param,
        values,
        trials,
        seed,
        algorithms,
    })
}
