//! Parameter sweeps over trials and algorithms.

use std::io::Write;
use std::path::Path;

use super::config::{SweepParam, SweepSpec};
use super::trial::{run_trial, trial_seed, KCache, TrialOutcome, TrialSetup};
use super::{fmt9, Algorithm, RunMetrics};
use crate::error::{Error, Result};
use crate::par::{map_range, with_workers, Exec};

/// Metric columns of the sweep table, in order.
pub const METRIC_COLUMNS: [&str; 8] = [
    "admission_ratio",
    "switching_frequency",
    "transmit_power",
    "reject_cost",
    "switch_cost",
    "total_cost",
    "admm_iterations",
    "sum_iterations",
];

pub fn metric_values(m: &RunMetrics) -> [f64; 8] {
    [
        m.admission_ratio,
        m.switching_frequency,
        m.cost.transmit_power,
        m.cost.reject_cost,
        m.cost.switch_cost,
        m.cost.total,
        m.admm_iterations as f64,
        m.sum_iterations as f64,
    ]
}

/// One (value, algorithm, trial) cell. Failures are kept with their message.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub seed: u64,
    pub outcome: std::result::Result<TrialOutcome, String>,
}

/// Applies one swept value to the setup and algorithm.
pub fn apply(param: SweepParam, value: f64, setup: &TrialSetup, algorithm: Algorithm) -> (TrialSetup, Algorithm) {
    let mut s = setup.clone();
    let mut alg = algorithm;
    match param {
        SweepParam::Gamma => s.problem.qos_target = value,
        SweepParam::Lambda1 => s.problem.reject_weight = value,
        SweepParam::Lambda2 => s.problem.switch_weight = value,
        SweepParam::Users => s.problem.num_users = value as usize,
        SweepParam::Samples => {
            if let Algorithm::Online(_) = alg {
                alg = Algorithm::Online(Some(value as usize));
            }
        }
    }
    (s, alg)
}

/// Runs every (value, algorithm, trial) combination on `workers` threads.
/// Trial `k` uses seed `trial_seed(spec.seed, k)` for every value and
/// algorithm, so comparisons are paired. Rows come back ordered by
/// (value, algorithm, trial) whatever the schedule.
pub fn run_sweep(spec: &SweepSpec, setup: &TrialSetup, workers: usize, cache: &KCache) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let setup = TrialSetup {
        master_seed: spec.seed,
        ..setup.clone()
    };
    let (nv, na, nt) = (spec.values.len(), spec.algorithms.len(), spec.trials);
    let rows = with_workers(workers, || {
        map_range(Exec::Parallel, nv * na * nt, |job| {
            let (vi, rest) = (job / (na * nt), job % (na * nt));
            let (ai, trial) = (rest / nt, rest % nt);
            let value = spec.values[vi];
            let (s, alg) = apply(spec.param, value, &setup, spec.algorithms[ai]);
            let seed = trial_seed(spec.seed, trial);
            SweepRow {
                value,
                algorithm: alg,
                trial,
                seed,
                outcome: run_trial(alg, seed, &s, cache).map_err(|e| e.to_string()),
            }
        })
    });
    Ok(rows)
}

/// Mean and standard error of each metric over the successful trials of one
/// (value, algorithm) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub value: f64,
    pub algorithm: Algorithm,
    pub count: usize,
    pub failures: usize,
    pub mean: [f64; 8],
    pub stderr: [f64; 8],
}

impl Aggregate {
    pub fn mean_of(&self, column: &str) -> f64 {
        let i = METRIC_COLUMNS.iter().position(|c| *c == column).expect("known metric column");
        self.mean[i]
    }
}

/// Aggregates in first-appearance order of (value, algorithm).
pub fn aggregate(rows: &[SweepRow]) -> Vec<Aggregate> {
    let mut keys: Vec<(f64, Algorithm)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(v, a)| v.to_bits() == r.value.to_bits() && a == r.algorithm) {
            keys.push((r.value, r.algorithm));
        }
    }
    keys.into_iter()
        .map(|(value, algorithm)| {
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.value.to_bits() == value.to_bits() && r.algorithm == algorithm)
                .collect();
            let ok: Vec<[f64; 8]> = cell
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok().map(|o| metric_values(&o.metrics)))
                .collect();
            let n = ok.len() as f64;
            let mut mean = [f64::NAN; 8];
            let mut stderr = [f64::NAN; 8];
            for i in 0..8 {
                if ok.is_empty() {
                    break;
                }
                let mu = ok.iter().map(|x| x[i]).sum::<f64>() / n;
                mean[i] = mu;
                stderr[i] = if ok.len() < 2 {
                    0.0
                } else {
                    let var = ok.iter().map(|x| (x[i] - mu).powi(2)).sum::<f64>() / (n - 1.0);
                    (var / n).sqrt()
                };
            }
            Aggregate {
                value,
                algorithm,
                count: ok.len(),
                failures: cell.len() - ok.len(),
                mean,
                stderr,
            }
        })
        .collect()
}

/// Per-trial rows, then `mean` and `stderr` rows per (value, algorithm).
/// Failed trials carry `error` in the status column and empty metrics.
pub fn write_sweep_csv(param: SweepParam, rows: &[SweepRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# ltac-sweep v1")?;
    writeln!(out, "param,value,algorithm,trial,seed,status,{}", METRIC_COLUMNS.join(","))?;
    let p = param.name();
    for r in rows {
        let (status, cols) = match &r.outcome {
            Ok(o) => ("ok", metric_values(&o.metrics).map(fmt9).join(",")),
            Err(_) => ("error", [""; 8].join(",")),
        };
        writeln!(out, "{p},{},{},{},{},{status},{cols}", fmt9(r.value), r.algorithm.label(), r.trial, r.seed)?;
    }
    for a in aggregate(rows) {
        for (kind, vals) in [("mean", a.mean), ("stderr", a.stderr)] {
            writeln!(
                out,
                "{p},{},{},{kind},,n={},{}",
                fmt9(a.value),
                a.algorithm.label(),
                a.count,
                vals.map(fmt9).join(",")
            )?;
        }
    }
    Ok(())
}

/// Wall-clock seconds per trial; not deterministic.
pub fn write_timing_csv(param: SweepParam, rows: &[SweepRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# ltac-sweep-timing v1")?;
    writeln!(out, "param,value,algorithm,trial,wall_time_s")?;
    for r in rows {
        if let Ok(o) = &r.outcome {
            writeln!(
                out,
                "{},{},{},{},{}",
                param.name(),
                fmt9(r.value),
                r.algorithm.label(),
                r.trial,
                fmt9(o.metrics.wall_time_s)
            )?;
        }
    }
    Ok(())
}

/// Writes `sweep.csv` and one `errors.txt` line per failed trial into `dir`.
pub fn save_sweep(param: SweepParam, rows: &[SweepRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<()> {
        let path = dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| Error::io(&path, e))?;
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))
    };
    write("sweep.csv", &|b| write_sweep_csv(param, rows, b))?;
    let errors: Vec<String> = rows
        .iter()
        .filter_map(|r| {
            r.outcome
                .as_ref()
                .err()
                .map(|e| format!("{}={} {} trial {}: {e}", param.name(), r.value, r.algorithm.label(), r.trial))
        })
        .collect();
    if !errors.is_empty() {
        write("errors.txt", &|b| writeln!(b, "{}", errors.join("\n")))?;
    }
    Ok(())
}
