//! Per-iteration ADMM timing against the number of future samples and users.
//!
//! The simulated-parallel figure divides the serial time by the number of
//! node groups `J + 1`. Normalised columns divide each curve by its largest
//! value, so every curve peaks at 1.

use std::io::Write;
use std::time::Instant;

use super::fmt9;
use crate::admm::oracle::MAX_ORACLE_SIZE;
use crate::admm::{reference_oracle, solve_convex, AdmmOptions, CouplingGraph, OracleOptions};
use crate::channel::{place_users, sample_future, sample_horizon, ScenarioParams};
use crate::error::{Error, Result};
use crate::model::ProblemConfig;

/// Largest user count accepted by [`bench_timing`].
pub const MAX_BENCH_USERS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    /// User counts of the `M` curve, run with `fixed_samples` futures.
    pub users: Vec<usize>,
    /// Sample counts of the `J` curve, run with `fixed_users` users.
    pub samples: Vec<usize>,
    pub fixed_users: usize,
    pub fixed_samples: usize,
    pub num_antennas: usize,
    /// ADMM iterations per measurement.
    pub iterations: usize,
    /// Measurements per point; the minimum is kept.
    pub repeats: usize,
    /// Time the interior-point oracle where the instance is small enough.
    pub oracle: bool,
    pub seed: u64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            users: vec![4, 8, 16, 32, 64],
            samples: vec![2, 4, 8, 16],
            fixed_users: 6,
            fixed_samples: 2,
            num_antennas: 4,
            iterations: 200,
            repeats: 3,
            oracle: true,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    /// `"J"` or `"M"`.
    pub axis: &'static str,
    pub num_users: usize,
    pub num_samples: usize,
    /// Serial seconds per ADMM iteration.
    pub serial: f64,
    /// `serial / (J + 1)`.
    pub parallel: f64,
    /// Seconds per oracle solve, `None` when skipped.
    pub oracle: Option<f64>,
}

fn star(cfg: &ProblemConfig, users: usize, samples: usize, seed: u64) -> Result<CouplingGraph> {
    let cfg = ProblemConfig {
        num_users: users,
        num_slices: 1,
        ..cfg.clone()
    };
    let scenario = place_users(&ScenarioParams::default(), users, seed)?;
    let ch = sample_horizon(&scenario, cfg.num_antennas, 1, seed);
    let futures = sample_future(&ch.variances, cfg.num_antennas, samples, seed);
    let previous = Some(vec![true; users]);
    Ok(CouplingGraph::online_star(&cfg, ch.h[0].clone(), futures, previous, cfg.switch_weight))
}

fn measure(cfg: &ProblemConfig, spec: &BenchSpec, axis: &'static str, users: usize, samples: usize) -> Result<BenchRow> {
    let graph = star(cfg, users, samples, spec.seed)?;
    let reference = vec![vec![0.0; users]; samples + 1];
    let opts = AdmmOptions {
        tol: 0.0,
        max_iter: spec.iterations,
        residual_balancing: false,
        ..AdmmOptions::from_config(cfg)
    };
    let mut serial = f64::INFINITY;
    for _ in 0..spec.repeats.max(1) {
        let start = Instant::now();
        let sol = solve_convex(&graph, &reference, opts)?;
        serial = serial.min(start.elapsed().as_secs_f64() / sol.iterations.max(1) as f64);
    }
    let oracle = if spec.oracle && graph.num_nodes() * users * cfg.num_antennas <= MAX_ORACLE_SIZE {
        let start = Instant::now();
        reference_oracle(&graph, &reference, OracleOptions::default())?;
        Some(start.elapsed().as_secs_f64())
    } else {
        None
    };
    Ok(BenchRow {
        axis,
        num_users: users,
        num_samples: samples,
        serial,
        parallel: serial / (samples + 1) as f64,
        oracle,
    })
}

/// Times the `J` curve, then the `M` curve.
pub fn bench_timing(spec: &BenchSpec, cfg: &ProblemConfig) -> Result<Vec<BenchRow>> {
    if spec.users.iter().any(|&m| m == 0 || m > MAX_BENCH_USERS) || spec.fixed_users == 0 {
        return Err(Error::InvalidArgument(format!("user counts must lie in 1..={MAX_BENCH_USERS}")));
    }
    let cfg = ProblemConfig {
        num_antennas: spec.num_antennas,
        ..cfg.clone()
    };
    let mut rows = Vec::new();
    for &j in &spec.samples {
        rows.push(measure(&cfg, spec, "J", spec.fixed_users, j)?);
    }
    for &m in &spec.users {
        rows.push(measure(&cfg, spec, "M", m, spec.fixed_samples)?);
    }
    Ok(rows)
}

/// Raw and per-curve normalised timings.
pub fn write_bench_csv(rows: &[BenchRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# ltac-bench v1")?;
    writeln!(
        out,
        "axis,num_users,num_samples,serial_s,parallel_s,oracle_s,serial_norm,parallel_norm,oracle_norm"
    )?;
    let peak = |axis: &str, f: &dyn Fn(&BenchRow) -> Option<f64>| {
        rows.iter().filter(|r| r.axis == axis).filter_map(f).fold(0.0f64, f64::max)
    };
    let opt = |x: Option<f64>| x.map(fmt9).unwrap_or_default();
    for r in rows {
        let (ps, pp, po) = (
            peak(r.axis, &|r| Some(r.serial)),
            peak(r.axis, &|r| Some(r.parallel)),
            peak(r.axis, &|r| r.oracle),
        );
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.axis,
            r.num_users,
            r.num_samples,
            fmt9(r.serial),
            fmt9(r.parallel),
            opt(r.oracle),
            fmt9(r.serial / ps),
            fmt9(r.parallel / pp),
            opt(r.oracle.map(|o| o / po)),
        )?;
    }
    Ok(())
}

/// Least-squares line `y = a + b x` and its coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (my - slope * mx, slope, r2)
}
