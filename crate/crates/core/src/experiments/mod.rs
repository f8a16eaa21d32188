//! Monte Carlo experiments: metrics, trials, sweeps, status grids, timing
//! and the small-instance oracle check.
//!
//! Every CSV starts with a `# ltac-<kind> v1` comment line and renders reals
//! with nine significant digits. Wall-clock times never enter the
//! deterministic tables; they go to separate timing files.

pub mod bench;
pub mod config;
pub mod oracle_check;
pub mod sweep;
pub mod trial;

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{count_switches, true_cost, CostBreakdown, HorizonPlan, ProblemConfig};

pub use bench::{bench_timing, linear_fit, write_bench_csv, BenchRow, BenchSpec};
pub use config::{ExperimentConfig, SolverSettings, SweepParam, SweepSpec};
pub use oracle_check::{oracle_check, random_cases, write_oracle_csv, OracleCase, OracleCheckRow, Topology, ORACLE_REL_TOL};
pub use sweep::{aggregate, run_sweep, save_sweep, write_sweep_csv, write_timing_csv, Aggregate, SweepRow, METRIC_COLUMNS};
pub use trial::{run_trial, trial_seed, KCache, TrialOutcome, TrialSetup, K_SOURCE_SAMPLES};

/// Formats with nine significant digits.
pub fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Algorithms compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    NoControl,
    Offline,
    /// Online with `J` future samples; `None` takes the solver default.
    Online(Option<usize>),
    ChannelStrength,
}

impl Algorithm {
    /// Accepts `no_control`, `offline`, `online`, `online_j<J>` and
    /// `channel_strength`.
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "no_control" => Algorithm::NoControl,
            "offline" => Algorithm::Offline,
            "online" => Algorithm::Online(None),
            "channel_strength" => Algorithm::ChannelStrength,
            _ => match s.strip_prefix("online_j").and_then(|j| j.parse().ok()) {
                Some(j) => Algorithm::Online(Some(j)),
                None => return Err(Error::Config(format!("unknown algorithm `{s}`"))),
            },
        })
    }

    pub fn label(self) -> String {
        match self {
            Algorithm::NoControl => "no_control".into(),
            Algorithm::Offline => "offline".into(),
            Algorithm::Online(None) => "online".into(),
            Algorithm::Online(Some(j)) => format!("online_j{j}"),
            Algorithm::ChannelStrength => "channel_strength".into(),
        }
    }
}

/// Per-run summary metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunMetrics {
    pub admission_ratio: f64,
    /// Switches per slice boundary, `0` for a single slice.
    pub switching_frequency: f64,
    pub cost: CostBreakdown,
    pub wall_time_s: f64,
    pub admm_iterations: usize,
    pub sum_iterations: usize,
}

impl RunMetrics {
    /// Total switches between consecutive slices.
    pub fn switches(&self, num_slices: usize) -> f64 {
        self.switching_frequency * num_slices.saturating_sub(1) as f64
    }
}

/// Admission ratio, switching frequency and exact cost of a plan. Timing
/// and iteration fields are left at zero.
pub fn compute_metrics(plan: &HorizonPlan, cfg: &ProblemConfig) -> Result<RunMetrics> {
    let cost = true_cost(plan, cfg)?;
    let admitted = plan.admitted();
    let t_len = admitted.len();
    let total = admitted.iter().map(Vec::len).sum::<usize>();
    let accepted = admitted.iter().flatten().filter(|&&a| a).count();
    let switches: usize = admitted.windows(2).map(|w| count_switches(&w[0], &w[1])).sum();
    Ok(RunMetrics {
        admission_ratio: accepted as f64 / total as f64,
        switching_frequency: if t_len < 2 { 0.0 } else { switches as f64 / (t_len - 1) as f64 },
        cost,
        ..RunMetrics::default()
    })
}

/// `T x M` grid with 1 for admissible.
pub fn emit_status_grid(plan: &HorizonPlan) -> Vec<Vec<u8>> {
    plan.admitted()
        .iter()
        .map(|row| row.iter().map(|&a| u8::from(a)).collect())
        .collect()
}

pub fn write_status_grid_csv(grid: &[Vec<u8>], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# ltac-status-grid v1")?;
    let m = grid.first().map_or(0, Vec::len);
    let header: Vec<String> = (0..m).map(|j| format!("m{j}")).collect();
    writeln!(out, "t,{}", header.join(","))?;
    for (t, row) in grid.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(u8::to_string).collect();
        writeln!(out, "{t},{}", cells.join(","))?;
    }
    Ok(())
}
