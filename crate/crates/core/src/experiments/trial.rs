//! One Monte Carlo trial: scenario, channels, one algorithm, metrics.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use super::config::SolverSettings;
use super::{compute_metrics, Algorithm, RunMetrics};
use crate::baselines::{channel_strength_plan, solve_no_control};
use crate::channel::{place_users, sample_horizon, ChannelSet, ScenarioParams};
use crate::error::{Error, Result};
use crate::model::{HorizonPlan, ProblemConfig};
use crate::sum::{solve_offline, solve_online, SumRun, SumStep};

/// Future samples of the online run that supplies `K(t)` to the
/// channel-strength baseline.
pub const K_SOURCE_SAMPLES: usize = 9;

/// Everything a trial needs besides its seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSetup {
    pub problem: ProblemConfig,
    pub scenario: ScenarioParams,
    pub solver: SolverSettings,
    /// Placement seed when `scenario.redraw_positions` is off.
    pub master_seed: u64,
}

impl TrialSetup {
    pub fn new(problem: ProblemConfig, scenario: ScenarioParams, solver: SolverSettings, master_seed: u64) -> Self {
        Self {
            problem,
            scenario,
            solver,
            master_seed,
        }
    }

    /// Scenario and channels of the trial with seed `seed`.
    pub fn channels(&self, seed: u64) -> Result<ChannelSet> {
        let p = &self.problem;
        let placement = if self.scenario.redraw_positions { seed } else { self.master_seed };
        let scenario = place_users(&self.scenario, p.num_users, placement)?;
        Ok(sample_horizon(&scenario, p.num_antennas, p.num_slices, seed))
    }

    /// Stable 64-bit FNV-1a hash of the serialised setup.
    fn fingerprint(&self) -> u64 {
        let text = toml::to_string(self).unwrap_or_default();
        text.bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
    }
}

/// Seed of trial `trial` under master seed `master` (SplitMix64 finaliser).
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut z = master
        .wrapping_add((trial as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-slice admitted counts `K(t)` of online runs, keyed by setup and seed.
/// Lives in memory and, given a directory, on disk as one CSV per key.
#[derive(Debug, Default)]
pub struct KCache {
    dir: Option<PathBuf>,
    mem: Mutex<HashMap<(u64, u64), Vec<usize>>>,
}

impl KCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: PathBuf) -> Self {
        Self {
            dir: Some(dir),
            mem: Mutex::default(),
        }
    }

    fn path(&self, key: (u64, u64)) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("k_{:016x}_{:016x}.csv", key.0, key.1)))
    }

    fn get(&self, key: (u64, u64)) -> Option<Vec<usize>> {
        if let Some(k) = self.mem.lock().ok()?.get(&key) {
            return Some(k.clone());
        }
        let text = std::fs::read_to_string(self.path(key)?).ok()?;
        let k: Vec<usize> = text.lines().skip(1).map(|l| l.trim().parse().ok()).collect::<Option<_>>()?;
        Some(k)
    }

    fn put(&self, key: (u64, u64), counts: &[usize]) -> Result<()> {
        if let Ok(mut mem) = self.mem.lock() {
            mem.insert(key, counts.to_vec());
        }
        if let Some(path) = self.path(key) {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let mut text = String::from("# ltac-admitted-counts v1\n");
            for k in counts {
                text.push_str(&format!("{k}\n"));
            }
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub metrics: RunMetrics,
    /// Repaired plan.
    pub plan: HorizonPlan,
    /// Step traces of every SUM run the algorithm performed.
    pub sum_traces: Vec<Vec<SumStep>>,
}

fn admitted_counts(plan: &HorizonPlan) -> Vec<usize> {
    plan.admitted().iter().map(|r| r.iter().filter(|&&a| a).count()).collect()
}

/// Runs `algorithm` on the channels of `seed`. The channel-strength baseline
/// takes `K(t)` from a same-seed online run with [`K_SOURCE_SAMPLES`]
/// samples, computed once per cache.
pub fn run_trial(algorithm: Algorithm, seed: u64, setup: &TrialSetup, cache: &KCache) -> Result<TrialOutcome> {
    let cfg = &setup.problem;
    cfg.validate()?;
    let channels = setup.channels(seed)?;
    let opts = setup.solver.admm_options(cfg);
    let start = Instant::now();
    let runs: Vec<SumRun>;
    let plan = match algorithm {
        Algorithm::NoControl => {
            let r = solve_no_control(&channels.h, cfg, opts)?;
            runs = r.runs;
            r.plan
        }
        Algorithm::Offline => {
            let r = solve_offline(&channels.h, cfg, opts)?;
            runs = vec![r.run];
            r.plan
        }
        Algorithm::Online(j) => {
            let j = j.unwrap_or(setup.solver.num_samples);
            let r = solve_online(&channels.h, &channels.variances, cfg, j, seed, opts)?;
            if j == K_SOURCE_SAMPLES {
                cache.put((setup.fingerprint(), seed), &admitted_counts(&r.plan))?;
            }
            runs = r.steps;
            r.plan
        }
        Algorithm::ChannelStrength => {
            let key = (setup.fingerprint(), seed);
            let counts = match cache.get(key) {
                Some(k) => k,
                None => {
                    let r = solve_online(&channels.h, &channels.variances, cfg, K_SOURCE_SAMPLES, seed, opts)?;
                    let k = admitted_counts(&r.plan);
                    cache.put(key, &k)?;
                    k
                }
            };
            runs = Vec::new();
            channel_strength_plan(&channels.h, cfg, &counts)?.plan
        }
    };
    let wall = start.elapsed().as_secs_f64();
    let mut metrics = compute_metrics(&plan, cfg)?;
    metrics.wall_time_s = wall;
    metrics.admm_iterations = runs.iter().map(SumRun::admm_iterations).sum();
    metrics.sum_iterations = runs.iter().map(|r| r.trace.len()).sum();
    Ok(TrialOutcome {
        algorithm,
        seed,
        metrics,
        plan,
        sum_traces: runs.into_iter().map(|r| r.trace).collect(),
    })
}
