//! ADMM against the interior-point oracle on random small instances.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fmt9;
use crate::admm::{reference_oracle, solve_convex, surrogate_objective, AdmmOptions, CouplingGraph, OracleOptions};
use crate::channel::{place_users, sample_future, sample_horizon, ScenarioParams};
use crate::error::Result;
use crate::model::ProblemConfig;

/// Relative objective tolerance of the check.
pub const ORACLE_REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Online star with `J` future samples.
    Star(usize),
    /// Offline chain over `T` slices.
    Chain(usize),
}

/// One random instance: sizes, weights, reference slacks and channel seed.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub topology: Topology,
    pub cfg: ProblemConfig,
    pub reference: Vec<Vec<f64>>,
    pub anchor: Option<Vec<bool>>,
    pub seed: u64,
}

impl OracleCase {
    pub fn graph(&self) -> Result<CouplingGraph> {
        let cfg = &self.cfg;
        let scenario = place_users(&ScenarioParams::default(), cfg.num_users, self.seed)?;
        Ok(match self.topology {
            Topology::Star(j) => {
                let ch = sample_horizon(&scenario, cfg.num_antennas, 1, self.seed);
                let fut = sample_future(&ch.variances, cfg.num_antennas, j, self.seed);
                let w = if self.anchor.is_some() { cfg.switch_weight } else { 0.0 };
                CouplingGraph::online_star(cfg, ch.h[0].clone(), fut, self.anchor.clone(), w)
            }
            Topology::Chain(t) => {
                let ch = sample_horizon(&scenario, cfg.num_antennas, t, self.seed);
                CouplingGraph::offline_chain(cfg, &ch.h, self.anchor.clone())
            }
        })
    }
}

/// `per_topology` stars (M <= 4, N <= 3, J <= 3) followed by as many chains
/// (M <= 4, N <= 3, T <= 3), drawn from `seed`.
pub fn random_cases(per_topology: usize, seed: u64) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(2 * per_topology);
    for k in 0..2 * per_topology {
        let users = rng.random_range(1..=4);
        let antennas = rng.random_range(1..=3);
        let size = rng.random_range(1..=3);
        let topology = if k < per_topology { Topology::Star(size) } else { Topology::Chain(size) };
        let nodes = match topology {
            Topology::Star(j) => j + 1,
            Topology::Chain(t) => t,
        };
        let cfg = ProblemConfig {
            num_users: users,
            num_antennas: antennas,
            num_slices: nodes,
            qos_target: rng.random_range(0.5..4.0),
            reject_weight: rng.random_range(5.0..80.0),
            switch_weight: rng.random_range(0.0..40.0),
            ..ProblemConfig::desk()
        };
        let reference = (0..nodes)
            .map(|_| {
                (0..users)
                    .map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.3) })
                    .collect()
            })
            .collect();
        let anchor = rng.random_bool(0.5).then(|| (0..users).map(|_| rng.random_bool(0.5)).collect());
        cases.push(OracleCase {
            topology,
            cfg,
            reference,
            anchor,
            seed: rng.random(),
        });
    }
    cases
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheckRow {
    pub topology: Topology,
    pub admm_objective: f64,
    pub oracle_objective: f64,
    /// `|admm - oracle| / max(|oracle|, 1)`.
    pub rel_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub admm_s: f64,
    pub oracle_s: f64,
}

impl OracleCheckRow {
    pub fn pass(&self) -> bool {
        self.rel_error <= ORACLE_REL_TOL
    }
}

/// ADMM settings of the check: tighter than the SUM defaults.
pub fn check_options(cfg: &ProblemConfig) -> AdmmOptions {
    AdmmOptions {
        tol: 1e-6,
        max_iter: 50_000,
        ..AdmmOptions::from_config(cfg)
    }
}

pub fn oracle_check(cases: &[OracleCase]) -> Result<Vec<OracleCheckRow>> {
    cases
        .iter()
        .map(|case| {
            let graph = case.graph()?;
            let start = Instant::now();
            let admm = solve_convex(&graph, &case.reference, check_options(&case.cfg))?;
            let admm_s = start.elapsed().as_secs_f64();
            let admm_objective = surrogate_objective(&graph, &case.reference, &admm.v, &admm.w);
            let start = Instant::now();
            let oracle = reference_oracle(&graph, &case.reference, OracleOptions::default())?;
            let oracle_s = start.elapsed().as_secs_f64();
            Ok(OracleCheckRow {
                topology: case.topology,
                admm_objective,
                oracle_objective: oracle.objective,
                rel_error: (admm_objective - oracle.objective).abs() / oracle.objective.abs().max(1.0),
                iterations: admm.iterations,
                converged: admm.converged,
                admm_s,
                oracle_s,
            })
        })
        .collect()
}

pub fn write_oracle_csv(rows: &[OracleCheckRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# ltac-oracle-check v1")?;
    writeln!(out, "case,topology,size,admm_objective,oracle_objective,rel_error,iterations,converged,pass")?;
    for (k, r) in rows.iter().enumerate() {
        let (name, size) = match r.topology {
            Topology::Star(j) => ("star", j),
            Topology::Chain(t) => ("chain", t),
        };
        writeln!(
            out,
            "{k},{name},{size},{},{},{},{},{},{}",
            fmt9(r.admm_objective),
            fmt9(r.oracle_objective),
            fmt9(r.rel_error),
            r.iterations,
            u8::from(r.converged),
            u8::from(r.pass())
        )?;
    }
    Ok(())
}
