//! Command-line front end of the admission-control experiments.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 numerical
//! failure (including a failed oracle check), 1 I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ltac::experiments::bench::{bench_timing, write_bench_csv, BenchSpec};
use ltac::experiments::oracle_check::{oracle_check, random_cases, write_oracle_csv};
use ltac::experiments::sweep::{run_sweep, save_sweep, write_timing_csv};
use ltac::experiments::trial::{run_trial, KCache, TrialOutcome, TrialSetup};
use ltac::experiments::{emit_status_grid, fmt9, write_status_grid_csv, Algorithm, ExperimentConfig};
use ltac::model::ProblemConfig;
use ltac::par::{map_range, with_workers, Exec};
use ltac::sum::{write_plan_csv, write_sum_trace_csv};
use ltac::{Error, Result};

/// Seed of the shipped oracle-check instances.
const ORACLE_FIXTURE_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "ltac", version, about = "Long-term admission control and beamforming experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML experiment configuration (scenario, problem, solver, sweep tables).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the trial, or master seed of a sweep.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Also write SUM step traces and wall-clock timing files.
    #[arg(long, global = true)]
    trace: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial of each algorithm: plans, metrics and status grids.
    Simulate {
        /// Algorithms to run (default: no_control, offline, online, channel_strength).
        #[arg(long = "algorithm")]
        algorithms: Vec<String>,
    },
    /// Run the sweep described by the `sweep` table of the config.
    Sweep,
    /// Status grids of offline, online (J=9) and no-control at the paper profile.
    Grid,
    /// Per-iteration ADMM timing against J and M.
    Bench {
        /// Comma-separated user counts for the M axis.
        #[arg(long, value_delimiter = ',')]
        users: Option<Vec<usize>>,
        /// Comma-separated sample counts for the J axis.
        #[arg(long, value_delimiter = ',')]
        samples: Option<Vec<usize>>,
        /// Fixed ADMM iterations per timed solve.
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        /// Skip the interior-point oracle timings.
        #[arg(long)]
        no_oracle: bool,
    },
    /// Compare ADMM with the interior-point oracle on small random instances.
    OracleCheck {
        /// Instances per topology.
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::Io { .. } => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.global.workers;
    match with_workers(workers, || run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ltac: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load(g: &Global, default_problem: ProblemConfig) -> Result<ExperimentConfig> {
    match &g.config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig {
            problem: default_problem,
            ..ExperimentConfig::default()
        }),
    }
}

fn save(dir: &Path, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Error::io(&path, e))?;
    std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))
}

fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate { algorithms } => {
            let cfg = load(g, ProblemConfig::desk())?;
            let algs = if algorithms.is_empty() {
                vec![
                    Algorithm::NoControl,
                    Algorithm::Offline,
                    Algorithm::Online(None),
                    Algorithm::ChannelStrength,
                ]
            } else {
                algorithms.iter().map(|s| Algorithm::parse(s)).collect::<Result<_>>()?
            };
            simulate(g, &cfg, &algs, g.seed.unwrap_or(1), &g.out)
        }
        Command::Sweep => {
            let cfg = match &g.config {
                Some(p) => ExperimentConfig::load(p)?,
                None => return Err(Error::Config("sweep needs --config with a `sweep` table".into())),
            };
            let mut spec = cfg.sweep_spec()?.clone();
            if let Some(s) = g.seed {
                spec.seed = s;
            }
            let setup = TrialSetup::new(cfg.problem.clone(), cfg.scenario.clone(), cfg.solver.clone(), spec.seed);
            let cache = KCache::on_disk(g.out.join("kcache"));
            let rows = run_sweep(&spec, &setup, g.workers, &cache)?;
            save_sweep(spec.param, &rows, &g.out)?;
            if g.trace {
                save(&g.out, "sweep_timing.csv", |b| write_timing_csv(spec.param, &rows, b))?;
            }
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            eprintln!("wrote {} rows to {} ({failed} failed)", rows.len(), g.out.join("sweep.csv").display());
            Ok(())
        }
        Command::Grid => {
            let cfg = load(g, ProblemConfig::paper())?;
            let algs = [Algorithm::Offline, Algorithm::Online(Some(9)), Algorithm::NoControl];
            simulate(g, &cfg, &algs, g.seed.unwrap_or(1), &g.out)
        }
        Command::Bench {
            users,
            samples,
            iterations,
            no_oracle,
        } => {
            let cfg = load(g, ProblemConfig::desk())?;
            let base = BenchSpec::default();
            let spec = BenchSpec {
                users: users.clone().unwrap_or(base.users),
                samples: samples.clone().unwrap_or(base.samples),
                num_antennas: cfg.problem.num_antennas,
                iterations: *iterations,
                oracle: !no_oracle,
                seed: g.seed.unwrap_or(base.seed),
                ..base
            };
            let rows = bench_timing(&spec, &cfg.problem)?;
            save(&g.out, "bench.csv", |b| write_bench_csv(&rows, b))?;
            let mut stdout = std::io::stdout();
            write_bench_csv(&rows, &mut stdout).map_err(|e| Error::io("<stdout>", e))
        }
        Command::OracleCheck { cases } => {
            let rows = oracle_check(&random_cases(*cases, g.seed.unwrap_or(ORACLE_FIXTURE_SEED)))?;
            save(&g.out, "oracle_check.csv", |b| write_oracle_csv(&rows, b))?;
            let worst = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
            let failed = rows.iter().filter(|r| !r.pass()).count();
            println!("{} instances, worst relative error {}, {failed} failed", rows.len(), fmt9(worst));
            if failed > 0 {
                return Err(Error::Numerical(format!("{failed} instances outside the oracle tolerance")));
            }
            Ok(())
        }
    }
}

/// Runs `algs` on the trial `seed` and writes per-algorithm plans and grids,
/// `metrics.csv`, and with `--trace` the SUM traces and `timing.csv`.
fn simulate(g: &Global, cfg: &ExperimentConfig, algs: &[Algorithm], seed: u64, out: &Path) -> Result<()> {
    let setup = TrialSetup::new(cfg.problem.clone(), cfg.scenario.clone(), cfg.solver.clone(), seed);
    let cache = KCache::in_memory();
    let outcomes: Vec<Result<TrialOutcome>> = map_range(Exec::Parallel, algs.len(), |i| run_trial(algs[i], seed, &setup, &cache));
    let outcomes: Vec<TrialOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
    let t_len = cfg.problem.num_slices;
    save(out, "metrics.csv", |b| {
        writeln!(b, "# ltac-metrics v1")?;
        writeln!(
            b,
            "algorithm,seed,admission_ratio,switching_frequency,switches,transmit_power,reject_cost,switch_cost,total_cost,admm_iterations,sum_iterations"
        )?;
        for o in &outcomes {
            let m = &o.metrics;
            writeln!(
                b,
                "{},{seed},{},{},{},{},{},{},{},{},{}",
                o.algorithm.label(),
                fmt9(m.admission_ratio),
                fmt9(m.switching_frequency),
                m.switches(t_len).round(),
                fmt9(m.cost.transmit_power),
                fmt9(m.cost.reject_cost),
                fmt9(m.cost.switch_cost),
                fmt9(m.cost.total),
                m.admm_iterations,
                m.sum_iterations
            )?;
        }
        Ok(())
    })?;
    for o in &outcomes {
        let label = o.algorithm.label();
        save(out, &format!("{label}_plan.csv"), |b| write_plan_csv(&o.plan, b))?;
        save(out, &format!("{label}_grid.csv"), |b| write_status_grid_csv(&emit_status_grid(&o.plan), b))?;
        if g.trace {
            save(out, &format!("{label}_sum_trace.csv"), |b| {
                for (run, trace) in o.sum_traces.iter().enumerate() {
                    writeln!(b, "# run {run}")?;
                    write_sum_trace_csv(trace, b)?;
                }
                Ok(())
            })?;
        }
        println!(
            "{label:>18}: admission {:.3}, switches {}, total cost {:.3}, {:.2} s",
            o.metrics.admission_ratio,
            o.metrics.switches(t_len).round(),
            o.metrics.cost.total,
            o.metrics.wall_time_s
        );
    }
    if g.trace {
        save(out, "timing.csv", |b| {
            writeln!(b, "# ltac-timing v1")?;
            writeln!(b, "algorithm,wall_time_s")?;
            for o in &outcomes {
                writeln!(b, "{},{}", o.algorithm.label(), fmt9(o.metrics.wall_time_s))?;
            }
            Ok(())
        })?;
    }
    Ok(())
}
