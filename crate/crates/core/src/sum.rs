//! Successive upper-bound minimisation: the offline horizon solver, the
//! online per-slice solver with sampled futures, and the final repair that
//! turns a smoothed solution into an exactly feasible plan.
//!
//! Every SUM step linearises the concave parts of the smoothed objective at
//! the previous slacks and hands the convex surrogate to the ADMM engine. One
//! [`AdmmSolver`] lives across the steps of a run so each convex solve starts
//! from the previous one. A step whose smoothed objective is higher than the
//! last accepted one (possible only through ADMM inexactness) is discarded
//! and the run stops, so accepted objectives never increase.

use std::io::Write;
use std::path::Path;

use crate::admm::{anchor_majorant, neg_recip_majorant, smoothed_objective, switch_majorant};
use crate::admm::{AdmmOptions, AdmmSolver, CouplingGraph};
use crate::baselines::{qos_beamforming, QosBeams};
use crate::channel::sample_future_slice;
use crate::error::{Error, Result};
use crate::experiments::fmt9;
use crate::linalg::{col, dotc, frob_sqr, CMatrix};
use crate::model::{quantized_status, HorizonPlan, ProblemConfig};

/// Diagnostics of one SUM step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumStep {
    /// Smoothed objective at the step's solution.
    pub objective: f64,
    pub admm_iterations: usize,
    pub admm_converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// False when the step raised the objective and was discarded.
    pub accepted: bool,
}

/// Outcome of a SUM run on one coupling graph.
#[derive(Debug, Clone)]
pub struct SumRun {
    /// Slacks per node, clamped at zero.
    pub v: Vec<Vec<f64>>,
    pub w: Vec<CMatrix>,
    pub trace: Vec<SumStep>,
    /// Relative objective change fell below the tolerance before the cap.
    pub converged: bool,
}

impl SumRun {
    pub fn objective(&self) -> f64 {
        self.trace
            .iter()
            .rev()
            .find(|s| s.accepted)
            .map_or(f64::NAN, |s| s.objective)
    }

    pub fn admm_iterations(&self) -> usize {
        self.trace.iter().map(|s| s.admm_iterations).sum()
    }

    /// Accepted objectives, in order.
    pub fn objectives(&self) -> Vec<f64> {
        self.trace.iter().filter(|s| s.accepted).map(|s| s.objective).collect()
    }
}

/// Runs SUM from `v = 0` on `graph` until the relative change of the
/// smoothed objective is at most `sum_tol` or `sum_max_iter` steps ran.
pub fn run_sum(graph: CouplingGraph, cfg: &ProblemConfig, opts: AdmmOptions) -> Result<SumRun> {
    let mut solver = AdmmSolver::new(graph, opts)?;
    let shape = (solver.graph().num_nodes(), solver.graph().num_users);
    let mut reference = vec![vec![0.0; shape.1]; shape.0];
    let mut best: Option<(Vec<Vec<f64>>, Vec<CMatrix>, f64)> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.sum_max_iter {
        let sol = solver.solve(&reference)?;
        let v: Vec<Vec<f64>> = sol
            .v
            .iter()
            .map(|r| r.iter().map(|&x| x.max(0.0)).collect())
            .collect();
        let objective = smoothed_objective(solver.graph(), &v, &sol.w);
        if !objective.is_finite() {
            return Err(Error::Numerical("SUM objective is not finite".into()));
        }
        let previous = best.as_ref().map(|b| b.2);
        let accepted = previous.is_none_or(|p| objective <= p);
        trace.push(SumStep {
            objective,
            admm_iterations: sol.iterations,
            admm_converged: sol.converged,
            primal_residual: sol.residuals.primal_norm,
            dual_residual: sol.residuals.dual_norm,
            accepted,
        });
        if !accepted {
            break;
        }
        reference.clone_from(&v);
        best = Some((v, sol.w, objective));
        if let Some(p) = previous {
            if (p - objective).abs() <= cfg.sum_tol * p.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }
    let (v, w, _) = best.ok_or_else(|| Error::Numerical("SUM ran no steps".into()))?;
    Ok(SumRun { v, w, trace, converged })
}

/// Gap between the SUM upper bound `u(v; v_bar)` and the rejection and
/// switching terms of the smoothed objective, for a horizon of slacks
/// (`v[t][m]`) coupled as a chain. Nonnegative, and zero at `v == v_bar`.
pub fn sum_bound_gap(v: &[Vec<f64>], v_bar: &[Vec<f64>], cfg: &ProblemConfig) -> Result<f64> {
    if v.len() != v_bar.len() || v.iter().zip(v_bar).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::Dimension("v and v_bar shapes differ".into()));
    }
    if v.iter().chain(v_bar).flatten().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument("slacks must be nonnegative".into()));
    }
    let k = cfg.kappa;
    let r = |x: f64| 1.0 / (1.0 + k * x);
    let mut gap = 0.0;
    for (vt, bt) in v.iter().zip(v_bar) {
        for (&x, &xb) in vt.iter().zip(bt) {
            gap += cfg.reject_weight * ((1.0 + neg_recip_majorant(k, x, xb)) - (1.0 - r(x)));
        }
    }
    for t in 1..v.len() {
        for m in 0..v[t].len() {
            let (a, b) = (v[t - 1][m], v[t][m]);
            let bound = switch_majorant(k, a, b, v_bar[t - 1][m], v_bar[t][m]);
            gap += cfg.switch_weight * (bound - (r(a) - r(b)).abs());
        }
    }
    if let (true, Some(s0), Some(first), Some(first_bar)) =
        (cfg.count_initial_switch, &cfg.initial_status, v.first(), v_bar.first())
    {
        for ((&s, &x), &xb) in s0.iter().zip(first).zip(first_bar) {
            let p = f64::from(u8::from(s));
            gap += cfg.switch_weight * (anchor_majorant(k, x, xb, p) - (p - r(x)).abs());
        }
    }
    Ok(gap)
}

/// Slacks that make the QoS constraint hold for `w`: zero for admitted users,
/// and for the others the cone deficit, at least `1/kappa` so the quantised
/// status reads as rejected.
pub fn rejected_slack(h: &CMatrix, w: &CMatrix, admitted: &[bool], cfg: &ProblemConfig) -> Vec<f64> {
    let sg = cfg.qos_target.sqrt();
    (0..h.ncols())
        .map(|m| {
            if admitted[m] {
                return 0.0;
            }
            let hm = col(h, m);
            let interference: f64 = (0..w.ncols())
                .filter(|&n| n != m)
                .map(|n| dotc(hm, col(w, n)).norm_sqr())
                .sum();
            let deficit = sg * (cfg.noise_power + interference).sqrt() - dotc(hm, col(w, m)).re;
            deficit.max(1.0 / cfg.kappa)
        })
        .collect()
}

/// Quantises one slice's slacks and beamforms the admitted set exactly,
/// dropping the admitted user with the largest slack (ties: weakest channel,
/// then lower index) until the set is feasible within the budget.
pub fn repair_slice(h: &CMatrix, v: &[f64], cfg: &ProblemConfig) -> Result<(Vec<f64>, CMatrix)> {
    if v.len() != h.ncols() {
        return Err(Error::Dimension("slack length != number of users".into()));
    }
    let norms: Vec<f64> = (0..h.ncols()).map(|m| h.column(m).norm()).collect();
    let mut set: Vec<usize> = (0..v.len()).filter(|&m| quantized_status(v[m], cfg.kappa)).collect();
    let w = loop {
        match qos_beamforming(h, &set, cfg.qos_target, cfg.noise_power, cfg.power_budget)? {
            QosBeams::Feasible { w, .. } => break w,
            QosBeams::Infeasible(_) => {
                let worst = set
                    .iter()
                    .copied()
                    .enumerate()
                    .max_by(|&(_, a), &(_, b)| {
                        v[a].total_cmp(&v[b])
                            .then(norms[b].total_cmp(&norms[a]))
                            .then(b.cmp(&a))
                    })
                    .map(|(i, _)| i)
                    .expect("an infeasible set is nonempty");
                set.remove(worst);
            }
        }
    };
    let admitted: Vec<bool> = (0..v.len()).map(|m| set.contains(&m)).collect();
    Ok((rejected_slack(h, &w, &admitted, cfg), w))
}

/// Applies [`repair_slice`] to every slice of a plan.
pub fn repair_plan(plan: &HorizonPlan, channels: &[CMatrix], cfg: &ProblemConfig) -> Result<HorizonPlan> {
    if plan.num_slices() != channels.len() {
        return Err(Error::Dimension("plan and channel horizons differ".into()));
    }
    let mut slack = Vec::with_capacity(channels.len());
    let mut beams = Vec::with_capacity(channels.len());
    for (t, h) in channels.iter().enumerate() {
        let (v, w) = repair_slice(h, plan.slack(t), cfg)?;
        slack.push(v);
        beams.push(w);
    }
    let mut out = HorizonPlan::new(slack, beams);
    out.initial_status.clone_from(&plan.initial_status);
    Ok(out)
}

/// Initial status `s(0)`: configured, or all users inadmissible.
pub fn initial_status(cfg: &ProblemConfig) -> Vec<bool> {
    cfg.initial_status.clone().unwrap_or_else(|| vec![false; cfg.num_users])
}

pub(crate) fn with_initial(mut plan: HorizonPlan, cfg: &ProblemConfig) -> HorizonPlan {
    plan.initial_status = Some(initial_status(cfg));
    plan
}

#[derive(Debug, Clone)]
pub struct OfflineResult {
    /// Repaired plan.
    pub plan: HorizonPlan,
    /// SUM solution before quantisation and repair.
    pub raw: HorizonPlan,
    pub run: SumRun,
}

/// Solves the whole horizon at once with all channels known.
pub fn solve_offline(channels: &[CMatrix], cfg: &ProblemConfig, opts: AdmmOptions) -> Result<OfflineResult> {
    if channels.is_empty() {
        return Err(Error::InvalidArgument("empty horizon".into()));
    }
    let anchor = cfg.count_initial_switch.then(|| initial_status(cfg));
    let graph = CouplingGraph::offline_chain(cfg, channels, anchor);
    let run = run_sum(graph, cfg, opts)?;
    let raw = with_initial(HorizonPlan::new(run.v.clone(), run.w.clone()), cfg);
    let plan = repair_plan(&raw, channels, cfg)?;
    Ok(OfflineResult { plan, raw, run })
}

/// Inputs of one online slice. Only the current channel and the per-user
/// variances cross this boundary, so later slices cannot leak in.
#[derive(Debug, Clone, Copy)]
pub struct OnlineSlice<'a> {
    pub channel: &'a CMatrix,
    pub variances: &'a [f64],
    /// Realised status of the previous slice.
    pub previous: &'a [bool],
    /// Weight of the switch from `previous`; zero drops the anchor.
    pub anchor_weight: f64,
    pub num_samples: usize,
    /// Slice index, selects the block of future samples.
    pub slice: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct OnlineStep {
    /// Node-0 (current slice) slacks and beamformers.
    pub v: Vec<f64>,
    pub w: CMatrix,
    pub run: SumRun,
}

/// Solves the sample-average problem of one slice and returns the current
/// slice's variables.
pub fn solve_online_step(input: &OnlineSlice<'_>, cfg: &ProblemConfig, opts: AdmmOptions) -> Result<OnlineStep> {
    let n = input.channel.nrows();
    let futures = sample_future_slice(input.variances, n, input.num_samples, input.seed, input.slice);
    let previous = (input.anchor_weight > 0.0).then(|| input.previous.to_vec());
    let graph = CouplingGraph::online_star(cfg, input.channel.clone(), futures, previous, input.anchor_weight);
    let run = run_sum(graph, cfg, opts)?;
    Ok(OnlineStep {
        v: run.v[0].clone(),
        w: run.w[0].clone(),
        run,
    })
}

#[derive(Debug, Clone)]
pub struct OnlineResult {
    /// Repaired plan.
    pub plan: HorizonPlan,
    /// Unrepaired per-slice solutions.
    pub raw: HorizonPlan,
    pub steps: Vec<SumRun>,
}

/// Slice-by-slice solution with `J` sampled futures per slice. The realised
/// (repaired) status of each slice anchors the next one.
pub fn solve_online(
    channels: &[CMatrix],
    variances: &[f64],
    cfg: &ProblemConfig,
    num_samples: usize,
    seed: u64,
    opts: AdmmOptions,
) -> Result<OnlineResult> {
    let t_len = channels.len();
    if t_len == 0 {
        return Err(Error::InvalidArgument("empty horizon".into()));
    }
    let mut previous = initial_status(cfg);
    let mut raw_v = Vec::with_capacity(t_len);
    let mut raw_w = Vec::with_capacity(t_len);
    let mut slack = Vec::with_capacity(t_len);
    let mut beams = Vec::with_capacity(t_len);
    let mut steps = Vec::with_capacity(t_len);
    for (t, h) in channels.iter().enumerate() {
        let last = t + 1 == t_len;
        let input = OnlineSlice {
            channel: h,
            variances,
            previous: &previous,
            anchor_weight: if t > 0 || cfg.count_initial_switch { cfg.switch_weight } else { 0.0 },
            num_samples: if last && !cfg.terminal_lookahead { 0 } else { num_samples },
            slice: t,
            seed,
        };
        let step = solve_online_step(&input, cfg, opts)?;
        let (v, w) = repair_slice(h, &step.v, cfg)?;
        previous = v.iter().map(|&x| x == 0.0).collect();
        raw_v.push(step.v);
        raw_w.push(step.w);
        slack.push(v);
        beams.push(w);
        steps.push(step.run);
    }
    Ok(OnlineResult {
        plan: with_initial(HorizonPlan::new(slack, beams), cfg),
        raw: with_initial(HorizonPlan::new(raw_v, raw_w), cfg),
        steps,
    })
}

/// Writes `t,m,v,status,beam_power` rows.
pub fn write_plan_csv(plan: &HorizonPlan, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# ltac-plan v1")?;
    writeln!(out, "t,m,v,status,beam_power")?;
    for (t, (vt, w)) in plan.admission.slack.iter().zip(&plan.beams).enumerate() {
        for (m, &v) in vt.iter().enumerate() {
            let power: f64 = w.column(m).norm_squared();
            writeln!(out, "{t},{m},{},{},{}", fmt9(v), u8::from(v == 0.0), fmt9(power))?;
        }
    }
    Ok(())
}

/// Writes `step,objective,admm_iterations,admm_converged,primal,dual,accepted` rows.
pub fn write_sum_trace_csv(trace: &[SumStep], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# ltac-sum-trace v1")?;
    writeln!(out, "step,objective,admm_iterations,admm_converged,primal_residual,dual_residual,accepted")?;
    for (k, s) in trace.iter().enumerate() {
        writeln!(
            out,
            "{k},{},{},{},{},{},{}",
            fmt9(s.objective),
            s.admm_iterations,
            u8::from(s.admm_converged),
            fmt9(s.primal_residual),
            fmt9(s.dual_residual),
            u8::from(s.accepted)
        )?;
    }
    Ok(())
}

/// Writes a plan CSV to `path`.
pub fn save_plan(plan: &HorizonPlan, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_plan_csv(plan, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Total beam power of a plan.
pub fn plan_power(plan: &HorizonPlan) -> f64 {
    plan.beams.iter().map(frob_sqr).sum()
}
