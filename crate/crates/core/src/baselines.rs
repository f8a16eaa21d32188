//! Comparison algorithms and the exact fixed-set beamforming they rely on.
//!
//! [`qos_beamforming`] solves the power minimisation for a fixed admitted set
//! by the uplink-downlink duality fixed point: the dual (uplink) powers are
//! iterated to their fixed point, the MMSE receive directions become the
//! downlink beam directions, and the downlink powers solve a linear system
//! that puts every admitted SINR exactly at the target.

use nalgebra::{DMatrix, DVector};

use crate::admm::{AdmmOptions, CouplingGraph};
use crate::error::{Error, Result};
use crate::linalg::{col, dotc, CMatrix, C64};
use crate::model::{count_switches, HorizonPlan, ProblemConfig};
use crate::sum::{rejected_slack, repair_slice, run_sum, with_initial, SumRun};

/// Relative change of the dual powers at which the fixed point is accepted.
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITER: usize = 10_000;
/// Dual power (times the noise power) beyond which the iteration is declared divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
/// Largest `M * T` accepted by [`brute_force_optimum`].
pub const MAX_BRUTE_FORCE_SIZE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Infeasibility {
    /// The dual powers grew past the divergence threshold.
    Diverged,
    /// The fixed point did not settle within the iteration cap.
    NoConvergence,
    /// The downlink power system is singular or has a nonpositive solution.
    Singular,
    /// The minimal power exceeds the budget.
    OverBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QosBeams {
    Feasible { w: CMatrix, power: f64 },
    Infeasible(Infeasibility),
}

impl QosBeams {
    pub fn is_feasible(&self) -> bool {
        matches!(self, QosBeams::Feasible { .. })
    }
}

/// Minimum-power beamformers meeting `SINR_m >= gamma` for every admitted
/// user; columns of users outside `admitted` are zero.
pub fn qos_beamforming(h: &CMatrix, admitted: &[usize], gamma: f64, sigma2: f64, budget: f64) -> Result<QosBeams> {
    let (n, m) = h.shape();
    if admitted.iter().any(|&k| k >= m) {
        return Err(Error::InvalidArgument("admitted index out of range".into()));
    }
    if !(gamma > 0.0) || !(sigma2 > 0.0) || !(budget > 0.0) {
        return Err(Error::InvalidArgument("gamma, noise power and budget must be positive".into()));
    }
    let mut w = CMatrix::zeros(n, m);
    if admitted.is_empty() {
        return Ok(QosBeams::Feasible { w, power: 0.0 });
    }
    let k = admitted.len();
    // dual powers in units of the noise power; q(0) = 0 makes the sequence increasing
    let mut q = vec![0.0; k];
    let mut converged = false;
    let mut inv_cov = CMatrix::identity(n, n);
    for _ in 0..FIXED_POINT_MAX_ITER {
        inv_cov = covariance_inverse(h, admitted, &q)?;
        let mut change = 0.0f64;
        let mut next = vec![0.0; k];
        for (i, &u) in admitted.iter().enumerate() {
            let hu = h.column(u);
            let b = (hu.adjoint() * &inv_cov * hu)[(0, 0)].re;
            if !(b > 0.0) {
                return Ok(QosBeams::Infeasible(Infeasibility::Singular));
            }
            // h^H S_m^{-1} h = b / (1 - q_m b), S_m being the covariance without user m
            next[i] = gamma * (1.0 - q[i] * b) / b;
            change = change.max((next[i] - q[i]).abs() / next[i].max(f64::MIN_POSITIVE));
        }
        q = next;
        let total = sigma2 * q.iter().sum::<f64>();
        if total > DIVERGENCE_FACTOR * budget || !total.is_finite() {
            return Ok(QosBeams::Infeasible(Infeasibility::Diverged));
        }
        // the iterates increase to the fixed point, whose sum is the minimal power
        if total > budget * (1.0 + 1e-9) {
            return Ok(QosBeams::Infeasible(Infeasibility::OverBudget));
        }
        if change <= FIXED_POINT_TOL {
            converged = true;
            inv_cov = covariance_inverse(h, admitted, &q)?;
            break;
        }
    }
    if !converged {
        return Ok(QosBeams::Infeasible(Infeasibility::NoConvergence));
    }
    // MMSE directions: S^{-1} h_m is parallel to S_m^{-1} h_m
    let dirs: Vec<Vec<C64>> = admitted
        .iter()
        .map(|&u| {
            let d = &inv_cov * h.column(u);
            let norm = d.norm();
            d.iter().map(|z| z / norm).collect()
        })
        .collect();
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (i, &u) in admitted.iter().enumerate() {
        for (j, d) in dirs.iter().enumerate() {
            let g = dotc(col(h, u), d).norm_sqr();
            a[(i, j)] = if i == j { g / gamma } else { -g };
        }
    }
    let Some(p) = a.lu().solve(&DVector::from_element(k, sigma2)) else {
        return Ok(QosBeams::Infeasible(Infeasibility::Singular));
    };
    if p.iter().any(|&x| !(x > 0.0)) {
        return Ok(QosBeams::Infeasible(Infeasibility::Singular));
    }
    let power: f64 = p.sum();
    if power > budget {
        return Ok(QosBeams::Infeasible(Infeasibility::OverBudget));
    }
    for ((&u, d), &pu) in admitted.iter().zip(&dirs).zip(p.iter()) {
        // rotate so that h_u^H w_u is real and positive
        let phase = dotc(col(h, u), d);
        let rot = phase.conj() / phase.norm();
        for (r, z) in d.iter().enumerate() {
            w[(r, u)] = z * rot * pu.sqrt();
        }
    }
    Ok(QosBeams::Feasible { w, power })
}

/// `(I + sum_m q_m h_m h_m^H)^{-1}` over the admitted users.
fn covariance_inverse(h: &CMatrix, admitted: &[usize], q: &[f64]) -> Result<CMatrix> {
    let n = h.nrows();
    let mut s = CMatrix::identity(n, n);
    for (&u, &qu) in admitted.iter().zip(q) {
        let hu = h.column(u);
        s += hu * hu.adjoint() * C64::new(qu, 0.0);
    }
    s.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Numerical("dual covariance is not positive definite".into()))
}

/// One slice solved without regard to switching: SUM on a single node,
/// quantised and repaired. Returns `(v, W)` and the SUM run.
pub fn solve_per_slice(h: &CMatrix, cfg: &ProblemConfig, opts: AdmmOptions) -> Result<(Vec<f64>, CMatrix, SumRun)> {
    let graph = CouplingGraph::single(cfg, h.clone());
    let run = run_sum(graph, cfg, opts)?;
    let (v, w) = repair_slice(h, &run.v[0], cfg)?;
    Ok((v, w, run))
}

#[derive(Debug, Clone)]
pub struct NoControlResult {
    pub plan: HorizonPlan,
    /// One SUM run per slice.
    pub runs: Vec<SumRun>,
}

/// Independent per-slice solutions over the horizon; the switching weight is
/// never read.
pub fn solve_no_control(channels: &[CMatrix], cfg: &ProblemConfig, opts: AdmmOptions) -> Result<NoControlResult> {
    let mut slack = Vec::with_capacity(channels.len());
    let mut beams = Vec::with_capacity(channels.len());
    let mut runs = Vec::with_capacity(channels.len());
    for h in channels {
        let (v, w, run) = solve_per_slice(h, cfg, opts)?;
        slack.push(v);
        beams.push(w);
        runs.push(run);
    }
    Ok(NoControlResult {
        plan: with_initial(HorizonPlan::new(slack, beams), cfg),
        runs,
    })
}

/// Plan admitting the `K(t)` strongest users per slice.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthPlan {
    pub plan: HorizonPlan,
    /// Admitted count after deflation, per slice.
    pub realized: Vec<usize>,
}

/// Users sorted by decreasing `||h_m||^2`, ties by lower index.
pub fn strength_order(h: &CMatrix) -> Vec<usize> {
    let gains: Vec<f64> = (0..h.ncols()).map(|m| h.column(m).norm_squared()).collect();
    let mut order: Vec<usize> = (0..h.ncols()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    order
}

/// Admits the `counts[t]` users with the largest channel gains and beamforms
/// them exactly, dropping the weakest admitted user while infeasible.
pub fn channel_strength_plan(channels: &[CMatrix], cfg: &ProblemConfig, counts: &[usize]) -> Result<StrengthPlan> {
    if counts.len() != channels.len() {
        return Err(Error::Dimension("one admitted count per slice is required".into()));
    }
    let mut slack = Vec::with_capacity(channels.len());
    let mut beams = Vec::with_capacity(channels.len());
    let mut realized = Vec::with_capacity(channels.len());
    for (h, &k) in channels.iter().zip(counts) {
        if k > h.ncols() {
            return Err(Error::InvalidArgument(format!("admitted count {k} exceeds {} users", h.ncols())));
        }
        let mut set: Vec<usize> = strength_order(h)[..k].to_vec();
        let w = loop {
            match qos_beamforming(h, &set, cfg.qos_target, cfg.noise_power, cfg.power_budget)? {
                QosBeams::Feasible { w, .. } => break w,
                QosBeams::Infeasible(_) => {
                    set.pop();
                }
            }
        };
        let admitted: Vec<bool> = (0..h.ncols()).map(|m| set.contains(&m)).collect();
        slack.push(rejected_slack(h, &w, &admitted, cfg));
        realized.push(set.len());
        beams.push(w);
    }
    Ok(StrengthPlan {
        plan: with_initial(HorizonPlan::new(slack, beams), cfg),
        realized,
    })
}

/// Global optimum of the exact long-term problem by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub cost: f64,
    /// Admitted flags per slice and user.
    pub pattern: Vec<Vec<bool>>,
    pub plan: HorizonPlan,
}

/// Enumerates every admission pattern with exact per-slice beamforming,
/// skipping infeasible ones. Requires `M * T <= 12`.
pub fn brute_force_optimum(channels: &[CMatrix], cfg: &ProblemConfig) -> Result<BruteForce> {
    let t_len = channels.len();
    let m = cfg.num_users;
    if t_len == 0 || m * t_len > MAX_BRUTE_FORCE_SIZE {
        return Err(Error::InvalidArgument(format!(
            "brute force needs 1 <= M*T <= {MAX_BRUTE_FORCE_SIZE}, got M={m}, T={t_len}"
        )));
    }
    let subsets = 1usize << m;
    let flags = |mask: usize| -> Vec<bool> { (0..m).map(|u| mask >> u & 1 == 1).collect() };
    // per slice and subset: Some((power, W)) when feasible
    let mut table: Vec<Vec<Option<(f64, CMatrix)>>> = Vec::with_capacity(t_len);
    for h in channels {
        let mut row = Vec::with_capacity(subsets);
        for mask in 0..subsets {
            let set: Vec<usize> = (0..m).filter(|u| mask >> u & 1 == 1).collect();
            row.push(match qos_beamforming(h, &set, cfg.qos_target, cfg.noise_power, cfg.power_budget)? {
                QosBeams::Feasible { w, power } => Some((power, w)),
                QosBeams::Infeasible(_) => None,
            });
        }
        table.push(row);
    }
    let initial = crate::sum::initial_status(cfg);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut masks = vec![0usize; t_len];
    'patterns: for code in 0..(1usize << (m * t_len)) {
        let mut cost = 0.0;
        for (t, mask) in masks.iter_mut().enumerate() {
            *mask = code >> (t * m) & (subsets - 1);
            let Some((power, _)) = &table[t][*mask] else {
                continue 'patterns;
            };
            cost += power + cfg.reject_weight * (m - mask.count_ones() as usize) as f64;
        }
        let mut switches: usize = masks.windows(2).map(|p| (p[0] ^ p[1]).count_ones() as usize).sum();
        if cfg.count_initial_switch {
            switches += count_switches(&initial, &flags(masks[0]));
        }
        cost += cfg.switch_weight * switches as f64;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, masks.clone()));
        }
    }
    let (cost, masks) = best.ok_or_else(|| Error::Numerical("no feasible admission pattern".into()))?;
    let pattern: Vec<Vec<bool>> = masks.iter().map(|&k| flags(k)).collect();
    let mut slack = Vec::with_capacity(t_len);
    let mut beams = Vec::with_capacity(t_len);
    for (t, (h, admitted)) in channels.iter().zip(&pattern).enumerate() {
        let (_, w) = table[t][masks[t]].clone().expect("pattern is feasible");
        slack.push(rejected_slack(h, &w, admitted, cfg));
        beams.push(w);
    }
    Ok(BruteForce {
        cost,
        pattern,
        plan: with_initial(HorizonPlan::new(slack, beams), cfg),
    })
}
