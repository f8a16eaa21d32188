//! Domain types, SINR and QoS evaluation, and cost functions for the
//! long-term admission control problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{col, dotc, frob_sqr, CMatrix};

/// Scalar problem parameters and solver tolerances.
///
/// All power quantities are linear; `qos_target` is a linear SINR ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub num_users: usize,
    pub num_antennas: usize,
    pub num_slices: usize,
    pub power_budget: f64,
    pub noise_power: f64,
    pub qos_target: f64,
    /// Cost of rejecting one user in one slice.
    pub reject_weight: f64,
    /// Cost of one admissible-status switch.
    pub switch_weight: f64,
    /// Sharpness of the smooth indicator `1 - 1/(1 + kappa x)`.
    pub kappa: f64,
    pub admm_penalty: f64,
    pub sum_tol: f64,
    pub admm_tol: f64,
    pub bisect_tol: f64,
    pub sum_max_iter: usize,
    pub admm_max_iter: usize,
    pub bisect_max_iter: usize,
    /// Multiply/divide the penalty by 2 when primal and dual residuals differ by 10x.
    pub residual_balancing: bool,
    /// Charge switches from the initial status `s(0)` to slice 1.
    pub count_initial_switch: bool,
    /// Keep sampling future channels at the last slice instead of dropping the
    /// look-ahead term.
    pub terminal_lookahead: bool,
    /// Initial admissible status `s(0)`; `None` means no pre-existing links.
    pub initial_status: Option<Vec<bool>>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ProblemConfig {
    /// CI-sized profile: M=6, N=4, T=10.
    pub fn desk() -> Self {
        Self {
            num_users: 6,
            num_antennas: 4,
            num_slices: 10,
            power_budget: 100.0,
            noise_power: 1.0,
            qos_target: 1.0,
            reject_weight: 20.0,
            switch_weight: 20.0,
            kappa: 100.0,
            admm_penalty: 1.0,
            sum_tol: 1e-5,
            admm_tol: 1e-5,
            bisect_tol: 1e-10,
            sum_max_iter: 30,
            admm_max_iter: 5000,
            bisect_max_iter: 200,
            residual_balancing: true,
            count_initial_switch: false,
            terminal_lookahead: false,
            initial_status: None,
        }
    }

    /// Full-size profile: M=10, N=5, T=20.
    pub fn paper() -> Self {
        Self {
            num_users: 10,
            num_antennas: 5,
            num_slices: 20,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.num_users == 0 || self.num_antennas == 0 || self.num_slices == 0 {
            return fail("num_users, num_antennas and num_slices must be >= 1");
        }
        for (name, x) in [
            ("power_budget", self.power_budget),
            ("noise_power", self.noise_power),
            ("qos_target", self.qos_target),
            ("admm_penalty", self.admm_penalty),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.reject_weight >= 0.0 && self.switch_weight >= 0.0) {
            return fail("reject_weight and switch_weight must be nonnegative");
        }
        if !(self.kappa >= 1.0) {
            return fail("kappa must be >= 1");
        }
        if !(self.bisect_tol > 0.0 && self.bisect_tol < self.admm_tol && self.admm_tol < 1.0) {
            return fail("tolerances must satisfy 0 < bisect_tol < admm_tol < 1");
        }
        if !(self.sum_tol > 0.0) {
            return fail("sum_tol must be positive");
        }
        if let Some(s0) = &self.initial_status {
            if s0.len() != self.num_users {
                return fail("initial_status length must equal num_users");
            }
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.noise_power.sqrt()
    }

    /// Admissibility threshold on the slack: admissible iff `v < 1/kappa`.
    pub fn admit_threshold(&self) -> f64 {
        1.0 / self.kappa
    }
}

/// Per-slice admission slacks `v(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionPlan {
    pub slack: Vec<Vec<f64>>,
}

impl AdmissionPlan {
    /// Binary statuses by nearest-integer quantisation of `1/(1 + kappa v)`.
    pub fn statuses(&self, kappa: f64) -> Vec<Vec<bool>> {
        self.slack
            .iter()
            .map(|vt| vt.iter().map(|&v| quantized_status(v, kappa)).collect())
            .collect()
    }
}

/// `round(1/(1+kappa v)) == 1`, i.e. `v < 1/kappa`.
pub fn quantized_status(v: f64, kappa: f64) -> bool {
    v < 1.0 / kappa
}

/// Slacks and beamformers over a horizon, plus the optional initial status.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonPlan {
    pub admission: AdmissionPlan,
    pub beams: Vec<CMatrix>,
    pub initial_status: Option<Vec<bool>>,
}

impl HorizonPlan {
    pub fn new(slack: Vec<Vec<f64>>, beams: Vec<CMatrix>) -> Self {
        Self {
            admission: AdmissionPlan { slack },
            beams,
            initial_status: None,
        }
    }

    pub fn num_slices(&self) -> usize {
        self.beams.len()
    }

    pub fn slack(&self, t: usize) -> &[f64] {
        &self.admission.slack[t]
    }

    /// Exact-indicator admission: admitted iff `v == 0`.
    pub fn admitted(&self) -> Vec<Vec<bool>> {
        self.admission
            .slack
            .iter()
            .map(|vt| vt.iter().map(|&v| v == 0.0).collect())
            .collect()
    }

    pub fn check_dims(&self, cfg: &ProblemConfig) -> Result<()> {
        let (m, n, t) = (cfg.num_users, cfg.num_antennas, cfg.num_slices);
        if self.beams.len() != t || self.admission.slack.len() != t {
            return Err(Error::Dimension(format!(
                "plan has {} beam slices and {} slack slices, expected {t}",
                self.beams.len(),
                self.admission.slack.len()
            )));
        }
        for (w, v) in self.beams.iter().zip(&self.admission.slack) {
            if w.nrows() != n || w.ncols() != m || v.len() != m {
                return Err(Error::Dimension(format!(
                    "slice shape {}x{} / slack {} does not match N={n}, M={m}",
                    w.nrows(),
                    w.ncols(),
                    v.len()
                )));
            }
            if v.iter().any(|&x| x < 0.0 || x.is_nan()) {
                return Err(Error::InvalidArgument("negative slack in plan".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub transmit_power: f64,
    pub reject_cost: f64,
    pub switch_cost: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(transmit_power: f64, reject_cost: f64, switch_cost: f64) -> Self {
        Self {
            transmit_power,
            reject_cost,
            switch_cost,
            total: transmit_power + reject_cost + switch_cost,
        }
    }
}

fn check_pair(h: &CMatrix, w: &CMatrix) -> Result<()> {
    if h.shape() != w.shape() {
        return Err(Error::Dimension(format!(
            "channel {:?} vs beamformer {:?}",
            h.shape(),
            w.shape()
        )));
    }
    Ok(())
}

/// SINR of user `m` (0-based) under channel `h` and beamformers `w`.
pub fn sinr(h: &CMatrix, w: &CMatrix, sigma2: f64, m: usize) -> Result<f64> {
    check_pair(h, w)?;
    if m >= h.ncols() {
        return Err(Error::InvalidArgument(format!(
            "user index {m} out of range for {} users",
            h.ncols()
        )));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument("noise power must be positive".into()));
    }
    let hm = col(h, m);
    let signal = dotc(hm, col(w, m)).norm_sqr();
    let interference: f64 = (0..w.ncols())
        .filter(|&n| n != m)
        .map(|n| dotc(hm, col(w, n)).norm_sqr())
        .sum();
    Ok(signal / (sigma2 + interference))
}

/// Exact indicator: 0 iff `x == 0`.
pub fn indicator(x: f64) -> Result<u8> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::InvalidArgument(format!("indicator of negative value {x}")));
    }
    Ok(u8::from(x > 0.0))
}

/// Smooth surrogate `1 - 1/(1 + kappa x)`.
pub fn indicator_smooth(x: f64, kappa: f64) -> f64 {
    1.0 - 1.0 / (1.0 + kappa * x)
}

/// Counts switches between two binary status vectors.
pub fn count_switches(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Objective of the long-term problem with the exact indicator.
pub fn true_cost(plan: &HorizonPlan, cfg: &ProblemConfig) -> Result<CostBreakdown> {
    plan.check_dims(cfg)?;
    let transmit: f64 = plan.beams.iter().map(frob_sqr).sum();
    let admitted = plan.admitted();
    let rejected: usize = admitted.iter().flatten().filter(|&&a| !a).count();
    let mut switches: usize = admitted
        .windows(2)
        .map(|w| count_switches(&w[0], &w[1]))
        .sum();
    if cfg.count_initial_switch {
        if let Some(s0) = &plan.initial_status {
            switches += count_switches(s0, &admitted[0]);
        }
    }
    Ok(CostBreakdown::new(
        transmit,
        cfg.reject_weight * rejected as f64,
        cfg.switch_weight * switches as f64,
    ))
}

/// Objective of the smoothed problem (indicator replaced by its surrogate).
pub fn smoothed_cost(plan: &HorizonPlan, cfg: &ProblemConfig) -> Result<f64> {
    plan.check_dims(cfg)?;
    let k = cfg.kappa;
    let transmit: f64 = plan.beams.iter().map(frob_sqr).sum();
    let inv = |v: f64| 1.0 / (1.0 + k * v);
    let slack = &plan.admission.slack;
    let reject: f64 = slack.iter().flatten().map(|&v| 1.0 - inv(v)).sum();
    let mut switch: f64 = slack
        .windows(2)
        .map(|p| p[0].iter().zip(&p[1]).map(|(&a, &b)| (inv(a) - inv(b)).abs()).sum::<f64>())
        .sum();
    if cfg.count_initial_switch {
        if let Some(s0) = &plan.initial_status {
            switch += s0
                .iter()
                .zip(&slack[0])
                .map(|(&s, &v)| (f64::from(u8::from(s)) - inv(v)).abs())
                .sum::<f64>();
        }
    }
    Ok(transmit + cfg.reject_weight * reject + cfg.switch_weight * switch)
}

/// Per-user outcome of the SOC form of the QoS constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct QosCheck {
    pub pass: Vec<bool>,
    /// `Re{h^H w_m} + v_m - sqrt(gamma) * sqrt(sigma2 + interference)`.
    pub residual: Vec<f64>,
}

/// Checks the second-order-cone QoS constraint for every user of one slice.
/// `im_tol` bounds the admissible imaginary part of `h_m^H w_m`.
pub fn qos_feasible(
    h: &CMatrix,
    w: &CMatrix,
    v: &[f64],
    gamma: f64,
    sigma2: f64,
    im_tol: f64,
) -> Result<QosCheck> {
    check_pair(h, w)?;
    if v.len() != h.ncols() {
        return Err(Error::Dimension("slack length != number of users".into()));
    }
    let sg = gamma.sqrt();
    let mut pass = Vec::with_capacity(v.len());
    let mut residual = Vec::with_capacity(v.len());
    for m in 0..h.ncols() {
        let hm = col(h, m);
        let own = dotc(hm, col(w, m));
        let interference: f64 = (0..w.ncols())
            .filter(|&n| n != m)
            .map(|n| dotc(hm, col(w, n)).norm_sqr())
            .sum();
        let r = own.re + v[m] - sg * (sigma2 + interference).sqrt();
        residual.push(r);
        pass.push(r >= 0.0 && own.im.abs() <= im_tol);
    }
    Ok(QosCheck { pass, residual })
}
