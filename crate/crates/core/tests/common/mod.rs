//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod oracles;

use ltac::linalg::{c, CMatrix};
use ltac::model::{sinr, HorizonPlan, ProblemConfig};
use ltac::sum::SumStep;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn rand_cmat<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(scale * (2.0 * rng.random::<f64>() - 1.0), scale * (2.0 * rng.random::<f64>() - 1.0))
    })
}

/// One-sided paired t-test p-value for `H1: mean(x - y) > 0`.
pub fn paired_p_greater(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return if mean > 0.0 { 0.0 } else { 1.0 };
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid t distribution");
    1.0 - dist.cdf(t)
}

/// Worst violations of a repaired plan: `(power excess ratio, SINR shortfall ratio)`.
/// Both must be at most `1e-6`.
pub fn feasibility_violation(plan: &HorizonPlan, channels: &[CMatrix], cfg: &ProblemConfig) -> (f64, f64) {
    let mut power: f64 = 0.0;
    let mut shortfall: f64 = 0.0;
    for (t, (h, w)) in channels.iter().zip(&plan.beams).enumerate() {
        let p: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        power = power.max(p / cfg.power_budget - 1.0);
        for (m, &v) in plan.slack(t).iter().enumerate() {
            if v == 0.0 {
                let s = sinr(h, w, cfg.noise_power, m).expect("valid shapes");
                shortfall = shortfall.max(1.0 - s / cfg.qos_target);
            }
        }
    }
    (power, shortfall)
}

/// Largest increase between consecutive accepted SUM objectives, relative to
/// `max(1, |f|)`. Nonpositive means monotone.
pub fn worst_increase(trace: &[SumStep]) -> f64 {
    let accepted: Vec<f64> = trace.iter().filter(|s| s.accepted).map(|s| s.objective).collect();
    accepted
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}
