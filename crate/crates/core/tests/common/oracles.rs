//! Brute-force references for the ADMM block updates. Each one solves the
//! block's subproblem by a generic method that shares no code with the
//! closed forms under test.

use ltac::linalg::{c, CMatrix};
use ltac::C64;

/// `lambda0 ||W||^2 + rho/2 ||H^H W||^2 - Re Tr(target^H H^H W)`, which is the
/// W-block objective up to a constant.
pub fn w_objective(h: &CMatrix, target: &CMatrix, rho: f64, lambda0: f64, w: &CMatrix) -> f64 {
    let hw = h.adjoint() * w;
    let cross: f64 = target.iter().zip(hw.iter()).map(|(t, z)| (t.conj() * z).re).sum();
    lambda0 * w.norm_squared() + 0.5 * rho * hw.norm_squared() - cross
}

/// Accelerated projected gradient on the Frobenius ball of radius `sqrt(power)`.
pub fn w_projected_gradient(h: &CMatrix, target: &CMatrix, rho: f64, lambda0: f64, power: f64) -> CMatrix {
    let gram = h * h.adjoint();
    let lmax = gram.iter().map(|z| z.norm()).sum::<f64>();
    let step = 1.0 / (2.0 * lambda0 + rho * lmax);
    let linear = h * target;
    let project = |w: CMatrix| {
        let n = w.norm();
        if n * n > power {
            w * c(power.sqrt() / n, 0.0)
        } else {
            w
        }
    };
    let mut w = CMatrix::zeros(h.nrows(), target.ncols());
    let mut y = w.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad = &y * c(2.0 * lambda0, 0.0) + &gram * &y * c(rho, 0.0) - &linear;
        let next = project(&y - grad * c(step, 0.0));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &w) * c((t - 1.0) / t_next, 0.0);
        w = next;
        t = t_next;
    }
    w
}

/// Minimiser of a convex `phi` on `[lo, hi]` by ternary search.
pub fn ternary(lo: f64, hi: f64, phi: impl Fn(f64) -> f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..300 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if phi(m1) <= phi(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    0.5 * (a + b)
}

/// Squared distance from `(b0, x0[, s0])` to `{b - s + offset >= 1/x, x >= 1}`,
/// and the minimising `x`. For fixed `x` the deficit `max(0, 1/x - Gamma)` is
/// split evenly among the `n` moving coordinates at cost `deficit^2 / n`.
pub fn epigraph_scalar(b0: f64, x0: f64, s0: Option<f64>, offset: f64) -> (f64, f64) {
    let n = if s0.is_some() { 2.0 } else { 1.0 };
    let gamma = b0 - s0.unwrap_or(0.0) + offset;
    let phi = |x: f64| (x - x0).powi(2) + (1.0 / x - gamma).max(0.0).powi(2) / n;
    let hi = x0.max(1.0) + 1.0 + gamma.abs();
    let x = ternary(1.0, hi, phi);
    (phi(x), x)
}

/// SOC prox objective `rho/2 ||e - g/rho||^2 + rho q/2 v^2 - f v`.
pub fn soc_objective(g: &[C64], f: f64, q: f64, rho: f64, e: &[C64], v: f64) -> f64 {
    let dist: f64 = e.iter().zip(g).map(|(a, b)| (a - b / rho).norm_sqr()).sum();
    0.5 * rho * dist + 0.5 * rho * q * v * v - f * v
}

/// Candidate of the SOC prox for a fixed cone level `s = Re e_own + v`:
/// the rest of `e` is the projection of `g_rest/rho` onto the ball of radius
/// `s/sqrt(gamma)`, and `v` minimises the remaining quadratic.
pub fn soc_candidate(g: &[C64], own: usize, f: f64, q: f64, rho: f64, gamma: f64, s: f64) -> (Vec<C64>, f64) {
    let rest: f64 = g
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != own)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
        / rho;
    let radius = s / gamma.sqrt();
    let shrink = if rest > radius { radius / rest } else { 1.0 };
    let v = (rho * s - g[own].re + f) / (rho * (1.0 + q));
    let e = g
        .iter()
        .enumerate()
        .map(|(i, z)| if i == own { c(s - v, 0.0) } else { z / rho * shrink })
        .collect();
    (e, v)
}

/// Minimum of the SOC prox by ternary search over the cone level.
pub fn soc_reduced(g: &[C64], own: usize, f: f64, q: f64, rho: f64, gamma: f64) -> f64 {
    let phi = |s: f64| {
        let (e, v) = soc_candidate(g, own, f, q, rho, gamma, s);
        soc_objective(g, f, q, rho, &e, v)
    };
    let scale: f64 = g.iter().map(|z| z.norm()).sum::<f64>() / rho + f.abs() / (rho * q) + 1.0;
    phi(ternary(0.0, 10.0 * scale * (1.0 + gamma.sqrt()), phi))
}

/// Cone violation of a prox output.
pub fn soc_violation(e: &[C64], own: usize, v: f64, gamma: f64) -> f64 {
    let rest: f64 = e
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != own)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    (gamma.sqrt() * rest - e[own].re - v).max(0.0) + e[own].im.abs()
}

/// `weight a + theta (a - b) + phi (a - c) + rho/2 (a - b)^2 + rho/2 (a - c)^2`.
pub fn a_objective(a: f64, b: f64, cc: f64, weight: f64, theta: f64, phi: f64, rho: f64) -> f64 {
    weight * a + theta * (a - b) + phi * (a - cc) + 0.5 * rho * ((a - b).powi(2) + (a - cc).powi(2))
}

/// Squared distance from `(c0, y0)` to `{c - y >= bound}` by scanning the
/// shift along the normal.
pub fn halfspace_scalar(c0: f64, y0: f64, bound: f64) -> f64 {
    let phi = |d: f64| {
        let deficit = (bound - (c0 + d - y0)).max(0.0);
        // move c by d, then y down by whatever is still missing
        d * d + deficit * deficit
    };
    let span = (bound - c0 + y0).abs() + 1.0;
    let d = ternary(-span, span, phi);
    phi(d)
}
