//! Closed-form and root-finding block updates of the consensus ADMM.
//!
//! Each function here solves one low-dimensional subproblem exactly; the
//! solver in [`super::solver`] wires them to the state.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, C64};

/// Eigendecomposition `V diag(values) V^H` of `H H^H` with the products
/// `V^H H` and `H^H V`, reused by every W update of a node.
#[derive(Debug, Clone)]
pub struct GramEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    vh_h: CMatrix,
    hh_v: CMatrix,
}

impl GramEigen {
    pub fn new(h: &CMatrix) -> Self {
        let gram = h * h.adjoint();
        let (values, vectors) = hermitian_eigen(&gram);
        let vh_h = vectors.ad_mul(h);
        Self {
            values: values.into_iter().map(|x| x.max(0.0)).collect(),
            hh_v: vh_h.adjoint(),
            vectors,
            vh_h,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WUpdate {
    pub w: CMatrix,
    /// `H^H W`.
    pub hw: CMatrix,
    /// Multiplier of the power budget.
    pub alpha: f64,
}

/// Minimises `lambda0 ||W||^2 + rho/2 ||E_w - H^H W||^2 - Re Tr(Omega_w^H H^H W)`
/// subject to `||W||_F^2 <= power`, where `eig` belongs to `H`.
///
/// `target` is `rho E_w + Omega_w` (M x M). The solution is
/// `[rho H H^H + 2(lambda0 + alpha) I]^{-1} H target`, with `alpha >= 0` found
/// by bisection on the (nonincreasing) power curve.
pub fn update_w(
    eig: &GramEigen,
    target: &CMatrix,
    rho: f64,
    power_weight: f64,
    power: f64,
    tol: f64,
    max_iter: usize,
) -> Result<WUpdate> {
    let mut rotated = &eig.vh_h * target;
    let row_energy: Vec<f64> = (0..rotated.nrows())
        .map(|i| rotated.row(i).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let power_at = |alpha: f64| -> f64 {
        eig.values
            .iter()
            .zip(&row_energy)
            .map(|(&l, &e)| {
                let d = rho * l + 2.0 * (power_weight + alpha);
                e / (d * d)
            })
            .sum()
    };
    let alpha = if power_at(0.0) <= power {
        0.0
    } else {
        let mut hi = 1.0;
        let mut doublings = 0;
        while power_at(hi) > power {
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::Numerical("power multiplier bisection failed to bracket".into()));
            }
        }
        let mut lo = 0.0;
        let mut it = 0;
        while hi - lo > tol && it < max_iter {
            let mid = 0.5 * (lo + hi);
            if power_at(mid) > power {
                lo = mid;
            } else {
                hi = mid;
            }
            it += 1;
        }
        hi
    };
    for (i, &l) in eig.values.iter().enumerate() {
        let d = 1.0 / (rho * l + 2.0 * (power_weight + alpha));
        rotated.row_mut(i).scale_mut(d);
    }
    Ok(WUpdate {
        w: &eig.vectors * &rotated,
        hw: &eig.hh_v * rotated,
        alpha,
    })
}

/// Solution of the reciprocal epigraph projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epigraph {
    pub b: f64,
    pub x: f64,
    pub s: Option<f64>,
    pub beta: f64,
}

/// Projects `(b0, x0, s0)` onto `{b - s + offset >= 1/x, x >= 1}` in the
/// `rho/2`-scaled Euclidean norm. Without `s0` the variable `s` is absent
/// (the anchor form `b >= 1/x - p`).
///
/// If the constraint holds at `beta = 0` (`Gamma >= 1/max(x0, 1)` with
/// `Gamma = b0 - s0 + offset`) nothing moves. Otherwise the multiplier `beta`
/// solves `max(x0 + beta (n beta + rho Gamma)^2 / rho^3, 1) = rho / (n beta + rho Gamma)`
/// by safeguarded Newton on `[max(0, -rho Gamma/n), rho (1 - Gamma)/n]`, where `n` is
/// the number of free variables besides `x` on the left-hand side. `start`
/// seeds the iteration (the previous multiplier, say); outside the bracket
/// the midpoint is used.
#[allow(clippy::too_many_arguments)]
pub fn recip_epigraph(
    b0: f64,
    x0: f64,
    s0: Option<f64>,
    offset: f64,
    rho: f64,
    start: f64,
    tol: f64,
    max_iter: usize,
) -> Epigraph {
    let n = if s0.is_some() { 2.0 } else { 1.0 };
    let gamma = b0 - s0.unwrap_or(0.0) + offset;
    let x_free = x0.max(1.0);
    if gamma >= 1.0 / x_free {
        return Epigraph { b: b0, x: x_free, s: s0, beta: 0.0 };
    }
    let rho3 = rho * rho * rho;
    let x_of = |beta: f64| {
        let lhs = n * beta + rho * gamma;
        (x0 + beta * lhs * lhs / rho3).max(1.0)
    };
    // excess(beta) = x(beta) - rho/(n beta + rho Gamma) is increasing; Newton
    // steps that leave the bracket fall back to bisection
    let mut lo = (-rho * gamma / n).max(0.0);
    let mut hi = rho * (1.0 - gamma) / n;
    let mut beta = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    let mut it = 0;
    while hi - lo > tol && it < max_iter {
        it += 1;
        let lhs = n * beta + rho * gamma;
        if lhs <= 0.0 {
            lo = beta;
            beta = 0.5 * (lo + hi);
            continue;
        }
        let raw = x0 + beta * lhs * lhs / rho3;
        let excess = raw.max(1.0) - rho / lhs;
        if excess < 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let slope = if raw > 1.0 { lhs * (lhs + 2.0 * n * beta) / rho3 } else { 0.0 } + n * rho / (lhs * lhs);
        let next = beta - excess / slope;
        if (next - beta).abs() <= 0.25 * tol {
            // converged: close the bracket on the feasible side
            hi = if excess >= 0.0 { beta } else { hi.min(beta + tol) };
            break;
        }
        beta = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    let beta = hi;
    Epigraph {
        b: b0 + beta / rho,
        x: x_of(beta),
        s: s0.map(|s| s - beta / rho),
        beta,
    }
}

/// Projects `(c0, y0)` onto the half-space `c - y >= bound`.
pub fn halfspace_epigraph(c0: f64, y0: f64, bound: f64) -> (f64, f64) {
    let deficit = bound - (c0 - y0);
    if deficit <= 0.0 {
        (c0, y0)
    } else {
        (c0 + 0.5 * deficit, y0 - 0.5 * deficit)
    }
}

/// Output of the second-order-cone prox.
#[derive(Debug, Clone, PartialEq)]
pub struct SocProx {
    pub e: Vec<C64>,
    pub v: f64,
    pub mu: f64,
}

/// Minimises `rho/2 ||e - g/rho||^2 + rho q/2 v^2 - f v` over
/// `{Re e_own + v >= sqrt(gamma) ||e_{-own}||, Im e_own = 0}`.
pub fn soc_prox(g: &[C64], own: usize, f: f64, q: f64, rho: f64, gamma: f64) -> Result<SocProx> {
    if !(q > 0.0) {
        return Err(Error::Structural(
            "prox curvature q is zero: node has no duplicate carrying its slack".into(),
        ));
    }
    let sg = gamma.sqrt();
    let g_own = g[own].re;
    let g_rest: f64 = g
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != own)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let collapse = (-f - q * g_own).max(0.0) / (1.0 + q);
    let mut e = vec![C64::new(0.0, 0.0); g.len()];
    let mu = if g_rest <= sg * collapse {
        collapse
    } else {
        let mu = (q * (sg * g_rest - g_own) - f).max(0.0) / (1.0 + (1.0 + gamma) * q);
        let scale = (g_rest - mu * sg) / (rho * g_rest);
        for (i, z) in g.iter().enumerate() {
            if i != own {
                e[i] = z * scale;
            }
        }
        mu
    };
    e[own] = C64::new((g_own + mu) / rho, 0.0);
    Ok(SocProx {
        e,
        v: (f + mu) / (rho * q),
        mu,
    })
}

/// Coefficients `(f, q)` of the slack's quadratic `rho q/2 v^2 - f v` in the
/// SOC prox, accumulated over the duplicate pairs referencing the node.
///
/// `kappa` is the slope of `u` in the prox variable (the smoothing sharpness,
/// divided by any row scaling applied to the slack) and `u_ref` is
/// `1 + kappa v_ref` in unscaled units. Each pair is
/// `(u, l, dual_u, dual_l, rho_pair)` where `u` copies `1 + kappa v`, `l`
/// copies `(1 + kappa v)/u_ref^2` and `rho_pair` is the penalty of both rows.
pub fn prox_coefficients(
    kappa: f64,
    rho: f64,
    reject_weight: f64,
    u_ref: f64,
    pairs: impl IntoIterator<Item = (f64, f64, f64, f64, f64)>,
) -> (f64, f64) {
    let inv_sq = 1.0 / (u_ref * u_ref);
    let mut acc = 0.0;
    let mut weight = 0.0;
    for (u, l, du, dl, rp) in pairs {
        acc += du + rp * (u - 1.0) + (dl + rp * (l - inv_sq)) * inv_sq;
        weight += rp;
    }
    let f = kappa * acc - reject_weight * kappa * inv_sq;
    let q = kappa * kappa * (weight / rho) * (1.0 + inv_sq * inv_sq);
    (f, q)
}

/// `a = (b + c)/2 - (weight + theta + phi)/(2 rho)`.
pub fn update_a(b: f64, c: f64, weight: f64, theta: f64, phi: f64, rho: f64) -> f64 {
    0.5 * (b + c) - (weight + theta + phi) / (2.0 * rho)
}
