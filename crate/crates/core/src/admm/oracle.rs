//! Slow, independent reference solver for the convex surrogate.
//!
//! A log-barrier interior-point method with dense Newton steps on the
//! epigraph form of the problem. Every beamformer is split into real and
//! imaginary parts; the imaginary-part constraint on `h_m^H w_m` is dropped,
//! which leaves the optimal value unchanged (rotating `w_m` by a phase makes
//! `h_m^H w_m` real and nonnegative without affecting anything else).
//!
//! Only meant for small instances in tests and diagnostics.

use nalgebra::{DMatrix, DVector};

use super::graph::{CouplingGraph, LinkKind};
use super::objective::surrogate_objective;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Half the squared Newton decrement below which a center is accepted.
const CENTERED: f64 = 1e-9;
const ROUNDING_DECREMENT: f64 = 1e-6;

/// Largest `nodes * users * antennas` the oracle accepts.
pub const MAX_ORACLE_SIZE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Barrier weight growth per outer step.
    pub growth: f64,
    /// Target duality gap bound (number of barrier terms / barrier weight).
    pub gap: f64,
    pub max_newton: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            growth: 20.0,
            gap: 1e-9,
            max_newton: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub objective: f64,
    pub v: Vec<Vec<f64>>,
    pub w: Vec<CMatrix>,
    /// Duality gap bound at exit.
    pub gap: f64,
    /// Half the final Newton decrement divided by the barrier weight: an
    /// estimate of the suboptimality left by inexact centering.
    pub centering_error: f64,
    pub newton_steps: usize,
}

/// Value, sparse gradient and sparse Hessian entries of one barrier term.
type TermEval = (f64, Vec<(usize, f64)>, Vec<(usize, usize, f64)>);

/// One barrier term `-log g(x)` with `g` evaluated on a few coordinates.
enum Term {
    /// `(Re h^H w_m + v_m)^2 - gamma sum_n |h^H w_n|^2 - gamma sigma2`, with
    /// the sign condition `Re h^H w_m + v_m > 0`.
    Cone { node: usize, user: usize },
    Power { node: usize },
    Slack { node: usize, user: usize },
    /// `t - [rec_coeff / (1 + kappa v_rec) + lin_coeff (1 + kappa v_lin) + constant]`.
    Epigraph {
        t: usize,
        rec: Option<usize>,
        rec_coeff: f64,
        lin: Option<usize>,
        lin_coeff: f64,
        constant: f64,
    },
}

struct Layout {
    n: usize,
    m: usize,
    block: usize,
    nodes: usize,
    ts: usize,
}

impl Layout {
    fn w(&self, r: usize, k: usize, user: usize) -> usize {
        r * self.block + 2 * (user * self.n + k)
    }
    fn v(&self, r: usize, user: usize) -> usize {
        r * self.block + 2 * self.n * self.m + user
    }
    fn len(&self) -> usize {
        self.nodes * self.block + self.ts
    }
}

struct Problem<'a> {
    graph: &'a CouplingGraph,
    lay: Layout,
    terms: Vec<Term>,
    /// Linear objective coefficients and the diagonal quadratic weights.
    lin: DVector<f64>,
    quad: DVector<f64>,
    degree: f64,
}

impl<'a> Problem<'a> {
    fn new(graph: &'a CouplingGraph, reference: &[Vec<f64>]) -> Self {
        let (n, m) = (graph.num_antennas, graph.num_users);
        let k = graph.kappa;
        let links = graph.links();
        let t_links: Vec<_> = links.iter().filter(|l| l.has_switch_cost()).collect();
        let lay = Layout {
            n,
            m,
            block: 2 * n * m + m,
            nodes: graph.num_nodes(),
            ts: t_links.len() * m,
        };
        let t0 = lay.nodes * lay.block;
        let mut lin = DVector::zeros(lay.len());
        let mut quad = DVector::zeros(lay.len());
        let mut terms = Vec::new();
        let mut degree = 0.0;
        for (r, node) in graph.nodes.iter().enumerate() {
            for i in 0..2 * n * m {
                quad[r * lay.block + i] = node.power_weight;
            }
            terms.push(Term::Power { node: r });
            degree += 1.0;
            for user in 0..m {
                let u = 1.0 + k * reference[r][user];
                lin[lay.v(r, user)] = node.reject_weight * k / (u * u);
                terms.push(Term::Cone { node: r, user });
                terms.push(Term::Slack { node: r, user });
                degree += 3.0;
            }
        }
        for (li, link) in t_links.iter().enumerate() {
            for user in 0..m {
                let t = t0 + li * m + user;
                lin[t] = link.weight;
                let uref = |r: usize| 1.0 + k * reference[r][user];
                match &link.kind {
                    LinkKind::Switch { tail, head } => {
                        for (a, b) in [(*tail, *head), (*head, *tail)] {
                            let ub = uref(b);
                            terms.push(Term::Epigraph {
                                t,
                                rec: Some(lay.v(a, user)),
                                rec_coeff: 1.0,
                                lin: Some(lay.v(b, user)),
                                lin_coeff: 1.0 / (ub * ub),
                                constant: -2.0 / ub,
                            });
                        }
                    }
                    LinkKind::Anchor { node, status } => {
                        let p = status[user];
                        let u = uref(*node);
                        terms.push(Term::Epigraph {
                            t,
                            rec: Some(lay.v(*node, user)),
                            rec_coeff: 1.0,
                            lin: None,
                            lin_coeff: 0.0,
                            constant: -p,
                        });
                        terms.push(Term::Epigraph {
                            t,
                            rec: None,
                            rec_coeff: 0.0,
                            lin: Some(lay.v(*node, user)),
                            lin_coeff: 1.0 / (u * u),
                            constant: p - 2.0 / u,
                        });
                    }
                    LinkKind::Free { .. } => unreachable!("filtered above"),
                }
                degree += 2.0;
            }
        }
        Self {
            graph,
            lay,
            terms,
            lin,
            quad,
            degree,
        }
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        x.iter()
            .zip(self.lin.iter().zip(self.quad.iter()))
            .map(|(xi, (l, q))| l * xi + q * xi * xi)
            .sum()
    }

    /// Linear maps `x -> (Re, Im) of h_m^H w_n` as coefficient lists.
    fn channel_form(&self, r: usize, m: usize, n: usize) -> Vec<(usize, f64, f64)> {
        let h = &self.graph.nodes[r].channel;
        (0..self.lay.n)
            .flat_map(|k| {
                let hk = h[(k, m)];
                let i = self.lay.w(r, k, n);
                // conj(h)(a + ib) = (h_re a + h_im b) + i (h_re b - h_im a)
                [(i, hk.re, -hk.im), (i + 1, hk.im, hk.re)]
            })
            .collect()
    }

    /// Value, sparse gradient and sparse Hessian of `g` for one term, or
    /// `None` outside the domain.
    fn eval(&self, term: &Term, x: &DVector<f64>) -> Option<TermEval> {
        let k = self.graph.kappa;
        match *term {
            Term::Cone { node, user } => {
                let gamma = self.graph.qos_target;
                let own = self.channel_form(node, user, user);
                let vi = self.lay.v(node, user);
                let s = own.iter().map(|&(i, re, _)| re * x[i]).sum::<f64>() + x[vi];
                if !(s > 0.0) {
                    return None;
                }
                let mut grad_s: Vec<(usize, f64)> = own.iter().map(|&(i, re, _)| (i, re)).collect();
                grad_s.push((vi, 1.0));
                let mut g = s * s - gamma * self.graph.noise_power;
                let mut grad: Vec<(usize, f64)> = grad_s.iter().map(|&(i, c)| (i, 2.0 * s * c)).collect();
                let mut hess = Vec::new();
                for &(i, ci) in &grad_s {
                    for &(j, cj) in &grad_s {
                        hess.push((i, j, 2.0 * ci * cj));
                    }
                }
                for other in (0..self.lay.m).filter(|&o| o != user) {
                    let form = self.channel_form(node, user, other);
                    let re = form.iter().map(|&(i, a, _)| a * x[i]).sum::<f64>();
                    let im = form.iter().map(|&(i, _, b)| b * x[i]).sum::<f64>();
                    g -= gamma * (re * re + im * im);
                    for &(i, a, b) in &form {
                        grad.push((i, -2.0 * gamma * (re * a + im * b)));
                        for &(j, a2, b2) in &form {
                            hess.push((i, j, -2.0 * gamma * (a * a2 + b * b2)));
                        }
                    }
                }
                (g > 0.0).then_some((g, grad, hess))
            }
            Term::Power { node } => {
                let start = node * self.lay.block;
                let len = 2 * self.lay.n * self.lay.m;
                let sq: f64 = (start..start + len).map(|i| x[i] * x[i]).sum();
                let g = self.graph.power_budget - sq;
                (g > 0.0).then(|| {
                    let grad = (start..start + len).map(|i| (i, -2.0 * x[i])).collect();
                    let hess = (start..start + len).map(|i| (i, i, -2.0)).collect();
                    (g, grad, hess)
                })
            }
            Term::Slack { node, user } => {
                let i = self.lay.v(node, user);
                (x[i] > 0.0).then(|| (x[i], vec![(i, 1.0)], Vec::new()))
            }
            Term::Epigraph {
                t,
                rec,
                rec_coeff,
                lin,
                lin_coeff,
                constant,
            } => {
                let mut value = constant;
                let mut grad = vec![(t, 1.0)];
                let mut hess = Vec::new();
                if let Some(i) = rec {
                    let d = 1.0 + k * x[i];
                    if !(d > 0.0) {
                        return None;
                    }
                    value += rec_coeff / d;
                    grad.push((i, rec_coeff * k / (d * d)));
                    hess.push((i, i, -2.0 * rec_coeff * k * k / (d * d * d)));
                }
                if let Some(i) = lin {
                    value += lin_coeff * (1.0 + k * x[i]);
                    grad.push((i, -lin_coeff * k));
                }
                let g = x[t] - value;
                (g > 0.0).then_some((g, grad, hess))
            }
        }
    }

    /// Barrier value, gradient and Hessian; `None` if `x` is infeasible.
    fn barrier(&self, x: &DVector<f64>, with_derivatives: bool) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let len = self.lay.len();
        let mut value = 0.0;
        let (mut grad, mut hess) = if with_derivatives {
            (DVector::zeros(len), DMatrix::zeros(len, len))
        } else {
            (DVector::zeros(0), DMatrix::zeros(0, 0))
        };
        for term in &self.terms {
            let (g, dg, d2g) = self.eval(term, x)?;
            value -= g.ln();
            if !with_derivatives {
                continue;
            }
            let mut dense = DVector::zeros(len);
            for &(i, c) in &dg {
                dense[i] += c;
            }
            grad -= &dense / g;
            hess.ger(1.0 / (g * g), &dense, &dense, 1.0);
            for &(i, j, c) in &d2g {
                hess[(i, j)] -= c / g;
            }
        }
        Some((value, grad, hess))
    }

    fn start(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.lay.len());
        let lift = 2.0 * (self.graph.qos_target * self.graph.noise_power).sqrt() + 1.0;
        for r in 0..self.lay.nodes {
            for user in 0..self.lay.m {
                x[self.lay.v(r, user)] = lift;
            }
        }
        // t above every affine-plus-reciprocal bound
        let mut t_need = vec![f64::NEG_INFINITY; self.lay.len()];
        for term in &self.terms {
            if let Term::Epigraph { t, .. } = term {
                let mut probe = x.clone();
                probe[*t] = 0.0;
                let g = match self.eval(term, &probe) {
                    Some((g, _, _)) => g,
                    None => {
                        // g = -value < 0; recompute value directly
                        let mut p2 = probe.clone();
                        p2[*t] = 1e6;
                        self.eval(term, &p2).map(|(g, _, _)| g - 1e6).unwrap_or(-1e6)
                    }
                };
                t_need[*t] = t_need[*t].max(-g);
            }
        }
        for (i, need) in t_need.into_iter().enumerate() {
            if need.is_finite() {
                x[i] = need + 1.0;
            }
        }
        x
    }
}

/// Solves the convex surrogate of `graph` at `reference` by the barrier method.
pub fn reference_oracle(graph: &CouplingGraph, reference: &[Vec<f64>], opts: OracleOptions) -> Result<OracleSolution> {
    graph.validate()?;
    let size = graph.num_nodes() * graph.num_users * graph.num_antennas;
    if size > MAX_ORACLE_SIZE {
        return Err(Error::InvalidArgument(format!(
            "oracle limited to nodes*users*antennas <= {MAX_ORACLE_SIZE}, got {size}"
        )));
    }
    if reference.len() != graph.num_nodes() || reference.iter().any(|r| r.len() != graph.num_users) {
        return Err(Error::Dimension("reference slack shape does not match graph".into()));
    }
    let prob = Problem::new(graph, reference);
    let mut x = prob.start();
    let mut tau = (prob.degree / prob.objective(&x).abs().max(1.0)).min(1.0);
    let mut steps = 0;
    let centering_error;
    loop {
        // centering by damped Newton
        let last_decrement = loop {
            let (phi, g_bar, h_bar) = prob
                .barrier(&x, true)
                .ok_or_else(|| Error::Numerical("oracle iterate left the domain".into()))?;
            let mut grad = g_bar;
            let mut hess = h_bar;
            for i in 0..x.len() {
                grad[i] += tau * (prob.lin[i] + 2.0 * prob.quad[i] * x[i]);
                hess[(i, i)] += 2.0 * tau * prob.quad[i];
            }
            let chol = nalgebra::Cholesky::new(hess.clone())
                .or_else(|| {
                    let scale = hess.diagonal().amax().max(1.0);
                    nalgebra::Cholesky::new(hess + DMatrix::identity(x.len(), x.len()) * (1e-12 * scale))
                })
                .ok_or_else(|| Error::Numerical("oracle Hessian is not positive definite".into()))?;
            let dx = -chol.solve(&grad);
            let decrement = -grad.dot(&dx);
            let f_at = |y: &DVector<f64>| prob.barrier(y, false).map(|(b, _, _)| tau * prob.objective(y) + b);
            let f0 = tau * prob.objective(&x) + phi;
            // below ~1e-13 |f0| the decrement is lost in rounding of f0 itself
            if decrement / 2.0 <= CENTERED.max(1e-13 * f0.abs()) {
                break decrement / 2.0;
            }
            let mut step = 1.0;
            let moved = loop {
                let y = &x + &dx * step;
                if let Some(fy) = f_at(&y) {
                    if fy < f0 - 0.25 * step * decrement {
                        x = y;
                        break true;
                    }
                }
                step *= 0.5;
                if step < 1e-20 {
                    break false;
                }
            };
            if !moved {
                // rounding floor of the centering objective
                if decrement <= ROUNDING_DECREMENT {
                    break decrement / 2.0;
                }
                return Err(Error::Numerical("oracle line search stalled".into()));
            }
            steps += 1;
            if steps > opts.max_newton {
                return Err(Error::Numerical("oracle Newton step cap reached".into()));
            }
        };
        if prob.degree / tau <= opts.gap {
            centering_error = last_decrement / tau;
            break;
        }
        tau *= opts.growth;
    }
    let lay = &prob.lay;
    let v: Vec<Vec<f64>> = (0..lay.nodes)
        .map(|r| (0..lay.m).map(|u| x[lay.v(r, u)]).collect())
        .collect();
    let w: Vec<CMatrix> = (0..lay.nodes)
        .map(|r| CMatrix::from_fn(lay.n, lay.m, |k, u| C64::new(x[lay.w(r, k, u)], x[lay.w(r, k, u) + 1])))
        .collect();
    Ok(OracleSolution {
        objective: surrogate_objective(graph, reference, &v, &w),
        v,
        w,
        gap: prob.degree / tau,
        centering_error,
        newton_steps: steps,
    })
}
