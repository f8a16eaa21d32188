//! Consensus ADMM over a coupling graph.
//!
//! One iteration runs three stages separated by barriers:
//!
//! 1. first block: `W(r)` per node, then `(b, x, s)` and `(c, y, z)` per link
//!    and user;
//! 2. second block: `(e^m(r), v_m(r))` per node and user, then `a` per link
//!    and user;
//! 3. multipliers.
//!
//! Node tasks and link tasks within a stage touch disjoint state, so they may
//! run on separate workers. Residuals are reduced sequentially in index order,
//! which keeps the result independent of the worker count.
//!
//! Each user's consensus row `e^m = [h_m^H W, sigma]` is scaled by
//! `g/||h_m||` for a fixed gain `g` (optional, on by default). In the scaled
//! row the slack becomes `g v/||h_m||`, so the cone is unchanged and only the slope linking the slack
//! to its duplicates changes. This is a change of variables, not a change of
//! problem; it evens out the channel gains, which otherwise span several
//! orders of magnitude and stall convergence.

use std::io::Write;
use std::sync::Mutex;

use super::blocks::{
    halfspace_epigraph, prox_coefficients, recip_epigraph, soc_prox, update_a, update_w, GramEigen,
};
use super::graph::{CouplingGraph, Link, LinkKind, PairRef};
use super::objective::surrogate_objective;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::model::ProblemConfig;
use crate::par::{for_each_mut, Exec};

/// Cap on penalty changes per solve under residual balancing.
const MAX_RESCALES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub bisect_tol: f64,
    pub bisect_max_iter: usize,
    pub residual_balancing: bool,
    /// Over-relaxation factor in `(0, 2)`; 1 is plain ADMM.
    pub relaxation: f64,
    /// Scale each user's consensus row by the inverse channel norm.
    pub precondition: bool,
    /// Target norm of a scaled channel column. Values near 10 balance the
    /// QoS multipliers against the slack penalties for the default weights.
    pub row_gain: f64,
    pub exec: Exec,
    /// Record the surrogate objective every iteration.
    pub trace: bool,
}

impl AdmmOptions {
    pub fn from_config(cfg: &ProblemConfig) -> Self {
        Self {
            rho: cfg.admm_penalty,
            tol: cfg.admm_tol,
            max_iter: cfg.admm_max_iter,
            bisect_tol: cfg.bisect_tol,
            bisect_max_iter: cfg.bisect_max_iter,
            residual_balancing: cfg.residual_balancing,
            relaxation: 1.0,
            precondition: true,
            row_gain: 10.0,
            exec: Exec::Sequential,
            trace: false,
        }
    }
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self::from_config(&ProblemConfig::desk())
    }
}

/// Root-mean-square primal and dual residuals, with the scales used by the
/// relative part of the stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal_norm: f64,
    pub dual_norm: f64,
    /// RMS over constraint rows of the larger side of each row.
    pub primal_scale: f64,
    /// RMS of the multipliers.
    pub dual_scale: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal_norm.max(self.dual_norm)
    }

    /// `primal <= tol (1 + primal_scale)` and `dual <= tol (1 + dual_scale)`.
    pub fn within(&self, tol: f64) -> bool {
        self.primal_norm <= tol * (1.0 + self.primal_scale) && self.dual_norm <= tol * (1.0 + self.dual_scale)
    }
}

/// Squared sums gathered by one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Sums {
    primal: f64,
    dual: f64,
    primal_scale: f64,
    dual_scale: f64,
}

impl Sums {
    fn add(&mut self, o: &Sums) {
        self.primal += o.primal;
        self.dual += o.dual;
        self.primal_scale += o.primal_scale;
        self.dual_scale += o.dual_scale;
    }

    /// One consensus row `lhs = rhs` with multiplier `y`.
    fn row(&mut self, lhs: f64, rhs: f64, y: f64) {
        self.primal += (lhs - rhs) * (lhs - rhs);
        self.primal_scale += (lhs * lhs).max(rhs * rhs);
        self.dual_scale += y * y;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub primal_norm: f64,
    pub dual_norm: f64,
    pub objective: f64,
}

pub fn write_trace_csv(rows: &[TraceRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# admm-trace v1")?;
    writeln!(out, "iteration,primal_norm,dual_norm,objective")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.iteration,
            crate::experiments::fmt9(r.primal_norm),
            crate::experiments::fmt9(r.dual_norm),
            crate::experiments::fmt9(r.objective)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ConvexSolution {
    pub v: Vec<Vec<f64>>,
    pub w: Vec<CMatrix>,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
    pub rho: f64,
    pub trace: Vec<TraceRow>,
}

/// Duplicates `u ~ 1 + kappa v` and `l ~ (1 + kappa v)/(1 + kappa v_ref)^2`
/// of one node's slacks, with their multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    pub u: Vec<f64>,
    pub l: Vec<f64>,
    pub dual_u: Vec<f64>,
    pub dual_l: Vec<f64>,
}

impl PairState {
    fn new(m: usize) -> Self {
        Self {
            u: vec![1.0; m],
            l: vec![1.0; m],
            dual_u: vec![0.0; m],
            dual_l: vec![0.0; m],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// `(x, y)` with multipliers `(epsilon, delta)`.
    pub tail: PairState,
    /// `(z, s)` with multipliers `(tau, eta)`.
    pub head: Option<PairState>,
    /// Last epigraph multipliers of the `(b, x, s)` and `(c, y, z)` blocks,
    /// used to seed the next root search.
    warm: Vec<[f64; 2]>,
    sums: Sums,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub w: CMatrix,
    /// Scaled consensus copy of `[H^H W, sigma 1]`.
    pub e: CMatrix,
    pub omega: CMatrix,
    /// `kappa v` per user.
    pub kv: Vec<f64>,
    consensus: CMatrix,
    kv_step: Vec<f64>,
    sums: Sums,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub nodes: Vec<NodeState>,
    pub links: Vec<LinkState>,
    pub rho: f64,
}

/// Per-node constants: the row-scaled channel and its Gram eigensystem.
#[derive(Debug, Clone)]
struct NodeData {
    eig: GramEigen,
    /// Row scale of each user.
    scale: Vec<f64>,
}

impl NodeData {
    fn new(channel: &CMatrix, scale: Vec<f64>) -> Self {
        let mut scaled = channel.clone();
        for (j, &d) in scale.iter().enumerate() {
            scaled.column_mut(j).scale_mut(d);
        }
        let eig = GramEigen::new(&scaled);
        Self { eig, scale }
    }
}

/// `g / ||h_m||` per user, or all ones without preconditioning.
fn row_scales(channel: &CMatrix, opts: &AdmmOptions) -> Vec<f64> {
    (0..channel.ncols())
        .map(|j| {
            let norm = channel.column(j).norm();
            if opts.precondition && norm > 0.0 {
                opts.row_gain / norm
            } else {
                1.0
            }
        })
        .collect()
}

pub struct AdmmSolver {
    graph: CouplingGraph,
    links: Vec<Link>,
    incidence: Vec<Vec<PairRef>>,
    data: Vec<NodeData>,
    opts: AdmmOptions,
    state: AdmmState,
    fresh: bool,
}

impl AdmmSolver {
    pub fn new(graph: CouplingGraph, opts: AdmmOptions) -> Result<Self> {
        graph.validate()?;
        let links = graph.links();
        let incidence = CouplingGraph::incidence(&links, graph.num_nodes());
        if let Some(r) = incidence.iter().position(Vec::is_empty) {
            return Err(Error::Structural(format!("node {r} has no duplicate pair")));
        }
        let (m, n) = (graph.num_users, graph.num_antennas);
        let sigma = graph.noise_power.sqrt();
        let data: Vec<NodeData> = graph
            .nodes
            .iter()
            .map(|node| NodeData::new(&node.channel, row_scales(&node.channel, &opts)))
            .collect();
        let nodes = data
            .iter()
            .map(|d| {
                let mut consensus = CMatrix::zeros(m, m + 1);
                for (j, &s) in d.scale.iter().enumerate() {
                    consensus[(j, m)] = C64::new(s * sigma, 0.0);
                }
                NodeState {
                    w: CMatrix::zeros(n, m),
                    e: consensus.clone(),
                    omega: CMatrix::zeros(m, m + 1),
                    kv: vec![0.0; m],
                    consensus,
                    kv_step: vec![0.0; m],
                    sums: Sums::default(),
                }
            })
            .collect();
        let link_states = links
            .iter()
            .map(|l| LinkState {
                a: vec![0.0; m],
                b: vec![0.0; m],
                c: vec![0.0; m],
                theta: vec![0.0; m],
                phi: vec![0.0; m],
                tail: PairState::new(m),
                head: l.head_node().map(|_| PairState::new(m)),
                warm: vec![[0.0; 2]; m],
                sums: Sums::default(),
            })
            .collect();
        Ok(Self {
            graph,
            links,
            incidence,
            data,
            state: AdmmState {
                nodes,
                links: link_states,
                rho: opts.rho,
            },
            opts,
            fresh: true,
        })
    }

    pub fn graph(&self) -> &CouplingGraph {
        &self.graph
    }

    pub fn state(&self) -> &AdmmState {
        &self.state
    }

    pub fn options_mut(&mut self) -> &mut AdmmOptions {
        &mut self.opts
    }

    /// Number of scalar consensus constraints (complex entries count twice).
    fn constraint_count(&self) -> f64 {
        let m = self.graph.num_users;
        let e = 2 * self.graph.num_nodes() * m * (m + 1);
        let pairs: usize = self.incidence.iter().map(Vec::len).sum::<usize>() * 2 * m;
        let ab = self.links.iter().filter(|l| l.has_switch_cost()).count() * 2 * m;
        (e + pairs + ab) as f64
    }

    /// Solves the convex surrogate at reference slacks `reference` (one vector
    /// per node), warm-starting from the previous call.
    pub fn solve(&mut self, reference: &[Vec<f64>]) -> Result<ConvexSolution> {
        let g = &self.graph;
        if reference.len() != g.num_nodes() || reference.iter().any(|r| r.len() != g.num_users) {
            return Err(Error::Dimension("reference slack shape does not match graph".into()));
        }
        if reference.iter().flatten().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidArgument("reference slacks must be nonnegative".into()));
        }
        let u_ref: Vec<Vec<f64>> = reference
            .iter()
            .map(|r| r.iter().map(|&x| 1.0 + g.kappa * x).collect())
            .collect();
        if self.fresh {
            self.initialise_duplicates(&u_ref);
            self.fresh = false;
        }

        let count = self.constraint_count();
        let mut trace = Vec::new();
        let mut last = Residuals::default();
        let mut since_rescale = 0usize;
        let mut rescales = 0usize;
        for it in 1..=self.opts.max_iter {
            let sums = self.iterate(&u_ref)?;
            last = Residuals {
                primal_norm: (sums.primal / count).sqrt(),
                dual_norm: (sums.dual / count).sqrt(),
                primal_scale: (sums.primal_scale / count).sqrt(),
                dual_scale: (sums.dual_scale / count).sqrt(),
            };
            if self.opts.trace {
                trace.push(TraceRow {
                    iteration: it,
                    primal_norm: last.primal_norm,
                    dual_norm: last.dual_norm,
                    objective: surrogate_objective(&self.graph, reference, &self.v(), &self.w()),
                });
            }
            if last.within(self.opts.tol) {
                return Ok(self.solution(last, it, true, trace));
            }
            since_rescale += 1;
            // a bounded number of changes keeps the fixed-penalty convergence guarantee
            if self.opts.residual_balancing && since_rescale >= 10 && rescales < MAX_RESCALES {
                let factor = if last.primal_norm > 10.0 * last.dual_norm {
                    2.0
                } else if last.dual_norm > 10.0 * last.primal_norm {
                    0.5
                } else {
                    1.0
                };
                if factor != 1.0 {
                    self.state.rho *= factor;
                    since_rescale = 0;
                    rescales += 1;
                }
            }
        }
        Ok(self.solution(last, self.opts.max_iter, false, trace))
    }

    /// Current slacks, one vector per node.
    pub fn v(&self) -> Vec<Vec<f64>> {
        let k = self.graph.kappa;
        self.state
            .nodes
            .iter()
            .map(|n| n.kv.iter().map(|x| x / k).collect())
            .collect()
    }

    pub fn w(&self) -> Vec<CMatrix> {
        self.state.nodes.iter().map(|n| n.w.clone()).collect()
    }

    /// Largest absolute consensus violation per group: `E` copies, `a = b = c`,
    /// and the slack duplicates.
    pub fn violation(&self, reference: &[Vec<f64>]) -> [f64; 3] {
        let k = self.graph.kappa;
        let e = self
            .state
            .nodes
            .iter()
            .flat_map(|n| n.e.iter().zip(n.consensus.iter()).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max);
        let mut ab: f64 = 0.0;
        let mut pairs: f64 = 0.0;
        for (link, st) in self.links.iter().zip(&self.state.links) {
            let mut check = |p: &PairState, node: usize| {
                for m in 0..self.graph.num_users {
                    let kv = self.state.nodes[node].kv[m];
                    let u = 1.0 + k * reference[node][m];
                    pairs = pairs
                        .max((p.u[m] - 1.0 - kv).abs())
                        .max((p.l[m] - (1.0 + kv) / (u * u)).abs());
                }
            };
            check(&st.tail, link.tail_node());
            if let (Some(h), Some(hd)) = (link.head_node(), st.head.as_ref()) {
                check(hd, h);
            }
            if link.has_switch_cost() {
                for m in 0..self.graph.num_users {
                    ab = ab.max((st.a[m] - st.b[m]).abs()).max((st.a[m] - st.c[m]).abs());
                }
            }
        }
        [e, ab, pairs]
    }

    fn solution(&self, residuals: Residuals, iterations: usize, converged: bool, trace: Vec<TraceRow>) -> ConvexSolution {
        ConvexSolution {
            v: self.v(),
            w: self.w(),
            residuals,
            iterations,
            converged,
            rho: self.state.rho,
            trace,
        }
    }

    fn initialise_duplicates(&mut self, u_ref: &[Vec<f64>]) {
        for (link, st) in self.links.iter().zip(self.state.links.iter_mut()) {
            let tail = link.tail_node();
            for (l, u) in st.tail.l.iter_mut().zip(&u_ref[tail]) {
                *l = 1.0 / (u * u);
            }
            if let (Some(h), Some(head)) = (link.head_node(), st.head.as_mut()) {
                for (l, u) in head.l.iter_mut().zip(&u_ref[h]) {
                    *l = 1.0 / (u * u);
                }
            }
        }
    }

    /// One ADMM iteration; returns the squared residual and scale sums.
    fn iterate(&mut self, u_ref: &[Vec<f64>]) -> Result<Sums> {
        let exec = self.opts.exec;
        let rho = self.state.rho;
        let graph = &self.graph;
        let opts = &self.opts;
        let data = &self.data;
        let links = &self.links;
        let incidence = &self.incidence;
        let m_users = graph.num_users;
        let kappa = graph.kappa;
        let alpha = opts.relaxation;
        let failure = Mutex::new(None::<Error>);
        let fail = |e: Error| {
            failure.lock().expect("poisoned").get_or_insert(e);
        };

        // Stage 1a: beamformers.
        for_each_mut(exec, &mut self.state.nodes, |r, node| {
            let target = node.e.columns(0, m_users) * C64::new(rho, 0.0) + node.omega.columns(0, m_users);
            match update_w(
                &data[r].eig,
                &target,
                rho,
                graph.nodes[r].power_weight,
                graph.power_budget,
                opts.bisect_tol,
                opts.bisect_max_iter,
            ) {
                Ok(up) => {
                    node.w = up.w;
                    node.consensus.columns_mut(0, m_users).copy_from(&up.hw);
                }
                Err(e) => fail(e),
            }
        });

        // Stage 1b: epigraph blocks, reading the current slacks.
        let nodes = &self.state.nodes;
        for_each_mut(exec, &mut self.state.links, |l, st| {
            for m in 0..m_users {
                let b0 = st.a[m] + st.theta[m] / rho;
                let c0 = st.a[m] + st.phi[m] / rho;
                match &links[l].kind {
                    LinkKind::Switch { tail, head } => {
                        let (kt, kh) = (nodes[*tail].kv[m], nodes[*head].kv[m]);
                        let (ut, uh) = (u_ref[*tail][m], u_ref[*head][m]);
                        let hd = st.head.as_mut().expect("switch link has a head pair");
                        let x0 = 1.0 + kt - st.tail.dual_u[m] / rho;
                        let s0 = (1.0 + kh) / (uh * uh) - hd.dual_l[m] / rho;
                        let bx = recip_epigraph(b0, x0, Some(s0), 2.0 / uh, rho, st.warm[m][0], opts.bisect_tol, opts.bisect_max_iter);
                        st.b[m] = bx.b;
                        st.tail.u[m] = bx.x;
                        hd.l[m] = bx.s.unwrap_or(s0);
                        let z0 = 1.0 + kh - hd.dual_u[m] / rho;
                        let y0 = (1.0 + kt) / (ut * ut) - st.tail.dual_l[m] / rho;
                        let cz = recip_epigraph(c0, z0, Some(y0), 2.0 / ut, rho, st.warm[m][1], opts.bisect_tol, opts.bisect_max_iter);
                        st.warm[m] = [bx.beta, cz.beta];
                        st.c[m] = cz.b;
                        hd.u[m] = cz.x;
                        st.tail.l[m] = cz.s.unwrap_or(y0);
                    }
                    LinkKind::Anchor { node, status } => {
                        let kv = nodes[*node].kv[m];
                        let u = u_ref[*node][m];
                        let x0 = 1.0 + kv - st.tail.dual_u[m] / rho;
                        let bx = recip_epigraph(b0, x0, None, status[m], rho, st.warm[m][0], opts.bisect_tol, opts.bisect_max_iter);
                        st.warm[m][0] = bx.beta;
                        st.b[m] = bx.b;
                        st.tail.u[m] = bx.x;
                        let y0 = (1.0 + kv) / (u * u) - st.tail.dual_l[m] / rho;
                        let (c, y) = halfspace_epigraph(c0, y0, status[m] - 2.0 / u);
                        st.c[m] = c;
                        st.tail.l[m] = y;
                    }
                    LinkKind::Free { node } => {
                        let kv = nodes[*node].kv[m];
                        let u = u_ref[*node][m];
                        st.tail.u[m] = (1.0 + kv - st.tail.dual_u[m] / rho).max(1.0);
                        st.tail.l[m] = (1.0 + kv) / (u * u) - st.tail.dual_l[m] / rho;
                    }
                }
            }
        });

        // Stage 2a: SOC prox per node and user, then the E multiplier.
        let link_states = &self.state.links;
        for_each_mut(exec, &mut self.state.nodes, |r, node| {
            let mut row = vec![C64::new(0.0, 0.0); m_users + 1];
            let mut e_old = node.e.clone();
            let mut dual = 0.0;
            let inv_alpha = 1.0 - alpha;
            for m in 0..m_users {
                for (j, z) in row.iter_mut().enumerate() {
                    let relaxed = node.consensus[(m, j)] * alpha + node.e[(m, j)] * inv_alpha;
                    *z = relaxed * rho - node.omega[(m, j)];
                }
                let inv_sq = 1.0 / (u_ref[r][m] * u_ref[r][m]);
                let lift = 1.0 + node.kv[m];
                let pairs = incidence[r].iter().map(|&(l, is_head)| {
                    let p = if is_head {
                        link_states[l].head.as_ref().expect("head pair")
                    } else {
                        &link_states[l].tail
                    };
                    (
                        alpha * p.u[m] + inv_alpha * lift,
                        alpha * p.l[m] + inv_alpha * lift * inv_sq,
                        p.dual_u[m],
                        p.dual_l[m],
                        rho,
                    )
                });
                // slope of 1 + kappa v in the scaled slack
                let slope = kappa / data[r].scale[m];
                let (f, q) = prox_coefficients(slope, rho, graph.nodes[r].reject_weight, u_ref[r][m], pairs);
                match soc_prox(&row, m, f, q, rho, graph.qos_target) {
                    Ok(p) => {
                        for (j, z) in p.e.into_iter().enumerate() {
                            dual += (z - node.e[(m, j)]).norm_sqr();
                            e_old[(m, j)] = node.e[(m, j)];
                            node.e[(m, j)] = z;
                        }
                        let kv = slope * p.v;
                        node.kv_step[m] = kv - node.kv[m];
                        node.kv[m] = kv;
                    }
                    Err(e) => {
                        fail(e);
                        return;
                    }
                }
            }
            let mut sums = Sums {
                dual: rho * rho * dual,
                ..Sums::default()
            };
            for (o, ((e, f), old)) in node
                .omega
                .iter_mut()
                .zip(node.e.iter().zip(node.consensus.iter()).zip(e_old.iter()))
            {
                let diff = e - f;
                *o += (e - (f * alpha + old * (1.0 - alpha))) * rho;
                sums.primal += diff.norm_sqr();
                sums.primal_scale += e.norm_sqr().max(f.norm_sqr());
                sums.dual_scale += o.norm_sqr();
            }
            node.sums = sums;
        });
        if let Some(e) = failure.lock().expect("poisoned").take() {
            return Err(e);
        }

        // Stage 2b and 3: a per link, then link and pair multipliers.
        let nodes = &self.state.nodes;
        for_each_mut(exec, &mut self.state.links, |l, st| {
            let link = &links[l];
            let mut sums = Sums::default();
            for m in 0..m_users {
                if link.has_switch_cost() {
                    let b = alpha * st.b[m] + (1.0 - alpha) * st.a[m];
                    let c = alpha * st.c[m] + (1.0 - alpha) * st.a[m];
                    let a = update_a(b, c, link.weight, st.theta[m], st.phi[m], rho);
                    let da = a - st.a[m];
                    st.a[m] = a;
                    st.theta[m] += rho * (a - b);
                    st.phi[m] += rho * (a - c);
                    sums.row(a, st.b[m], st.theta[m]);
                    sums.row(a, st.c[m], st.phi[m]);
                    sums.dual += 2.0 * rho * rho * da * da;
                }
                let mut pair_update = |p: &mut PairState, node: usize| {
                    let kv = nodes[node].kv[m];
                    let inv_sq = 1.0 / (u_ref[node][m] * u_ref[node][m]);
                    let (lu, ll) = (1.0 + kv, (1.0 + kv) * inv_sq);
                    let old = 1.0 + kv - nodes[node].kv_step[m];
                    p.dual_u[m] += rho * (alpha * p.u[m] + (1.0 - alpha) * old - lu);
                    p.dual_l[m] += rho * (alpha * p.l[m] + (1.0 - alpha) * old * inv_sq - ll);
                    sums.row(p.u[m], lu, p.dual_u[m]);
                    sums.row(p.l[m], ll, p.dual_l[m]);
                    let step = nodes[node].kv_step[m];
                    sums.dual += rho * rho * step * step * (1.0 + inv_sq * inv_sq);
                };
                pair_update(&mut st.tail, link.tail_node());
                if let (Some(h), Some(hd)) = (link.head_node(), st.head.as_mut()) {
                    pair_update(hd, h);
                }
            }
            st.sums = sums;
        });

        let mut total = Sums::default();
        for n in &self.state.nodes {
            total.add(&n.sums);
        }
        for l in &self.state.links {
            total.add(&l.sums);
        }
        Ok(total)
    }
}

/// Solves the convex surrogate of `graph` at `reference` from a cold start.
pub fn solve_convex(graph: &CouplingGraph, reference: &[Vec<f64>], opts: AdmmOptions) -> Result<ConvexSolution> {
    AdmmSolver::new(graph.clone(), opts)?.solve(reference)
}
