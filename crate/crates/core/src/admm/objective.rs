//! Objectives over a coupling graph: the smoothed cost, its SUM upper bound,
//! and the convex surrogate minimised by one SUM step.

use super::graph::{CouplingGraph, LinkKind};
use crate::linalg::{frob_sqr, CMatrix};

fn recip(kappa: f64, v: f64) -> f64 {
    1.0 / (1.0 + kappa * v)
}

/// Linearisation of `-1/(1 + kappa v)` at `v_ref`: `-2/(1+kappa v_ref) + (1+kappa v)/(1+kappa v_ref)^2`.
pub fn neg_recip_majorant(kappa: f64, v: f64, v_ref: f64) -> f64 {
    let u = 1.0 + kappa * v_ref;
    -2.0 / u + (1.0 + kappa * v) / (u * u)
}

/// Upper bound of `|1/(1+kappa v_i) - 1/(1+kappa v_j)|` tight at the reference.
pub fn switch_majorant(kappa: f64, v_i: f64, v_j: f64, ref_i: f64, ref_j: f64) -> f64 {
    let forward = recip(kappa, v_i) + neg_recip_majorant(kappa, v_j, ref_j);
    let backward = recip(kappa, v_j) + neg_recip_majorant(kappa, v_i, ref_i);
    forward.max(backward)
}

/// Upper bound of `|p - 1/(1+kappa v)|` for binary `p`, tight at the reference.
pub fn anchor_majorant(kappa: f64, v: f64, v_ref: f64, p: f64) -> f64 {
    (recip(kappa, v) - p).max(p + neg_recip_majorant(kappa, v, v_ref))
}

fn switching_terms(graph: &CouplingGraph, mut term: impl FnMut(&LinkKind, usize) -> f64) -> f64 {
    graph
        .links()
        .iter()
        .filter(|l| l.has_switch_cost())
        .map(|l| l.weight * (0..graph.num_users).map(|m| term(&l.kind, m)).sum::<f64>())
        .sum()
}

fn power_terms(graph: &CouplingGraph, w: &[CMatrix]) -> f64 {
    graph.nodes.iter().zip(w).map(|(n, w)| n.power_weight * frob_sqr(w)).sum()
}

/// Smoothed objective: weighted power, `lambda1 (1 - 1/(1+kappa v))` and
/// weighted `|1/(1+kappa v_i) - 1/(1+kappa v_j)|` switching terms.
pub fn smoothed_objective(graph: &CouplingGraph, v: &[Vec<f64>], w: &[CMatrix]) -> f64 {
    let k = graph.kappa;
    let reject: f64 = graph
        .nodes
        .iter()
        .zip(v)
        .map(|(n, vr)| n.reject_weight * vr.iter().map(|&x| 1.0 - recip(k, x)).sum::<f64>())
        .sum();
    let switch = switching_terms(graph, |kind, m| match kind {
        LinkKind::Switch { tail, head } => (recip(k, v[*tail][m]) - recip(k, v[*head][m])).abs(),
        LinkKind::Anchor { node, status } => (status[m] - recip(k, v[*node][m])).abs(),
        LinkKind::Free { .. } => 0.0,
    });
    power_terms(graph, w) + reject + switch
}

/// Rejection and switching parts of the SUM upper bound `u(v; v_ref)`.
pub fn upper_bound_terms(graph: &CouplingGraph, reference: &[Vec<f64>], v: &[Vec<f64>]) -> f64 {
    let k = graph.kappa;
    let reject: f64 = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(r, n)| {
            n.reject_weight
                * (0..graph.num_users)
                    .map(|m| 1.0 + neg_recip_majorant(k, v[r][m], reference[r][m]))
                    .sum::<f64>()
        })
        .sum();
    let switch = switching_terms(graph, |kind, m| match kind {
        LinkKind::Switch { tail, head } => switch_majorant(
            k,
            v[*tail][m],
            v[*head][m],
            reference[*tail][m],
            reference[*head][m],
        ),
        LinkKind::Anchor { node, status } => anchor_majorant(k, v[*node][m], reference[*node][m], status[m]),
        LinkKind::Free { .. } => 0.0,
    });
    reject + switch
}

/// Objective of the convex SUM subproblem (constants dropped from the
/// rejection term): `sum lambda0 ||W||^2 + lambda1 kappa v/(1+kappa v_ref)^2 + lambda2 a*`.
pub fn surrogate_objective(graph: &CouplingGraph, reference: &[Vec<f64>], v: &[Vec<f64>], w: &[CMatrix]) -> f64 {
    let k = graph.kappa;
    let mut total = power_terms(graph, w) + upper_bound_terms(graph, reference, v);
    for (r, n) in graph.nodes.iter().enumerate() {
        for m in 0..graph.num_users {
            let u = 1.0 + k * reference[r][m];
            // 1 - 2/u + 1/u^2 is the constant part of the rejection majorant
            total -= n.reject_weight * (1.0 - 1.0 / u).powi(2);
        }
    }
    total
}
