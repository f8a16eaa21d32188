//! Coupling graphs: which slice instances have their indicator values
//! compared by switching-cost terms.
//!
//! A node is one slice instance (a real slice, or a sampled future slice) with
//! its own channel, beamformers and slacks. A switch edge charges
//! `weight * |1/(1+kappa v_tail) - 1/(1+kappa v_head)|`; an anchor charges the
//! difference to a fixed binary previous status. The online problem is a star
//! (node 0 = current slice, nodes 1..=J = future samples, anchor on node 0);
//! the offline problem is a chain over the horizon.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::ProblemConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub channel: CMatrix,
    /// Weight of `||W||_F^2`.
    pub power_weight: f64,
    /// Weight of the smoothed rejection count.
    pub reject_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEdge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

/// Fixed previous status attached to one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub node: usize,
    /// `[1/(1 + kappa v_p)]_q`, one binary value per user.
    pub status: Vec<bool>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<SwitchEdge>,
    pub anchor: Option<Anchor>,
    pub num_users: usize,
    pub num_antennas: usize,
    pub kappa: f64,
    pub power_budget: f64,
    pub noise_power: f64,
    pub qos_target: f64,
}

/// One consensus block of the splitting: an edge, the anchor, or a free
/// duplicate that only carries `x >= 1` (i.e. `v >= 0`) for an isolated node.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkKind {
    Switch { tail: usize, head: usize },
    Anchor { node: usize, status: Vec<f64> },
    Free { node: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub kind: LinkKind,
    pub weight: f64,
}

impl Link {
    /// Node whose `(x, y)` duplicates this link owns.
    pub fn tail_node(&self) -> usize {
        match self.kind {
            LinkKind::Switch { tail, .. } => tail,
            LinkKind::Anchor { node, .. } | LinkKind::Free { node } => node,
        }
    }

    /// Node whose `(z, s)` duplicates this link owns, if any.
    pub fn head_node(&self) -> Option<usize> {
        match self.kind {
            LinkKind::Switch { head, .. } => Some(head),
            _ => None,
        }
    }

    pub fn has_switch_cost(&self) -> bool {
        !matches!(self.kind, LinkKind::Free { .. })
    }
}

/// Reference to one duplicate pair: `(link index, is_head)`.
pub type PairRef = (usize, bool);

impl CouplingGraph {
    fn base(cfg: &ProblemConfig, nodes: Vec<GraphNode>) -> Self {
        Self {
            nodes,
            edges: Vec::new(),
            anchor: None,
            num_users: cfg.num_users,
            num_antennas: cfg.num_antennas,
            kappa: cfg.kappa,
            power_budget: cfg.power_budget,
            noise_power: cfg.noise_power,
            qos_target: cfg.qos_target,
        }
    }

    /// Single slice, no switching terms.
    pub fn single(cfg: &ProblemConfig, channel: CMatrix) -> Self {
        Self::base(
            cfg,
            vec![GraphNode {
                channel,
                power_weight: 1.0,
                reject_weight: cfg.reject_weight,
            }],
        )
    }

    /// Star for the online problem: node 0 is the current slice with weights
    /// `(1, lambda1)`; nodes `1..=J` are future samples with `(1/J, lambda1/J)`;
    /// edges `(0, j)` carry `lambda2/J`; the anchor on node 0 carries
    /// `anchor_weight` (normally `lambda2`).
    pub fn online_star(
        cfg: &ProblemConfig,
        current: CMatrix,
        futures: Vec<CMatrix>,
        previous: Option<Vec<bool>>,
        anchor_weight: f64,
    ) -> Self {
        let j = futures.len();
        let mut nodes = vec![GraphNode {
            channel: current,
            power_weight: 1.0,
            reject_weight: cfg.reject_weight,
        }];
        let share = if j > 0 { 1.0 / j as f64 } else { 0.0 };
        nodes.extend(futures.into_iter().map(|h| GraphNode {
            channel: h,
            power_weight: share,
            reject_weight: cfg.reject_weight * share,
        }));
        let mut g = Self::base(cfg, nodes);
        g.edges = (1..=j)
            .map(|r| SwitchEdge {
                tail: 0,
                head: r,
                weight: cfg.switch_weight * share,
            })
            .collect();
        g.anchor = previous.map(|status| Anchor {
            node: 0,
            status,
            weight: anchor_weight,
        });
        g
    }

    /// Chain over the horizon for the offline problem.
    pub fn offline_chain(cfg: &ProblemConfig, channels: &[CMatrix], initial: Option<Vec<bool>>) -> Self {
        let nodes = channels
            .iter()
            .map(|h| GraphNode {
                channel: h.clone(),
                power_weight: 1.0,
                reject_weight: cfg.reject_weight,
            })
            .collect();
        let mut g = Self::base(cfg, nodes);
        g.edges = (0..channels.len().saturating_sub(1))
            .map(|t| SwitchEdge {
                tail: t,
                head: t + 1,
                weight: cfg.switch_weight,
            })
            .collect();
        g.anchor = initial.map(|status| Anchor {
            node: 0,
            status,
            weight: cfg.switch_weight,
        });
        g
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Structural("graph has no nodes".into()));
        }
        for (r, n) in self.nodes.iter().enumerate() {
            if n.channel.nrows() != self.num_antennas || n.channel.ncols() != self.num_users {
                return Err(Error::Dimension(format!("node {r} channel has shape {:?}", n.channel.shape())));
            }
            if !(n.power_weight > 0.0) || n.reject_weight < 0.0 {
                return Err(Error::Structural(format!("node {r} has invalid weights")));
            }
        }
        for e in &self.edges {
            if e.tail >= self.num_nodes() || e.head >= self.num_nodes() || e.tail == e.head || e.weight < 0.0 {
                return Err(Error::Structural(format!("invalid edge {e:?}")));
            }
        }
        if let Some(a) = &self.anchor {
            if a.node >= self.num_nodes() || a.status.len() != self.num_users || a.weight < 0.0 {
                return Err(Error::Structural("invalid anchor".into()));
            }
        }
        Ok(())
    }

    /// Consensus blocks: edges, then the anchor, then a free duplicate for
    /// every node no other block touches.
    pub fn links(&self) -> Vec<Link> {
        let mut links: Vec<Link> = self
            .edges
            .iter()
            .map(|e| Link {
                kind: LinkKind::Switch { tail: e.tail, head: e.head },
                weight: e.weight,
            })
            .collect();
        if let Some(a) = &self.anchor {
            links.push(Link {
                kind: LinkKind::Anchor {
                    node: a.node,
                    status: a.status.iter().map(|&s| f64::from(u8::from(s))).collect(),
                },
                weight: a.weight,
            });
        }
        let mut touched = vec![false; self.num_nodes()];
        for l in &links {
            touched[l.tail_node()] = true;
            if let Some(h) = l.head_node() {
                touched[h] = true;
            }
        }
        for (r, _) in touched.iter().enumerate().filter(|(_, t)| !**t) {
            links.push(Link {
                kind: LinkKind::Free { node: r },
                weight: 0.0,
            });
        }
        links
    }

    /// Duplicate pairs referencing each node.
    pub fn incidence(links: &[Link], num_nodes: usize) -> Vec<Vec<PairRef>> {
        let mut inc = vec![Vec::new(); num_nodes];
        for (l, link) in links.iter().enumerate() {
            inc[link.tail_node()].push((l, false));
            if let Some(h) = link.head_node() {
                inc[h].push((l, true));
            }
        }
        inc
    }

    /// Number of duplicate pairs per node (`D_r`).
    pub fn degrees(&self) -> Vec<usize> {
        Self::incidence(&self.links(), self.num_nodes())
            .iter()
            .map(Vec::len)
            .collect()
    }
}
