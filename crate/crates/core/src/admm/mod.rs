//! Consensus ADMM for the convex upper-bound subproblems.
//!
//! The offline chain, the online star and the single-slice problem share one
//! engine; they differ only in the [`CouplingGraph`] handed to it.

pub mod blocks;
pub mod graph;
pub mod objective;
pub mod oracle;
pub mod solver;

pub use graph::{Anchor, CouplingGraph, GraphNode, Link, LinkKind, SwitchEdge};
pub use objective::{
    anchor_majorant, neg_recip_majorant, smoothed_objective, surrogate_objective, switch_majorant, upper_bound_terms,
};
pub use oracle::{reference_oracle, OracleOptions, OracleSolution};
pub use solver::{solve_convex, AdmmOptions, AdmmSolver, ConvexSolution, Residuals, TraceRow};
