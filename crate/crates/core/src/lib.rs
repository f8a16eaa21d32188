//! Joint long-term admission control and transmit beamforming for a
//! single-cell multi-antenna downlink.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: problem parameters, SINR and cost evaluation.
//! - [`channel`]: cell geometry and block-fading Rayleigh channels.
//! - [`admm`]: the consensus-ADMM engine for the convex upper-bound
//!   subproblems, parameterised by a [`admm::CouplingGraph`].
//! - [`sum`]: successive upper-bound minimisation loops (offline and online).
//! - [`baselines`]: per-slice admission control, channel-strength ordering,
//!   fixed-set QoS beamforming and an exhaustive oracle.
//! - [`experiments`]: metrics, Monte Carlo sweeps, timing and CSV output.
//!
//! With the default `parallel` feature, node-level ADMM work and Monte Carlo
//! trials are spread over a rayon pool. Without it everything runs on the
//! calling thread; results are bit-identical either way.

// Negated float comparisons deliberately treat NaN as a failure; index loops
// mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod admm;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod par;
pub mod sum;

pub use error::{Error, Result};
pub use linalg::C64;
