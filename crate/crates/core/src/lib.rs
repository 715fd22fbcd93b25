//! Simulation and reconstruction toolkit for the noisy pooled data problem.
//!
//! `n` agents hold hidden bits `sigma` in `{0,1}^n` with exactly `k` ones.
//! Each of `m` queries draws `gamma` agents uniformly at random *with
//! replacement* and reports the (possibly noisy) sum of the drawn bits. The
//! task is to reconstruct `sigma` from the query results alone.
//!
//! The crate is organized as:
//!
//! * [`model`]: problem configuration, ground truth, and the random bipartite
//!   pooling multigraph with its degree statistics,
//! * [`noise`]: exact, per-edge channel, and additive Gaussian measurements,
//! * [`greedy`]: the distributed neighborhood-sum decoder, sorting-network
//!   ranking, and evaluation metrics,
//! * [`amp`]: an approximate message passing baseline with pluggable
//!   denoisers and an Onsager-corrected residual,
//! * [`theory`]: closed-form query thresholds and tail-bound oracles,
//! * [`rng`]: seeded, platform-stable random streams,
//! * [`cases`]: small hand-checkable instances shared by the test suites.

pub mod amp;
pub mod cases;
pub mod error;
pub mod greedy;
pub mod model;
pub mod noise;
pub mod rng;
pub mod theory;

pub use error::{CoreError, Result};
