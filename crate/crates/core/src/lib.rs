//! Coordinated multi-point ISAC: GLRT target detection across cooperating
//! base stations and sum-rate-maximizing power allocation under detection,
//! rate and power-budget constraints.
//!
//! Modules, bottom up:
//! - [`specfun`]: incomplete gamma and Marcum-Q functions with inverses.
//! - [`channel`] / [`config`]: scenario description and fading snapshots.
//! - [`detection`]: GLRT statistic, thresholds, detection probabilities,
//!   Monte Carlo validation.
//! - [`allocator`]: constraint polytope, barrier solver, alternating
//!   surrogate maximization, EPA/RPA baselines.
//! - [`harness`]: experiment sweeps, CSV output, SVG plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod channel;
pub mod config;
pub mod detection;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod power;
pub mod rng;
pub mod specfun;

pub use allocator::{epa, optimize_ppa, rpa, AllocationResult};
pub use channel::{db_to_linear, ChannelRealization};
pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use power::PowerVector;
pub use specfun::Probability;
