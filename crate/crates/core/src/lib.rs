//! Average age of information (AoI) for an energy-harvesting transmitter
//! sending coded status updates over a slotted erasure channel.
//!
//! Energy units arrive as a Bernoulli(`p`) process, transmitted symbols are
//! erased independently with probability `delta`, and each status update
//! carries `k` symbols. The crate covers four policies — MDS or rateless
//! coding, each started either best-effort or after a save-and-transmit
//! phase — with:
//!
//! - closed-form average AoI for every policy ([`analytic`]),
//! - the probability kernels behind those expressions ([`dist`]),
//! - a slot-level Monte Carlo simulator plus renewal-reward oracle samplers
//!   that validate the expectation algebra ([`sim`]),
//! - free-parameter optimization and figure-style parameter sweeps
//!   ([`search`]),
//! - and the command-line front end ([`cli`], binary `aoi`).

pub mod analytic;
pub mod cli;
pub mod dist;
pub mod error;
pub mod model;
pub mod search;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    renewal_aoi, validate_params, AoiBreakdown, BatteryMode, DiscretePmf, Policy, PolicyConfig,
    SystemParams, DEFAULT_TAIL_TOL,
};
