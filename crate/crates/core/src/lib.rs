//! Downlink power and subcarrier allocation between a high-speed-train mobile
//! relay (MR) and quasi-static local users sharing one OFDMA cell.
//!
//! The base station splits its power and subcarriers once per scheduling
//! period (seconds) using only large-scale information about the relay, while
//! local users are scheduled per slot (milliseconds) on their instantaneous
//! small-scale fading. The relay suffers inter-carrier interference (ICI) from
//! the Doppler spread of a two-path channel; treating it as Gaussian noise
//! yields a jointly concave program in the power share `eta` and subcarrier
//! share `beta`, solved per period by a sweep over `beta` with bisection on
//! `eta`.
//!
//! Module map:
//! - [`scenario`]: system constants, train trajectory, path loss and Doppler.
//! - [`channel`]: delay profile, two-path correlation, fading laws.
//! - [`ici`]: ICI coefficients (literal sum, closed form, approximation) and
//!   the aggregate per-period ICI factor.
//! - [`capacity`]: ergodic capacities, the local-user baseline and the two
//!   functions of the per-period program.
//! - [`optimizer`]: the sweep solver, a grid-search oracle, constant
//!   allocations and the ICI-on/off capacity gap.
//! - [`mc_oracle`]: brute-force Monte-Carlo checks of the analytic models.
//! - [`study`]: ties a configuration to per-period SNR factors.
//! - [`validation`]: the oracle checks run by `hsr-alloc validate`.
//! - [`config`] and [`cli`]: key=value configuration and CSV subcommands.

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod config;
mod error;
pub mod ici;
pub mod mc_oracle;
pub mod optimizer;
pub mod quadrature;
pub mod rng;
pub mod scenario;
pub mod special;
pub mod study;
pub mod validation;

pub use error::{Error, Result};
