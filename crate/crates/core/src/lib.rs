//! Key rates, thresholds, simulation and numerical checks for one-sided
//! device-independent QKD certified by the three-setting CJWR steering
//! inequality.
//!
//! - [`quantum`]: dense states, observables, entropies, partial trace.
//! - [`steering`]: correlation matrices, CJWR values, Bell-diagonal reduction.
//! - [`keyrates`]: closed-form rates for the 1sDI, CHSH-DI and trusted-device models.
//! - [`noise`]: depolarized source and lossy detectors.
//! - [`thresholds`]: critical QBER and efficiency, parameter sweeps.
//! - [`simulator`]: seeded round-by-round Monte Carlo.
//! - [`oracle`]: brute-force verification of the analytic ingredients.
//! - [`cli`]: the `steerqkd` command line.

pub mod cli;
pub mod error;
pub mod keyrates;
pub mod noise;
pub mod oracle;
pub mod quantum;
pub mod sampling;
pub mod simulator;
pub mod steering;
pub mod thresholds;

pub use error::{Error, Result};
