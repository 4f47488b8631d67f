//! Interference modelling and receiver-aware MAC logic for low-power
//! IEEE 802.15.4 networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`trace`]: arrival traces, slot featurization and the BUSY/FREE rule.
//! - [`characterization`]: 2-D feature histograms, NCLR scoring and
//!   peak/off-peak window segmentation.
//! - [`models`]: GMM interference estimation, HMM white-space prediction,
//!   the Pareto baseline and model files.
//! - [`protocol`]: time sync, model exchange timing, rendezvous scheduling
//!   and the PDR/EMA feedback loop.
//! - [`metrics`]: confusion metrics and report emission.
//!
//! All clocks are integer microseconds.

pub mod characterization;
pub mod error;
pub mod metrics;
pub mod models;
pub mod protocol;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
