//! Simulator for a meta-material humidity sensor used as a frequency-selective
//! backscatter reflector inside an OFDM link.
//!
//! * [`sensor`]: split-ring-resonator surrogate and its reflection spectrum.
//! * [`channel`]: two-path free-space channel for every sensing state.
//! * [`waveform`]: capacity-optimal power allocation with a sensing constraint.
//! * [`link`]: symbol-level Monte Carlo of PSD-based state detection.
//! * [`structure`]: grid search over sensor geometries and baselines.
//! * [`config`] / [`experiments`]: scenario files, sweeps and CSV output.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod link;
pub mod sensor;
pub mod structure;
pub mod waveform;

pub use error::{Error, Result};
