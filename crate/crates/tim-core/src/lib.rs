//! Link-level simulation and closed-form analytics for tone-index
//! multisine (TIM) modulation in SWIPT systems.
//!
//! The crate covers the full chain: bandwidth-constrained multisine
//! waveform construction, flat-fading envelope transmission,
//! non-coherent ML and PAPR-based tone-count detection, the associated
//! closed-form error/energy expressions, and a deterministic parallel
//! Monte Carlo engine that cross-validates simulation against analysis.

pub mod analytics;
pub mod channel;
pub mod config;
pub mod error;
pub mod oracles;
pub mod papr_detector;
pub mod quad;
pub mod simkit;
pub mod specfun;
pub mod tim_detector;
pub mod validation;
pub mod waveform;

pub use config::{RectennaParams, TimConfig};
pub use error::{Error, Result};
pub use waveform::{MultisineWaveform, WaveformSet};
