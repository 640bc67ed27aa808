//! Experiment configuration shared by every subsystem.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Rectifier polynomial constants of the energy-harvesting model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectennaParams {
    /// Second-order coefficient.
    pub a2: f64,
    /// Fourth-order coefficient.
    pub a4: f64,
}

impl Default for RectennaParams {
    fn default() -> Self {
        Self {
            a2: 0.0034,
            a4: 0.3829,
        }
    }
}

/// Full parameterization of a tone-index modulation experiment.
///
/// `set` lists the tone counts the transmitter chooses from, `nstar`
/// fixes the symbol time via `T = (nstar - 1) / bandwidth_hz`, and
/// `samples_per_symbol` is the envelope oversampling per symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimConfig {
    /// Ordered tone-count alphabet, ascending, each entry >= 2.
    pub set: Vec<u32>,
    /// Occupied bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Reference tone count defining the symbol time.
    pub nstar: u32,
    /// Envelope samples per symbol.
    pub samples_per_symbol: usize,
    /// Total transmit power in watts (linear).
    pub power: f64,
    /// Channel coefficient variance.
    pub channel_var: f64,
    /// Noise sample variance.
    pub noise_var: f64,
    /// Rectifier constants.
    pub rectenna: RectennaParams,
    /// Base RNG seed; all streams derive from it.
    pub seed: u64,
    /// Monte Carlo trials per estimate.
    pub trials: u64,
}

impl Default for TimConfig {
    fn default() -> Self {
        Self {
            set: vec![4, 8],
            bandwidth_hz: 1_000.0,
            nstar: 32,
            samples_per_symbol: 31,
            power: 1.0,
            channel_var: 1.0,
            noise_var: 1.0,
            rectenna: RectennaParams::default(),
            seed: 0x7411_5146,
            trials: 100_000,
        }
    }
}

impl TimConfig {
    /// Checks every structural invariant, returning the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.set.is_empty() {
            return Err(invalid("set", "tone-count set is empty"));
        }
        for pair in self.set.windows(2) {
            if pair[1] <= pair[0] {
                return Err(invalid(
                    "set",
                    format!("must be strictly ascending, got {} after {}", pair[1], pair[0]),
                ));
            }
        }
        if let Some(&n) = self.set.iter().find(|&&n| n < 2) {
            return Err(invalid("set", format!("tone count {n} is below 2")));
        }
        let max_tones = *self.set.last().expect("non-empty set");
        if self.nstar < max_tones {
            return Err(invalid(
                "nstar",
                format!("{} is below max(set) = {max_tones}", self.nstar),
            ));
        }
        if self.samples_per_symbol == 0 {
            return Err(invalid("samples_per_symbol", "must be at least 1"));
        }
        if !self.bandwidth_hz.is_finite() || self.bandwidth_hz <= 0.0 {
            return Err(invalid("bandwidth_hz", "must be finite and positive"));
        }
        if !self.power.is_finite() || self.power < 0.0 {
            return Err(invalid("power", "must be finite and non-negative"));
        }
        if !self.channel_var.is_finite() || self.channel_var <= 0.0 {
            return Err(invalid("channel_var", "must be finite and positive"));
        }
        if !self.noise_var.is_finite() || self.noise_var <= 0.0 {
            return Err(invalid("noise_var", "must be finite and positive"));
        }
        if !self.rectenna.a2.is_finite() || self.rectenna.a2 < 0.0 {
            return Err(invalid("a2", "must be finite and non-negative"));
        }
        if !self.rectenna.a4.is_finite() || self.rectenna.a4 < 0.0 {
            return Err(invalid("a4", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// Symbol time `T = (nstar - 1) / W` in seconds.
    pub fn symbol_time(&self) -> f64 {
        f64::from(self.nstar - 1) / self.bandwidth_hz
    }

    /// Copy with a different transmit power (sweeps reuse one base config).
    pub fn with_power(&self, power: f64) -> Self {
        Self {
            power,
            ..self.clone()
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}
