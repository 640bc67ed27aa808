//! Flat-fading channel and AWGN draws for received envelope symbols.
//!
//! Randomness is organized as counter-based streams: every trial owns a
//! ChaCha stream addressed by `(seed, stream id)`, so trials can run on
//! any number of workers in any order and still reproduce bit-identical
//! symbols.

use crate::config::TimConfig;
use crate::error::{Error, Result};
use crate::waveform::MultisineWaveform;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// One received envelope symbol: `r[k] = h x[k] + n[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSymbol {
    /// Noisy envelope samples, length `K`.
    pub samples: Vec<f64>,
    /// Channel coefficient, constant over the symbol.
    pub channel: f64,
    /// Tone count actually transmitted.
    pub true_tones: u32,
}

/// Independent RNG stream for one `(seed, stream id)` pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for one trial of one sweep point; keeps every
/// `(point, trial)` pair on its own counter so workers never share state.
pub fn trial_stream(point: usize, trial: u64) -> u64 {
    ((point as u64) << 40) ^ trial
}

/// Draws `h ~ N(0, channel_var)` and i.i.d. noise, returning the
/// composite symbol. Deterministic given `(cfg.seed, stream)`.
///
/// Draw order is fixed: channel coefficient first, then the K noise
/// samples.
pub fn draw_symbol(x: &MultisineWaveform, cfg: &TimConfig, stream: u64) -> ReceivedSymbol {
    let mut rng = stream_rng(cfg.seed, stream);
    draw_symbol_with(x, cfg, &mut rng)
}

/// Same as [`draw_symbol`] but against a caller-owned RNG, for trial
/// loops that draw several quantities from one stream.
pub fn draw_symbol_with(
    x: &MultisineWaveform,
    cfg: &TimConfig,
    rng: &mut ChaCha8Rng,
) -> ReceivedSymbol {
    let h: f64 = {
        let z: f64 = rng.sample(StandardNormal);
        z * cfg.channel_var.sqrt()
    };
    let noise_std = cfg.noise_var.sqrt();
    let samples = x
        .samples
        .iter()
        .map(|&xk| {
            let n: f64 = rng.sample(StandardNormal);
            h * xk + n * noise_std
        })
        .collect();
    ReceivedSymbol {
        samples,
        channel: h,
        true_tones: x.tones,
    }
}

/// Guard used by Monte Carlo front ends.
pub fn require_trials(cfg: &TimConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::NoTrials);
    }
    Ok(())
}
