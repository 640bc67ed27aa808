//! Bandwidth-constrained multisine envelopes and their scalar statistics.
//!
//! An `N`-tone signal confined to bandwidth `W` uses tone spacing
//! `W / (N - 1)`, so its envelope is a Dirichlet kernel. Sampling that
//! kernel on the symbol grid hits removable singularities whenever the
//! grid lands on a zero of the denominator; those samples take the
//! analytic limit instead of evaluating the 0/0 ratio.

use crate::config::TimConfig;
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Grid arguments closer than this to an integer are treated as
/// singular points of the Dirichlet kernel. The §-grid spacing of every
/// supported configuration keeps regular points at least ~1e-4 away.
const SINGULARITY_EPS: f64 = 1e-9;

/// Sampled envelope of one `N`-tone multisine plus derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MultisineWaveform {
    /// Tone count `N`.
    pub tones: u32,
    /// Envelope samples on the grid `t_k = k T / K`, `k = 1..=K`, in sqrt-watts.
    pub samples: Vec<f64>,
    /// Intercarrier spacing `W / (N - 1)` in Hz.
    pub tone_spacing_hz: f64,
    /// Sample energy `sum_k x[k]^2`.
    pub energy: f64,
    /// Mean sample power `energy / K`.
    pub xi: f64,
}

/// Intercarrier spacing of an `n`-tone signal inside bandwidth `w` Hz.
pub fn tone_spacing(n: u32, w: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidToneCount { tones: n });
    }
    Ok(w / f64::from(n - 1))
}

/// Samples the `n`-tone envelope on the symbol grid of `cfg`.
///
/// The dimensionless argument at sample `k` is
/// `u_k = k (nstar - 1) / ((n - 1) K)`; regular samples evaluate
/// `sqrt(P/n) * sin(pi n u) / sin(pi u)` and singular samples (integer
/// `u_k = m`) take the limit `sqrt(P/n) * n * (-1)^((n-1) m)`.
pub fn sample_waveform(n: u32, cfg: &TimConfig) -> Result<MultisineWaveform> {
    cfg.validate()?;
    let spacing = tone_spacing(n, cfg.bandwidth_hz)?;
    let k_total = cfg.samples_per_symbol;
    let amp = (cfg.power / f64::from(n)).sqrt();
    let ratio = f64::from(cfg.nstar - 1) / (f64::from(n - 1) * k_total as f64);

    let mut samples = Vec::with_capacity(k_total);
    for k in 1..=k_total {
        let u = k as f64 * ratio;
        let denom = (PI * u).sin();
        let x = if denom.abs() < SINGULARITY_EPS {
            let m = u.round() as i64;
            let sign = if (i64::from(n - 1) * m) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            amp * f64::from(n) * sign
        } else {
            amp * (PI * f64::from(n) * u).sin() / denom
        };
        samples.push(x);
    }

    let energy: f64 = samples.iter().map(|x| x * x).sum();
    Ok(MultisineWaveform {
        tones: n,
        samples,
        tone_spacing_hz: spacing,
        energy,
        xi: energy / k_total as f64,
    })
}

/// Immutable per-config waveform cache, one entry per tone count in the set.
///
/// Built once and shared read-only by detector caches and trial workers.
#[derive(Debug, Clone)]
pub struct WaveformSet {
    waveforms: Vec<MultisineWaveform>,
}

impl WaveformSet {
    /// Precomputes the envelope of every tone count in `cfg.set`.
    pub fn build(cfg: &TimConfig) -> Result<Self> {
        let waveforms = cfg
            .set
            .iter()
            .map(|&n| sample_waveform(n, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { waveforms })
    }

    /// Waveforms in set order (ascending tone count).
    pub fn waveforms(&self) -> &[MultisineWaveform] {
        &self.waveforms
    }

    /// Lookup by tone count.
    pub fn by_tones(&self, n: u32) -> Option<&MultisineWaveform> {
        self.waveforms.iter().find(|w| w.tones == n)
    }

    pub fn len(&self) -> usize {
        self.waveforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waveforms.is_empty()
    }
}

/// Time averages of `x(t)^2` and `x(t)^4` for the passband `n`-tone signal
/// (amplitude `sqrt(2P/n)` per tone, zero phases) over one full period.
///
/// Tones sit at integer multiples `n..2n-1` of the spacing, the lowest
/// carrier placement whose fourth power is free of low-order
/// intermodulation at DC; `oversample` uniform samples then integrate
/// the trigonometric polynomial exactly once `oversample >= 8 n`.
pub fn fine_passband_moments(n: u32, power: f64, oversample: usize) -> Result<(f64, f64)> {
    if n < 1 {
        return Err(Error::InvalidToneCount { tones: n });
    }
    let min = 8 * n as usize;
    if oversample < min {
        return Err(Error::OversampleTooSmall {
            got: oversample,
            min,
            tones: n,
        });
    }
    let amp = (2.0 * power / f64::from(n)).sqrt();
    let mut second = 0.0;
    let mut fourth = 0.0;
    for q in 0..oversample {
        let theta = 2.0 * PI * q as f64 / oversample as f64;
        let mut x = 0.0;
        for tone in n..2 * n {
            x += (f64::from(tone) * theta).cos();
        }
        x *= amp;
        let x2 = x * x;
        second += x2;
        fourth += x2 * x2;
    }
    Ok((second / oversample as f64, fourth / oversample as f64))
}
