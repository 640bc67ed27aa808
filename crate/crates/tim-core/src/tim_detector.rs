//! Non-coherent ML detection of the tone index.
//!
//! Conditioned on waveform `x_i`, the received envelope vector is
//! zero-mean Gaussian with covariance `R_i = noise_var I + channel_var
//! x_i x_i^T`. The detector maximizes the log density across the
//! hypothesis set using only statistical channel knowledge. The rank-1
//! structure collapses both the log-determinant and the quadratic form,
//! so detection needs one inner product per hypothesis and never touches
//! a K x K matrix.

use crate::channel::ReceivedSymbol;
use crate::error::{Error, Result};
use crate::waveform::{MultisineWaveform, WaveformSet};

#[cfg(test)]
use std::cell::Cell;

#[cfg(test)]
thread_local! {
    static DOT_CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Per-hypothesis constants derived from one waveform.
#[derive(Debug, Clone)]
struct Hypothesis {
    tones: u32,
    samples: Vec<f64>,
    /// Quadratic-form coefficient `(channel_var / noise_var^2) / (1 +
    /// channel_var/noise_var * energy)` from the rank-1 inverse.
    gamma: f64,
    /// `log|R_i| = K log(noise_var) + log(1 + channel_var/noise_var * energy)`.
    log_det: f64,
}

/// Precomputed constants for every hypothesis in the set, shared
/// read-only across trial workers.
#[derive(Debug, Clone)]
pub struct HypothesisCache {
    hypotheses: Vec<Hypothesis>,
    noise_var: f64,
    samples_per_symbol: usize,
}

impl HypothesisCache {
    /// Builds the cache from precomputed waveforms and the channel/noise
    /// statistics. `channel_var` may be zero (degenerate detector used
    /// in limit tests); `noise_var` must be positive.
    pub fn from_waveforms(
        waveforms: &[MultisineWaveform],
        channel_var: f64,
        noise_var: f64,
    ) -> Result<Self> {
        if waveforms.is_empty() {
            return Err(Error::EmptyHypotheses);
        }
        if !(noise_var > 0.0) {
            return Err(Error::InvalidConfig {
                field: "noise_var",
                reason: format!("must be positive, got {noise_var}"),
            });
        }
        let k = waveforms[0].samples.len();
        for w in waveforms {
            if w.samples.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: w.samples.len(),
                });
            }
        }
        let snr_ratio = channel_var / noise_var;
        let hypotheses = waveforms
            .iter()
            .map(|w| {
                let one_plus = 1.0 + snr_ratio * w.energy;
                Hypothesis {
                    tones: w.tones,
                    samples: w.samples.clone(),
                    gamma: (channel_var / (noise_var * noise_var)) / one_plus,
                    log_det: k as f64 * noise_var.ln() + one_plus.ln(),
                }
            })
            .collect();
        Ok(Self {
            hypotheses,
            noise_var,
            samples_per_symbol: k,
        })
    }

    /// Convenience constructor from a cached waveform set.
    pub fn build(set: &WaveformSet, channel_var: f64, noise_var: f64) -> Result<Self> {
        Self::from_waveforms(set.waveforms(), channel_var, noise_var)
    }

    /// Hypothesis tone counts in set order.
    pub fn tone_counts(&self) -> Vec<u32> {
        self.hypotheses.iter().map(|h| h.tones).collect()
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    fn check_len(&self, r: &ReceivedSymbol) -> Result<()> {
        if r.samples.len() != self.samples_per_symbol {
            return Err(Error::DimensionMismatch {
                expected: self.samples_per_symbol,
                got: r.samples.len(),
            });
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    #[cfg(test)]
    DOT_CALLS.with(|c| c.set(c.get() + 1));
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log density of `r` under hypothesis index `i` (set order).
///
/// `log p(r | x_i) = -K/2 log(2 pi) - 1/2 log|R_i| - 1/2 q_i`, where the
/// quadratic form uses the rank-1 inverse:
/// `q_i = r.r / noise_var - gamma_i (x_i . r)^2`.
pub fn log_likelihood(r: &ReceivedSymbol, i: usize, cache: &HypothesisCache) -> Result<f64> {
    cache.check_len(r)?;
    let hyp = cache
        .hypotheses
        .get(i)
        .ok_or(Error::EmptyHypotheses)?;
    let r_dot_r = dot(&r.samples, &r.samples);
    Ok(log_likelihood_inner(r, r_dot_r, hyp, cache))
}

fn log_likelihood_inner(
    r: &ReceivedSymbol,
    r_dot_r: f64,
    hyp: &Hypothesis,
    cache: &HypothesisCache,
) -> f64 {
    let proj = dot(&hyp.samples, &r.samples);
    let quad = r_dot_r / cache.noise_var - hyp.gamma * proj * proj;
    let k = cache.samples_per_symbol as f64;
    -0.5 * (k * (2.0 * std::f64::consts::PI).ln() + hyp.log_det + quad)
}

/// ML decision: the tone count whose hypothesis maximizes the log
/// density; exact ties resolve to the smallest tone count.
pub fn detect(r: &ReceivedSymbol, cache: &HypothesisCache) -> Result<u32> {
    cache.check_len(r)?;
    if cache.hypotheses.is_empty() {
        return Err(Error::EmptyHypotheses);
    }
    let r_dot_r = dot(&r.samples, &r.samples);
    let mut best_tones = cache.hypotheses[0].tones;
    let mut best_ll = f64::NEG_INFINITY;
    for hyp in &cache.hypotheses {
        let ll = log_likelihood_inner(r, r_dot_r, hyp, cache);
        if ll > best_ll {
            best_ll = ll;
            best_tones = hyp.tones;
        }
    }
    Ok(best_tones)
}

/// Argmax with ties resolved toward the earliest (smallest) entry;
/// factored out so the tie rule is testable in isolation.
pub fn argmax_tie_smallest(values: &[f64]) -> Option<usize> {
    let mut best = None;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none() || v > best_v {
            best = Some(i);
            best_v = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_symbol;
    use crate::config::TimConfig;
    use crate::waveform::WaveformSet;
    use proptest::prelude::*;

    fn setup(set: Vec<u32>) -> (TimConfig, WaveformSet, HypothesisCache) {
        let cfg = TimConfig {
            set,
            ..TimConfig::default()
        };
        let ws = WaveformSet::build(&cfg).unwrap();
        let cache = HypothesisCache::build(&ws, cfg.channel_var, cfg.noise_var).unwrap();
        (cfg, ws, cache)
    }

    #[test]
    fn degenerate_channel_makes_all_hypotheses_equal() {
        let cfg = TimConfig {
            set: vec![4, 8, 16],
            ..TimConfig::default()
        };
        let ws = WaveformSet::build(&cfg).unwrap();
        let cache = HypothesisCache::build(&ws, 0.0, cfg.noise_var).unwrap();
        let r = draw_symbol(ws.by_tones(8).unwrap(), &cfg, 7);
        let l0 = log_likelihood(&r, 0, &cache).unwrap();
        for i in 1..cache.len() {
            let li = log_likelihood(&r, i, &cache).unwrap();
            assert!((l0 - li).abs() < 1e-12);
        }
        // Tie rule picks the smallest tone count.
        assert_eq!(detect(&r, &cache).unwrap(), 4);
    }

    #[test]
    fn log_determinant_increases_with_energy() {
        let (_, _, cache) = setup(vec![4, 8, 16, 32]);
        // Energy decreases with tone count here, so log_det must too.
        for w in cache.hypotheses.windows(2) {
            assert!(w[0].log_det > w[1].log_det);
        }
    }

    #[test]
    fn strong_signal_is_detected() {
        let (cfg, ws, cache) = setup(vec![4, 8]);
        let mut correct = 0u32;
        let total = 10_000u32;
        for t in 0..total {
            // Large |h| forced by scaling the drawn symbol deterministically.
            let x = ws.by_tones(4).unwrap();
            let mut r = draw_symbol(x, &cfg, u64::from(t));
            let h = 6.0 + r.channel.abs();
            for (rk, xk) in r.samples.iter_mut().zip(&x.samples) {
                *rk = h * xk + (*rk - r.channel * xk);
            }
            r.channel = h;
            if detect(&r, &cache).unwrap() == 4 {
                correct += 1;
            }
        }
        assert!(
            f64::from(correct) / f64::from(total) >= 0.99,
            "correct rate {}",
            f64::from(correct) / f64::from(total)
        );
    }

    #[test]
    fn single_hypothesis_always_returned() {
        let (cfg, ws, cache) = setup(vec![8]);
        for t in 0..100 {
            let r = draw_symbol(ws.by_tones(8).unwrap(), &cfg, t);
            assert_eq!(detect(&r, &cache).unwrap(), 8);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (cfg, ws, cache) = setup(vec![4, 8]);
        let mut r = draw_symbol(ws.by_tones(4).unwrap(), &cfg, 0);
        r.samples.pop();
        assert!(matches!(
            detect(&r, &cache),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(log_likelihood(&r, 0, &cache).is_err());
    }

    #[test]
    fn empty_hypothesis_set_rejected_at_construction() {
        assert!(matches!(
            HypothesisCache::from_waveforms(&[], 1.0, 1.0),
            Err(Error::EmptyHypotheses)
        ));
    }

    #[test]
    fn detection_cost_is_one_inner_product_per_hypothesis() {
        let (cfg, ws, cache) = setup(vec![4, 8, 16, 32]);
        let r = draw_symbol(ws.by_tones(8).unwrap(), &cfg, 3);
        DOT_CALLS.with(|c| c.set(0));
        detect(&r, &cache).unwrap();
        let calls = DOT_CALLS.with(|c| c.get());
        // One r.r plus one x_i.r per hypothesis, each O(K).
        assert_eq!(calls, cache.len() + 1);
    }

    proptest! {
        #[test]
        fn argmax_prefers_smallest_on_ties(
            values in prop::collection::vec(-10.0f64..10.0, 1..6),
            dup in 0usize..5,
        ) {
            let mut v = values.clone();
            let dup = dup % v.len();
            // Duplicate the maximum somewhere later in the list.
            let max_idx = argmax_tie_smallest(&v).unwrap();
            if dup > max_idx {
                v[dup] = v[max_idx];
            }
            let chosen = argmax_tie_smallest(&v).unwrap();
            // No later index with the same value may be chosen.
            prop_assert!(v[chosen] == v.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            for i in 0..chosen {
                prop_assert!(v[i] < v[chosen]);
            }
        }

        #[test]
        fn adding_a_constant_never_changes_the_argmax(
            grid in prop::collection::vec(-200i32..200, 1..8),
            offset_grid in -4000i32..4000,
        ) {
            // Quarter-integer grid keeps the shift exact in f64, so the
            // invariance is tested without rounding artifacts.
            let values: Vec<f64> = grid.iter().map(|&i| f64::from(i) * 0.25).collect();
            let offset = f64::from(offset_grid) * 0.25;
            let shifted: Vec<f64> = values.iter().map(|v| v + offset).collect();
            prop_assert_eq!(
                argmax_tie_smallest(&values),
                argmax_tie_smallest(&shifted)
            );
        }
    }
}
