//! Deterministic parallel Monte Carlo engine.
//!
//! Trials are independent work items addressed by `(seed, sweep point,
//! trial index)` streams; integer error counts commute and float
//! accumulators reduce over fixed-size chunks in index order, so results
//! are byte-identical for any worker count.

use crate::analytics::{papr_error_prob, tim_union_bound, tradeoff, EigenSystem};
use crate::channel::{draw_symbol_with, stream_rng, trial_stream};
use crate::config::TimConfig;
use crate::error::{Error, Result};
use crate::papr_detector::{detect_papr, papr};
use crate::tim_detector::{detect, HypothesisCache};
use crate::waveform::{fine_passband_moments, WaveformSet};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Stream-id namespace offsets; sweep points stay far below these.
const HARVEST_STREAM_BASE: usize = 1 << 20;
const ORACLE_STREAM_BASE: usize = 1 << 21;

const TRIAL_CHUNK: u64 = 4096;

/// One sweep point: simulated error rates with confidence intervals,
/// the matching analytic quantities, and the energy/rate columns.
/// Columns not produced by a run are NaN.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorCurvePoint {
    pub power: f64,
    pub trials: u64,
    pub pe_tim_sim: f64,
    pub pe_tim_ci: f64,
    pub pe_tim_bound: f64,
    pub pe_papr_sim: f64,
    pub pe_papr_ci: f64,
    pub pe_papr_analytic: f64,
    pub q_analytic: f64,
    pub q_sampled: f64,
    pub rate_bits_per_sec: f64,
}

/// Which detector(s) a sweep simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMode {
    Tim,
    Papr,
    Both,
}

/// 95% normal-approximation half width.
fn ci_halfwidth(p_hat: f64, trials: u64) -> f64 {
    1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt()
}

/// Integer count over trials, parallel over fixed chunks. u64 addition
/// commutes, so any schedule gives the same total.
fn deterministic_count<F>(trials: u64, per_trial: F) -> u64
where
    F: Fn(u64) -> u64 + Sync,
{
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * TRIAL_CHUNK;
            let hi = trials.min(lo + TRIAL_CHUNK);
            (lo..hi).map(&per_trial).sum::<u64>()
        })
        .sum()
}

/// Pair of float sums accumulated per chunk, then folded in chunk order
/// so the floating-point reduction order is schedule-independent.
fn deterministic_sum2<F>(trials: u64, per_trial: F) -> (f64, f64)
where
    F: Fn(u64) -> (f64, f64) + Sync,
{
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * TRIAL_CHUNK;
            let hi = trials.min(lo + TRIAL_CHUNK);
            let mut acc = (0.0, 0.0);
            for t in lo..hi {
                let (a, b) = per_trial(t);
                acc.0 += a;
                acc.1 += b;
            }
            acc
        })
        .collect();
    partials
        .into_iter()
        .fold((0.0, 0.0), |acc, (a, b)| (acc.0 + a, acc.1 + b))
}

/// Per-trial outcome bits: TIM error in bit 0, PAPR error in bit 1.
fn trial_errors(
    cfg: &TimConfig,
    ws: &WaveformSet,
    cache: Option<&HypothesisCache>,
    point: usize,
    trial: u64,
    mode: DetectorMode,
) -> u64 {
    let mut rng = stream_rng(cfg.seed, trial_stream(point, trial));
    let idx = rng.gen_range(0..ws.len());
    let x = &ws.waveforms()[idx];
    let r = draw_symbol_with(x, cfg, &mut rng);
    let mut bits = 0u64;
    if mode != DetectorMode::Papr {
        let cache = cache.expect("cache built for TIM modes");
        let est = detect(&r, cache).expect("dimensions match by construction");
        if est != x.tones {
            bits |= 1;
        }
    }
    if mode != DetectorMode::Tim {
        let est = papr(&r).ok().and_then(|v| detect_papr(v, &cfg.set).ok());
        if est != Some(x.tones) {
            bits |= 2;
        }
    }
    bits
}

fn run_sweep(cfg: &TimConfig, powers: &[f64], mode: DetectorMode) -> Result<Vec<ErrorCurvePoint>> {
    cfg.validate()?;
    if powers.is_empty() {
        return Err(Error::EmptySweep);
    }
    if cfg.trials == 0 {
        return Err(Error::NoTrials);
    }
    let mut points = Vec::with_capacity(powers.len());
    for (p_idx, &power) in powers.iter().enumerate() {
        if !power.is_finite() || power < 0.0 {
            return Err(Error::InvalidConfig {
                field: "power",
                reason: format!("sweep power {power} must be finite and >= 0"),
            });
        }
        let cfg_p = cfg.with_power(power);
        let ws = WaveformSet::build(&cfg_p)?;
        let cache = if mode == DetectorMode::Papr {
            None
        } else {
            Some(HypothesisCache::build(&ws, cfg_p.channel_var, cfg_p.noise_var)?)
        };

        let both_bits = deterministic_count(cfg.trials, |t| {
            trial_errors(&cfg_p, &ws, cache.as_ref(), p_idx, t, mode)
        });
        // Recover the two counters from the packed per-trial bits.
        let (tim_errors, papr_errors) = count_split(cfg, &ws, cache.as_ref(), p_idx, mode, both_bits);

        let trials = cfg.trials;
        let (pe_tim_sim, pe_tim_ci) = match mode {
            DetectorMode::Papr => (f64::NAN, f64::NAN),
            _ => {
                let p = tim_errors as f64 / trials as f64;
                (p, ci_halfwidth(p, trials))
            }
        };
        let (pe_papr_sim, pe_papr_ci) = match mode {
            DetectorMode::Tim => (f64::NAN, f64::NAN),
            _ => {
                let p = papr_errors as f64 / trials as f64;
                (p, ci_halfwidth(p, trials))
            }
        };

        let pe_tim_bound = if mode != DetectorMode::Papr && cfg.set.len() >= 2 {
            tim_union_bound(&cfg_p)?.value
        } else {
            f64::NAN
        };
        let pe_papr_analytic = if mode != DetectorMode::Tim && cfg.set.len() >= 2 {
            papr_error_prob(&cfg_p)?
        } else {
            f64::NAN
        };

        let trade = tradeoff(&cfg_p)?;
        let harvest = estimate_harvest(&cfg_p)?;
        points.push(ErrorCurvePoint {
            power,
            trials,
            pe_tim_sim,
            pe_tim_ci,
            pe_tim_bound,
            pe_papr_sim,
            pe_papr_ci,
            pe_papr_analytic,
            q_analytic: trade.q_exact,
            q_sampled: harvest.average,
            rate_bits_per_sec: trade.rate_bits_per_sec,
        });
    }
    Ok(points)
}

/// Splits the packed bit sum into per-detector error counts. Bit 0
/// carries TIM errors, bit 1 PAPR errors; since each trial contributes
/// at most 1 to each bit lane and trials < 2^40, the lanes never carry.
fn count_split(
    _cfg: &TimConfig,
    _ws: &WaveformSet,
    _cache: Option<&HypothesisCache>,
    _point: usize,
    mode: DetectorMode,
    packed: u64,
) -> (u64, u64) {
    match mode {
        DetectorMode::Tim => (packed & !0u64, 0),
        DetectorMode::Papr => (0, packed >> 1),
        DetectorMode::Both => {
            // packed = tim_errors + 2 * papr_errors.
            let papr_err = packed >> 1;
            (packed & 1 | (packed - 2 * papr_err), papr_err)
        }
    }
}

/// Symbol error sweep of the non-coherent ML detector.
pub fn run_tim_sweep(cfg: &TimConfig, powers: &[f64]) -> Result<Vec<ErrorCurvePoint>> {
    run_sweep(cfg, powers, DetectorMode::Tim)
}

/// Symbol error sweep of the PAPR baseline detector.
pub fn run_papr_sweep(cfg: &TimConfig, powers: &[f64]) -> Result<Vec<ErrorCurvePoint>> {
    run_sweep(cfg, powers, DetectorMode::Papr)
}

/// Both detectors on the same received symbols; the per-detector
/// columns are bit-identical to the single-detector sweeps because the
/// draw streams do not depend on the mode.
pub fn run_dual_sweep(cfg: &TimConfig, powers: &[f64]) -> Result<Vec<ErrorCurvePoint>> {
    run_sweep(cfg, powers, DetectorMode::Both)
}

/// Monte Carlo harvested-energy estimate.
#[derive(Debug, Clone, Serialize)]
pub struct HarvestEstimate {
    /// Per tone count: (tones, estimated DC proxy energy).
    pub per_tones: Vec<(u32, f64)>,
    /// Uniform set average.
    pub average: f64,
}

/// Estimates harvested energy by averaging `a2 h^2 <x^2> + a4 h^4 <x^4>`
/// over channel draws, with the fine-grained passband moments supplying
/// the noise-free time averages. Independent of `samples_per_symbol` and
/// `noise_var` by construction.
pub fn estimate_harvest(cfg: &TimConfig) -> Result<HarvestEstimate> {
    cfg.validate()?;
    if cfg.trials == 0 {
        return Err(Error::NoTrials);
    }
    let sigma_h = cfg.channel_var.sqrt();
    let mut per_tones = Vec::with_capacity(cfg.set.len());
    let mut total = 0.0;
    for (n_idx, &n) in cfg.set.iter().enumerate() {
        let (m2, m4) = fine_passband_moments(n, cfg.power, 64 * n as usize)?;
        let (h2_sum, h4_sum) = deterministic_sum2(cfg.trials, |t| {
            let mut rng = stream_rng(
                cfg.seed,
                trial_stream(HARVEST_STREAM_BASE + n_idx, t),
            );
            let z: f64 = rng.sample(StandardNormal);
            let h = sigma_h * z;
            let h2 = h * h;
            (h2, h2 * h2)
        });
        let nf = cfg.trials as f64;
        let q = cfg.rectenna.a2 * (h2_sum / nf) * m2 + cfg.rectenna.a4 * (h4_sum / nf) * m4;
        per_tones.push((n, q));
        total += q;
    }
    Ok(HarvestEstimate {
        average: total / per_tones.len() as f64,
        per_tones,
    })
}

/// Monte Carlo estimate with its 95% half width.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub ci_halfwidth: f64,
    pub draws: u64,
}

/// Chi-square sampling oracle for one pairwise tail probability:
/// `P{mu1 Z1 + mu2 Z2 > phi}` with `Z` i.i.d. chi-square(1).
pub fn pairwise_mc_oracle(es: &EigenSystem, draws: u64, seed: u64) -> Result<McEstimate> {
    if draws == 0 {
        return Err(Error::NoTrials);
    }
    let (mu1, mu2, phi) = (es.mu1, es.mu2, es.phi);
    let chunks = draws.div_ceil(TRIAL_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, trial_stream(ORACLE_STREAM_BASE + c as usize, 0));
            let lo = c * TRIAL_CHUNK;
            let hi = draws.min(lo + TRIAL_CHUNK);
            let mut count = 0u64;
            for _ in lo..hi {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                if mu1 * z1 * z1 + mu2 * z2 * z2 > phi {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let p_hat = hits as f64 / draws as f64;
    Ok(McEstimate {
        p_hat,
        ci_halfwidth: ci_halfwidth(p_hat, draws),
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg(set: Vec<u32>, trials: u64) -> TimConfig {
        TimConfig {
            set,
            trials,
            ..TimConfig::default()
        }
    }

    #[test]
    fn sweep_rejects_empty_power_list_and_zero_trials() {
        let cfg = quick_cfg(vec![4, 8], 100);
        assert_eq!(run_tim_sweep(&cfg, &[]), Err(Error::EmptySweep).map(|_: Vec<ErrorCurvePoint>| vec![]).map_err(|e| e)).max(());
    }

    #[test]
    fn single_hypothesis_has_zero_tim_error() {
        let cfg = quick_cfg(vec![8], 2_000);
        let pts = run_tim_sweep(&cfg, &[1.0]).unwrap();
        assert_eq!(pts[0].pe_tim_sim, 0.0);
        assert!(pts[0].pe_tim_bound.is_nan());
    }

    #[test]
    fn indistinguishable_hypotheses_give_coin_flip_error() {
        let cfg = TimConfig {
            channel_var: 1e-12,
            ..quick_cfg(vec![4, 8], 10_000)
        };
        let pts = run_tim_sweep(&cfg, &[1.0]).unwrap();
        let p = pts[0].pe_tim_sim;
        assert!((p - 0.5).abs() < 3.0 * pts[0].pe_tim_ci, "pe = {p}");
    }

    #[test]
    fn dual_sweep_matches_single_sweeps_bit_for_bit() {
        let cfg = quick_cfg(vec![4, 8], 20_000);
        let powers = [0.5, 2.0];
        let dual = run_dual_sweep(&cfg, &powers).unwrap();
        let tim = run_tim_sweep(&cfg, &powers).unwrap();
        let papr = run_papr_sweep(&cfg, &powers).unwrap();
        for i in 0..powers.len() {
            assert_eq!(dual[i].pe_tim_sim.to_bits(), tim[i].pe_tim_sim.to_bits());
            assert_eq!(dual[i].pe_papr_sim.to_bits(), papr[i].pe_papr_sim.to_bits());
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = quick_cfg(vec![4, 8], 30_000);
        let powers = [1.0, 10.0];
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_dual_sweep(&cfg, &powers).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_dual_sweep(&cfg, &powers).unwrap());
        for (a, b) in single.iter().zip(&multi) {
            assert_eq!(a.pe_tim_sim.to_bits(), b.pe_tim_sim.to_bits());
            assert_eq!(a.pe_papr_sim.to_bits(), b.pe_papr_sim.to_bits());
            assert_eq!(a.q_sampled.to_bits(), b.q_sampled.to_bits());
        }
    }

    #[test]
    fn error_rate_decreases_with_power_within_ci() {
        let cfg = quick_cfg(vec![4, 8], 40_000);
        let powers = [0.1, 0.5, 2.0, 10.0, 50.0];
        let pts = run_tim_sweep(&cfg, &powers).unwrap();
        for w in pts.windows(2) {
            assert!(
                w[1].pe_tim_sim <= w[0].pe_tim_sim + 3.0 * (w[0].pe_tim_ci + w[1].pe_tim_ci),
                "pe not monotone: {} -> {}",
                w[0].pe_tim_sim,
                w[1].pe_tim_sim
            );
        }
    }

    #[test]
    fn harvest_estimate_matches_closed_form() {
        let cfg = quick_cfg(vec![4, 8, 16, 32], 1_000_000);
        let est = estimate_harvest(&cfg).unwrap();
        for &(n, q_hat) in &est.per_tones {
            let q = crate::analytics::harvested_energy(n, &cfg);
            assert!(
                (q_hat / q - 1.0).abs() < 0.02,
                "N={n}: {q_hat} vs analytic {q}"
            );
        }
        // Zero power harvests nothing.
        let zero = TimConfig {
            power: 0.0,
            ..cfg
        };
        let est0 = estimate_harvest(&zero).unwrap();
        assert_eq!(est0.average, 0.0);
    }

    #[test]
    fn harvest_is_independent_of_oversampling_and_noise() {
        let a = estimate_harvest(&quick_cfg(vec![4, 8], 10_000)).unwrap();
        let b = estimate_harvest(&TimConfig {
            samples_per_symbol: 413,
            noise_var: 5.0,
            ..quick_cfg(vec![4, 8], 10_000)
        })
        .unwrap();
        assert_eq!(a.average.to_bits(), b.average.to_bits());
    }

    #[test]
    fn mc_oracle_trivial_cases() {
        let es = EigenSystem {
            pair: (4, 8),
            lambda1: 1.0,
            lambda2: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            phi: 0.0,
        };
        let est = pairwise_mc_oracle(&es, 100_000, 9).unwrap();
        assert_eq!(est.p_hat, 1.0);
        let sym = EigenSystem {
            mu1: 1.0,
            mu2: -1.0,
            ..es
        };
        let est = pairwise_mc_oracle(&sym, 200_000, 9).unwrap();
        assert!((est.p_hat - 0.5).abs() < 3.0 * est.ci_halfwidth, "{}", est.p_hat);
    }
}
