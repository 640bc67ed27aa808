//! Closed-form performance expressions: pairwise error probabilities of
//! the ML tone detector, the union bound, the PAPR CDF approximation and
//! its error probability, and the harvested-energy / information-rate
//! quantities.

use crate::config::TimConfig;
use crate::error::{Error, Result};
use crate::quad::{gauss_hermite, integrate, QuadCtrl};
use crate::specfun::{erfc, ln_gamma, lower_incomplete_gamma, marcum_q_half, tricomi_u_half, SeriesControl};
use crate::waveform::{sample_waveform, MultisineWaveform, WaveformSet};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Spectral quantities of one ordered waveform pair `(i, j)`.
///
/// `lambda1 > 0 > lambda2` are the non-zero eigenvalues of
/// `W_ij = R_i^-1 - R_j^-1` restricted to the pair's span; `mu1 =
/// noise_var * lambda1` and `mu2 = (noise_var + channel_var * |x_i|^2) *
/// lambda2` scale them onto the whitened quadratic form, and `phi` is
/// the log-determinant gap `log |R_j| / |R_i|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    /// Ordered tone-count pair (transmitted, confused-with).
    pub pair: (u32, u32),
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub phi: f64,
}

/// Eigensystem of the ordered pair `(x_i, x_j)` under the config's
/// channel and noise statistics.
///
/// The two non-zero eigenvalues come exactly from the 2x2 matrix of
/// `W_ij` on `span{x_i, x_j}`; no K x K matrix is formed.
pub fn eigensystem(
    x_i: &MultisineWaveform,
    x_j: &MultisineWaveform,
    cfg: &TimConfig,
) -> Result<EigenSystem> {
    if x_i.tones == x_j.tones {
        return Err(Error::DegeneratePair {
            i: x_i.tones,
            j: x_j.tones,
        });
    }
    if x_i.samples.len() != x_j.samples.len() {
        return Err(Error::DimensionMismatch {
            expected: x_i.samples.len(),
            got: x_j.samples.len(),
        });
    }
    let e = x_i.energy;
    let f = x_j.energy;
    let g: f64 = x_i
        .samples
        .iter()
        .zip(&x_j.samples)
        .map(|(a, b)| a * b)
        .sum();
    // Rank-2 requires linear independence of the pair.
    if g * g >= (1.0 - 1e-12) * e * f {
        return Err(Error::DegeneratePair {
            i: x_i.tones,
            j: x_j.tones,
        });
    }
    let sn2 = cfg.noise_var;
    let sh2 = cfg.channel_var;
    let beta = sh2 / sn2;
    let c_i = (sh2 / (sn2 * sn2)) / (1.0 + beta * e);
    let c_j = (sh2 / (sn2 * sn2)) / (1.0 + beta * f);
    let trace = c_j * f - c_i * e;
    let det = -c_i * c_j * (e * f - g * g);
    let disc = (trace * trace - 4.0 * det).sqrt();
    let lambda1 = 0.5 * (trace + disc);
    let lambda2 = det / lambda1;
    let mu1 = sn2 * lambda1;
    let mu2 = (sn2 + sh2 * e) * lambda2;
    let phi = (beta * f).ln_1p() - (beta * e).ln_1p();
    let es = EigenSystem {
        pair: (x_i.tones, x_j.tones),
        lambda1,
        lambda2,
        mu1,
        mu2,
        phi,
    };
    if !(es.lambda1.is_finite()
        && es.lambda2.is_finite()
        && es.mu1.is_finite()
        && es.mu2.is_finite()
        && es.phi.is_finite())
    {
        return Err(Error::BadEigensystem("non-finite quantities".into()));
    }
    Ok(es)
}

/// Orders the mu pair as (negative, positive), the slot convention the
/// tail expressions are derived in. Swapping the two chi-square weights
/// leaves the probability unchanged because the variates are i.i.d.
fn normalized_mus(es: &EigenSystem) -> Result<(f64, f64)> {
    if !(es.mu1 * es.mu2 < 0.0) {
        return Err(Error::BadEigensystem(format!(
            "mu pair must have opposite signs, got ({}, {})",
            es.mu1, es.mu2
        )));
    }
    if es.mu1 < 0.0 {
        Ok((es.mu1, es.mu2))
    } else {
        Ok((es.mu2, es.mu1))
    }
}

/// Pairwise error probability `P{mu1 Z1 + mu2 Z2 > phi}` with `Z`
/// i.i.d. chi-square(1), by adaptive quadrature of the exact 1-D tail
/// integral. This is the reference evaluation path.
///
/// With `(m-, m+)` the ordered mu pair and `z0 = max(0, phi / m+)`:
/// `P = e^(-z0/2)/(pi sqrt 2) * int_0^inf gamma(1/2, A(y)) e^(-y^2/2)
/// w(y) dy` after the substitution `z = z0 + y^2` that removes the
/// endpoint square-root singularity.
pub fn pairwise_error_integral(es: &EigenSystem, ctrl: QuadCtrl) -> Result<f64> {
    let (m_neg, m_pos) = normalized_mus(es)?;
    let phi = es.phi;
    let z0 = (phi / m_pos).max(0.0);
    let curvature = -m_pos / (2.0 * m_neg); // positive
    let integrand = move |y: f64| {
        let y2 = y * y;
        let arg = if z0 > 0.0 {
            curvature * y2
        } else {
            (phi - m_pos * y2) / (2.0 * m_neg)
        };
        let g = lower_incomplete_gamma(0.5, arg).unwrap_or(0.0);
        let weight = if z0 > 0.0 {
            2.0 * y / (z0 + y2).sqrt()
        } else {
            2.0
        };
        g * (-0.5 * y2).exp() * weight
    };
    let integral = integrate(integrand, 0.0, 45.0, ctrl)?;
    let p = (-0.5 * z0).exp() / (PI * std::f64::consts::SQRT_2) * integral;
    Ok(p.clamp(0.0, 1.0))
}

/// Outcome of the closed-form series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval {
    /// Partial sum at the stopping point.
    pub value: f64,
    /// True when the term magnitude dropped below the relative
    /// tolerance before the budget ran out.
    pub converged: bool,
    /// Terms accumulated.
    pub terms_used: usize,
}

/// Closed-form series for the pairwise error probability.
///
/// `term_j = (2/pi) (-1)^j / (j! (2j+1)) |m+/m-|^(j+1/2) Gamma(j+3/2)
/// e^(-z0/2) U(1/2, -j, z0/2)`. The term ratio approaches `|m+/m-|`, so
/// the series converges only when the positive eigenvalue is the
/// smaller in magnitude; a convergence flag reports the outcome rather
/// than failing.
pub fn pairwise_error_series(es: &EigenSystem, ctrl: SeriesControl) -> Result<SeriesEval> {
    let (m_neg, m_pos) = normalized_mus(es)?;
    let z0 = (es.phi / m_pos).max(0.0);
    let half_z0 = 0.5 * z0;
    let ln_ratio = (m_pos / -m_neg).ln();
    let mut sum = 0.0;
    let mut prev_mag = f64::INFINITY;
    let mut growth_streak = 0usize;
    for j in 0..ctrl.max_terms {
        let jf = j as f64;
        let u = tricomi_u_half(j as u32, half_z0)?;
        let ln_mag = (2.0 / PI).ln() + (jf + 0.5) * ln_ratio + ln_gamma(jf + 1.5)?
            - ln_gamma(jf + 1.0)?
            - (2.0 * jf + 1.0).ln()
            - half_z0
            + u.ln();
        let mag = ln_mag.exp();
        let term = if j % 2 == 0 { mag } else { -mag };
        sum += term;
        if mag <= ctrl.rel_tol * sum.abs().max(f64::MIN_POSITIVE) {
            return Ok(SeriesEval {
                value: sum,
                converged: true,
                terms_used: j + 1,
            });
        }
        if mag > prev_mag {
            growth_streak += 1;
            if growth_streak >= 10 {
                return Ok(SeriesEval {
                    value: sum,
                    converged: false,
                    terms_used: j + 1,
                });
            }
        } else {
            growth_streak = 0;
        }
        prev_mag = mag;
    }
    Ok(SeriesEval {
        value: sum,
        converged: false,
        terms_used: ctrl.max_terms,
    })
}

/// Union bound over all ordered pairs, optionally clipped to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionBound {
    /// Clipped bound, in [0, 1].
    pub value: f64,
    /// Raw pair-sum average before clipping.
    pub raw: f64,
    /// True when the raw sum exceeded 1.
    pub clipped: bool,
}

/// Union bound on the TIM symbol error probability:
/// `(1/|S|) sum_i sum_{j != i} P{x_i -> x_j}`, each pairwise term via
/// the integral path.
pub fn tim_union_bound(cfg: &TimConfig) -> Result<UnionBound> {
    cfg.validate()?;
    if cfg.set.len() < 2 {
        return Err(Error::InvalidConfig {
            field: "set",
            reason: "union bound needs at least two tone counts".into(),
        });
    }
    let ws = WaveformSet::build(cfg)?;
    let mut raw = 0.0;
    for x_i in ws.waveforms() {
        for x_j in ws.waveforms() {
            if x_i.tones == x_j.tones {
                continue;
            }
            let es = eigensystem(x_i, x_j, cfg)?;
            raw += pairwise_error_integral(&es, QuadCtrl::default())?;
        }
    }
    raw /= cfg.set.len() as f64;
    Ok(UnionBound {
        value: raw.min(1.0),
        raw,
        clipped: raw > 1.0,
    })
}

static GH_TABLES: OnceLock<Vec<(usize, (Vec<f64>, Vec<f64>))>> = OnceLock::new();

fn gh_table(order: usize) -> &'static (Vec<f64>, Vec<f64>) {
    let tables = GH_TABLES.get_or_init(|| {
        [64usize, 128, 256, 512]
            .iter()
            .map(|&n| (n, gauss_hermite(n)))
            .collect()
    });
    &tables
        .iter()
        .find(|(n, _)| *n == order)
        .expect("supported Gauss-Hermite order")
        .1
}

/// Distinct |x[k]| values with multiplicities; the per-sample CDF factor
/// depends on the sample only through its magnitude.
fn magnitude_groups(samples: &[f64]) -> Vec<(f64, usize)> {
    let mut mags: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).expect("finite magnitudes"));
    let tol = 1e-9 * mags.last().copied().unwrap_or(0.0).max(1e-300);
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for m in mags {
        match groups.last_mut() {
            Some((v, count)) if (m - *v).abs() <= tol => *count += 1,
            _ => groups.push((m, 1)),
        }
    }
    groups
}

fn papr_cdf_at_order(
    theta: f64,
    groups: &[(f64, usize)],
    xi: f64,
    cfg: &TimConfig,
    order: usize,
) -> f64 {
    let (nodes, weights) = gh_table(order);
    let sigma_h = cfg.channel_var.sqrt();
    let sigma_n = cfg.noise_var.sqrt();
    let sqrt_theta = theta.sqrt();
    let mut log_f = 0.0;
    for &(mag, count) in groups {
        // E_h Q_(1/2)(|h| x / sigma_n, sqrt(theta) (h^2 xi / sigma_n^2 + 1)^(1/2))
        // with h ~ N(0, channel_var); the integrand is even in h, so only
        // positive nodes contribute (doubled).
        let mut expect = 0.0;
        for (&t, &w) in nodes.iter().zip(weights) {
            if t <= 0.0 {
                continue;
            }
            let h = std::f64::consts::SQRT_2 * sigma_h * t;
            let a = (h * mag).abs() / sigma_n;
            let b = sqrt_theta * (h * h * xi / cfg.noise_var + 1.0).sqrt();
            let q = marcum_q_half(a, b).expect("non-negative Marcum arguments");
            expect += 2.0 * w * q;
        }
        expect /= PI.sqrt();
        let factor = (1.0 - expect).clamp(0.0, 1.0);
        if factor == 0.0 {
            return 0.0;
        }
        log_f += count as f64 * factor.ln();
    }
    log_f.exp()
}

/// Approximate CDF of the sampled PAPR statistic for the `n`-tone
/// waveform: product over samples of the per-sample non-exceedance
/// probability, each a Gaussian expectation of a half-order Marcum Q
/// evaluated by Gauss-Hermite quadrature (order 64, doubled until the
/// value moves less than 1e-8).
pub fn papr_cdf(theta: f64, n: u32, cfg: &TimConfig) -> Result<f64> {
    if !theta.is_finite() || theta < 0.0 {
        return Err(Error::Domain {
            function: "papr_cdf",
            message: format!("theta = {theta} must be >= 0"),
        });
    }
    let wf = sample_waveform(n, cfg)?;
    let groups = magnitude_groups(&wf.samples);
    let mut prev = papr_cdf_at_order(theta, &groups, wf.xi, cfg, 64);
    for order in [128usize, 256, 512] {
        let next = papr_cdf_at_order(theta, &groups, wf.xi, cfg, order);
        if (next - prev).abs() <= 1e-8 {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// Analytic error probability of the PAPR demodulator: region masses of
/// the per-symbol CDF, each conditioned on the transmitted tone count.
pub fn papr_error_prob(cfg: &TimConfig) -> Result<f64> {
    cfg.validate()?;
    let set = &cfg.set;
    if set.len() < 2 {
        return Err(Error::InvalidConfig {
            field: "set",
            reason: "PAPR error probability needs at least two tone counts".into(),
        });
    }
    let bounds = crate::papr_detector::decision_boundaries(set)?;
    let m = set.len();
    let mut total = 0.0;
    for (idx, &s) in set.iter().enumerate() {
        let p = if idx == 0 {
            1.0 - papr_cdf(bounds[0], s, cfg)?
        } else if idx == m - 1 {
            papr_cdf(bounds[m - 2], s, cfg)?
        } else {
            1.0 - papr_cdf(bounds[idx], s, cfg)? + papr_cdf(bounds[idx - 1], s, cfg)?
        };
        total += p.clamp(0.0, 1.0);
    }
    Ok((total / m as f64).clamp(0.0, 1.0))
}

/// DC energy harvested from the `n`-tone signal:
/// `a2 channel_var P + 3 a4 channel_var^2 (2n^2+1)/(2n) P^2`.
pub fn harvested_energy(n: u32, cfg: &TimConfig) -> f64 {
    let nf = f64::from(n);
    let p = cfg.power;
    let sh2 = cfg.channel_var;
    cfg.rectenna.a2 * sh2 * p
        + 3.0 * cfg.rectenna.a4 * sh2 * sh2 * ((2.0 * nf * nf + 1.0) / (2.0 * nf)) * p * p
}

/// Information rate and average harvested energy of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tradeoff {
    /// `log2 |S| / T` in bits per second.
    pub rate_bits_per_sec: f64,
    /// Exact set average of the per-waveform harvested energy.
    pub q_exact: f64,
    /// Large-N approximation replacing `(2N^2+1)/(2N)` by `N`.
    pub q_approx: f64,
}

/// Rate/energy tradeoff point for the configured set.
pub fn tradeoff(cfg: &TimConfig) -> Result<Tradeoff> {
    cfg.validate()?;
    let t = cfg.symbol_time();
    let m = cfg.set.len() as f64;
    let rate = if cfg.set.len() > 1 {
        (m).log2() / t
    } else {
        0.0
    };
    let q_exact = cfg.set.iter().map(|&n| harvested_energy(n, cfg)).sum::<f64>() / m;
    let mean_n = cfg.set.iter().map(|&n| f64::from(n)).sum::<f64>() / m;
    let sh2 = cfg.channel_var;
    let q_approx = cfg.rectenna.a2 * sh2 * cfg.power
        + 3.0 * cfg.rectenna.a4 * sh2 * sh2 * cfg.power * cfg.power * mean_n;
    Ok(Tradeoff {
        rate_bits_per_sec: rate,
        q_exact,
        q_approx,
    })
}

/// Gaussian tail helper exposed for the validation suite.
pub fn normal_upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}
