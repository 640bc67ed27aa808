//! PAPR-based baseline demodulator.
//!
//! The received envelope's peak-to-average power ratio is compared
//! against the tone counts themselves; midpoints between adjacent set
//! members form the decision boundaries.

use crate::channel::ReceivedSymbol;
use crate::error::{Error, Result};

/// Sampled peak-to-average power ratio `max_k r[k]^2 / mean_k r[k]^2`.
///
/// The symbol-time expectation is realized as the sample mean over the
/// K envelope samples, noise included.
pub fn papr(r: &ReceivedSymbol) -> Result<f64> {
    let mut peak = 0.0f64;
    let mut sum = 0.0f64;
    for &v in &r.samples {
        let p = v * v;
        peak = peak.max(p);
        sum += p;
    }
    if sum == 0.0 || r.samples.is_empty() {
        return Err(Error::UndefinedPapr);
    }
    Ok(peak / (sum / r.samples.len() as f64))
}

/// Decision boundaries: midpoints `(s_i + s_{i+1}) / 2` between adjacent
/// tone counts of the ascending set.
pub fn decision_boundaries(set: &[u32]) -> Result<Vec<f64>> {
    if set.len() < 2 {
        return Err(Error::EmptyHypotheses);
    }
    Ok(set
        .windows(2)
        .map(|w| 0.5 * (f64::from(w[0]) + f64::from(w[1])))
        .collect())
}

/// Nearest tone count to the measured PAPR value; equidistant ties go to
/// the smaller count.
pub fn detect_papr(value: f64, set: &[u32]) -> Result<u32> {
    if set.is_empty() {
        return Err(Error::EmptyHypotheses);
    }
    let mut best = set[0];
    let mut best_dist = f64::INFINITY;
    for &s in set {
        let dist = (value - f64::from(s)).abs();
        if dist < best_dist {
            best_dist = dist;
            best = s;
        }
    }
    Ok(best)
}
