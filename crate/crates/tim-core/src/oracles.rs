//! Independent reference implementations used by the validation suite
//! and the test oracles.
//!
//! Everything here deliberately avoids the production code paths: dense
//! K x K linear algebra instead of rank-1 identities, and direct
//! adaptive quadrature of defining integrals instead of series or
//! closed forms. Slow and simple on purpose.

use crate::config::TimConfig;
use crate::error::Result;
use crate::quad::{integrate, QuadCtrl};
use crate::waveform::MultisineWaveform;
use std::f64::consts::PI;

fn tight() -> QuadCtrl {
    QuadCtrl {
        rel_tol: 1e-13,
        ..QuadCtrl::default()
    }
}

// ---------------------------------------------------------------------
// Dense Gaussian likelihood
// ---------------------------------------------------------------------

/// Dense covariance `R = noise_var I + channel_var x x^T`.
pub fn dense_covariance(x: &[f64], channel_var: f64, noise_var: f64) -> Vec<Vec<f64>> {
    let k = x.len();
    let mut r = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            r[a][b] = channel_var * x[a] * x[b];
        }
        r[a][a] += noise_var;
    }
    r
}

/// Cholesky factor (lower triangular) of a symmetric positive-definite
/// matrix; panics on non-PD input since oracle matrices are known PD.
pub fn cholesky(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                assert!(s > 0.0, "matrix not positive definite at pivot {i}");
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    l
}

/// Gaussian log density via explicit K x K covariance construction,
/// Cholesky log-determinant and triangular solve. The brute-force twin
/// of the detector's rank-1 fast path.
pub fn dense_log_likelihood(r: &[f64], x: &[f64], channel_var: f64, noise_var: f64) -> f64 {
    let k = r.len();
    assert_eq!(k, x.len());
    let cov = dense_covariance(x, channel_var, noise_var);
    let l = cholesky(&cov);
    let mut log_det = 0.0;
    for (i, row) in l.iter().enumerate() {
        log_det += 2.0 * row[i].ln();
    }
    // Solve L y = r.
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = r[i];
        for j in 0..i {
            s -= l[i][j] * y[j];
        }
        y[i] = s / l[i][i];
    }
    let quad: f64 = y.iter().map(|v| v * v).sum();
    -0.5 * (k as f64 * (2.0 * PI).ln() + log_det + quad)
}

// ---------------------------------------------------------------------
// Dense eigensystems
// ---------------------------------------------------------------------

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let norm: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v * v))
        .sum::<f64>()
        .sqrt();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= 1e-15 * norm.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Dense `W_ij = R_i^-1 - R_j^-1` built from definitions: explicit
/// covariances inverted through Cholesky.
pub fn dense_w_matrix(
    x_i: &MultisineWaveform,
    x_j: &MultisineWaveform,
    cfg: &TimConfig,
) -> Vec<Vec<f64>> {
    let ri = dense_covariance(&x_i.samples, cfg.channel_var, cfg.noise_var);
    let rj = dense_covariance(&x_j.samples, cfg.channel_var, cfg.noise_var);
    let ri_inv = cholesky_inverse(&ri);
    let rj_inv = cholesky_inverse(&rj);
    let k = ri.len();
    let mut w = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            w[a][b] = ri_inv[a][b] - rj_inv[a][b];
        }
    }
    w
}

/// Symmetric whitened form `R_i^(1/2) W_ij R_i^(1/2)`; the square root
/// uses the exact rank-1 spectral decomposition of `R_i`.
pub fn dense_whitened_form(
    x_i: &MultisineWaveform,
    x_j: &MultisineWaveform,
    cfg: &TimConfig,
) -> Vec<Vec<f64>> {
    let k = x_i.samples.len();
    let energy = x_i.energy;
    let sn = cfg.noise_var.sqrt();
    let big = (cfg.noise_var + cfg.channel_var * energy).sqrt();
    let scale = (big - sn) / energy;
    // R^(1/2) = sn I + scale * x x^T.
    let mut half = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            half[a][b] = scale * x_i.samples[a] * x_i.samples[b];
        }
        half[a][a] += sn;
    }
    let w = dense_w_matrix(x_i, x_j, cfg);
    let hw = mat_mul(&half, &w);
    mat_mul(&hw, &half)
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn cholesky_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let l = cholesky(m);
    // Invert L by forward substitution, then R^-1 = L^-T L^-1.
    let mut linv = vec![vec![0.0; n]; n];
    for col in 0..n {
        linv[col][col] = 1.0 / l[col][col];
        for i in (col + 1)..n {
            let mut s = 0.0;
            for j in col..i {
                s -= l[i][j] * linv[j][col];
            }
            linv[i][col] = s / l[i][i];
        }
    }
    let mut inv = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in i.max(j)..n {
                s += linv[k][i] * linv[k][j];
            }
            inv[i][j] = s;
        }
    }
    inv
}

/// Count of eigenvalues with magnitude above `scale * max |eigenvalue|`.
pub fn significant_count(eigenvalues: &[f64], scale: f64) -> usize {
    let max = eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    eigenvalues
        .iter()
        .filter(|v| v.abs() > scale * max)
        .count()
}

// ---------------------------------------------------------------------
// Quadrature oracles for the special functions
// ---------------------------------------------------------------------

/// Log-gamma through the scaled peak integral, shifted above 12 with the
/// recurrence. Independent of the Stirling-series production path.
pub fn oracle_ln_gamma(x: f64) -> Result<f64> {
    let mut z = x;
    let mut shift = 0.0;
    while z < 12.0 {
        shift += z.ln();
        z += 1.0;
    }
    // Gamma(z) = zt^(zt+1) e^(-zt) Int_0^inf exp(zt (ln u - u + 1)) du,
    // zt = z - 1, with the integrand peaking at u = 1.
    let zt = z - 1.0;
    let integral = integrate(
        move |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            (zt * (u.ln() - u + 1.0)).exp()
        },
        0.0,
        6.0 + 900.0 / zt,
        tight(),
    )?;
    Ok((zt + 1.0) * zt.ln() - zt + integral.ln() - shift)
}

/// erf by direct quadrature of the defining integral.
pub fn oracle_erf(x: f64) -> Result<f64> {
    let v = integrate(|t: f64| (-t * t).exp(), 0.0, x.abs(), tight())?;
    let r = 2.0 / PI.sqrt() * v;
    Ok(if x < 0.0 { -r } else { r })
}

/// erfc by tail quadrature for positive arguments (accurate far into
/// the tail), reflection otherwise.
pub fn oracle_erfc(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Ok(2.0 - oracle_erfc(-x)?);
    }
    if x * x > 745.0 {
        return Ok(0.0);
    }
    let v = integrate(|t: f64| (-t * t).exp(), x, x + 30.0, tight())?;
    Ok(2.0 / PI.sqrt() * v)
}

/// Lower incomplete gamma by quadrature with the power substitution
/// `t = v^p` that removes the endpoint singularity for small `a`.
pub fn oracle_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let p = (1.5 / a).ceil().max(1.0);
    let upper = x.powf(1.0 / p);
    integrate(
        move |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let t = v.powf(p);
            p * v.powf(p * a - 1.0) * (-t).exp()
        },
        0.0,
        upper,
        tight(),
    )
}

/// Half-order Marcum Q as the upper-tail integral of the non-central
/// chi density with one degree of freedom (in amplitude coordinates):
/// `Q = int_b^inf [phi(y - a) + phi(y + a)] dy`.
pub fn oracle_marcum_half(a: f64, b: f64) -> Result<f64> {
    let upper = (a.max(b) + 45.0).max(50.0);
    let norm = 1.0 / (2.0 * PI).sqrt();
    integrate(
        move |y: f64| {
            let d1 = y - a;
            let d2 = y + a;
            norm * ((-0.5 * d1 * d1).exp() + (-0.5 * d2 * d2).exp())
        },
        b,
        upper,
        tight(),
    )
}

/// Tricomi `U(1/2, -j, x)` by the defining Laplace integral under the
/// trigonometric substitution `t = tan^2(theta)`:
/// `(2/sqrt pi) int_0^(pi/2) exp(-x tan^2 theta) cos^(2j+1) theta dtheta`.
pub fn oracle_tricomi(j: u32, x: f64) -> Result<f64> {
    let jp = 2 * j as i32 + 1;
    let v = integrate(
        move |theta: f64| {
            let c = theta.cos();
            if c <= 0.0 {
                return 0.0;
            }
            let t = theta.tan();
            let decay = if x == 0.0 { 1.0 } else { (-x * t * t).exp() };
            decay * c.powi(jp)
        },
        0.0,
        0.5 * PI,
        tight(),
    )?;
    Ok(2.0 / PI.sqrt() * v)
}
