//! Two-parameter Mittag-Leffler function `E_{a,b}(z) = sum z^n / Gamma(a n + b)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::{gamma, ln_gamma};

use super::OperatorError;

/// Radius separating the power series from the exponential asymptotics.
pub const Z_SWITCH: f64 = 8.0;
/// Maximal number of algebraic correction terms in the asymptotic form.
pub const ASYMPTOTIC_TERMS: usize = 8;

pub fn mittag_leffler(alpha: f64, beta: f64, z: Complex64) -> Result<Complex64, OperatorError> {
    if !(alpha > 0.0) || !(beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(OperatorError::BadMittagLeffler { alpha, beta });
    }
    if z.norm() <= Z_SWITCH || alpha >= 2.0 {
        Ok(ml_series(alpha, beta, z))
    } else {
        Ok(ml_asymptotic(alpha, beta, z))
    }
}

/// Power series summed with log-magnitude terms; stops once terms past the peak fall
/// below `1e-17` of the largest one.
pub fn ml_series(alpha: f64, beta: f64, z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return Complex64::new((-ln_gamma(beta)).exp(), 0.0);
    }
    let ln_r = z.norm().ln();
    let theta = z.arg();
    let ln_mag = |n: usize| n as f64 * ln_r - ln_gamma(alpha * n as f64 + beta);
    let mut logs = Vec::new();
    let mut top = f64::NEG_INFINITY;
    let mut n = 0usize;
    loop {
        let l = ln_mag(n);
        logs.push(l);
        top = top.max(l);
        let past_peak = n > 2 && l < logs[n - 1];
        if (past_peak && l < top - 40.0) || n > 200_000 {
            break;
        }
        n += 1;
    }
    let mut sum = Complex64::new(0.0, 0.0);
    // add smallest terms first
    for (k, &l) in logs.iter().enumerate().rev() {
        let mag = (l - top).exp();
        if mag == 0.0 {
            continue;
        }
        sum += Complex64::from_polar(mag, k as f64 * theta);
    }
    sum * top.exp()
}

/// `1/Gamma(x)`, zero at the poles.
fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Exponential asymptotics for large `|z|` (`0 < alpha < 2`): saddle contributions
/// `(1/a) Z^(1-b) e^Z` with `Z = z^(1/a) e^(2 pi i m / a)` over the branches with
/// `|arg z + 2 pi m| <= 3 a pi / 4`, minus the algebraic series `sum z^-k / Gamma(b - a k)`
/// truncated at its smallest term.
pub fn ml_asymptotic(alpha: f64, beta: f64, z: Complex64) -> Complex64 {
    let theta = z.arg();
    let r = z.norm();
    let mut sum = Complex64::new(0.0, 0.0);
    let m_max = (1.0 / alpha).ceil() as i64 + 1;
    for m in -m_max..=m_max {
        let phase = theta + 2.0 * PI * m as f64;
        if phase.abs() <= 0.75 * alpha * PI {
            let big_z = Complex64::from_polar(r.powf(1.0 / alpha), phase / alpha);
            sum += big_z.powf(1.0 - beta) * big_z.exp() / alpha;
        }
    }
    let mut prev = f64::INFINITY;
    for k in 1..=ASYMPTOTIC_TERMS {
        let term = z.powi(-(k as i32)) * rgamma(beta - alpha * k as f64);
        let size = term.norm();
        if size > prev && size > 0.0 {
            break;
        }
        if size > 0.0 {
            prev = size;
        }
        sum -= term;
    }
    sum
}
