//! The unbounded shifts `A_j <x_n> = <(1+j)^(n+1) x_{n+1}>` on `c_0`, regularized by
//! `C = diag((3/2)^(-n^2))`, and the growth audit of `||A_j^k C x||` for `x = <1/n>`.

use serde::{Deserialize, Serialize};

use super::discrete::{FamilyEvaluator, FamilySpec, OperatorSpec, SetRule};
use super::weights::WeightRule;
use super::OperatorError;
use crate::space::NormExponent;

pub fn unbounded_shift(j: usize) -> OperatorSpec {
    OperatorSpec::backward(WeightRule::ExpQuadratic { base: 1.0 + j as f64, a: 0.0, b: 1.0, c: 1.0 })
}

pub fn gaussian_regularizer() -> WeightRule {
    WeightRule::ExpQuadratic { base: 1.5, a: -1.0, b: 0.0, c: 0.0 }
}

/// `T_{j,k} = A_j^k` on `set`, `(1 + ||A_j^k C||)^(-3) A_j^k` elsewhere.
pub fn damped_family(j: usize, set: SetRule) -> FamilySpec {
    FamilySpec::DampedPowers { base: unbounded_shift(j), regularizer: gaussian_regularizer(), set, exponent: 3.0 }
}

/// `ln` of `(1+j)^(lk + k(k+1)/2) (3/2)^(-(l+k)^2) / (l+k)`, the `l`-th coordinate of
/// `A_j^k C <1/n>`.
pub fn harmonic_coordinate_log(j: usize, k: usize, l: usize) -> f64 {
    let (k, l) = (k as f64, l as f64);
    (l * k + k * (k + 1.0) / 2.0) * (1.0 + j as f64).ln() - (l + k).powi(2) * 1.5f64.ln() - (l + k).ln()
}

/// `ln ||A_j^k C <1/n>||_inf` from the closed-form coordinates; the coordinates are
/// log-concave in `l`, so the scan stops once they decrease past the vertex.
pub fn harmonic_log_norm(j: usize, k: usize) -> f64 {
    let vertex = (k as f64 * (1.0 + j as f64).ln() / (2.0 * 1.5f64.ln()) - k as f64).max(1.0);
    let mut best = f64::NEG_INFINITY;
    let mut l = 1usize;
    loop {
        let v = harmonic_coordinate_log(j, k, l);
        if v < best && l as f64 > vertex + 2.0 {
            return best;
        }
        best = best.max(v);
        l += 1;
    }
}

/// The lower bound taken at `l = k`: `(1+j)^(k^2 + k(k+1)/2) (3/2)^(-(2k)^2) / (2k)`.
pub fn displayed_bound_log(j: usize, k: usize) -> f64 {
    let kf = k as f64;
    (kf * kf + kf * (kf + 1.0) / 2.0) * (1.0 + j as f64).ln() - 4.0 * kf * kf * 1.5f64.ln() - (2.0 * kf).ln()
}

/// Coefficient of `k^2` in the exponent of the displayed bound.
pub fn exponent_balance(j: usize) -> f64 {
    1.5 * (1.0 + j as f64).ln() - 4.0 * 1.5f64.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthAudit {
    pub j: usize,
    pub ks: Vec<usize>,
    /// `ln ||A_j^k C x||` from the closed form.
    pub log_norms: Vec<f64>,
    /// Same quantity through the tabulated operator evaluation.
    pub log_norms_tabulated: Vec<f64>,
    pub displayed_bound_logs: Vec<f64>,
    pub exponent_balance: f64,
    pub increasing: bool,
    pub report: String,
}

pub fn growth_audit(j: usize, ks: &[usize]) -> Result<GrowthAudit, OperatorError> {
    if j == 0 || ks.is_empty() {
        return Err(OperatorError::InvalidParameter("need j >= 1 and at least one k".into()));
    }
    let k_top = *ks.iter().max().unwrap();
    let capacity = 4 * k_top + 200;
    let entries: Vec<(usize, f64)> = (1..=capacity).map(|n| (n, -(n as f64).ln())).collect();
    let mut log_norms = Vec::with_capacity(ks.len());
    let mut tabulated = Vec::with_capacity(ks.len());
    let mut bounds = Vec::with_capacity(ks.len());
    for &k in ks {
        log_norms.push(harmonic_log_norm(j, k));
        tabulated.push(tabulated_log_norm(j, k, &entries)?);
        bounds.push(displayed_bound_log(j, k));
    }
    let increasing = log_norms.windows(2).all(|w| w[1] > w[0]);
    let balance = exponent_balance(j);
    let report = if increasing {
        format!(
            "j = {j}: ||A_j^k C x|| increases on k in [{}, {}]; k^2 coefficient {balance:+.4}",
            ks[0], k_top
        )
    } else {
        format!(
            "j = {j}: growth claim not reproduced. ||A_j^k C x|| for x = <1/n> is not increasing on k in [{}, {}] \
             (ln-norm {:.3} at k = {} vs {:.3} at k = {}); the displayed lower bound has k^2 coefficient \
             1.5 ln(1+j) - 4 ln(3/2) = {balance:+.4} < 0 and decays",
            ks[0],
            k_top,
            log_norms[0],
            ks[0],
            log_norms.last().unwrap(),
            k_top
        )
    };
    Ok(GrowthAudit {
        j,
        ks: ks.to_vec(),
        log_norms,
        log_norms_tabulated: tabulated,
        displayed_bound_logs: bounds,
        exponent_balance: balance,
        increasing,
        report,
    })
}

/// `A_j^k C` composed factor by factor and evaluated as one monomial operator.
fn tabulated_log_norm(j: usize, k: usize, entries: &[(usize, f64)]) -> Result<f64, OperatorError> {
    let mut factors: Vec<OperatorSpec> = (0..k).map(|_| unbounded_shift(j)).collect();
    factors.push(OperatorSpec::diagonal(gaussian_regularizer()));
    let spec = OperatorSpec::Composition { factors };
    let capacity = entries.last().map(|e| e.0).unwrap_or(0);
    let ev = FamilyEvaluator::new(FamilySpec::power(spec), capacity)?;
    ev.ln_member_norm(1, entries, NormExponent::Sup)
}
