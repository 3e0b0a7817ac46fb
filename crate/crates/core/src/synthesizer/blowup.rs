use serde::{Deserialize, Serialize};

use super::model::{SequenceModel, SynthesisModel};
use crate::detectors::OrbitSource;
use super::{PoolSpec, SynthesisError};
use crate::operators::discrete::FamilySpec;
use crate::space::{SpaceSpec, TruncatedVector};

/// Series whose convergence guarantees a blow-up vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summability {
    /// `sum_k 1 / min_j ||T_{j,n_k}||`.
    Norm,
    /// `sum_k 1 / min_j ||T_{j,n_k}||^2`, enough on Hilbert spaces.
    NormSquared,
}

/// Largest tail accepted as convergent.
pub(crate) const SUMMABLE_TAIL: f64 = 1e-6;

/// Tail of the summability series over the last quarter of `n_seq`, or `None` when some
/// operator norm has no closed form. Cheap norm lower bounds are tried first; a tail
/// below the acceptance level computed from them bounds the exact one.
pub fn summability_tail(model: &dyn SynthesisModel, n_seq: &[usize], mode: Summability) -> Option<f64> {
    let power = match mode {
        Summability::Norm => 1.0,
        Summability::NormSquared => 2.0,
    };
    let start = n_seq.len().saturating_sub(n_seq.len() / 4 + 1);
    let tail = |norm: &dyn Fn(usize, usize) -> Option<f64>| -> Option<f64> {
        let mut tail = 0.0;
        for &n in &n_seq[start..] {
            let mut ln_min = f64::INFINITY;
            for j in 0..model.families() {
                ln_min = ln_min.min(norm(j, n)?);
            }
            tail += (-power * ln_min).exp();
        }
        Some(tail)
    };
    match tail(&|j, n| model.ln_operator_norm_floor(j, n)) {
        Some(t) if t < SUMMABLE_TAIL => Some(t),
        _ => tail(&|j, n| model.ln_operator_norm(j, n)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupVector {
    pub y: TruncatedVector,
    pub n_seq: Vec<usize>,
    /// Coordinate of the hump for `n_k`.
    pub positions: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// `min_j ||T_{j,n_k} y||`, at least `k`.
    pub growth: Vec<f64>,
    pub tail: f64,
}

/// Gliding hump `y = sum_k c_k e_{i_k}` with `i_k` the first coordinate after `i_{k-1}`
/// maximizing `min_j ||T_{j,n_k} e_i||` and `c_k = k / min_j ||T_{j,n_k} e_{i_k}||`. Supports
/// and monomial images are disjoint, so `min_j ||T_{j,n_k} y|| >= k`.
pub fn blowup_search(
    families: &[FamilySpec],
    space: &SpaceSpec,
    n_seq: &[usize],
    mode: Summability,
) -> Result<BlowupVector, SynthesisError> {
    if n_seq.is_empty() || n_seq.windows(2).any(|w| w[0] >= w[1]) || n_seq[0] == 0 {
        return Err(SynthesisError::InvalidConfig("n_k must be positive and strictly increasing".into()));
    }
    let top = *n_seq.last().unwrap();
    // room for every hump: the first full-norm coordinate of a backward power is n_k + 1
    let reach = top + n_seq.len() + 64;
    let model = SequenceModel::new(families.to_vec(), space.clone(), PoolSpec::Basis { count: reach }, top)?;
    let tail = summability_tail(&model, n_seq, mode)
        .ok_or_else(|| SynthesisError::InvalidConfig("operator norms unavailable".into()))?;
    if !(tail < SUMMABLE_TAIL) {
        return Err(SynthesisError::Divergent { tail });
    }
    let mut positions = Vec::with_capacity(n_seq.len());
    let mut ln_coeffs = Vec::with_capacity(n_seq.len());
    let mut prev = 0usize;
    for (idx, &n) in n_seq.iter().enumerate() {
        let k = idx + 1;
        let target = (0..model.families())
            .filter_map(|j| model.ln_operator_norm(j, n))
            .fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64)> = None;
        for i in prev + 1..=reach {
            let v = model.ln_min_family(&[(i, 1.0)], n)?;
            if v > best.map_or(f64::NEG_INFINITY, |b| b.1) {
                best = Some((i, v));
            }
            if v >= target - 1e-12 * target.abs().max(1.0) {
                break;
            }
        }
        let Some((i, v)) = best.filter(|b| b.1 > f64::NEG_INFINITY) else {
            return Err(SynthesisError::SupportCollision { k });
        };
        positions.push(i);
        ln_coeffs.push((k as f64).ln() - v);
        prev = i;
    }
    let y_sparse: Vec<(usize, f64)> = positions.iter().zip(&ln_coeffs).map(|(&i, &c)| (i, c.exp())).collect();
    let mut growth = Vec::with_capacity(n_seq.len());
    for (idx, &n) in n_seq.iter().enumerate() {
        let g = model.ln_min_family(&y_sparse, n)?.exp();
        if !(g >= (idx + 1) as f64 * (1.0 - 1e-12)) {
            return Err(SynthesisError::SupportCollision { k: idx + 1 });
        }
        growth.push(g);
    }
    Ok(BlowupVector {
        y: model.materialize(&y_sparse)?,
        n_seq: n_seq.to_vec(),
        positions,
        coefficients: y_sparse.iter().map(|e| e.1).collect(),
        growth,
        tail,
    })
}
