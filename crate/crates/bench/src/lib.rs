//! Fixtures shared by the criterion benches.

use lychaos_core::densities::WeightSpec;
use lychaos_core::operators::discrete::{FamilySpec, OperatorSpec};
use lychaos_core::synthesizer::{ModelSpec, PoolSpec, SynthesisConfig};
use lychaos_core::SpaceSpec;

/// `(2B, 3B)` on `l^1` with the basis pool and `m_n = n`.
pub fn backward_pair(horizon: usize) -> SynthesisConfig {
    let families = [2.0, 3.0].iter().map(|&c| FamilySpec::power(OperatorSpec::scaled_backward(c))).collect();
    let model = ModelSpec::Sequence { families, space: SpaceSpec::l1(), pool: PoolSpec::Basis { count: horizon } };
    SynthesisConfig::new(model, horizon, WeightSpec::identity())
}

/// Deterministic coefficients in `[-1, 1)` without pulling an RNG into the benches.
pub fn coefficients(len: usize, salt: u64) -> Vec<f64> {
    let mut state = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}
