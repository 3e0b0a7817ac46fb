//! Constructive synthesis of disjoint Li-Yorke irregular vectors with replayable
//! certificates.
//!
//! The pipeline works on normed spaces renormed as `p_n = n ||.||`:
//!
//! 1. [`dominate_seminorms`] builds multipliers `P_n` with `p'_n = P_n ||.||` dominating
//!    `p_l(T_{j,k} x) <= p'_{k+l}(x)` on the pool;
//! 2. [`select_blocks`] greedily picks scaled pool vectors `x_l` and indices `n_{k_l}` with
//!    a large synchronized blow-up and with earlier blocks already small;
//! 3. [`select_spacing`] picks the positions `r_q` where blocks are kept;
//! 4. [`assemble`] forms `x_beta = sum_q beta_q x_{r_q} / 2^{r_q}`, and the chains record
//!    the blow-up and smallness values that [`verify_certificate`] replays.

mod blowup;
mod continuous;
mod model;
mod pipeline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::densities::{DensityError, DensityEstimate, WeightSpec};
use crate::detectors::{DetectorError, DetectorSettings};
use crate::operators::discrete::SetRule;
use crate::operators::functions::ScalarFunction;
use crate::operators::OperatorError;
use crate::space::{SpaceError, TruncatedVector};

pub use blowup::{blowup_search, summability_tail, BlowupVector, Summability};
pub use continuous::{continuous_synthesize, inherit_modulated, wu_diagnostics, ContinuousConfig, WuDiagnostics};
pub use model::{BumpPool, ModelSpec, PoolSpec, SequenceModel, Sparse, SynthesisModel, TranslationModel};
pub use pipeline::{
    assemble, check_construction, dominate_seminorms, manifold_sample, regularized_synthesize, select_blocks,
    select_spacing, synthesize, verify_certificate, BlockPlan, DominatingFamily, Spacing,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("invalid synthesis configuration: {0}")]
    InvalidConfig(String),
    #[error("family is not monomial: {0}")]
    NotMonomial(String),
    #[error("domination fails for family {j}, k = {k}, l = {l} at pool vector {pool_index}: ln lhs {lhs} > ln rhs {rhs}")]
    DominationFailed { j: usize, k: usize, l: usize, pool_index: usize, lhs: f64, rhs: f64 },
    #[error("only {found} blocks found before the {reason} ran out, {needed} needed")]
    BlocksExhausted { found: usize, needed: usize, reason: String },
    #[error("block {needed} required but only {available} available")]
    BlockBeyondAvailable { needed: usize, available: usize },
    #[error("beta pattern invalid: {0}")]
    Pattern(String),
    #[error("sum of 1/||T_(j,n_k)|| does not converge: tail {tail:.3e} over the last quarter")]
    Divergent { tail: f64 },
    #[error("no free support position for the hump at k = {k}")]
    SupportCollision { k: usize },
    #[error("regularizer has a zero diagonal entry at index {index}")]
    ZeroRegularizer { index: usize },
    #[error("weight is not bounded above: tail sup / head sup = {ratio:.3}")]
    NotBoundedAbove { ratio: f64 },
    #[error("grid too coarse: orbit of pool vector {member} moves by {variation:.3} of its running maximum at step {k}")]
    GridTooCoarse { member: usize, k: usize, variation: f64 },
    #[error("pool vector {pool_index} does not decay by the horizon: max_j ||T_(j,H) x|| = {value:.3e}")]
    NoDecay { pool_index: usize, value: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

fn default_depth() -> usize {
    12
}
fn default_max_blocks() -> usize {
    8
}
fn default_r1() -> usize {
    4
}
fn default_m() -> usize {
    1
}
fn default_n_k() -> SetRule {
    SetRule::All
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub model: ModelSpec,
    pub horizon: usize,
    /// Indices `n_k` of the blow-up hypothesis.
    #[serde(default = "default_n_k")]
    pub n_k: SetRule,
    pub m_weight: WeightSpec,
    /// Seminorm index used for blow-up values.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Domination is verified for `k + l <= depth`.
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_max_blocks")]
    pub max_blocks: usize,
    /// First kept block position.
    #[serde(default = "default_r1")]
    pub r1: usize,
    /// `beta_l` for block positions `l = 1, 2, ...`; defaults to ones on the spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<u8>>,
    #[serde(default)]
    pub settings: DetectorSettings,
}

impl SynthesisConfig {
    pub fn new(model: ModelSpec, horizon: usize, m_weight: WeightSpec) -> Self {
        Self {
            model,
            horizon,
            n_k: default_n_k(),
            m_weight,
            m: default_m(),
            depth: default_depth(),
            max_blocks: default_max_blocks(),
            r1: default_r1(),
            beta: None,
            settings: DetectorSettings::default(),
        }
    }
}

/// One selected block with the attained values of its three inequalities (natural logs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub l: usize,
    /// Position `k_l` in the sequence `(n_k)`, from 1.
    pub k_index: usize,
    pub n_k: usize,
    pub pool_index: usize,
    /// `x_l = e^(ln_scale) * pool vector`.
    pub ln_scale: f64,
    /// `ln p'_l(x_l)`, at most 0.
    pub ln_dominated: f64,
    /// `ln min_j p_m(T_{j,n_k} x_l)`.
    pub ln_blowup: f64,
    /// `ln(l 2^l)`.
    pub ln_blowup_bound: f64,
    pub theta: f64,
    /// Smallness of earlier blocks is checked for `k` in `[tail_from, horizon]`.
    pub tail_from: usize,
    /// `ln max_{s<l, j, k} p_l(T_{j,k} x_s)`; `None` when every value is zero.
    pub ln_tail_max: Option<f64>,
    /// `ln(1/l)`.
    pub ln_tail_bound: f64,
}

/// Both inequality chains at one kept position `r = r_{q0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub q: usize,
    pub r: usize,
    pub lower_k: usize,
    /// `ln min_j p_m(T_{j,k} x_beta)` at `k = n_{k_r}`.
    pub ln_lower: f64,
    /// `ln(r - 1)`.
    pub ln_lower_bound: f64,
    /// `[ceil(theta_{r+1}), min(floor(m_{n_{k_{r+1}}}), horizon)]`, `None` when empty.
    pub window: Option<(usize, usize)>,
    /// `ln max_{j,k} p_{r+1}(T_{j,k} x_beta)` over the window.
    pub ln_upper: Option<f64>,
    /// `ln(1/(r+1))`.
    pub ln_upper_bound: f64,
    pub distance_max: f64,
    /// `1/(r+1) + 2^(-r)`.
    pub distance_bound: f64,
}

/// Lower `f`-density of `{t : max_j d_Y(T_j(t) x, 0) >= eps}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FDensityReport {
    pub eps: f64,
    pub estimate: DensityEstimate,
}

/// Continuous-time data attached to certificates of sampled semigroups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousReport {
    pub step: f64,
    pub f: ScalarFunction,
    pub max_variation: f64,
    pub f_density: Vec<FDensityReport>,
    /// Block indices `n_{k_l}` as times.
    pub block_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisCertificate {
    pub config: SynthesisConfig,
    /// `P_1, P_2, ...` with `p'_n = P_n ||.||`.
    pub dominating: Vec<f64>,
    pub blocks: Vec<BlockRecord>,
    pub spacing: Vec<usize>,
    /// First spacing value without the blocks it needs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_next: Option<usize>,
    pub beta: Vec<u8>,
    pub x_beta: TruncatedVector,
    pub chains: Vec<ChainRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<ContinuousReport>,
}

impl SynthesisCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
