//! Operator families, discrete and continuous, and their orbit evaluation.

pub mod continuous;
pub mod discrete;
pub mod functions;
pub mod mittag_leffler;
pub mod regularized;
pub mod weights;

use thiserror::Error;

use crate::space::SpaceError;

pub use continuous::{
    integrated_semigroup_apply, ml_orbit_norm, semiflow_orbit_norm, translation_orbit_norm, ContinuousFamilySpec,
    MittagLefflerOrbit, Semiflow,
};
pub use discrete::{
    apply, apply_member, cesaro_average, operator_norm_estimate, orbit, orbit_log_norms, power_norm_estimate,
    FamilyEvaluator, FamilySpec, NormEstimate, OperatorSpec, OrbitRecord, OrbitValues, SetRule, ShiftForm,
};
pub use mittag_leffler::mittag_leffler;
pub use weights::{weight_product, Tail, WeightRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("domain exhausted: need {needed} stored coordinates, have {available}")]
    DomainExhausted { needed: usize, available: usize },
    #[error("non-finite coordinate {index} (operator is unbounded on this vector)")]
    NonFinite { index: usize },
    #[error("invalid operator specification: {0}")]
    InvalidSpec(String),
    #[error("family member {k} requested but only {len} are defined")]
    MemberOutOfRange { k: usize, len: usize },
    #[error("input index {index} exceeds the tabulated capacity {capacity}")]
    CapacityExceeded { index: usize, capacity: usize },
    #[error("lambda = {lambda} lies outside the sector |arg z| < {half_angle}")]
    SectorViolation { lambda: String, half_angle: f64 },
    #[error("Mittag-Leffler parameters must be positive (alpha = {alpha}, beta = {beta})")]
    BadMittagLeffler { alpha: f64, beta: f64 },
    #[error("t = {t} is beyond the grid coverage ({coverage})")]
    BeyondGrid { t: f64, coverage: f64 },
    #[error("grid too coarse: refinement changes the value by {relative_change:.3e}")]
    GridTooCoarse { relative_change: f64 },
    #[error("derivative of order {order} requested, only {available} available")]
    MissingDerivative { order: usize, available: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}
