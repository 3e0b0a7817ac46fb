//! Finite-horizon checkers for the disjoint Li-Yorke conditions, the `(s, i)` taxonomy
//! and irregular vectors.
//!
//! Limits are replaced by auditable proxies: "tends to infinity" means crossing every
//! threshold of [`DetectorSettings::grow`] along a strictly increasing subsequence,
//! "tends to zero" means falling below every threshold of [`DetectorSettings::shrink`],
//! and a lower density is "zero" when its estimate is at most
//! [`DetectorSettings::tol_density`].

mod classify;
mod conditions;
mod trace;
mod verdict;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::densities::{DensityError, WeightSpec};
use crate::operators::OperatorError;
use crate::space::SpaceError;

pub use classify::{
    banach_equivalence_probe, beqa_battery, classify, classify_irregular, classify_pairs, BanachProbe,
    ImplicationCheck, PairVerdict,
};
pub use conditions::{
    apartness_by_density, liyorke_pair, liyorke_pair_trace, near_zero_type1, smallness_by_density,
    smallness_by_subsequence, sync_unboundedness, DensityMode, SubsequenceMode,
};
pub use trace::{renormed_distance, FamilyOrbits, OrbitSource, PairTrace};
pub use verdict::{replay, Direction, HorizonVerdict, SetMembership, SetWitness, SubsequenceWitness, Witnesses};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorError {
    #[error("orbits are not aligned: {0}")]
    Misaligned(String),
    #[error("weights {0} are not in class R at this horizon")]
    NotClassR(String),
    #[error("invalid taxonomy tag: {0}")]
    InvalidTag(String),
    #[error("at least {needed} families required, got {got}")]
    TooFewFamilies { needed: usize, got: usize },
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("witnesses not found at horizon: {0}")]
    WitnessesNotFound(String),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Decreasing tolerance `eps(k)` defining the near-zero set `{k : max_j p(T_{j,k} x) < eps(k)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "snake_case")]
pub enum EpsSchedule {
    Constant { eps: f64 },
    /// `max(eps0 k^-exponent, floor)`.
    PowerDecay { eps0: f64, exponent: f64, floor: f64 },
}

impl EpsSchedule {
    pub fn value(&self, k: usize) -> f64 {
        match self {
            EpsSchedule::Constant { eps } => *eps,
            EpsSchedule::PowerDecay { eps0, exponent, floor } => (eps0 * (k.max(1) as f64).powf(-exponent)).max(*floor),
        }
    }
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::PowerDecay { eps0: 0.1, exponent: 0.5, floor: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorSettings {
    /// Thresholds certifying divergence to infinity.
    pub grow: Vec<f64>,
    /// Thresholds certifying convergence to zero.
    pub shrink: Vec<f64>,
    pub tol_density: f64,
    /// Burn-in for lower `(m_n)`-density scans.
    pub n_min: usize,
    /// Largest `s` scanned by lower Banach density estimates.
    pub banach_s_max: usize,
    /// `epsilon` values tested by density smallness ("for each epsilon > 0").
    pub epsilons: Vec<f64>,
    /// Candidate `sigma` values for apartness ("there exists sigma > 0").
    pub sigmas: Vec<f64>,
    pub schedule: EpsSchedule,
    /// Positive floor for semi-irregular vectors (`lim p_m > 0`).
    pub semi_floor: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            grow: vec![10.0, 1e2, 1e3],
            shrink: vec![1e-1, 1e-2, 1e-3],
            tol_density: 0.05,
            n_min: 1,
            banach_s_max: 20,
            epsilons: vec![1e-1, 1e-2, 1e-3],
            sigmas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            schedule: EpsSchedule::default(),
            semi_floor: 1e-3,
        }
    }
}

/// `(m_n, s, i)` with `s, i` in `1..=4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyTag {
    pub s: u8,
    pub i: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_weight: Option<WeightSpec>,
    #[serde(default)]
    pub dense: bool,
    /// Label of the subspace the sample is drawn from.
    #[serde(default = "default_subspace")]
    pub subspace: String,
}

fn default_subspace() -> String {
    "X".into()
}

impl TaxonomyTag {
    pub fn new(s: u8, i: u8, m_weight: Option<WeightSpec>) -> Result<Self, DetectorError> {
        let tag = Self { s, i, m_weight, dense: false, subspace: default_subspace() };
        tag.validate()?;
        Ok(tag)
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let ok = match (self.s, self.i) {
            (1 | 2, 1 | 2) | (3 | 4, 1 | 2) => self.m_weight.is_some(),
            (1 | 2, 3 | 4) => self.m_weight.is_none(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(DetectorError::InvalidTag(format!(
                "(s, i) = ({}, {}) {} a weight sequence",
                self.s,
                self.i,
                if self.m_weight.is_some() { "with" } else { "without" }
            )))
        }
    }

    pub fn weight(&self) -> Result<&WeightSpec, DetectorError> {
        self.m_weight.as_ref().ok_or_else(|| DetectorError::InvalidTag("tag carries no weight sequence".into()))
    }

    pub fn label(&self) -> String {
        match &self.m_weight {
            Some(m) => format!("d-LY(m_n={}, {}, {})", m.label(), self.s, self.i),
            None => format!("d-LY({}, {})", self.s, self.i),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_combinations() {
        let m = Some(WeightSpec::identity());
        for s in 1..=4u8 {
            for i in 1..=4u8 {
                let with = TaxonomyTag::new(s, i, m.clone()).is_ok();
                let without = TaxonomyTag::new(s, i, None).is_ok();
                let expect_with = i <= 2;
                let expect_without = s <= 2 && i >= 3;
                assert_eq!(with, expect_with, "({s},{i}) with m");
                assert_eq!(without, expect_without, "({s},{i}) without m");
            }
        }
        assert!(TaxonomyTag::new(0, 1, m).is_err());
    }

    #[test]
    fn schedule_decreases_to_floor() {
        let s = EpsSchedule::default();
        assert_eq!(s.value(1), 0.1);
        assert!(s.value(100) < s.value(4));
        assert_eq!(s.value(1_000_000), 1e-3);
    }
}
