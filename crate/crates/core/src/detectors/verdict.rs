use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::trace::PairTrace;
use super::EpsSchedule;
use crate::densities::{lower_banach_density, lower_mn_density_scan, DensityEstimate, DensityKind, IndexSet, SetGenerator, WeightSpec};

/// How a subsequence witness is compared with its thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `min_j p_m >= threshold`.
    Up,
    /// `max_j d_Y <= threshold`.
    Down,
    /// `min_j p_m >= threshold` with one fixed positive threshold.
    Persist,
    /// `max_j p_m <= threshold`.
    Low,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsequenceWitness {
    pub label: String,
    pub families: Vec<usize>,
    pub direction: Direction,
    pub thresholds: Vec<f64>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

/// Membership rule of a witnessed index set, evaluated over the listed families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SetMembership {
    /// Some family has `d_Y >= eps`.
    DistanceAtLeast { eps: f64 },
    /// Some family has `d_Y < sigma`.
    DistanceBelow { sigma: f64 },
    /// Some family has `p_m >= eps(k)`: the complement of the near-zero set.
    AboveSchedule { schedule: EpsSchedule },
    /// Some family has `p_m < sigma`.
    SeminormBelow { sigma: f64 },
    /// Some family has `p_m >= eps`.
    SeminormAtLeast { eps: f64 },
}

impl SetMembership {
    fn holds(&self, t: &PairTrace, pos: usize) -> bool {
        let k = t.indices[pos];
        match self {
            SetMembership::DistanceAtLeast { eps } => t.distance[pos] >= *eps,
            SetMembership::DistanceBelow { sigma } => t.distance[pos] < *sigma,
            SetMembership::AboveSchedule { schedule } => t.seminorm[pos] >= schedule.value(k),
            SetMembership::SeminormBelow { sigma } => t.seminorm[pos] < *sigma,
            SetMembership::SeminormAtLeast { eps } => t.seminorm[pos] >= *eps,
        }
    }

    /// Union over the given traces (all sharing one index list).
    pub fn collect(&self, traces: &[&PairTrace]) -> Vec<usize> {
        let Some(first) = traces.first() else {
            return Vec::new();
        };
        (0..first.len())
            .filter(|&pos| traces.iter().any(|t| self.holds(t, pos)))
            .map(|pos| first.indices[pos])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetWitness {
    pub label: String,
    pub families: Vec<usize>,
    pub membership: SetMembership,
    pub horizon: usize,
    pub weights: WeightSpec,
    pub elements: Vec<usize>,
    pub estimate: DensityEstimate,
}

impl SetWitness {
    pub fn index_set(&self) -> IndexSet {
        IndexSet::from_elements(self.elements.clone(), self.horizon, Some(SetGenerator::Explicit))
            .expect("witness elements lie in [1, horizon]")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    pub subsequences: Vec<SubsequenceWitness>,
    pub sets: Vec<SetWitness>,
    pub thresholds: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seminorm_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonVerdict {
    pub claim: String,
    pub holds_at_horizon: bool,
    pub horizon: f64,
    pub witnesses: Witnesses,
    pub notes: Vec<String>,
}

impl HorizonVerdict {
    pub fn new(claim: impl Into<String>, holds: bool, horizon: f64) -> Self {
        Self { claim: claim.into(), holds_at_horizon: holds, horizon, witnesses: Witnesses::default(), notes: Vec::new() }
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Conjunction; witnesses and notes are concatenated.
    pub fn and(mut self, other: HorizonVerdict) -> Self {
        self.holds_at_horizon &= other.holds_at_horizon;
        self.claim = format!("{} & {}", self.claim, other.claim);
        self.horizon = self.horizon.min(other.horizon);
        self.witnesses.subsequences.extend(other.witnesses.subsequences);
        self.witnesses.sets.extend(other.witnesses.sets);
        self.witnesses.thresholds.extend(other.witnesses.thresholds);
        self.witnesses.seminorm_index = self.witnesses.seminorm_index.or(other.witnesses.seminorm_index);
        self.notes.extend(other.notes);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }
}

fn select<'a>(traces: &'a [PairTrace], families: &[usize]) -> Option<Vec<&'a PairTrace>> {
    families.iter().map(|j| traces.iter().find(|t| t.j == *j)).collect()
}

/// Re-evaluates every stored witness of `verdict` on `traces`: subsequence values must
/// be reproduced bit for bit and cross their thresholds, witnessed sets must be
/// reproduced exactly by their membership rule, and density estimates must recount to
/// the stored values.
pub fn replay(verdict: &HorizonVerdict, traces: &[PairTrace]) -> bool {
    for w in &verdict.witnesses.subsequences {
        let Some(ts) = select(traces, &w.families) else {
            return false;
        };
        if w.indices.windows(2).any(|p| p[0] >= p[1]) || w.indices.len() != w.values.len() {
            return false;
        }
        for (n, (&k, &stored)) in w.indices.iter().zip(&w.values).enumerate() {
            let Ok(pos) = ts[0].indices.binary_search(&k) else {
                return false;
            };
            let value = match w.direction {
                Direction::Up | Direction::Persist => ts.iter().map(|t| t.seminorm[pos]).fold(f64::INFINITY, f64::min),
                Direction::Down => ts.iter().map(|t| t.distance[pos]).fold(0.0, f64::max),
                Direction::Low => ts.iter().map(|t| t.seminorm[pos]).fold(0.0, f64::max),
            };
            let thr = w.thresholds[n.min(w.thresholds.len() - 1)];
            let ok = match w.direction {
                Direction::Up | Direction::Persist => value >= thr,
                Direction::Down | Direction::Low => value <= thr,
            };
            if value.to_bits() != stored.to_bits() || !ok {
                return false;
            }
        }
    }
    for s in &verdict.witnesses.sets {
        let Some(ts) = select(traces, &s.families) else {
            return false;
        };
        if s.membership.collect(&ts) != s.elements {
            return false;
        }
        let Ok(m) = s.weights.fit(s.horizon) else {
            return false;
        };
        let set = s.index_set();
        let again = match s.estimate.kind {
            DensityKind::LowerMn => lower_mn_density_scan(&set, &m, s.estimate.window.n),
            DensityKind::LowerBanach => match s.estimate.window.s {
                Some(sr) => lower_banach_density(&set, &m, sr, s.estimate.window.n),
                None => return false,
            },
            DensityKind::LowerF => return false,
        };
        match again {
            Ok(e) if e == s.estimate => {}
            _ => return false,
        }
    }
    true
}
