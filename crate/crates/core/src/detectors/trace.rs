use serde::{Deserialize, Serialize};

use super::DetectorError;
use crate::operators::discrete::{operator_norm_estimate, orbit_log_norms, FamilySpec, OrbitRecord, OrbitValues};
use crate::operators::weights::saturating_exp;
use crate::space::{frechet_metric, metric_from_seminorms, seminorm, NormExponent, SpaceSpec, TruncatedVector};

/// Metric of a normed space renormed by `p_n = n ||.||`, at a difference of norm `r`.
pub fn renormed_distance(r: f64, terms: usize) -> f64 {
    metric_from_seminorms((1..=terms).map(|n| n as f64 * r), terms).value
}

/// One family's view of a pair of orbits: `p_m(x_k - y_k)` and `d_Y(x_k, y_k)` for
/// `k` in `indices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTrace {
    pub j: usize,
    pub indices: Vec<usize>,
    pub seminorm: Vec<f64>,
    pub distance: Vec<f64>,
    /// Norms of the difference when the space is normed; enables exact rescaling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    norms: Option<Vec<f64>>,
    m: usize,
    terms: usize,
}

impl PairTrace {
    /// Normed `Y` with seminorms `p_n = n ||.||`.
    pub fn from_norms(j: usize, indices: Vec<usize>, norms: Vec<f64>, m: usize, terms: usize) -> Result<Self, DetectorError> {
        if indices.len() != norms.len() {
            return Err(DetectorError::Misaligned(format!("{} indices, {} norms", indices.len(), norms.len())));
        }
        check_indices(&indices)?;
        let seminorm = norms.iter().map(|r| m as f64 * r).collect();
        let distance = norms.iter().map(|&r| renormed_distance(r, terms)).collect();
        Ok(Self { j, indices, seminorm, distance, norms: Some(norms), m, terms })
    }

    /// Pairwise trace from two vector-valued orbit records over the same indices.
    /// Index 0 (the starting vectors) is skipped.
    pub fn difference(
        space: &SpaceSpec,
        x: &OrbitRecord,
        y: &OrbitRecord,
        m: usize,
        terms: usize,
    ) -> Result<Self, DetectorError> {
        if x.indices != y.indices {
            return Err(DetectorError::Misaligned("index lists differ".into()));
        }
        let (xs, ys) = match (&x.values, &y.values) {
            (OrbitValues::Vectors(a), OrbitValues::Vectors(b)) => (a, b),
            _ => return Err(DetectorError::Misaligned("vector-valued orbits required".into())),
        };
        let mut indices = Vec::new();
        let mut semi = Vec::new();
        let mut dist = Vec::new();
        for ((t, a), b) in x.indices.iter().zip(xs).zip(ys) {
            if *t < 1.0 {
                continue;
            }
            let len = a.trunc_len().max(b.trunc_len());
            let (a, b) = (a.padded(len), b.padded(len));
            indices.push(t.round() as usize);
            let diff = a.sub(&b)?;
            // Banach spaces carry the renormed family p_n = n ||.||, as in `from_norms`.
            if let Some(r) = space.norm(&diff)? {
                semi.push(m as f64 * r);
                dist.push(renormed_distance(r, terms));
            } else {
                semi.push(seminorm(space, m, &diff)?);
                dist.push(frechet_metric(space, &a, &b, terms)?.value);
            }
        }
        check_indices(&indices)?;
        Ok(Self { j: x.label, indices, seminorm: semi, distance: dist, norms: None, m, terms })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.indices.last().copied().unwrap_or(0)
    }

    pub fn norms(&self) -> Option<&[f64]> {
        self.norms.as_deref()
    }

    /// Trace of `(q x, q y)`; only available for normed traces.
    pub fn scaled(&self, q: f64) -> Result<Self, DetectorError> {
        let norms = self
            .norms
            .as_ref()
            .ok_or_else(|| DetectorError::Misaligned("rescaling needs a normed trace".into()))?;
        Self::from_norms(self.j, self.indices.clone(), norms.iter().map(|r| q.abs() * r).collect(), self.m, self.terms)
    }
}

fn check_indices(indices: &[usize]) -> Result<(), DetectorError> {
    if indices.first().is_some_and(|&k| k == 0) || indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DetectorError::Misaligned("indices must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Something that evaluates every family's orbit of a vector.
pub trait OrbitSource: Sync {
    fn families(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Traces of `(x, 0)` for each family over `k = 1..=horizon`. By linearity the trace
    /// of a pair `(x, y)` is the trace of `x - y`.
    fn traces(&self, x: &TruncatedVector) -> Result<Vec<PairTrace>, DetectorError>;
    /// `||T_j||` for power families.
    fn operator_norms(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Discrete families acting on a normed sequence space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOrbits {
    pub families: Vec<FamilySpec>,
    pub space: SpaceSpec,
    pub horizon: usize,
    pub m: usize,
    pub terms: usize,
}

impl FamilyOrbits {
    pub fn new(families: Vec<FamilySpec>, space: SpaceSpec, horizon: usize) -> Result<Self, DetectorError> {
        if families.is_empty() {
            return Err(DetectorError::TooFewFamilies { needed: 1, got: 0 });
        }
        if space.sequence_norm().is_none() {
            return Err(DetectorError::Misaligned(format!("space {} has no sequence norm", space.id)));
        }
        Ok(Self { families, space, horizon, m: 1, terms: crate::space::DEFAULT_METRIC_TERMS })
    }

    fn norm(&self) -> NormExponent {
        self.space.sequence_norm().expect("checked at construction")
    }

    /// `||T_{j,k} x||` for `k = 1..=horizon`.
    pub fn orbit_norms(&self, j: usize, x: &TruncatedVector) -> Result<Vec<f64>, DetectorError> {
        let ks: Vec<usize> = (1..=self.horizon).collect();
        let logs = orbit_log_norms(&self.families[j], x, &ks, self.norm())?;
        Ok(logs.into_iter().map(saturating_exp).collect())
    }
}

impl OrbitSource for FamilyOrbits {
    fn families(&self) -> usize {
        self.families.len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn traces(&self, x: &TruncatedVector) -> Result<Vec<PairTrace>, DetectorError> {
        (0..self.families.len())
            .map(|j| {
                let norms = self.orbit_norms(j, x)?;
                PairTrace::from_norms(j + 1, (1..=self.horizon).collect(), norms, self.m, self.terms)
            })
            .collect()
    }

    fn operator_norms(&self) -> Option<Vec<f64>> {
        self.families
            .iter()
            .map(|f| match f {
                FamilySpec::Power { base } => Some(operator_norm_estimate(base, 256).value),
                _ => None,
            })
            .collect()
    }
}
