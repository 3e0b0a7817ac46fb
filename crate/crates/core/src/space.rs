//! Truncated sequence/grid vectors, seminorm families and the translation
//! invariant metrics built from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_METRIC_TERMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("seminorm index must be at least 1")]
    ZeroIndex,
    #[error("vector belongs to space `{vector}` but `{space}` was requested")]
    Mismatch { vector: String, space: String },
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("product metric needs at least one pair")]
    EmptyPairs,
    #[error("regularizing diagonal has a zero entry at coordinate {index}")]
    ZeroDiagonal { index: usize },
    #[error("regularized coordinate {index} overflows")]
    Overflow { index: usize },
    #[error("seminorm p_{n} requested but only {count} are stored")]
    BeyondCount { n: usize, count: usize },
    #[error("metric needs at least one term")]
    NoTerms,
}

/// `p`-th power norm or the sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormExponent {
    Finite(f64),
    Sup,
}

impl NormExponent {
    fn validate(&self) -> Result<(), SpaceError> {
        match *self {
            NormExponent::Finite(p) if !(p >= 1.0) || !p.is_finite() => {
                Err(SpaceError::InvalidSpace(format!("exponent {p} is not a real >= 1")))
            }
            _ => Ok(()),
        }
    }

    /// Norm of the entries, each multiplied by its weight (weight enters to the power 1 for
    /// sup norms and to the power 1 inside the p-sum, i.e. as a measure).
    pub fn weighted_norm<I>(&self, entries: I) -> f64
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        match *self {
            NormExponent::Sup => entries
                .into_iter()
                .map(|(v, w)| v.abs() * w)
                .fold(0.0, f64::max),
            NormExponent::Finite(p) => {
                if p == 1.0 {
                    entries.into_iter().map(|(v, w)| v.abs() * w).sum()
                } else if p == 2.0 {
                    entries
                        .into_iter()
                        .map(|(v, w)| v * v * w)
                        .sum::<f64>()
                        .sqrt()
                } else {
                    // scale by the largest entry to keep the power sum in range
                    let items: Vec<(f64, f64)> = entries.into_iter().collect();
                    let scale = items.iter().map(|(v, _)| v.abs()).fold(0.0, f64::max);
                    if scale == 0.0 || !scale.is_finite() {
                        return scale;
                    }
                    let s: f64 = items
                        .iter()
                        .map(|(v, w)| (v.abs() / scale).powf(p) * w)
                        .sum();
                    scale * s.powf(1.0 / p)
                }
            }
        }
    }

    pub fn norm(&self, coeffs: &[f64]) -> f64 {
        self.weighted_norm(coeffs.iter().map(|&v| (v, 1.0)))
    }
}

/// How the `n`-th seminorm of a sequence space is built from the coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SeminormRule {
    /// `p_n = ||.||` for every `n`.
    Constant { norm: NormExponent },
    /// `p_n = n ||.||`, the standard renorming of a Banach space as a Frechet space.
    Renormed { norm: NormExponent },
    /// `p_n(x) = ||(x_1, ..., x_n)||`; the space of all sequences.
    Prefix { norm: NormExponent },
    /// `p_n(x) = ||(i^(n-1) x_i)_i||`; a Kothe-type echelon space.
    PolynomialWeights { norm: NormExponent },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormFamily {
    pub rule: SeminormRule,
    /// Number of explicitly available seminorms; `None` means the rule is used for every `n`.
    #[serde(default)]
    pub count: Option<usize>,
}

impl SeminormFamily {
    pub fn new(rule: SeminormRule) -> Self {
        Self { rule, count: None }
    }

    fn norm(&self) -> NormExponent {
        match self.rule {
            SeminormRule::Constant { norm }
            | SeminormRule::Renormed { norm }
            | SeminormRule::Prefix { norm }
            | SeminormRule::PolynomialWeights { norm } => norm,
        }
    }

    pub fn evaluate(&self, n: usize, coeffs: &[f64]) -> Result<f64, SpaceError> {
        if n == 0 {
            return Err(SpaceError::ZeroIndex);
        }
        if let Some(count) = self.count {
            if n > count {
                return Err(SpaceError::BeyondCount { n, count });
            }
        }
        Ok(match self.rule {
            SeminormRule::Constant { norm } => norm.norm(coeffs),
            SeminormRule::Renormed { norm } => n as f64 * norm.norm(coeffs),
            SeminormRule::Prefix { norm } => norm.norm(&coeffs[..n.min(coeffs.len())]),
            SeminormRule::PolynomialWeights { norm } => {
                let e = (n - 1) as i32;
                let scaled: Vec<f64> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * ((i + 1) as f64).powi(e))
                    .collect();
                norm.norm(&scaled)
            }
        })
    }

    /// True when every seminorm of the family is a multiple of one norm.
    pub fn is_normed(&self) -> bool {
        matches!(
            self.rule,
            SeminormRule::Constant { .. } | SeminormRule::Renormed { .. }
        )
    }

    /// Multiplier `c_n` with `p_n = c_n ||.||` for normed rules.
    pub fn norm_multiplier(&self, n: usize) -> Option<f64> {
        match self.rule {
            SeminormRule::Constant { .. } => Some(1.0),
            SeminormRule::Renormed { .. } => Some(n as f64),
            _ => None,
        }
    }

    pub fn base_norm(&self) -> NormExponent {
        self.norm()
    }
}

/// Uniform mesh of cells `[origin + i h, origin + (i+1) h)`; functions are sampled at cell
/// midpoints and integrated by the midpoint rectangle rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGrid {
    pub origin: f64,
    pub step: f64,
    /// Weight sampled at the cell midpoints.
    pub weight: Vec<f64>,
    pub norm: NormExponent,
}

impl WeightedGrid {
    pub fn from_fn(origin: f64, step: f64, cells: usize, norm: NormExponent, rho: impl Fn(f64) -> f64) -> Self {
        let weight = (0..cells)
            .map(|i| rho(origin + (i as f64 + 0.5) * step))
            .collect();
        Self { origin, step, weight, norm }
    }

    pub fn cells(&self) -> usize {
        self.weight.len()
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.step
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.cells()).map(|i| self.midpoint(i)).collect()
    }

    /// Weighted norm of samples; samples beyond the grid are ignored.
    pub fn norm_of(&self, samples: &[f64]) -> f64 {
        let h = self.step;
        match self.norm {
            NormExponent::Sup => self.norm.weighted_norm(
                samples.iter().zip(&self.weight).map(|(&v, &w)| (v, w)),
            ),
            NormExponent::Finite(_) => self.norm.weighted_norm(
                samples.iter().zip(&self.weight).map(|(&v, &w)| (v, w * h)),
            ),
        }
    }

    fn validate(&self) -> Result<(), SpaceError> {
        self.norm.validate()?;
        if !(self.step > 0.0) || !self.step.is_finite() || !self.origin.is_finite() {
            return Err(SpaceError::InvalidSpace("grid step must be positive".into()));
        }
        if let Some(i) = self
            .weight
            .iter()
            .position(|&w| !(w > 0.0) || !w.is_finite())
        {
            return Err(SpaceError::InvalidSpace(format!(
                "weight at cell {i} is not strictly positive"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    Lp { p: f64 },
    C0,
    FrechetSeq { seminorms: SeminormFamily },
    WeightedGrid { grid: WeightedGrid },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: SpaceKind,
}

impl SpaceSpec {
    pub fn new(id: impl Into<String>, kind: SpaceKind) -> Result<Self, SpaceError> {
        let spec = Self { id: id.into(), kind };
        spec.validate()?;
        Ok(spec)
    }

    pub fn lp(p: f64) -> Result<Self, SpaceError> {
        Self::new(format!("l{p}"), SpaceKind::Lp { p })
    }

    pub fn l1() -> Self {
        Self::lp(1.0).expect("l1 is valid")
    }

    pub fn l2() -> Self {
        Self::lp(2.0).expect("l2 is valid")
    }

    pub fn c0() -> Self {
        Self { id: "c0".into(), kind: SpaceKind::C0 }
    }

    pub fn frechet(id: impl Into<String>, seminorms: SeminormFamily) -> Result<Self, SpaceError> {
        Self::new(id, SpaceKind::FrechetSeq { seminorms })
    }

    pub fn weighted_grid(id: impl Into<String>, grid: WeightedGrid) -> Result<Self, SpaceError> {
        Self::new(id, SpaceKind::WeightedGrid { grid })
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        match &self.kind {
            SpaceKind::Lp { p } => NormExponent::Finite(*p).validate(),
            SpaceKind::C0 => Ok(()),
            SpaceKind::FrechetSeq { seminorms } => seminorms.norm().validate(),
            SpaceKind::WeightedGrid { grid } => grid.validate(),
        }
    }

    /// Banach kinds expose one norm through a constant seminorm family.
    pub fn is_banach(&self) -> bool {
        !matches!(self.kind, SpaceKind::FrechetSeq { .. })
    }

    /// Norm exponent of the coordinates for sequence-type Banach kinds.
    pub fn sequence_norm(&self) -> Option<NormExponent> {
        match &self.kind {
            SpaceKind::Lp { p } => Some(NormExponent::Finite(*p)),
            SpaceKind::C0 => Some(NormExponent::Sup),
            SpaceKind::FrechetSeq { seminorms } if seminorms.is_normed() => {
                Some(seminorms.base_norm())
            }
            _ => None,
        }
    }

    /// The Banach norm (`None` for genuinely Frechet kinds).
    pub fn norm(&self, x: &TruncatedVector) -> Result<Option<f64>, SpaceError> {
        self.check(x)?;
        Ok(match &self.kind {
            SpaceKind::Lp { p } => Some(NormExponent::Finite(*p).norm(&x.coeffs)),
            SpaceKind::C0 => Some(NormExponent::Sup.norm(&x.coeffs)),
            SpaceKind::WeightedGrid { grid } => Some(grid.norm_of(&x.coeffs)),
            SpaceKind::FrechetSeq { .. } => None,
        })
    }

    fn check(&self, x: &TruncatedVector) -> Result<(), SpaceError> {
        if x.space_id != self.id {
            return Err(SpaceError::Mismatch {
                vector: x.space_id.clone(),
                space: self.id.clone(),
            });
        }
        Ok(())
    }

    pub fn zero(&self, len: usize) -> TruncatedVector {
        TruncatedVector { coeffs: vec![0.0; len], space_id: self.id.clone() }
    }

    /// `e_n` (1-based) with `len` stored coordinates.
    pub fn basis(&self, n: usize, len: usize) -> TruncatedVector {
        assert!(n >= 1 && n <= len, "basis index {n} outside 1..={len}");
        let mut coeffs = vec![0.0; len];
        coeffs[n - 1] = 1.0;
        TruncatedVector { coeffs, space_id: self.id.clone() }
    }

    pub fn vector(&self, coeffs: Vec<f64>) -> Result<TruncatedVector, SpaceError> {
        TruncatedVector::new(self.id.clone(), coeffs)
    }
}

/// Finitely supported coefficient vector; coordinates beyond `trunc_len` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedVector {
    coeffs: Vec<f64>,
    space_id: String,
}

impl TruncatedVector {
    pub fn new(space_id: impl Into<String>, coeffs: Vec<f64>) -> Result<Self, SpaceError> {
        if let Some(index) = coeffs.iter().position(|v| !v.is_finite()) {
            return Err(SpaceError::NonFinite { index });
        }
        Ok(Self { coeffs, space_id: space_id.into() })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn trunc_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn space_id(&self) -> &str {
        &self.space_id
    }

    /// Coordinate `n` (1-based); zero beyond the truncation.
    pub fn get(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.coeffs.get(n - 1).copied().unwrap_or(0.0)
    }

    /// Non-zero coordinates as `(n, value)` with 1-based `n`.
    pub fn nonzeros(&self) -> Vec<(usize, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i + 1, v))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&v| v == 0.0)
    }

    /// Same vector with at least `len` stored coordinates.
    pub fn padded(&self, len: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < len {
            coeffs.resize(len, 0.0);
        }
        Self { coeffs, space_id: self.space_id.clone() }
    }

    /// Replace the coefficients, keeping the space; rejects non-finite entries.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self, SpaceError> {
        Self::new(self.space_id.clone(), coeffs)
    }

    pub fn scaled(&self, c: f64) -> Result<Self, SpaceError> {
        self.with_coeffs(self.coeffs.iter().map(|v| v * c).collect())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self, SpaceError> {
        if self.space_id != other.space_id {
            return Err(SpaceError::Mismatch {
                vector: other.space_id.clone(),
                space: self.space_id.clone(),
            });
        }
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (1..=len).map(|n| f(self.get(n), other.get(n))).collect();
        self.with_coeffs(coeffs)
    }

    pub fn add(&self, other: &Self) -> Result<Self, SpaceError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpaceError> {
        self.zip_with(other, |a, b| a - b)
    }
}

#[derive(Serialize, Deserialize)]
struct SparseForm {
    space: String,
    len: usize,
    /// `[n, value]` pairs with 1-based coordinates.
    entries: Vec<(usize, f64)>,
}

impl Serialize for TruncatedVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SparseForm {
            space: self.space_id.clone(),
            len: self.coeffs.len(),
            entries: self.nonzeros(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let form = SparseForm::deserialize(d)?;
        let mut coeffs = vec![0.0; form.len];
        for (n, v) in form.entries {
            if n == 0 || n > form.len {
                return Err(serde::de::Error::custom(format!(
                    "coordinate {n} outside 1..={}",
                    form.len
                )));
            }
            coeffs[n - 1] = v;
        }
        TruncatedVector::new(form.space, coeffs).map_err(serde::de::Error::custom)
    }
}

/// `p_n(x)`; Banach kinds return their norm for every `n`.
pub fn seminorm(space: &SpaceSpec, n: usize, x: &TruncatedVector) -> Result<f64, SpaceError> {
    if n == 0 {
        return Err(SpaceError::ZeroIndex);
    }
    space.check(x)?;
    match &space.kind {
        SpaceKind::FrechetSeq { seminorms } => seminorms.evaluate(n, &x.coeffs),
        _ => Ok(space.norm(x)?.expect("Banach kinds have a norm")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    /// Upper bound `2^-terms` on the omitted tail.
    pub tail_bound: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Truncated metric series from the seminorm values `p_1, ..., p_terms` of a difference.
pub fn metric_from_seminorms(values: impl IntoIterator<Item = f64>, terms: usize) -> MetricValue {
    let mut acc = CompensatedSum::default();
    let mut weight = 1.0;
    for t in values.into_iter().take(terms) {
        weight *= 0.5;
        let g = if t.is_infinite() { 1.0 } else { t / (1.0 + t) };
        acc.add(weight * g);
    }
    MetricValue { value: acc.value(), tail_bound: 0.5f64.powi(terms as i32) }
}

/// `sum_{n<=terms} 2^-n p_n(x-y)/(1+p_n(x-y))`.
pub fn frechet_metric(
    space: &SpaceSpec,
    x: &TruncatedVector,
    y: &TruncatedVector,
    terms: usize,
) -> Result<MetricValue, SpaceError> {
    if terms == 0 {
        return Err(SpaceError::NoTerms);
    }
    space.check(x)?;
    space.check(y)?;
    let diff = x.sub(y)?;
    match &space.kind {
        SpaceKind::FrechetSeq { seminorms } if !seminorms.is_normed() => {
            let values = (1..=terms)
                .map(|n| seminorms.evaluate(n, &diff.coeffs))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(metric_from_seminorms(values, terms))
        }
        SpaceKind::FrechetSeq { seminorms } => {
            if let Some(count) = seminorms.count {
                if terms > count {
                    return Err(SpaceError::BeyondCount { n: terms, count });
                }
            }
            let base = seminorms.base_norm().norm(&diff.coeffs);
            Ok(metric_from_seminorms(
                (1..=terms).map(|n| seminorms.norm_multiplier(n).unwrap() * base),
                terms,
            ))
        }
        _ => {
            let t = space.norm(&diff)?.unwrap();
            Ok(metric_from_seminorms(std::iter::repeat(t), terms))
        }
    }
}

/// Metric of `Y^k`: the maximum of the componentwise metrics.
pub fn product_metric(
    pairs: &[(TruncatedVector, TruncatedVector)],
    space: &SpaceSpec,
    terms: usize,
) -> Result<f64, SpaceError> {
    if pairs.is_empty() {
        return Err(SpaceError::EmptyPairs);
    }
    let mut best: f64 = 0.0;
    for (x, y) in pairs {
        best = best.max(frechet_metric(space, x, y, terms)?.value);
    }
    Ok(best)
}

/// `p_n(C^{-1} x)` for a diagonal regularizing operator `C = diag(c_1, c_2, ...)`.
pub fn regularized_seminorm(
    space: &SpaceSpec,
    c_diag: &[f64],
    n: usize,
    x: &TruncatedVector,
) -> Result<f64, SpaceError> {
    if n == 0 {
        return Err(SpaceError::ZeroIndex);
    }
    space.check(x)?;
    let mut pre = Vec::with_capacity(x.trunc_len());
    for (i, &v) in x.coeffs.iter().enumerate() {
        if v == 0.0 {
            pre.push(0.0);
            continue;
        }
        let c = c_diag.get(i).copied().unwrap_or(0.0);
        if c == 0.0 {
            return Err(SpaceError::ZeroDiagonal { index: i + 1 });
        }
        let u = v / c;
        if !u.is_finite() {
            return Err(SpaceError::Overflow { index: i + 1 });
        }
        pre.push(u);
    }
    seminorm(space, n, &x.with_coeffs(pre)?)
}
