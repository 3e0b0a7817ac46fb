//! Finite-horizon lower densities of index sets and interval unions.
//!
//! Every `liminf` is replaced by a minimum over an explicit scan window; the
//! window and the minimizing indices travel with the estimate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("weight m_{n} = {value} exceeds the horizon {horizon}")]
    HorizonTooSmall { n: usize, value: f64, horizon: usize },
    #[error("window [{start}, {end}] exceeds the horizon {horizon}")]
    WindowBeyondHorizon { start: usize, end: usize, horizon: usize },
    #[error("element {element} exceeds the horizon {horizon}")]
    ElementBeyondHorizon { element: usize, horizon: usize },
    #[error("index set elements start at 1")]
    ZeroElement,
    #[error("empty scan range")]
    EmptyRange,
    #[error("weight sequence must be positive and non-decreasing (index {index})")]
    BadWeights { index: usize },
    #[error("weight index {n} outside 1..={len}")]
    WeightIndex { n: usize, len: usize },
    #[error("f({t}) = {value} exceeds the truncation {truncation}")]
    FunctionBeyondTruncation { t: f64, value: f64, truncation: f64 },
    #[error("sample points must be positive, got {0}")]
    NonPositiveSample(f64),
    #[error("set is empty")]
    EmptySet,
    #[error("cannot parse `{0}` as an index")]
    Parse(String),
    #[error("invalid interval [{0}, {1}]")]
    BadInterval(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SetGenerator {
    Periodic { period: usize, residues: Vec<usize> },
    Squares,
    IntervalUnion { intervals: Vec<(usize, usize)> },
    Explicit,
    Threshold { description: String },
}

/// Sorted, duplicate-free subset of `{1, ..., horizon}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSet {
    elements: Vec<usize>,
    horizon: usize,
    generator: Option<SetGenerator>,
}

impl IndexSet {
    pub fn from_elements(
        mut elements: Vec<usize>,
        horizon: usize,
        generator: Option<SetGenerator>,
    ) -> Result<Self, DensityError> {
        elements.sort_unstable();
        elements.dedup();
        if elements.first() == Some(&0) {
            return Err(DensityError::ZeroElement);
        }
        if let Some(&last) = elements.last() {
            if last > horizon {
                return Err(DensityError::ElementBeyondHorizon { element: last, horizon });
            }
        }
        Ok(Self { elements, horizon, generator })
    }

    pub fn from_predicate(horizon: usize, generator: SetGenerator, pred: impl Fn(usize) -> bool) -> Self {
        let elements = (1..=horizon).filter(|&n| pred(n)).collect();
        Self { elements, horizon, generator: Some(generator) }
    }

    pub fn full(horizon: usize) -> Self {
        Self::periodic(1, vec![0], horizon)
    }

    pub fn empty(horizon: usize) -> Self {
        Self { elements: Vec::new(), horizon, generator: Some(SetGenerator::Explicit) }
    }

    /// `{n : n mod period in residues}`.
    pub fn periodic(period: usize, residues: Vec<usize>, horizon: usize) -> Self {
        assert!(period > 0, "period must be positive");
        let mut mask = vec![false; period];
        for &r in &residues {
            mask[r % period] = true;
        }
        let mut residues: Vec<usize> = (0..period).filter(|&r| mask[r]).collect();
        residues.dedup();
        Self::from_predicate(horizon, SetGenerator::Periodic { period, residues }, |n| mask[n % period])
    }

    pub fn squares(horizon: usize) -> Self {
        let elements = (1..).map(|k: usize| k * k).take_while(|&s| s <= horizon).collect();
        Self { elements, horizon, generator: Some(SetGenerator::Squares) }
    }

    /// Union of the integer intervals `[a, b]`.
    pub fn interval_union(intervals: Vec<(usize, usize)>, horizon: usize) -> Result<Self, DensityError> {
        let mut elements = Vec::new();
        for &(a, b) in &intervals {
            elements.extend(a.max(1)..=b.min(horizon));
        }
        Self::from_elements(elements, horizon, Some(SetGenerator::IntervalUnion { intervals }))
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn generator(&self) -> Option<&SetGenerator> {
        self.generator.as_ref()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.elements.binary_search(&n).is_ok()
    }

    /// `|A ∩ [1, m]|`.
    pub fn count_upto(&self, m: usize) -> usize {
        self.elements.partition_point(|&e| e <= m)
    }

    /// `|A ∩ [a+1, b]|`.
    pub fn count_between(&self, a: usize, b: usize) -> usize {
        if b <= a {
            return 0;
        }
        self.count_upto(b) - self.count_upto(a)
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.horizon - self.elements.len());
        let mut it = self.elements.iter().peekable();
        for n in 1..=self.horizon {
            if it.peek() == Some(&&n) {
                it.next();
            } else {
                out.push(n);
            }
        }
        Self { elements: out, horizon: self.horizon, generator: Some(SetGenerator::Explicit) }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.elements.clone();
        all.extend_from_slice(&other.elements);
        all.sort_unstable();
        all.dedup();
        Self {
            elements: all,
            horizon: self.horizon.max(other.horizon),
            generator: Some(SetGenerator::Explicit),
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.elements.iter().all(|&e| other.contains(e))
    }

    /// One-line CSV of the elements.
    pub fn to_csv(&self) -> String {
        let parts: Vec<String> = self.elements.iter().map(|e| e.to_string()).collect();
        parts.join(",")
    }

    pub fn from_csv(line: &str, horizon: usize) -> Result<Self, DensityError> {
        let elements = line
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|_| DensityError::Parse(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_elements(elements, horizon, Some(SetGenerator::Explicit))
    }

    fn prefix_counts(&self, upto: usize) -> Vec<u32> {
        let mut counts = vec![0u32; upto + 1];
        let mut it = self.elements.iter().peekable();
        let mut c = 0u32;
        for (n, slot) in counts.iter_mut().enumerate().skip(1) {
            while it.peek().is_some_and(|&&e| e <= n) {
                it.next();
                c += 1;
            }
            *slot = c;
        }
        counts
    }
}

/// Positive non-decreasing weights `m_1 <= m_2 <= ... <= m_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    values: Vec<f64>,
}

impl WeightSequence {
    pub fn new(values: Vec<f64>) -> Result<Self, DensityError> {
        for (i, &v) in values.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() || (i > 0 && v < values[i - 1]) {
                return Err(DensityError::BadWeights { index: i + 1 });
            }
        }
        Ok(Self { values })
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> f64) -> Result<Self, DensityError> {
        Self::new((1..=len).map(f).collect())
    }

    /// `m_n = c n`.
    pub fn linear(len: usize, c: f64) -> Self {
        Self::from_fn(len, |n| c * n as f64).expect("c n is increasing for c > 0")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: usize) -> Result<f64, DensityError> {
        if n == 0 || n > self.values.len() {
            return Err(DensityError::WeightIndex { n, len: self.values.len() });
        }
        Ok(self.values[n - 1])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Integer part of `m_n`, the right end of `[1, m_n]` in `ℕ`.
    fn floor(&self, n: usize) -> usize {
        self.values[n - 1].floor() as usize
    }
}

/// Closed-form description of a weight sequence `(m_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "weights", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `m_n = c n`.
    Linear { c: f64 },
    /// `m_n = c n^exponent`.
    Power { c: f64, exponent: f64 },
    /// `m_n = ln(n + 1)`.
    Log,
    Explicit { values: Vec<f64> },
}

impl WeightSpec {
    pub fn identity() -> Self {
        WeightSpec::Linear { c: 1.0 }
    }

    pub fn value(&self, n: usize) -> f64 {
        let x = n as f64;
        match self {
            WeightSpec::Linear { c } => c * x,
            WeightSpec::Power { c, exponent } => c * x.powf(*exponent),
            WeightSpec::Log => (x + 1.0).ln(),
            WeightSpec::Explicit { values } => values.get(n.wrapping_sub(1)).copied().unwrap_or(f64::INFINITY),
        }
    }

    pub fn sequence(&self, len: usize) -> Result<WeightSequence, DensityError> {
        WeightSequence::from_fn(len, |n| self.value(n))
    }

    /// The longest prefix with `m_n <= horizon`, so that every `[1, m_n]` is observed.
    pub fn fit(&self, horizon: usize) -> Result<WeightSequence, DensityError> {
        let mut len = 0;
        while len < horizon && self.value(len + 1).floor() <= horizon as f64 {
            len += 1;
        }
        if len == 0 {
            return Err(DensityError::EmptyRange);
        }
        self.sequence(len)
    }

    pub fn label(&self) -> String {
        match self {
            WeightSpec::Linear { c } if *c == 1.0 => "n".into(),
            WeightSpec::Linear { c } => format!("{c}n"),
            WeightSpec::Power { c, exponent } => format!("{c}n^{exponent}"),
            WeightSpec::Log => "ln(n+1)".into(),
            WeightSpec::Explicit { values } => format!("explicit[{}]", values.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    LowerMn,
    LowerBanach,
    LowerF,
}

/// Inclusive arithmetic progression `start, start+step, ..., <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scan {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl Scan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end, step: 1 }
    }

    pub fn stepped(start: usize, end: usize, step: usize) -> Self {
        Self { start, end, step: step.max(1) }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        (self.start..=self.end).step_by(self.step.max(1))
    }

    fn last(&self) -> Option<usize> {
        if self.start > self.end {
            None
        } else {
            Some(self.start + (self.end - self.start) / self.step.max(1) * self.step.max(1))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub n: Scan,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s: Option<Scan>,
}

/// Minimizing indices; `count` is the numerator of the minimal ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityWitness {
    pub n: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s: Option<usize>,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub kind: DensityKind,
    pub window: ScanWindow,
    pub witness: DensityWitness,
}

/// `min_{n in [n_min, K]} |A ∩ [1, m_n]| / n`.
pub fn lower_mn_density(a: &IndexSet, m: &WeightSequence, n_min: usize) -> Result<DensityEstimate, DensityError> {
    lower_mn_density_scan(a, m, Scan::new(n_min.max(1), m.len()))
}

/// Lower `(m_n)`-density over an explicit (possibly strided) range of `n`.
pub fn lower_mn_density_scan(a: &IndexSet, m: &WeightSequence, scan: Scan) -> Result<DensityEstimate, DensityError> {
    let last = scan.last().filter(|_| scan.start >= 1).ok_or(DensityError::EmptyRange)?;
    let top = m.get(last)?;
    if top.floor() as usize > a.horizon {
        return Err(DensityError::HorizonTooSmall { n: last, value: top, horizon: a.horizon });
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for n in scan.iter() {
        let count = a.count_upto(m.floor(n));
        let ratio = count as f64 / n as f64;
        if best.is_none_or(|(v, _, _)| ratio < v) {
            best = Some((ratio, n, count));
        }
    }
    let (value, n, count) = best.expect("non-empty scan");
    Ok(DensityEstimate {
        value,
        kind: DensityKind::LowerMn,
        window: ScanWindow { n: scan, s: None },
        witness: DensityWitness { n: n as f64, s: None, count: count as f64 },
    })
}

/// `min_s min_n |A ∩ [n+1, n+m_s]| / s` over the given ranges.
pub fn lower_banach_density(
    a: &IndexSet,
    m: &WeightSequence,
    s_range: Scan,
    n_range: Scan,
) -> Result<DensityEstimate, DensityError> {
    let s_last = s_range.last().filter(|_| s_range.start >= 1).ok_or(DensityError::EmptyRange)?;
    let n_last = n_range.last().ok_or(DensityError::EmptyRange)?;
    m.get(s_last)?;
    let widest = m.floor(s_last);
    if n_last + widest > a.horizon {
        return Err(DensityError::WindowBeyondHorizon {
            start: n_last + 1,
            end: n_last + widest,
            horizon: a.horizon,
        });
    }
    let prefix = a.prefix_counts(n_last + widest);
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for s in s_range.iter() {
        let w = m.floor(s);
        let (count, n) = n_range
            .iter()
            .map(|n| (prefix[n + w] - prefix[n], n))
            .min_by_key(|&(c, n)| (c, n))
            .expect("non-empty n range");
        let ratio = count as f64 / s as f64;
        if best.is_none_or(|(v, ..)| ratio < v) {
            best = Some((ratio, s, n, count as usize));
        }
    }
    let (value, s, n, count) = best.expect("non-empty s range");
    Ok(DensityEstimate {
        value,
        kind: DensityKind::LowerBanach,
        window: ScanWindow { n: n_range, s: Some(s_range) },
        witness: DensityWitness { n: n as f64, s: Some(s), count: count as f64 },
    })
}

/// Finite union of disjoint closed intervals in `[0, truncation]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
    truncation: f64,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl IntervalUnion {
    pub fn new(mut intervals: Vec<(f64, f64)>, truncation: f64) -> Result<Self, DensityError> {
        for &(a, b) in &intervals {
            if !(a <= b) || a < 0.0 || !b.is_finite() {
                return Err(DensityError::BadInterval(a, b));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            let (a, b) = (a.min(truncation), b.min(truncation));
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        let mut cumulative = Vec::with_capacity(merged.len() + 1);
        cumulative.push(0.0);
        for &(a, b) in &merged {
            cumulative.push(cumulative.last().unwrap() + (b - a));
        }
        Ok(Self { intervals: merged, truncation, cumulative })
    }

    pub fn empty(truncation: f64) -> Self {
        Self::new(Vec::new(), truncation).unwrap()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// Lebesgue measure of `A ∩ [0, x]`.
    pub fn measure_upto(&self, x: f64) -> f64 {
        let i = self.intervals.partition_point(|&(a, _)| a < x);
        if i == 0 {
            return 0.0;
        }
        let (a, b) = self.intervals[i - 1];
        self.cumulative[i - 1] + (x.min(b) - a)
    }

    pub fn measure(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }
}

/// `min_t m(A ∩ [0, f(t)]) / t` over the sample points.
pub fn lower_f_density(
    a: &IntervalUnion,
    f: impl Fn(f64) -> f64,
    t_samples: &[f64],
) -> Result<DensityEstimate, DensityError> {
    if t_samples.is_empty() {
        return Err(DensityError::EmptyRange);
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for &t in t_samples {
        if !(t > 0.0) {
            return Err(DensityError::NonPositiveSample(t));
        }
        let ft = f(t);
        if ft > a.truncation * (1.0 + 1e-12) {
            return Err(DensityError::FunctionBeyondTruncation { t, value: ft, truncation: a.truncation });
        }
        let mass = a.measure_upto(ft);
        let ratio = mass / t;
        if best.is_none_or(|(v, ..)| ratio < v) {
            best = Some((ratio, t, mass));
        }
    }
    let (value, t, mass) = best.unwrap();
    let lo = t_samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t_samples.iter().copied().fold(0.0, f64::max);
    Ok(DensityEstimate {
        value,
        kind: DensityKind::LowerF,
        window: ScanWindow {
            n: Scan { start: lo.floor() as usize, end: hi.ceil() as usize, step: 0 },
            s: None,
        },
        witness: DensityWitness { n: t, s: None, count: mass },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRCertificate {
    pub member: bool,
    /// `max_n n / m_n` over the stored weights.
    pub l: f64,
}

/// Class-R test at horizon: the ratio `n / m_n` must not keep growing on the
/// last half of the stored range.
pub fn is_class_r(m: &WeightSequence) -> ClassRCertificate {
    let k = m.len();
    let ratio = |n: usize| n as f64 / m.values[n - 1];
    let l = (1..=k).map(ratio).fold(0.0, f64::max);
    if k < 8 {
        return ClassRCertificate { member: k > 0, l };
    }
    let head = (1..=k / 2).map(ratio).fold(0.0, f64::max);
    let tail = (k / 2 + 1..=k).map(ratio).fold(0.0, f64::max);
    ClassRCertificate { member: tail <= 1.25 * head, l }
}

/// Largest gap between consecutive elements, counting `0 -> min` and `max -> horizon`.
pub fn syndetic_gap(a: &IndexSet) -> Result<usize, DensityError> {
    let (&first, &last) = match (a.elements.first(), a.elements.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(DensityError::EmptySet),
    };
    let inner = a.elements.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    Ok(inner.max(first).max(a.horizon - last))
}
