use serde::{Deserialize, Serialize};

use super::trace::PairTrace;
use super::verdict::{Direction, HorizonVerdict, SetMembership, SetWitness, SubsequenceWitness};
use super::{DetectorError, DetectorSettings, EpsSchedule};
use crate::densities::{
    is_class_r, lower_banach_density, lower_mn_density_scan, IndexSet, Scan, SetGenerator, WeightSpec,
};
use crate::operators::discrete::{OrbitRecord, OrbitValues};
use crate::space::SpaceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsequenceMode {
    /// One subsequence for all families.
    Common,
    /// An independent subsequence per family.
    PerJ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    Lower,
    Banach,
}

fn aligned<'a>(traces: &'a [PairTrace]) -> Result<Vec<&'a PairTrace>, DetectorError> {
    let first = traces.first().ok_or(DetectorError::TooFewFamilies { needed: 1, got: 0 })?;
    if first.is_empty() {
        return Err(DetectorError::Misaligned("empty trace".into()));
    }
    if traces.iter().any(|t| t.indices != first.indices) {
        return Err(DetectorError::Misaligned("families use different index lists".into()));
    }
    Ok(traces.iter().collect())
}

fn aggregate(ts: &[&PairTrace], pos: usize, direction: Direction) -> f64 {
    match direction {
        Direction::Up | Direction::Persist => ts.iter().map(|t| t.seminorm[pos]).fold(f64::INFINITY, f64::min),
        Direction::Down => ts.iter().map(|t| t.distance[pos]).fold(0.0, f64::max),
        Direction::Low => ts.iter().map(|t| t.seminorm[pos]).fold(0.0, f64::max),
    }
}

fn crosses(value: f64, threshold: f64, direction: Direction) -> bool {
    match direction {
        Direction::Up | Direction::Persist => value >= threshold,
        Direction::Down | Direction::Low => value <= threshold,
    }
}

/// First index crossing `thresholds[0]`, then the first later index crossing
/// `thresholds[1]`, and so on. Returns the witness and whether every threshold was met.
pub(crate) fn greedy_subsequence(
    ts: &[&PairTrace],
    label: &str,
    direction: Direction,
    thresholds: &[f64],
) -> (SubsequenceWitness, bool) {
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut next = 0;
    let len = ts[0].len();
    for pos in 0..len {
        if next == thresholds.len() {
            break;
        }
        let v = aggregate(ts, pos, direction);
        if crosses(v, thresholds[next], direction) {
            indices.push(ts[0].indices[pos]);
            values.push(v);
            next += 1;
        }
    }
    let witness = SubsequenceWitness {
        label: label.into(),
        families: ts.iter().map(|t| t.j).collect(),
        direction,
        thresholds: thresholds.to_vec(),
        indices,
        values,
    };
    (witness, next == thresholds.len())
}

fn subsequence_verdict(
    traces: &[PairTrace],
    mode: SubsequenceMode,
    direction: Direction,
    thresholds: &[f64],
    claim: &str,
) -> Result<HorizonVerdict, DetectorError> {
    let ts = aligned(traces)?;
    let horizon = ts[0].horizon() as f64;
    let groups: Vec<Vec<&PairTrace>> = match mode {
        SubsequenceMode::Common => vec![ts.clone()],
        SubsequenceMode::PerJ => ts.iter().map(|t| vec![*t]).collect(),
    };
    let mut verdict = HorizonVerdict::new(format!("{claim} ({mode:?})"), true, horizon);
    for g in groups {
        let label = match mode {
            SubsequenceMode::Common => format!("{claim}: common"),
            SubsequenceMode::PerJ => format!("{claim}: j = {}", g[0].j),
        };
        let (w, complete) = greedy_subsequence(&g, &label, direction, thresholds);
        if !complete {
            verdict.holds_at_horizon = false;
            verdict.notes.push(format!("{label}: crossed {} of {} thresholds", w.indices.len(), thresholds.len()));
        }
        verdict.witnesses.subsequences.push(w);
    }
    Ok(verdict)
}

/// Divergence of `p_m` along a common (or per-family) subsequence.
pub fn sync_unboundedness(
    traces: &[PairTrace],
    mode: SubsequenceMode,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    subsequence_verdict(traces, mode, Direction::Up, &settings.grow, "unbounded")
}

/// Convergence of `d_Y` to zero along a common (or per-family) subsequence.
pub fn smallness_by_subsequence(
    traces: &[PairTrace],
    mode: SubsequenceMode,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    subsequence_verdict(traces, mode, Direction::Down, &settings.shrink, "small along subsequence")
}

/// `p_m` stays above `settings.semi_floor` along a subsequence of the same length as
/// the divergence proxy.
pub(crate) fn persistence(
    traces: &[PairTrace],
    mode: SubsequenceMode,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    let floors = vec![settings.semi_floor; settings.grow.len()];
    subsequence_verdict(traces, mode, Direction::Persist, &floors, "bounded below")
}

/// Density witness of the set selected by `membership` over `families`.
pub(crate) fn density_witness(
    ts: &[&PairTrace],
    label: &str,
    membership: SetMembership,
    weights: &WeightSpec,
    mode: DensityMode,
    settings: &DetectorSettings,
) -> Result<SetWitness, DetectorError> {
    let horizon = ts[0].horizon();
    let m = weights.fit(horizon)?;
    if !is_class_r(&m).member {
        return Err(DetectorError::NotClassR(weights.label()));
    }
    let elements = membership.collect(ts);
    let set = IndexSet::from_elements(elements.clone(), horizon, Some(SetGenerator::Explicit))?;
    let estimate = match mode {
        DensityMode::Lower => lower_mn_density_scan(&set, &m, Scan::new(settings.n_min.max(1), m.len()))?,
        DensityMode::Banach => {
            let s_max = settings.banach_s_max.min(m.len()).max(1);
            let widest = m.values()[s_max - 1].floor() as usize;
            if widest > horizon {
                return Err(DetectorError::WitnessesNotFound(format!("window m_{s_max} exceeds horizon {horizon}")));
            }
            lower_banach_density(&set, &m, Scan::new((s_max / 2).max(1), s_max), Scan::new(0, horizon - widest))?
        }
    };
    Ok(SetWitness {
        label: label.into(),
        families: ts.iter().map(|t| t.j).collect(),
        membership,
        horizon,
        weights: weights.clone(),
        elements,
        estimate,
    })
}

fn density_verdict(claim: String, witnesses: Vec<SetWitness>, settings: &DetectorSettings) -> HorizonVerdict {
    let horizon = witnesses.first().map(|w| w.horizon).unwrap_or(0) as f64;
    let holds = witnesses.iter().all(|w| w.estimate.value <= settings.tol_density);
    let mut v = HorizonVerdict::new(claim, holds, horizon);
    v.witnesses.thresholds.insert("tol_density".into(), settings.tol_density);
    for w in &witnesses {
        if w.estimate.value > settings.tol_density {
            v.notes.push(format!("{}: density {:.4} > {}", w.label, w.estimate.value, settings.tol_density));
        }
    }
    v.witnesses.sets = witnesses;
    v
}

/// Density of `A_eps = ∪_j {k : d_Y >= eps}` is (at most `tol_density`) zero.
pub fn smallness_by_density(
    traces: &[PairTrace],
    weights: &WeightSpec,
    mode: DensityMode,
    eps: f64,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    let ts = aligned(traces)?;
    let label = format!("far set d >= {eps}");
    let w = density_witness(&ts, &label, SetMembership::DistanceAtLeast { eps }, weights, mode, settings)?;
    let mut v = density_verdict(format!("small in {mode:?} density (eps = {eps})"), vec![w], settings);
    v.witnesses.thresholds.insert("eps".into(), eps);
    Ok(v)
}

/// Density of the closeness set `{k : d_Y < sigma}` (union over families, or per family)
/// is zero.
pub fn apartness_by_density(
    traces: &[PairTrace],
    weights: &WeightSpec,
    mode: SubsequenceMode,
    sigma: f64,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    let ts = aligned(traces)?;
    let groups: Vec<Vec<&PairTrace>> = match mode {
        SubsequenceMode::Common => vec![ts.clone()],
        SubsequenceMode::PerJ => ts.iter().map(|t| vec![*t]).collect(),
    };
    let witnesses = groups
        .iter()
        .map(|g| {
            let label = match mode {
                SubsequenceMode::Common => format!("close set d < {sigma}"),
                SubsequenceMode::PerJ => format!("close set d < {sigma}, j = {}", g[0].j),
            };
            density_witness(g, &label, SetMembership::DistanceBelow { sigma }, weights, DensityMode::Lower, settings)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut v = density_verdict(format!("apart in density (sigma = {sigma}, {mode:?})"), witnesses, settings);
    v.witnesses.thresholds.insert("sigma".into(), sigma);
    Ok(v)
}

/// Near-zero set `A = {k : max_j p_m(T_{j,k} x) < eps(k)}` whose complement has (lower
/// or, for the reiterative variant, Banach) density zero. `traces` are those of `(x, 0)`.
pub fn near_zero_type1(
    traces: &[PairTrace],
    weights: &WeightSpec,
    reiterative: bool,
    schedule: &EpsSchedule,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    let ts = aligned(traces)?;
    let mode = if reiterative { DensityMode::Banach } else { DensityMode::Lower };
    let w = density_witness(
        &ts,
        "complement of near-zero set",
        SetMembership::AboveSchedule { schedule: schedule.clone() },
        weights,
        mode,
        settings,
    )?;
    let near = ts[0].len() - w.elements.len();
    let mut v = density_verdict(
        format!("{}near zero of type 1 (m_n = {})", if reiterative { "reiteratively " } else { "" }, weights.label()),
        vec![w],
        settings,
    );
    if near == 0 {
        v.holds_at_horizon = false;
        v.notes.push("near-zero set is empty".into());
    }
    Ok(v)
}

/// Li-Yorke pair proxy: `min_k p_m(x_k - y_k) <= eps_low` and `max_k p_m(x_k - y_k) >= m_high`.
pub fn liyorke_pair_trace(trace: &PairTrace, eps_low: f64, m_high: f64) -> Result<HorizonVerdict, DetectorError> {
    if !(eps_low < m_high) {
        return Err(DetectorError::Misaligned(format!("need eps_low < M_high, got {eps_low} >= {m_high}")));
    }
    if trace.is_empty() {
        return Err(DetectorError::Misaligned("empty trace".into()));
    }
    let (mut lo, mut hi) = (0, 0);
    for pos in 0..trace.len() {
        if trace.seminorm[pos] < trace.seminorm[lo] {
            lo = pos;
        }
        if trace.seminorm[pos] > trace.seminorm[hi] {
            hi = pos;
        }
    }
    let low_ok = trace.seminorm[lo] <= eps_low;
    let high_ok = trace.seminorm[hi] >= m_high;
    let mut v = HorizonVerdict::new("Li-Yorke pair", low_ok && high_ok, trace.horizon() as f64);
    v.witnesses.subsequences.push(SubsequenceWitness {
        label: "closest".into(),
        families: vec![trace.j],
        direction: Direction::Low,
        thresholds: vec![eps_low],
        indices: vec![trace.indices[lo]],
        values: vec![trace.seminorm[lo]],
    });
    v.witnesses.subsequences.push(SubsequenceWitness {
        label: "farthest".into(),
        families: vec![trace.j],
        direction: Direction::Up,
        thresholds: vec![m_high],
        indices: vec![trace.indices[hi]],
        values: vec![trace.seminorm[hi]],
    });
    if !high_ok {
        v.notes.push(format!("max distance {:.3e} < {m_high}", trace.seminorm[hi]));
    }
    if !low_ok {
        v.notes.push(format!("min distance {:.3e} > {eps_low}", trace.seminorm[lo]));
    }
    Ok(v)
}

/// Li-Yorke pair test on two orbit records of one family.
pub fn liyorke_pair(
    space: &SpaceSpec,
    x: &OrbitRecord,
    y: &OrbitRecord,
    m: usize,
    eps_low: f64,
    m_high: f64,
) -> Result<HorizonVerdict, DetectorError> {
    let trace = match (&x.values, &y.values) {
        (OrbitValues::Vectors(_), OrbitValues::Vectors(_)) => {
            PairTrace::difference(space, x, y, m, crate::space::DEFAULT_METRIC_TERMS)?
        }
        (OrbitValues::Seminorms(a), OrbitValues::Seminorms(b)) if b.iter().all(|v| *v == 0.0) => {
            if x.indices != y.indices {
                return Err(DetectorError::Misaligned("index lists differ".into()));
            }
            let (idx, vals): (Vec<usize>, Vec<f64>) = x
                .indices
                .iter()
                .zip(a)
                .filter(|(t, _)| **t >= 1.0)
                .map(|(t, v)| (t.round() as usize, *v))
                .unzip();
            PairTrace::from_norms(x.label, idx, vals, 1, crate::space::DEFAULT_METRIC_TERMS)?
        }
        _ => {
            return Err(DetectorError::Misaligned(
                "seminorm-valued orbits only pair with the zero orbit".into(),
            ))
        }
    };
    liyorke_pair_trace(&trace, eps_low, m_high)
}
