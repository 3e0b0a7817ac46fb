use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditions::{
    apartness_by_density, near_zero_type1, persistence, smallness_by_density, smallness_by_subsequence,
    sync_unboundedness, DensityMode, SubsequenceMode,
};
use super::trace::{OrbitSource, PairTrace};
use super::verdict::{HorizonVerdict, SetMembership};
use super::{DetectorError, DetectorSettings, TaxonomyTag};
use crate::densities::{is_class_r, lower_banach_density, IndexSet, Scan, SetGenerator, WeightSpec};
use crate::space::TruncatedVector;

fn subsequence_mode(common: bool) -> SubsequenceMode {
    if common {
        SubsequenceMode::Common
    } else {
        SubsequenceMode::PerJ
    }
}

/// The tag's conditions on the traces of one pair difference. `sigma` is required for
/// `s` in `{3, 4}`.
fn pair_conditions(
    tag: &TaxonomyTag,
    traces: &[PairTrace],
    sigma: Option<f64>,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    match (tag.s, tag.i) {
        (1 | 2, 1 | 2) => {
            let weights = tag.weight()?;
            let mode = if tag.i == 1 { DensityMode::Lower } else { DensityMode::Banach };
            let mut v = sync_unboundedness(traces, subsequence_mode(tag.s == 1), settings)?;
            for &eps in &settings.epsilons {
                v = v.and(smallness_by_density(traces, weights, mode, eps, settings)?);
            }
            Ok(v)
        }
        (1 | 2, 3 | 4) => Ok(sync_unboundedness(traces, subsequence_mode(tag.s == 1), settings)?
            .and(smallness_by_subsequence(traces, subsequence_mode(tag.i == 3), settings)?)),
        (3 | 4, 1 | 2) => {
            let sigma = sigma.ok_or_else(|| DetectorError::InvalidTag("apartness needs sigma".into()))?;
            Ok(apartness_by_density(traces, tag.weight()?, subsequence_mode(tag.s == 3), sigma, settings)?
                .and(smallness_by_subsequence(traces, subsequence_mode(tag.i == 1), settings)?))
        }
        _ => Err(DetectorError::InvalidTag(tag.label())),
    }
}

/// Verdict of one sample pair `(a, b)`, by sample position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub a: usize,
    pub b: usize,
    pub verdict: HorizonVerdict,
}

fn check_sample(sample: &[TruncatedVector]) -> Result<(), DetectorError> {
    for (a, x) in sample.iter().enumerate() {
        for (b, y) in sample.iter().enumerate().skip(a + 1) {
            if x.sub(y)?.is_zero() {
                return Err(DetectorError::InvalidSample(format!("vectors {a} and {b} coincide")));
            }
        }
    }
    Ok(())
}

/// Traces of every distinct pair difference, evaluated in parallel.
fn pair_traces(
    source: &dyn OrbitSource,
    sample: &[TruncatedVector],
) -> Result<Vec<((usize, usize), Vec<PairTrace>)>, DetectorError> {
    let pairs: Vec<(usize, usize)> =
        (0..sample.len()).flat_map(|a| (a + 1..sample.len()).map(move |b| (a, b))).collect();
    pairs
        .into_par_iter()
        .map(|(a, b)| Ok(((a, b), source.traces(&sample[a].sub(&sample[b])?)?)))
        .collect()
}

fn evaluate_pairs(
    tag: &TaxonomyTag,
    traces: &[((usize, usize), Vec<PairTrace>)],
    sigma: Option<f64>,
    settings: &DetectorSettings,
) -> Result<Vec<PairVerdict>, DetectorError> {
    traces
        .par_iter()
        .map(|((a, b), t)| Ok(PairVerdict { a: *a, b: *b, verdict: pair_conditions(tag, t, sigma, settings)? }))
        .collect()
}

/// Every pair verdict of `sample` under `tag`. For `s` in `{3, 4}` the common `sigma` is
/// the largest value of `settings.sigmas` accepted by all pairs (the last one tried if
/// none is).
pub fn classify_pairs(
    tag: &TaxonomyTag,
    sample: &[TruncatedVector],
    source: &dyn OrbitSource,
    settings: &DetectorSettings,
) -> Result<Vec<PairVerdict>, DetectorError> {
    tag.validate()?;
    check_sample(sample)?;
    let traces = pair_traces(source, sample)?;
    if tag.s <= 2 {
        return evaluate_pairs(tag, &traces, None, settings);
    }
    let mut sigmas = settings.sigmas.clone();
    sigmas.sort_by(|a, b| b.total_cmp(a));
    let mut last = Vec::new();
    for sigma in sigmas {
        last = evaluate_pairs(tag, &traces, Some(sigma), settings)?;
        if last.iter().all(|p| p.verdict.holds_at_horizon) {
            break;
        }
    }
    Ok(last)
}

/// Finite scrambled-set test: the tag's conditions on every distinct pair of `sample`.
/// The returned witnesses are those of the first failing pair, or of the first pair
/// when all pass.
pub fn classify(
    tag: &TaxonomyTag,
    sample: &[TruncatedVector],
    source: &dyn OrbitSource,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    let pairs = classify_pairs(tag, sample, source, settings)?;
    let horizon = source.horizon() as f64;
    let Some(shown) = pairs.iter().find(|p| !p.verdict.holds_at_horizon).or(pairs.first()) else {
        return Ok(HorizonVerdict::new(tag.label(), true, horizon).note("vacuous: fewer than two sample vectors"));
    };
    let passed = pairs.iter().filter(|p| p.verdict.holds_at_horizon).count();
    let mut v = shown.verdict.clone();
    v.claim = tag.label();
    v.holds_at_horizon = passed == pairs.len();
    v.witnesses.seminorm_index = Some(1);
    v.notes.insert(0, format!("{passed} of {} pairs pass; witnesses shown for pair ({}, {})", pairs.len(), shown.a, shown.b));
    if tag.dense {
        v.notes.push(format!("density of the sample in {} is not checked at finite truncation", tag.subspace));
    }
    Ok(v)
}

/// (Semi-)irregular vector test. `i` in `{1, 2}` uses (reiterative) near-zero of type 1,
/// `i` in `{3, 4}` subsequence smallness; `s` selects common or per-family growth.
pub fn classify_irregular(
    x: &TruncatedVector,
    source: &dyn OrbitSource,
    tag: &TaxonomyTag,
    semi: bool,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    tag.validate()?;
    if tag.s > 2 {
        return Err(DetectorError::InvalidTag(format!("no irregular vectors for {}", tag.label())));
    }
    let claim = format!("{} {}", if semi { "semi-irregular" } else { "irregular" }, tag.label());
    if x.is_zero() {
        return Ok(HorizonVerdict::new(claim, false, source.horizon() as f64).note("x = 0 is excluded"));
    }
    let traces = source.traces(x)?;
    let small = match tag.i {
        1 | 2 => near_zero_type1(&traces, tag.weight()?, tag.i == 2, &settings.schedule, settings)?,
        _ => smallness_by_subsequence(&traces, subsequence_mode(tag.i == 3), settings)?,
    };
    let growth = if semi {
        persistence(&traces, subsequence_mode(tag.s == 1), settings)?
    } else {
        sync_unboundedness(&traces, subsequence_mode(tag.s == 1), settings)?
    };
    let mut v = small.and(growth);
    v.claim = claim;
    v.witnesses.seminorm_index = Some(1);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationCheck {
    pub label: String,
    pub premise: bool,
    pub conclusion: bool,
}

impl ImplicationCheck {
    pub fn violated(&self) -> bool {
        self.premise && !self.conclusion
    }
}

/// Monotonicity between taxonomy classes on one sample. A violation means a stronger
/// class was certified while a weaker one was not.
pub fn beqa_battery(
    sample: &[TruncatedVector],
    source: &dyn OrbitSource,
    weights: &WeightSpec,
    settings: &DetectorSettings,
) -> Result<Vec<ImplicationCheck>, DetectorError> {
    let run = |s: u8, i: u8, m: Option<WeightSpec>, st: &DetectorSettings| -> Result<bool, DetectorError> {
        Ok(classify(&TaxonomyTag::new(s, i, m)?, sample, source, st)?.holds_at_horizon)
    };
    let m = Some(weights.clone());
    let mut checks = Vec::new();
    let mut push = |label: String, premise: bool, conclusion: bool| {
        checks.push(ImplicationCheck { label, premise, conclusion });
    };
    let with_m = |s, i| run(s, i, m.clone(), settings);
    let plain = |s, i| run(s, i, None, settings);

    let dens: Vec<Vec<bool>> =
        (1..=2).map(|s| (1..=2).map(|i| with_m(s, i)).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
    let subs: Vec<Vec<bool>> =
        (1..=2).map(|s| (3..=4).map(|i| plain(s, i)).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
    let apart: Vec<Vec<bool>> =
        (3..=4).map(|s| (1..=2).map(|i| with_m(s, i)).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;

    for i in 0..2 {
        push(format!("(i) (m,1,{}) => (m,2,{})", i + 1, i + 1), dens[0][i], dens[1][i]);
    }
    for s in 0..2 {
        push(format!("(ii) (m,{0},1) => (m,{0},2)", s + 1), dens[s][0], dens[s][1]);
        push(format!("(ii) (m,{0},2) => ({0},3)", s + 1), dens[s][1], subs[s][0]);
        push(format!("(iii) ({0},3) => ({0},4)", s + 1), subs[s][0], subs[s][1]);
    }
    for i in 0..2 {
        push(format!("(iv) (m,3,{0}) => (m,4,{0})", i + 1), apart[0][i], apart[1][i]);
    }
    for s in 0..2 {
        push(format!("(v) (m,{0},1) => (m,{0},2)", s + 3), apart[s][0], apart[s][1]);
    }
    // (vi): the class constant L bounds n / m_n, so lower densities along (n) are at most
    // L times those along (m_n).
    let l = is_class_r(&weights.fit(source.horizon())?).l.max(1.0);
    let scaled = DetectorSettings { tol_density: settings.tol_density * l, ..settings.clone() };
    for s in 1..=2u8 {
        for i in 1..=2u8 {
            let premise = dens[s as usize - 1][i as usize - 1];
            let conclusion = run(s, i, Some(WeightSpec::identity()), &scaled)?;
            push(format!("(vi) (m,{s},{i}) => (n,{s},{i}) at tol x {l:.3}"), premise, conclusion);
        }
    }
    Ok(checks)
}

/// Inputs of the window-emptiness check in Banach spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanachProbe {
    /// Closeness level: windows after the growth witnesses must avoid `{min_j ||T_j^k x|| < sigma}`.
    pub sigma: f64,
    /// Far level: windows after the smallness witnesses must avoid `{max_j ||T_j^k x|| >= eps}`.
    pub eps: f64,
    pub weights: WeightSpec,
    /// Windows have length `floor(m_s)` for `s = s_max`; shorter ones are sub-windows.
    pub s_max: usize,
}

/// Checks, for a vector whose orbits blow up along one common subsequence and vanish
/// along another, that some window of length `floor(m_{s_max})` avoids the closeness set
/// and some other window avoids the far set, so both lower Banach densities vanish for
/// every `s <= s_max`.
pub fn banach_equivalence_probe(
    x: &TruncatedVector,
    source: &dyn OrbitSource,
    probe: &BanachProbe,
    settings: &DetectorSettings,
) -> Result<HorizonVerdict, DetectorError> {
    let horizon = source.horizon();
    let traces = source.traces(x)?;
    let ts: Vec<&PairTrace> = traces.iter().collect();
    let up = sync_unboundedness(&traces, SubsequenceMode::Common, settings)?;
    let down = smallness_by_subsequence(&traces, SubsequenceMode::Common, settings)?;
    let claim = format!("Banach windows (m_n = {}, s <= {})", probe.weights.label(), probe.s_max);
    if !(up.holds_at_horizon && down.holds_at_horizon) {
        let mut v = HorizonVerdict::new(claim, false, horizon as f64).and(up).and(down);
        v.holds_at_horizon = false;
        v.notes.push("precondition fails: need common blow-up and common decay witnesses".into());
        return Ok(v);
    }
    let m = probe.weights.fit(horizon)?;
    if probe.s_max == 0 || probe.s_max > m.len() {
        return Err(DetectorError::WitnessesNotFound(format!(
            "s_max = {} outside 1..={} at horizon {horizon}",
            probe.s_max,
            m.len()
        )));
    }
    let width = m.values()[probe.s_max - 1].floor() as usize;
    let n_range = Scan::new(0, horizon - width);
    let s_range = Scan::new(probe.s_max, probe.s_max);
    let mut v = HorizonVerdict::new(claim, true, horizon as f64).and(up).and(down);
    v.claim = format!("Banach windows (m_n = {}, s <= {})", probe.weights.label(), probe.s_max);
    for (label, membership) in [
        ("closeness set", SetMembership::SeminormBelow { sigma: probe.sigma }),
        ("far set", SetMembership::SeminormAtLeast { eps: probe.eps }),
    ] {
        let elements = membership.collect(&ts);
        let set = IndexSet::from_elements(elements.clone(), horizon, Some(SetGenerator::Explicit))?;
        let estimate = lower_banach_density(&set, &m, s_range, n_range)?;
        if estimate.witness.count > 0.0 {
            v.holds_at_horizon = false;
            v.notes.push(format!("{label}: every window of length {width} meets the set"));
        } else {
            v.notes.push(format!("{label}: window [{}, {}] is empty", estimate.witness.n + 1.0, estimate.witness.n + width as f64));
        }
        v.witnesses.sets.push(super::verdict::SetWitness {
            label: label.into(),
            families: ts.iter().map(|t| t.j).collect(),
            membership,
            horizon,
            weights: probe.weights.clone(),
            elements,
            estimate,
        });
    }
    v.witnesses.thresholds.insert("sigma".into(), probe.sigma);
    v.witnesses.thresholds.insert("eps".into(), probe.eps);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::super::{replay, FamilyOrbits};
    use super::*;
    use crate::operators::discrete::{FamilySpec, OperatorSpec};
    use crate::operators::weights::WeightRule;
    use crate::space::SpaceSpec;

    /// Forward shifts with block weights and their reciprocals.
    fn block_pair(horizon: usize) -> FamilyOrbits {
        let w = WeightRule::default_blocks();
        FamilyOrbits::new(
            vec![
                FamilySpec::power(OperatorSpec::forward(w.clone())),
                FamilySpec::power(OperatorSpec::forward(w.reciprocal())),
            ],
            SpaceSpec::l1(),
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn block_weights_are_per_family_chaotic() {
        let src = block_pair(250);
        let l1 = SpaceSpec::l1();
        let sample = vec![l1.basis(1, 2), l1.basis(1, 2).scaled(2.0).unwrap()];
        let s = DetectorSettings::default();
        let v = classify(&TaxonomyTag::new(2, 4, None).unwrap(), &sample, &src, &s).unwrap();
        assert!(v.holds_at_horizon, "{:?}", v.notes);
        let e1 = l1.basis(1, 2);
        assert!(replay(&v, &src.traces(&e1.scaled(-1.0).unwrap()).unwrap()));
        assert!(!classify(&TaxonomyTag::new(1, 3, None).unwrap(), &sample, &src, &s).unwrap().holds_at_horizon);
        assert!(classify_irregular(&e1, &src, &TaxonomyTag::new(2, 4, None).unwrap(), false, &s)
            .unwrap()
            .holds_at_horizon);
    }

    #[test]
    fn vacuous_and_invalid_samples() {
        let src = block_pair(50);
        let l1 = SpaceSpec::l1();
        let s = DetectorSettings::default();
        let tag = TaxonomyTag::new(1, 3, None).unwrap();
        let v = classify(&tag, &[l1.basis(1, 2)], &src, &s).unwrap();
        assert!(v.holds_at_horizon);
        assert!(v.notes[0].contains("vacuous"));
        assert!(matches!(
            classify(&tag, &[l1.basis(1, 2), l1.basis(1, 2)], &src, &s),
            Err(DetectorError::InvalidSample(_))
        ));
    }

    #[test]
    fn irregular_examples() {
        let l1 = SpaceSpec::l1();
        let s = DetectorSettings::default();
        let tag = TaxonomyTag::new(1, 1, Some(WeightSpec::identity())).unwrap();
        let src = block_pair(100);
        assert!(!classify_irregular(&l1.zero(3), &src, &tag, false, &s).unwrap().holds_at_horizon);
        let half = FamilyOrbits::new(
            vec![FamilySpec::power(OperatorSpec::diagonal(WeightRule::constant(0.5)))],
            l1.clone(),
            100,
        )
        .unwrap();
        let v = classify_irregular(&l1.basis(1, 3), &half, &tag, false, &s).unwrap();
        assert!(!v.holds_at_horizon);
    }

    #[test]
    fn battery_on_block_weights_has_no_violation() {
        let src = block_pair(250);
        let l1 = SpaceSpec::l1();
        let sample = vec![l1.basis(1, 2), l1.basis(1, 2).scaled(3.0).unwrap()];
        let checks = beqa_battery(&sample, &src, &WeightSpec::identity(), &DetectorSettings::default()).unwrap();
        assert_eq!(checks.len(), 16);
        assert!(checks.iter().all(|c| !c.violated()), "{checks:?}");
        assert!(checks.iter().any(|c| c.premise));
    }

    #[test]
    fn probe_needs_both_witnesses() {
        let l1 = SpaceSpec::l1();
        let id = FamilyOrbits::new(vec![FamilySpec::power(OperatorSpec::identity())], l1.clone(), 200).unwrap();
        let probe = BanachProbe { sigma: 1e-3, eps: 1e-3, weights: WeightSpec::identity(), s_max: 20 };
        let v = banach_equivalence_probe(&l1.basis(1, 2), &id, &probe, &DetectorSettings::default()).unwrap();
        assert!(!v.holds_at_horizon);
        assert!(v.notes.iter().any(|n| n.contains("precondition")));
    }
}
