use std::sync::OnceLock;

use lychaos_core::densities::WeightSpec;
use lychaos_core::detectors::{classify_irregular, DetectorSettings, EpsSchedule, TaxonomyTag};
use lychaos_core::operators::continuous::{ContinuousFamilySpec, Modulation};
use lychaos_core::operators::discrete::{FamilySpec, OperatorSpec, SetRule};
use lychaos_core::operators::functions::ScalarFunction;
use lychaos_core::operators::regularized::{damped_family, gaussian_regularizer};
use lychaos_core::operators::weights::{Tail, WeightRule};
use lychaos_core::space::{NormExponent, SpaceSpec};
use lychaos_core::synthesizer::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: usize = 10_000;

fn backward_pair(a: f64, b: f64) -> Vec<FamilySpec> {
    vec![
        FamilySpec::power(OperatorSpec::scaled_backward(a)),
        FamilySpec::power(OperatorSpec::scaled_backward(b)),
    ]
}

fn sequence_config(families: Vec<FamilySpec>, horizon: usize) -> SynthesisConfig {
    let model = ModelSpec::Sequence { families, space: SpaceSpec::l1(), pool: PoolSpec::Basis { count: horizon } };
    SynthesisConfig::new(model, horizon, WeightSpec::identity())
}

fn pair_certificate() -> &'static SynthesisCertificate {
    static CERT: OnceLock<SynthesisCertificate> = OnceLock::new();
    CERT.get_or_init(|| synthesize(&sequence_config(backward_pair(2.0, 3.0), H)).unwrap())
}

/// `P_{n+1} = N P_n + sum_c sum_l l c^(n+1-l) + N (n+1)` for backward shifts `c B`, whose
/// powers act on basis vectors with norm ratio exactly `c^k`.
fn multipliers_oracle(scales: &[f64], levels: usize) -> Vec<f64> {
    let n_fam = scales.len() as f64;
    let mut p = vec![1.0];
    for n in 1..levels {
        let mut next = n_fam * p[n - 1] + n_fam * (n + 1) as f64;
        for c in scales {
            for l in 1..=n {
                next += l as f64 * c.powi((n + 1 - l) as i32);
            }
        }
        p.push(next);
    }
    p
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn pair_multipliers_follow_the_recursion() {
    let model = SequenceModel::new(backward_pair(2.0, 3.0), SpaceSpec::l1(), PoolSpec::Basis { count: 40 }, 40).unwrap();
    let dom = dominate_seminorms(&model, 12, 12).unwrap();
    assert_eq!(&dom.multipliers[..4], &[1.0, 11.0, 51.0, 186.0]);
    for (got, want) in dom.multipliers.iter().zip(multipliers_oracle(&[2.0, 3.0], 12)) {
        assert!(rel_close(*got, want, 1e-12), "{got} vs {want}");
    }
    // with two families every level at least doubles
    assert!(dom.multipliers.windows(2).all(|w| w[1] >= 2.0 * w[0]));
}

#[test]
fn identity_multipliers_are_tetrahedral() {
    let fam = vec![FamilySpec::power(OperatorSpec::identity())];
    let model = SequenceModel::new(fam, SpaceSpec::l1(), PoolSpec::Basis { count: 10 }, 20).unwrap();
    let dom = dominate_seminorms(&model, 12, 12).unwrap();
    for (idx, p) in dom.multipliers.iter().enumerate() {
        let n = (idx + 1) as u64;
        let binom = (n + 2) * (n + 1) * n / 6;
        assert_eq!(*p, binom as f64, "n = {n}");
    }
    // doubling stops at P_5 = 35 < 2 P_4 = 40
    assert!(dom.multipliers[3] >= 2.0 * dom.multipliers[2]);
    assert!(dom.multipliers[4] < 2.0 * dom.multipliers[3]);
}

#[test]
fn contraction_dominates_but_yields_no_blocks() {
    let half = vec![FamilySpec::power(OperatorSpec::diagonal(WeightRule::constant(0.5)))];
    let model = SequenceModel::new(half, SpaceSpec::l1(), PoolSpec::Basis { count: 20 }, 200).unwrap();
    let dom = dominate_seminorms(&model, 12, 12).unwrap();
    let plan = BlockPlan {
        n_seq: (1..=200).collect(),
        weights: WeightSpec::identity(),
        m: 1,
        max_blocks: 8,
        min_blocks: 1,
    };
    let err = select_blocks(&model, &dom, &plan).unwrap_err();
    assert!(matches!(err, SynthesisError::BlocksExhausted { found: 0, .. }), "{err}");
}

#[test]
fn doubled_shift_blocks_sit_on_the_first_reached_coordinate() {
    let fam = vec![FamilySpec::power(OperatorSpec::scaled_backward(2.0))];
    let model = SequenceModel::new(fam, SpaceSpec::l1(), PoolSpec::Basis { count: 3000 }, 3000).unwrap();
    let dom = dominate_seminorms(&model, 12, 12).unwrap();
    let plan = BlockPlan { n_seq: (1..=3000).collect(), weights: WeightSpec::identity(), m: 1, max_blocks: 5, min_blocks: 5 };
    let blocks = select_blocks(&model, &dom, &plan).unwrap();
    let p = multipliers_oracle(&[2.0], 12);
    let mut prev = 0usize;
    for b in &blocks {
        let l = b.l as f64;
        // x_l = e_{t+1} / P_l and ||(2B)^t e_{t+1}|| = 2^t
        assert_eq!(b.pool_index, b.n_k);
        let want = b.n_k as f64 * 2f64.ln() - p[b.l - 1].ln();
        assert!(rel_close(b.ln_blowup, want, 1e-12));
        // minimal t: beyond l * t_{l-1} and with 2^t > l 2^l P_l
        let t_min = (prev + 1..)
            .find(|&t| (t as f64 / l).ceil() as usize > prev && t as f64 * 2f64.ln() - p[b.l - 1].ln() > l.ln() + l * 2f64.ln())
            .unwrap();
        assert_eq!(b.n_k, t_min, "block {}", b.l);
        prev = b.n_k;
    }
}

#[test]
fn pair_run_matches_the_greedy_oracle() {
    let cert = pair_certificate();
    let p = multipliers_oracle(&[2.0, 3.0], 12);
    let mut prev = 0usize;
    let mut want_t = Vec::new();
    for l in 1..=cert.blocks.len() {
        let lf = l as f64;
        let t = (prev + 1..)
            .find(|&t| (t as f64 / lf).ceil() as usize > prev && t as f64 * 2f64.ln() - p[l - 1].ln() > lf.ln() + lf * 2f64.ln())
            .unwrap();
        want_t.push(t);
        prev = t;
    }
    let got: Vec<usize> = cert.blocks.iter().map(|b| b.n_k).collect();
    assert_eq!(got, want_t);
    assert_eq!(got, vec![2, 7, 22, 89, 446, 2677]);
    // r_2 = 1 + 4 + m(t_5) + t_5 needs block 897
    assert_eq!(cert.spacing, vec![4]);
    assert_eq!(cert.spacing_next, Some(1 + 4 + 446 + 446));
    let chain = &cert.chains[0];
    let want_lower = 89.0 * 2f64.ln() - (186.0f64 * 16.0).ln();
    assert!(rel_close(chain.ln_lower, want_lower, 1e-12));
    assert_eq!(chain.window, Some((90, 446)));
    assert!(chain.distance_max <= chain.distance_bound);
}

#[test]
fn pair_margins_positive_up_to_eight_blocks() {
    // eight blocks need a horizon past 1.5e5
    let mut cfg = sequence_config(backward_pair(2.0, 3.0), 200_000);
    cfg.max_blocks = 8;
    let cert = synthesize(&cfg).unwrap();
    assert_eq!(cert.blocks.len(), 8);
    for b in &cert.blocks {
        assert!(b.ln_blowup > b.ln_blowup_bound);
        assert!(b.ln_dominated <= 1e-12);
        assert!(b.ln_tail_max.is_none_or(|t| t < b.ln_tail_bound));
    }
}

#[test]
fn pair_certificate_verifies_and_is_irregular() {
    let cert = pair_certificate();
    let v = verify_certificate(cert).unwrap();
    assert!(v.holds_at_horizon, "{:?}", v.notes);
    let model = cert.config.model.build(H).unwrap();
    let tag = TaxonomyTag::new(1, 1, Some(WeightSpec::identity())).unwrap();
    let irr = classify_irregular(&cert.x_beta, model.as_ref(), &tag, false, &DetectorSettings::default()).unwrap();
    assert!(irr.holds_at_horizon, "{:?}", irr.notes);
    let up = &irr.witnesses.subsequences[0];
    assert!(up.values.iter().any(|v| *v > 1e3));
}

fn synthetic_blocks(ns: &[usize]) -> Vec<BlockRecord> {
    ns.iter()
        .enumerate()
        .map(|(i, &n)| BlockRecord {
            l: i + 1,
            k_index: n,
            n_k: n,
            pool_index: 0,
            ln_scale: 0.0,
            ln_dominated: 0.0,
            ln_blowup: 0.0,
            ln_blowup_bound: 0.0,
            theta: 0.0,
            tail_from: 1,
            ln_tail_max: None,
            ln_tail_bound: 0.0,
        })
        .collect()
}

#[test]
fn spacing_recursion_by_hand() {
    // n_k = k and the l-th block at k = l: r_{q+1} = 1 + r_q + 2 (r_q + 1)
    let blocks = synthetic_blocks(&(1..=60).collect::<Vec<_>>());
    let s = select_spacing(&blocks, &WeightSpec::identity(), 2).unwrap();
    assert_eq!(s.r, vec![2, 9, 30]);
    assert_eq!(s.next, Some(1 + 30 + 31 + 31));
    let half = select_spacing(&blocks, &WeightSpec::Linear { c: 0.5 }, 2).unwrap();
    // 1 + 2 + 1.5 + 3 = 7.5 rounds up to 8
    assert_eq!(half.r[1], 8);
    assert!(matches!(
        select_spacing(&blocks[..2], &WeightSpec::identity(), 2),
        Err(SynthesisError::BlockBeyondAvailable { needed: 3, available: 2 })
    ));
}

proptest! {
    #[test]
    fn spacing_grows_at_least_linearly(gaps in prop::collection::vec(1usize..20, 40..80), c in 0.01f64..3.0, r1 in 2usize..6) {
        let ns: Vec<usize> = gaps.iter().scan(0, |acc, g| { *acc += g; Some(*acc) }).collect();
        let blocks = synthetic_blocks(&ns);
        let w = WeightSpec::Linear { c };
        let s = select_spacing(&blocks, &w, r1).unwrap();
        for pair in s.r.windows(2) {
            prop_assert!(pair[1] > pair[0] + 1);
            let b = &blocks[pair[0]];
            prop_assert!(pair[1] as f64 >= 1.0 + pair[0] as f64 + w.value(b.n_k) + b.n_k as f64);
        }
    }
}

#[test]
fn assembly_of_zero_and_single_patterns() {
    let cert = pair_certificate();
    let model = cert.config.model.build(H).unwrap();
    let spacing = Spacing { r: cert.spacing.clone(), next: cert.spacing_next };
    let zero = assemble(model.as_ref(), &cert.blocks, &spacing, &[0; 6]).unwrap();
    assert!(zero.is_zero());
    let single = assemble(model.as_ref(), &cert.blocks, &spacing, &[0, 0, 0, 1]).unwrap();
    // x_4 / 2^4 with x_4 = e_90 / P_4
    let nz = single.nonzeros();
    assert_eq!(nz.len(), 1);
    assert_eq!(nz[0].0, 90);
    assert!(rel_close(nz[0].1, 1.0 / (186.0 * 16.0), 1e-12));
    assert_eq!(single, cert.x_beta);
    assert!(matches!(
        assemble(model.as_ref(), &cert.blocks, &spacing, &[1, 0, 0, 1]),
        Err(SynthesisError::Pattern(_))
    ));
}

#[test]
fn tampered_certificates_are_rejected() {
    let cert = pair_certificate();
    assert!(check_construction(cert).unwrap().holds_at_horizon);
    let bump = 1.1f64.ln();
    let mut tampered = Vec::new();
    let mut c = cert.clone();
    c.blocks[2].ln_blowup += bump;
    tampered.push(c);
    let mut c = cert.clone();
    c.blocks[4].ln_dominated += bump;
    tampered.push(c);
    let mut c = cert.clone();
    c.chains[0].ln_lower += bump;
    tampered.push(c);
    let mut c = cert.clone();
    c.x_beta = c.x_beta.scaled(1.1).unwrap();
    tampered.push(c);
    let mut c = cert.clone();
    c.dominating[3] *= 1.1;
    tampered.push(c);
    let mut c = cert.clone();
    c.spacing_next = c.spacing_next.map(|n| n + 1);
    tampered.push(c);
    for (i, c) in tampered.iter().enumerate() {
        let v = verify_certificate(c).unwrap();
        assert!(!v.holds_at_horizon, "tamper {i} accepted");
    }
}

#[test]
fn certificate_json_round_trip() {
    let cert = pair_certificate();
    let back = SynthesisCertificate::from_json(&cert.to_json()).unwrap();
    assert_eq!(&back, cert);
    assert!(check_construction(&back).unwrap().holds_at_horizon);
}

#[test]
fn scalar_multiples_stay_irregular_with_scaled_thresholds() {
    let cert = pair_certificate();
    let model = cert.config.model.build(H).unwrap();
    let tag = TaxonomyTag::new(1, 1, Some(WeightSpec::identity())).unwrap();
    let base = DetectorSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..12 {
        let q = 10f64.powf(rng.gen_range(-3.0..3.0)) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let a = q.abs();
        let EpsSchedule::PowerDecay { eps0, exponent, floor } = base.schedule.clone() else { unreachable!() };
        let settings = DetectorSettings {
            grow: base.grow.iter().map(|g| g * a).collect(),
            shrink: base.shrink.iter().map(|s| s * a).collect(),
            schedule: EpsSchedule::PowerDecay { eps0: eps0 * a, exponent, floor: floor * a },
            ..base.clone()
        };
        let x = manifold_sample(cert, &[q], &[]).unwrap().remove(0);
        let v = classify_irregular(&x, model.as_ref(), &tag, false, &settings).unwrap();
        assert!(v.holds_at_horizon, "q = {q}: {:?}", v.notes);
    }
}

#[test]
fn pool_perturbations_stay_irregular() {
    let cert = pair_certificate();
    let model = cert.config.model.build(H).unwrap();
    let tag = TaxonomyTag::new(1, 1, Some(WeightSpec::identity())).unwrap();
    let samples = manifold_sample(cert, &[], &[(0, 1.0), (5, 0.1), (40, 0.01)]).unwrap();
    for x in &samples {
        let v = classify_irregular(x, model.as_ref(), &tag, false, &DetectorSettings::default()).unwrap();
        assert!(v.holds_at_horizon, "{:?}", v.notes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]
    #[test]
    fn accepted_certificates_classify_irregular(a in 2u32..5, b in 2u32..5) {
        let cfg = sequence_config(backward_pair(a as f64, b as f64), 3000);
        let cert = synthesize(&cfg).unwrap();
        let verdict = verify_certificate(&cert).unwrap();
        if verdict.holds_at_horizon {
            let model = cfg.model.build(3000).unwrap();
            let tag = TaxonomyTag::new(1, 1, Some(WeightSpec::identity())).unwrap();
            let irr = classify_irregular(&cert.x_beta, model.as_ref(), &tag, false, &cfg.settings).unwrap();
            prop_assert!(irr.holds_at_horizon);
        }
    }
}

#[test]
fn identity_regularizer_reproduces_plain_synthesis() {
    let cfg = sequence_config(backward_pair(2.0, 3.0), 3000);
    let plain = synthesize(&cfg).unwrap();
    let reg = regularized_synthesize(&cfg, &WeightRule::constant(1.0)).unwrap();
    assert_eq!(plain.x_beta, reg.x_beta);
    assert_eq!(plain.spacing, reg.spacing);
    assert_eq!(plain.dominating, reg.dominating);
    for (a, b) in plain.blocks.iter().zip(&reg.blocks) {
        assert_eq!((a.n_k, a.pool_index), (b.n_k, b.pool_index));
        assert!(rel_close(a.ln_blowup, b.ln_blowup, 1e-12));
    }
}

#[test]
fn zero_regularizer_entry_is_rejected() {
    let cfg = sequence_config(backward_pair(2.0, 3.0), 200);
    let c = WeightRule::Explicit { values: vec![1.0, 1.0, 0.0], tail: Tail::Constant { value: 1.0 } };
    let err = regularized_synthesize(&cfg, &c).unwrap_err();
    assert!(matches!(err, SynthesisError::ZeroRegularizer { index: 3 }), "{err}");
}

#[test]
fn malo_families_certify_at_horizon_400() {
    for j in [2, 3] {
        let model = ModelSpec::Sequence {
            families: vec![damped_family(j, SetRule::Squares)],
            space: SpaceSpec::c0(),
            pool: PoolSpec::Basis { count: 400 },
        };
        let mut cfg = SynthesisConfig::new(model, 400, WeightSpec::identity());
        cfg.n_k = SetRule::Squares;
        cfg.r1 = 2;
        let cert = regularized_synthesize(&cfg, &gaussian_regularizer()).unwrap();
        assert!(cert.blocks.iter().all(|b| SetRule::Squares.contains(b.n_k)));
        let v = check_construction(&cert).unwrap();
        assert!(v.holds_at_horizon, "j = {j}: {:?}", v.notes);
        // u lives in pivot coordinates; C u has the same support
        assert!(!cert.x_beta.is_zero());
    }
}

fn translation_config(rho: ScalarFunction, step: f64, t_max: f64) -> ContinuousConfig {
    let fam = ContinuousFamilySpec::translation(rho, NormExponent::Finite(1.0), step, 2.0 * t_max);
    let cells = (2.0 * t_max / step).round() as usize;
    let stride = (1.0 / step).round() as usize;
    ContinuousConfig {
        families: vec![fam],
        f: ScalarFunction::Affine { a: 1.0, b: 1.0 },
        t_max,
        pool: BumpPool { width: 4.0, stride, count: (cells - (4.0 / step) as usize - 2) / stride },
        depth: 12,
        max_blocks: 8,
        r1: 2,
        settings: DetectorSettings::default(),
    }
}

#[test]
fn exponential_weight_certifies_at_t50() {
    let cfg = translation_config(ScalarFunction::Exp { rate: -1.0, amplitude: 1.0 }, 0.05, 50.0);
    let cert = continuous_synthesize(&cfg).unwrap();
    let report = cert.continuous.as_ref().unwrap();
    assert!(report.max_variation <= 0.05);
    for (b, t) in cert.blocks.iter().zip(&report.block_times) {
        assert!(rel_close(*t, b.n_k as f64 * 0.05, 1e-12));
    }
    // m_n = ceil((1 + n h) / h) = n + 20
    assert!(cert.blocks.iter().all(|b| rel_close(b.theta * b.l as f64, (b.n_k + 20) as f64, 1e-12)));
    assert_eq!(report.f_density.len(), 3);
    assert!(check_construction(&cert).unwrap().holds_at_horizon);
}

#[test]
fn isometric_translation_is_refused() {
    let cfg = translation_config(ScalarFunction::Constant { value: 1.0 }, 0.05, 50.0);
    assert!(matches!(continuous_synthesize(&cfg), Err(SynthesisError::Divergent { .. })));
}

#[test]
fn wu_battery_splits_on_liminf_and_boundedness() {
    let battery = [
        ScalarFunction::Exp { rate: -1.0, amplitude: 1.0 },
        ScalarFunction::InverseLinear,
        ScalarFunction::Constant { value: 1.0 },
        ScalarFunction::Affine { a: 1.0, b: 1.0 },
        ScalarFunction::ExpSine,
        ScalarFunction::MinInverse,
    ];
    let mut successes = 0;
    for rho in battery {
        let cfg = translation_config(rho.clone(), 0.02, 50.0);
        let diag = wu_diagnostics(&cfg.families[0].grid().unwrap());
        let expected = diag.sampled_liminf < 1e-3 && diag.bounded_above;
        match continuous_synthesize(&cfg) {
            Ok(cert) => {
                assert!(expected, "{rho:?} certified against the criterion");
                assert!(check_construction(&cert).unwrap().holds_at_horizon);
                successes += 1;
            }
            Err(e) => {
                assert!(!expected, "{rho:?} refused: {e}");
                let documented = if diag.bounded_above {
                    matches!(e, SynthesisError::Divergent { .. })
                } else {
                    matches!(e, SynthesisError::NotBoundedAbove { .. })
                };
                assert!(documented, "{rho:?}: {e}");
            }
        }
    }
    assert_eq!(successes, 2);
}

#[test]
fn coarse_grid_is_reported() {
    let cfg = translation_config(ScalarFunction::ExpSine, 0.05, 50.0);
    assert!(matches!(continuous_synthesize(&cfg), Err(SynthesisError::GridTooCoarse { .. })));
}

#[test]
fn modulated_families_inherit_the_certificate() {
    let cfg = translation_config(ScalarFunction::Exp { rate: -1.0, amplitude: 1.0 }, 0.05, 50.0);
    let cert = continuous_synthesize(&cfg).unwrap();
    let mods = [Modulation::Constant { re: 0.5, im: 0.5 }, Modulation::Oscillating { a: 2.0, b: 0.0 }];
    let v = inherit_modulated(&cert, &mods, 0.5).unwrap();
    assert!(v.holds_at_horizon, "{:?}", v.notes);
    // the modulated orbit is |f_j(t)| times the base orbit
    let base = TranslationModel::new(cfg.families.clone(), cfg.pool.clone(), cert.config.horizon).unwrap();
    let modulated: Vec<ContinuousFamilySpec> = mods
        .iter()
        .map(|m| ContinuousFamilySpec::ScalarModulated { modulation: m.clone(), inner: Box::new(cfg.families[0].clone()) })
        .collect();
    let model = TranslationModel::new(modulated, cfg.pool.clone(), cert.config.horizon).unwrap();
    let x = cert.x_beta.nonzeros();
    let k = cert.chains[0].lower_k;
    for (j, m) in mods.iter().enumerate() {
        let want = m.modulus(k as f64 * 0.05).ln() + base.ln_orbit(0, &x, k).unwrap();
        assert!(rel_close(model.ln_orbit(j, &x, k).unwrap(), want, 1e-12));
    }
    let decaying = [Modulation::Exponential { re: -1.0, im: 0.0 }];
    assert!(!inherit_modulated(&cert, &decaying, 0.5).unwrap().holds_at_horizon);
}
