use rayon::prelude::*;

use super::blowup::{summability_tail, Summability, SUMMABLE_TAIL};
use super::model::{combine, scale_sparse, sparse_of, ModelSpec, Sparse, SynthesisModel};
use super::{BlockRecord, ChainRecord, SynthesisCertificate, SynthesisConfig, SynthesisError};
use crate::densities::{is_class_r, WeightSpec};
use crate::detectors::{near_zero_type1, renormed_distance, sync_unboundedness, HorizonVerdict, SubsequenceMode};
use crate::operators::discrete::FamilySpec;
use crate::operators::weights::WeightRule;
use crate::space::{TruncatedVector, DEFAULT_METRIC_TERMS};

/// Relative slack for replayed inequalities and recomputed values.
const SLACK: f64 = 1e-9;
/// Pool vectors must be below this by the horizon.
const DECAY: f64 = 1e-3;

fn close(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= SLACK * a.abs().max(b.abs()).max(1.0)
}

fn le(a: f64, b: f64) -> bool {
    a <= b + SLACK * b.abs().max(1.0)
}

/// Multipliers `P_n` of the dominating seminorms `p'_n = P_n ||.||`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominatingFamily {
    pub multipliers: Vec<f64>,
    /// `sup_pool ln(||T_{j,k} x|| / ||x||)`, indexed `[j][k - 1]`.
    pub ln_ratios: Vec<Vec<f64>>,
    pub depth: usize,
}

impl DominatingFamily {
    pub fn ln_multiplier(&self, n: usize) -> f64 {
        self.multipliers[n - 1].ln()
    }
}

/// Builds `P_1 = 1`, `P_{n+1} = N P_n + sum_j sum_{l+k=n+1} c_{j,l,k} + N (n+1)` with
/// `c_{j,l,k} = l sup_pool ||T_{j,k} x|| / ||x||` for `n + 1 <= levels`, then checks
/// `p_l(T_{j,k} x) <= p'_{k+l}(x)` on every pool vector for `k + l <= depth`.
pub fn dominate_seminorms(model: &dyn SynthesisModel, depth: usize, levels: usize) -> Result<DominatingFamily, SynthesisError> {
    let levels = levels.max(depth).max(2);
    let n_fam = model.families();
    let kmax = levels - 1;
    let per_member = |i: usize| -> Result<Option<Vec<Vec<f64>>>, SynthesisError> {
        let x = model.pool_member(i);
        let lx = model.ln_norm(&x);
        if lx == f64::NEG_INFINITY {
            return Ok(None);
        }
        (0..n_fam)
            .map(|j| (1..=kmax).map(|k| Ok(model.ln_orbit(j, &x, k)? - lx)).collect())
            .collect::<Result<Vec<Vec<f64>>, SynthesisError>>()
            .map(Some)
    };
    let ln_ratios = (0..model.pool_len())
        .into_par_iter()
        .map(per_member)
        .try_reduce(
            || None,
            |a, b| {
                Ok(match (a, b) {
                    (None, x) | (x, None) => x,
                    (Some(mut a), Some(b)) => {
                        for (ra, rb) in a.iter_mut().zip(&b) {
                            for (u, v) in ra.iter_mut().zip(rb) {
                                *u = u.max(*v);
                            }
                        }
                        Some(a)
                    }
                })
            },
        )?
        .ok_or_else(|| SynthesisError::InvalidConfig("pool has no nonzero vector".into()))?;

    let mut p = vec![1.0f64];
    for n in 1..levels {
        let mut next = n_fam as f64 * p[n - 1] + (n_fam * (n + 1)) as f64;
        for ratios in &ln_ratios {
            for l in 1..=n {
                next += l as f64 * ratios[n - l].exp();
            }
        }
        p.push(next);
    }
    let dom = DominatingFamily { multipliers: p, ln_ratios, depth };

    let violation = (0..model.pool_len()).into_par_iter().find_map_first(|i| {
        let x = model.pool_member(i);
        let lx = model.ln_norm(&x);
        if lx == f64::NEG_INFINITY {
            return None;
        }
        for j in 0..n_fam {
            for k in 1..depth {
                let Ok(lt) = model.ln_orbit(j, &x, k) else {
                    return Some((j, k, 1, i, f64::NAN, f64::NAN));
                };
                for l in 1..=depth - k {
                    let lhs = (l as f64).ln() + lt;
                    let rhs = dom.ln_multiplier(k + l) + lx;
                    if !le(lhs, rhs) {
                        return Some((j, k, l, i, lhs, rhs));
                    }
                }
            }
        }
        None
    });
    if let Some((j, k, l, pool_index, lhs, rhs)) = violation {
        return Err(SynthesisError::DominationFailed { j: j + 1, k, l, pool_index, lhs, rhs });
    }
    Ok(dom)
}

/// Inputs of the greedy block scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPlan {
    /// `n_1 < n_2 < ...` within the horizon.
    pub n_seq: Vec<usize>,
    pub weights: WeightSpec,
    pub m: usize,
    pub max_blocks: usize,
    /// Fewer blocks than this is an error.
    pub min_blocks: usize,
}

fn block_vector(model: &dyn SynthesisModel, b: &BlockRecord) -> Sparse {
    scale_sparse(&model.pool_member(b.pool_index), b.ln_scale.exp())
}

/// Last `k` (from 1) where `ln_l + tail[k-1] >= -ln_l` over the given tails.
fn last_violation(tails: &[Vec<f64>], ln_l: f64) -> Option<usize> {
    tails
        .iter()
        .filter_map(|t| t.iter().rposition(|&v| ln_l + v >= -ln_l).map(|p| p + 1))
        .max()
}

fn tail_max(tails: &[Vec<f64>], from: usize, ln_l: f64) -> Option<f64> {
    let v = tails
        .iter()
        .flat_map(|t| t.iter().skip(from.saturating_sub(1)))
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    (v > f64::NEG_INFINITY).then_some(ln_l + v)
}

/// Greedy scan for `l = 1, 2, ...`: the first index `n_{k_l}` (after `n_{k_{l-1}}`) and
/// the first pool vector `x` such that, with `x_l = x / p'_l(x)`,
/// `min_j p_m(T_{j,n_{k_l}} x_l) > l 2^l` and `p_l(T_{j,k} x_s) < 1/l` for all earlier
/// blocks `s` and all `k` in `[ceil(m_{n_{k_l}} / l), horizon]`.
pub fn select_blocks(model: &dyn SynthesisModel, dom: &DominatingFamily, plan: &BlockPlan) -> Result<Vec<BlockRecord>, SynthesisError> {
    if plan.max_blocks > dom.multipliers.len() {
        return Err(SynthesisError::InvalidConfig(format!(
            "{} blocks need {} dominating multipliers, have {}",
            plan.max_blocks,
            plan.max_blocks,
            dom.multipliers.len()
        )));
    }
    let ln_m = (plan.m as f64).ln();
    let mut blocks: Vec<BlockRecord> = Vec::new();
    let mut tails: Vec<Vec<f64>> = Vec::new();
    let mut prev_kappa = 0usize;
    let mut reason = "index sequence";
    'outer: for l in 1..=plan.max_blocks {
        let ln_l = (l as f64).ln();
        let bound = ln_l + l as f64 * std::f64::consts::LN_2;
        let ln_p = dom.ln_multiplier(l);
        let last_bad = last_violation(&tails, ln_l);
        for kappa in prev_kappa + 1..=plan.n_seq.len() {
            let t = plan.n_seq[kappa - 1];
            let theta = plan.weights.value(t) / l as f64;
            if last_bad.is_some_and(|b| theta.ceil() <= b as f64) {
                continue;
            }
            let found = (0..model.pool_len()).find_map(|i| {
                let x = model.pool_member(i);
                let lx = model.ln_norm(&x);
                if lx == f64::NEG_INFINITY {
                    return None;
                }
                let ln_scale = -(ln_p + lx);
                let blow = ln_m + model.ln_min_family(&x, t).ok()? + ln_scale;
                (blow > bound).then_some((i, ln_scale, blow))
            });
            let Some((pool_index, ln_scale, ln_blowup)) = found else {
                reason = "pool";
                continue;
            };
            let tail_from = theta.ceil().max(1.0).min(usize::MAX as f64) as usize;
            let record = BlockRecord {
                l,
                k_index: kappa,
                n_k: t,
                pool_index,
                ln_scale,
                ln_dominated: ln_p + ln_scale + model.ln_norm(&model.pool_member(pool_index)),
                ln_blowup,
                ln_blowup_bound: bound,
                theta,
                tail_from,
                ln_tail_max: tail_max(&tails, tail_from, ln_l),
                ln_tail_bound: -ln_l,
            };
            let tail = model.ln_max_orbit(&block_vector(model, &record))?;
            let at_horizon = *tail.last().unwrap();
            if at_horizon >= DECAY.ln() {
                return Err(SynthesisError::NoDecay { pool_index, value: at_horizon.exp() });
            }
            tails.push(tail);
            blocks.push(record);
            prev_kappa = kappa;
            continue 'outer;
        }
        break;
    }
    if blocks.len() < plan.min_blocks {
        return Err(SynthesisError::BlocksExhausted {
            found: blocks.len(),
            needed: plan.min_blocks,
            reason: reason.into(),
        });
    }
    Ok(blocks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spacing {
    pub r: Vec<usize>,
    pub next: Option<usize>,
}

fn spacing_step(r: usize, block_after: &BlockRecord, weights: &WeightSpec) -> usize {
    let t = block_after.n_k as f64;
    (1.0 + r as f64 + weights.value(block_after.n_k) + t).ceil() as usize
}

/// `r_{q+1} = ceil(1 + r_q + m_{n_{k_{r_q + 1}}} + n_{k_{r_q + 1}})` from `r_1`, keeping the
/// positions whose blocks `r_q` and `r_q + 1` are both available.
pub fn select_spacing(blocks: &[BlockRecord], weights: &WeightSpec, r1: usize) -> Result<Spacing, SynthesisError> {
    if r1 < 2 {
        return Err(SynthesisError::InvalidConfig(format!("r_1 = {r1} must be at least 2")));
    }
    if blocks.len() < r1 + 1 {
        return Err(SynthesisError::BlockBeyondAvailable { needed: r1 + 1, available: blocks.len() });
    }
    let mut r = vec![r1];
    loop {
        let last = *r.last().unwrap();
        let next = spacing_step(last, &blocks[last], weights);
        if next + 1 > blocks.len() {
            return Ok(Spacing { r, next: Some(next) });
        }
        r.push(next);
    }
}

fn check_beta(beta: &[u8], spacing: &[usize], available: usize) -> Result<(), SynthesisError> {
    for (pos, &b) in beta.iter().enumerate() {
        let l = pos + 1;
        if b > 1 {
            return Err(SynthesisError::Pattern(format!("beta_{l} = {b} is not 0 or 1")));
        }
        if b == 1 && !spacing.contains(&l) {
            return Err(SynthesisError::Pattern(format!("beta_{l} = 1 outside the spacing positions")));
        }
        if b == 1 && l > available {
            return Err(SynthesisError::BlockBeyondAvailable { needed: l, available });
        }
    }
    Ok(())
}

fn assemble_sparse(model: &dyn SynthesisModel, blocks: &[BlockRecord], beta: &[u8]) -> Sparse {
    let parts: Vec<(f64, Sparse)> = beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == 1)
        .map(|(pos, _)| (0.5f64.powi(pos as i32 + 1), block_vector(model, &blocks[pos])))
        .collect();
    combine(&parts.iter().map(|(c, x)| (*c, x)).collect::<Vec<_>>())
}

/// `x_beta = sum_l beta_l x_l / 2^l`, with `beta_l = 1` only on spacing positions.
pub fn assemble(
    model: &dyn SynthesisModel,
    blocks: &[BlockRecord],
    spacing: &Spacing,
    beta: &[u8],
) -> Result<TruncatedVector, SynthesisError> {
    check_beta(beta, &spacing.r, blocks.len())?;
    model.materialize(&assemble_sparse(model, blocks, beta))
}

fn chain_at(
    model: &dyn SynthesisModel,
    x: &Sparse,
    blocks: &[BlockRecord],
    q: usize,
    r: usize,
    weights: &WeightSpec,
    m: usize,
) -> Result<ChainRecord, SynthesisError> {
    let h = model.horizon();
    let lower_k = blocks[r - 1].n_k;
    let ln_lower = (m as f64).ln() + model.ln_min_family(x, lower_k)?;
    let next = &blocks[r];
    let m_next = weights.value(next.n_k);
    let lo = (m_next / (r + 1) as f64).ceil().max(1.0) as usize;
    let hi = (m_next.floor() as usize).min(h);
    let ln_r1 = ((r + 1) as f64).ln();
    let (window, ln_upper, distance_max) = if lo <= hi {
        let mut top = f64::NEG_INFINITY;
        for k in lo..=hi {
            for j in 0..model.families() {
                top = top.max(model.ln_orbit(j, x, k)?);
            }
        }
        let dist = renormed_distance(crate::operators::weights::saturating_exp(top), DEFAULT_METRIC_TERMS);
        (Some((lo, hi)), (top > f64::NEG_INFINITY).then_some(ln_r1 + top), dist)
    } else {
        (None, None, 0.0)
    };
    Ok(ChainRecord {
        q,
        r,
        lower_k,
        ln_lower,
        ln_lower_bound: ((r - 1) as f64).ln(),
        window,
        ln_upper,
        ln_upper_bound: -ln_r1,
        distance_max,
        distance_bound: 1.0 / (r + 1) as f64 + 0.5f64.powi(r as i32),
    })
}

fn chains(
    model: &dyn SynthesisModel,
    x: &Sparse,
    blocks: &[BlockRecord],
    spacing: &[usize],
    beta: &[u8],
    weights: &WeightSpec,
    m: usize,
) -> Result<Vec<ChainRecord>, SynthesisError> {
    spacing
        .iter()
        .enumerate()
        .filter(|(_, &r)| beta.get(r - 1) == Some(&1))
        .map(|(q, &r)| chain_at(model, x, blocks, q + 1, r, weights, m))
        .collect()
}

fn check_weights(weights: &WeightSpec, horizon: usize) -> Result<(), SynthesisError> {
    let cert = is_class_r(&weights.fit(horizon)?);
    if !cert.member {
        return Err(SynthesisError::InvalidConfig(format!("weights {} are not in class R", weights.label())));
    }
    Ok(())
}

fn n_sequence(config: &SynthesisConfig) -> Result<Vec<usize>, SynthesisError> {
    let seq = config.n_k.enumerate(config.horizon);
    if seq.is_empty() {
        return Err(SynthesisError::InvalidConfig("no n_k within the horizon".into()));
    }
    Ok(seq)
}

fn plan_of(config: &SynthesisConfig) -> Result<BlockPlan, SynthesisError> {
    Ok(BlockPlan {
        n_seq: n_sequence(config)?,
        weights: config.m_weight.clone(),
        m: config.m,
        max_blocks: config.max_blocks,
        min_blocks: config.r1 + 1,
    })
}

pub(crate) fn run_pipeline(config: &SynthesisConfig, model: &dyn SynthesisModel) -> Result<SynthesisCertificate, SynthesisError> {
    if config.m == 0 {
        return Err(SynthesisError::InvalidConfig("seminorm index m must be at least 1".into()));
    }
    check_weights(&config.m_weight, config.horizon)?;
    let plan = plan_of(config)?;
    if let Some(tail) = summability_tail(model, &plan.n_seq, Summability::Norm) {
        if !(tail < SUMMABLE_TAIL) {
            return Err(SynthesisError::Divergent { tail });
        }
    }
    let dom = dominate_seminorms(model, config.depth, config.max_blocks)?;
    let blocks = select_blocks(model, &dom, &plan)?;
    let spacing = select_spacing(&blocks, &config.m_weight, config.r1)?;
    let beta = match &config.beta {
        Some(b) => b.clone(),
        None => (1..=blocks.len()).map(|l| spacing.r.contains(&l) as u8).collect(),
    };
    check_beta(&beta, &spacing.r, blocks.len())?;
    if !beta.contains(&1) {
        return Err(SynthesisError::Pattern("beta has no 1 within the available blocks".into()));
    }
    let xs = assemble_sparse(model, &blocks, &beta);
    let chains = chains(model, &xs, &blocks, &spacing.r, &beta, &config.m_weight, config.m)?;
    Ok(SynthesisCertificate {
        config: config.clone(),
        dominating: dom.multipliers,
        blocks,
        spacing: spacing.r,
        spacing_next: spacing.next,
        beta,
        x_beta: model.materialize(&xs)?,
        chains,
        continuous: None,
    })
}

/// Runs the full pipeline: summability precheck, domination, blocks, spacing, assembly
/// and chains.
pub fn synthesize(config: &SynthesisConfig) -> Result<SynthesisCertificate, SynthesisError> {
    let model = config.model.build(config.horizon)?;
    run_pipeline(config, model.as_ref())
}

/// Synthesis in pivot coordinates `u = C^{-1} x` for `C = diag(regularizer)`: power
/// families become undamped `T_{j,k} C`, damped families must carry the same regularizer.
/// The certificate's vectors, `x_beta` included, are pivot coordinates, so
/// `x_beta` in the original space is `C u`, which lies in `R(C)`.
pub fn regularized_synthesize(config: &SynthesisConfig, regularizer: &WeightRule) -> Result<SynthesisCertificate, SynthesisError> {
    let ModelSpec::Sequence { families, space, pool } = &config.model else {
        return Err(SynthesisError::InvalidConfig("regularized synthesis needs a sequence model".into()));
    };
    let families = families
        .iter()
        .map(|f| match f {
            FamilySpec::Power { base } => Ok(FamilySpec::DampedPowers {
                base: base.clone(),
                regularizer: regularizer.clone(),
                set: crate::operators::discrete::SetRule::All,
                exponent: 0.0,
            }),
            FamilySpec::DampedPowers { regularizer: r, .. } if r == regularizer => Ok(f.clone()),
            other => Err(SynthesisError::InvalidConfig(format!("family {other:?} does not use the regularizer"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let model = super::SequenceModel::new(families.clone(), space.clone(), pool.clone(), config.horizon)?;
    check_regularizer(regularizer, model.capacity())?;
    let mut config = config.clone();
    config.model = ModelSpec::Sequence { families, space: space.clone(), pool: pool.clone() };
    run_pipeline(&config, &model)
}

fn check_regularizer(regularizer: &WeightRule, len: usize) -> Result<(), SynthesisError> {
    // logs: Gaussian entries underflow long before they vanish
    match (1..=len).find(|&i| regularizer.ln_abs(i) == f64::NEG_INFINITY) {
        Some(index) => Err(SynthesisError::ZeroRegularizer { index }),
        None => Ok(()),
    }
}

fn fail(verdict: HorizonVerdict, text: String) -> HorizonVerdict {
    let mut v = verdict.note(text);
    v.holds_at_horizon = false;
    v
}

/// Recomputes every recorded value of the certificate from its configuration and checks
/// the inequalities, the spacing recursion and the assembly of `x_beta`. The first
/// violation is recorded as a note.
pub fn check_construction(cert: &SynthesisCertificate) -> Result<HorizonVerdict, SynthesisError> {
    let config = &cert.config;
    let model = config.model.build(config.horizon)?;
    let model = model.as_ref();
    let v = HorizonVerdict::new("certificate replay", true, config.horizon as f64);
    if let Err(e) = check_weights(&config.m_weight, config.horizon) {
        return Ok(fail(v, e.to_string()));
    }
    let levels = config.max_blocks.max(config.depth);
    let dom = match dominate_seminorms(model, config.depth, levels) {
        Ok(d) => d,
        Err(e) => return Ok(fail(v, e.to_string())),
    };
    if dom.multipliers.len() != cert.dominating.len()
        || dom.multipliers.iter().zip(&cert.dominating).any(|(a, b)| !close(*a, *b))
    {
        return Ok(fail(v, "dominating multipliers do not reproduce".into()));
    }
    let n_seq = n_sequence(config)?;
    let ln_m = (config.m as f64).ln();
    let mut tails: Vec<Vec<f64>> = Vec::new();
    for (pos, b) in cert.blocks.iter().enumerate() {
        let l = pos + 1;
        let ln_l = (l as f64).ln();
        if b.l != l || b.k_index == 0 || n_seq.get(b.k_index - 1) != Some(&b.n_k) || b.pool_index >= model.pool_len() {
            return Ok(fail(v, format!("block {l}: index data inconsistent")));
        }
        if pos > 0 && b.k_index <= cert.blocks[pos - 1].k_index {
            return Ok(fail(v, format!("block {l}: k_l not increasing")));
        }
        let x = model.pool_member(b.pool_index);
        let lx = model.ln_norm(&x);
        let ln_dominated = dom.ln_multiplier(l) + b.ln_scale + lx;
        let xl = scale_sparse(&x, b.ln_scale.exp());
        let ln_blowup = ln_m + model.ln_min_family(&xl, b.n_k)?;
        let theta = config.m_weight.value(b.n_k) / l as f64;
        let tail_from = theta.ceil().max(1.0) as usize;
        let ln_tail_max = tail_max(&tails, tail_from, ln_l);
        let reproduced = close(ln_dominated, b.ln_dominated)
            && close(ln_blowup, b.ln_blowup)
            && close(b.ln_blowup_bound, ln_l + l as f64 * std::f64::consts::LN_2)
            && close(theta, b.theta)
            && tail_from == b.tail_from
            && match (ln_tail_max, b.ln_tail_max) {
                (None, None) => true,
                (Some(a), Some(c)) => close(a, c),
                _ => false,
            }
            && close(b.ln_tail_bound, -ln_l);
        if !reproduced {
            return Ok(fail(v, format!("block {l}: recorded values do not reproduce")));
        }
        if !le(b.ln_dominated, 0.0) {
            return Ok(fail(v, format!("block {l}: p'_l(x_l) > 1")));
        }
        if !(b.ln_blowup > b.ln_blowup_bound) {
            return Ok(fail(v, format!("block {l}: blow-up {} <= l 2^l", b.ln_blowup.exp())));
        }
        if b.ln_tail_max.is_some_and(|t| !(t < b.ln_tail_bound)) {
            return Ok(fail(v, format!("block {l}: earlier blocks not below 1/l from k = {}", b.tail_from)));
        }
        tails.push(model.ln_max_orbit(&xl)?);
    }
    let spacing = match select_spacing(&cert.blocks, &config.m_weight, config.r1) {
        Ok(s) => s,
        Err(e) => return Ok(fail(v, e.to_string())),
    };
    if spacing.r != cert.spacing || spacing.next != cert.spacing_next {
        return Ok(fail(v, "spacing does not satisfy the recursion".into()));
    }
    if let Err(e) = check_beta(&cert.beta, &cert.spacing, cert.blocks.len()) {
        return Ok(fail(v, e.to_string()));
    }
    let xs = assemble_sparse(model, &cert.blocks, &cert.beta);
    if model.materialize(&xs)? != cert.x_beta {
        return Ok(fail(v, "x_beta differs from the assembled blocks".into()));
    }
    let again = chains(model, &xs, &cert.blocks, &cert.spacing, &cert.beta, &config.m_weight, config.m)?;
    if again.len() != cert.chains.len() {
        return Ok(fail(v, "chain list incomplete".into()));
    }
    for (c, d) in cert.chains.iter().zip(&again) {
        let same = c.q == d.q
            && c.r == d.r
            && c.lower_k == d.lower_k
            && close(c.ln_lower, d.ln_lower)
            && c.window == d.window
            && match (c.ln_upper, d.ln_upper) {
                (None, None) => true,
                (Some(a), Some(b)) => close(a, b),
                _ => false,
            }
            && close(c.distance_max, d.distance_max);
        if !same {
            return Ok(fail(v, format!("chain at r = {}: recorded values do not reproduce", c.r)));
        }
        if !(c.ln_lower >= c.ln_lower_bound - SLACK * c.ln_lower_bound.abs().max(1.0)) {
            return Ok(fail(v, format!("lower chain at r = {}: {} < {}", c.r, c.ln_lower.exp(), c.r - 1)));
        }
        if c.ln_upper.is_some_and(|u| !le(u, c.ln_upper_bound)) {
            return Ok(fail(v, format!("upper chain at r = {}: p_(r+1) above 1/(r+1)", c.r)));
        }
        if !le(c.distance_max, c.distance_bound) {
            return Ok(fail(v, format!("upper chain at r = {}: d_Y {} above {}", c.r, c.distance_max, c.distance_bound)));
        }
    }
    Ok(v.note(format!(
        "{} blocks, spacing {:?}, {} chains replayed",
        cert.blocks.len(),
        cert.spacing,
        cert.chains.len()
    )))
}

/// [`check_construction`] together with synchronized unboundedness and the near-zero
/// condition of `x_beta`, evaluated by the detectors.
pub fn verify_certificate(cert: &SynthesisCertificate) -> Result<HorizonVerdict, SynthesisError> {
    let construction = check_construction(cert)?;
    let config = &cert.config;
    let model = config.model.build(config.horizon)?;
    let traces = model.traces(&cert.x_beta)?;
    let sync = sync_unboundedness(&traces, SubsequenceMode::Common, &config.settings)?;
    let near = near_zero_type1(&traces, &config.m_weight, false, &config.settings.schedule, &config.settings)?;
    Ok(construction.and(sync).and(near))
}

/// Sample of the manifold `W`: `q x_beta` for each scalar and `x_0 + delta x_beta` for each
/// `(pool index, delta)`.
pub fn manifold_sample(
    cert: &SynthesisCertificate,
    scalars: &[f64],
    perturbations: &[(usize, f64)],
) -> Result<Vec<TruncatedVector>, SynthesisError> {
    let model = cert.config.model.build(cert.config.horizon)?;
    let xb = sparse_of(&cert.x_beta);
    let mut out = Vec::with_capacity(scalars.len() + perturbations.len());
    for &q in scalars {
        out.push(model.materialize(&scale_sparse(&xb, q))?);
    }
    for &(i, delta) in perturbations {
        if i >= model.pool_len() {
            return Err(SynthesisError::InvalidConfig(format!("pool index {i} out of range")));
        }
        let x0 = model.pool_member(i);
        out.push(model.materialize(&combine(&[(1.0, &x0), (delta, &xb)]))?);
    }
    Ok(out)
}
