//! Sampled continuous-time synthesis for translation semigroups.

use serde::{Deserialize, Serialize};

use super::model::{scale_sparse, sparse_of, BumpPool, ModelSpec, SynthesisModel, TranslationModel};
use super::pipeline::run_pipeline;
use super::{ContinuousReport, FDensityReport, SynthesisCertificate, SynthesisConfig, SynthesisError};
use crate::densities::{lower_f_density, IntervalUnion, WeightSpec};
use crate::detectors::{renormed_distance, DetectorSettings, HorizonVerdict, OrbitSource};
use crate::operators::continuous::{ContinuousFamilySpec, Modulation};
use crate::operators::discrete::SetRule;
use crate::operators::functions::ScalarFunction;
use crate::operators::weights::saturating_exp;
use crate::space::{WeightedGrid, DEFAULT_METRIC_TERMS};

/// Largest relative move of a pool orbit between adjacent grid times.
const MAX_VARIATION: f64 = 0.05;
/// Tail sup of the weight over head sup beyond which it counts as unbounded.
const BOUNDED_RATIO: f64 = 1.5;
/// Pool orbits sampled by the continuity proxy.
const CONTINUITY_SAMPLES: usize = 32;

fn default_r1() -> usize {
    2
}
fn default_depth() -> usize {
    12
}
fn default_max_blocks() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousConfig {
    /// Translation families sharing one grid; the cell width is the time step.
    pub families: Vec<ContinuousFamilySpec>,
    /// Class F function of the lower `f`-density.
    pub f: ScalarFunction,
    pub t_max: f64,
    pub pool: BumpPool,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_max_blocks")]
    pub max_blocks: usize,
    #[serde(default = "default_r1")]
    pub r1: usize,
    #[serde(default)]
    pub settings: DetectorSettings,
}

/// Sampled tests behind the translation-semigroup criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WuDiagnostics {
    /// Minimum of the weight over the second half of the grid.
    pub sampled_liminf: f64,
    pub head_sup: f64,
    pub tail_sup: f64,
    pub bounded_above: bool,
}

/// Quarters of the grid compared for boundedness; the liminf is sampled on the last half.
pub fn wu_diagnostics(grid: &WeightedGrid) -> WuDiagnostics {
    let w = &grid.weight;
    let q = (w.len() / 4).max(1);
    let head_sup = w[..q].iter().copied().fold(0.0, f64::max);
    let tail_sup = w[w.len() - q..].iter().copied().fold(0.0, f64::max);
    let sampled_liminf = w[w.len() / 2..].iter().copied().fold(f64::INFINITY, f64::min);
    WuDiagnostics { sampled_liminf, head_sup, tail_sup, bounded_above: tail_sup <= BOUNDED_RATIO * head_sup }
}

/// `|N_{k+1} - N_k| <= 5%` of the running maximum of `N` along sampled pool orbits.
fn continuity_proxy(model: &TranslationModel) -> Result<f64, SynthesisError> {
    let stride = (model.pool_len() / CONTINUITY_SAMPLES).max(1);
    let mut worst: f64 = 0.0;
    for i in (0..model.pool_len()).step_by(stride) {
        let x = model.pool_member(i);
        for j in 0..model.families() {
            let mut prev = saturating_exp(model.ln_orbit(j, &x, 0)?);
            let mut run_max = prev;
            for k in 1..=model.horizon() {
                let cur = saturating_exp(model.ln_orbit(j, &x, k)?);
                run_max = run_max.max(cur);
                if run_max > 0.0 {
                    let v = (cur - prev).abs() / run_max;
                    if v > MAX_VARIATION {
                        return Err(SynthesisError::GridTooCoarse { member: i, k, variation: v });
                    }
                    worst = worst.max(v);
                }
                prev = cur;
            }
        }
    }
    Ok(worst)
}

/// `m_n = ceil(f(n h) / h)`: the index counterpart of `[0, f(t)]` on a grid of width `h`.
fn index_weights(f: &ScalarFunction, step: f64, horizon: usize) -> WeightSpec {
    // a grid-aligned f(n h) / h is an integer up to rounding; do not let the noise add a step
    let ceil = |v: f64| (v - 1e-9 * v.abs().max(1.0)).ceil();
    WeightSpec::Explicit { values: (1..=horizon).map(|n| ceil(f.value(n as f64 * step) / step)).collect() }
}

/// Samples the semigroup every cell width up to `t_max` and runs the discrete pipeline
/// with `m_n = ceil(f(n h) / h)`. Refuses weights that are not bounded above, series
/// `sum 1/||T(t_k)||` that do not converge, and grids on which pool orbits jump.
pub fn continuous_synthesize(config: &ContinuousConfig) -> Result<SynthesisCertificate, SynthesisError> {
    let grid = config
        .families
        .first()
        .and_then(|f| f.grid())
        .ok_or_else(|| SynthesisError::InvalidConfig("translation families required".into()))?;
    let diag = wu_diagnostics(&grid);
    if !diag.bounded_above {
        return Err(SynthesisError::NotBoundedAbove { ratio: diag.tail_sup / diag.head_sup });
    }
    let step = grid.step;
    let horizon = (config.t_max / step).round() as usize;
    let model = TranslationModel::new(config.families.clone(), config.pool.clone(), horizon)?;
    let m_weight = index_weights(&config.f, step, horizon);
    let synth = SynthesisConfig {
        model: ModelSpec::Translation { families: config.families.clone(), pool: config.pool.clone() },
        horizon,
        n_k: SetRule::All,
        m_weight,
        m: 1,
        depth: config.depth,
        max_blocks: config.max_blocks,
        r1: config.r1,
        beta: None,
        settings: config.settings.clone(),
    };
    // summability first: its diagnostic explains isometric and slowly decaying weights
    if let Some(tail) = super::summability_tail(&model, &SetRule::All.enumerate(horizon), super::Summability::Norm) {
        if !(tail < super::blowup::SUMMABLE_TAIL) {
            return Err(SynthesisError::Divergent { tail });
        }
    }
    let max_variation = continuity_proxy(&model)?;
    let mut cert = run_pipeline(&synth, &model)?;

    let xs = sparse_of(&cert.x_beta);
    let mut far_by_eps = vec![Vec::new(); config.settings.epsilons.len()];
    for k in 1..=horizon {
        let mut top = f64::NEG_INFINITY;
        for j in 0..model.families() {
            top = top.max(model.ln_orbit(j, &xs, k)?);
        }
        let d = renormed_distance(saturating_exp(top), DEFAULT_METRIC_TERMS);
        for (e, eps) in config.settings.epsilons.iter().enumerate() {
            if d >= *eps {
                far_by_eps[e].push((k as f64 * step, (k + 1) as f64 * step));
            }
        }
    }
    let truncation = (horizon + 1) as f64 * step;
    let samples: Vec<f64> = (horizon / 2..=horizon)
        .map(|k| k as f64 * step)
        .filter(|&t| t > 0.0 && config.f.value(t) <= truncation)
        .collect();
    let mut f_density = Vec::new();
    for (eps, intervals) in config.settings.epsilons.iter().zip(far_by_eps) {
        let union = IntervalUnion::new(intervals, truncation)?;
        f_density.push(FDensityReport { eps: *eps, estimate: lower_f_density(&union, |t| config.f.value(t), &samples)? });
    }
    cert.continuous = Some(ContinuousReport {
        step,
        f: config.f.clone(),
        max_variation,
        f_density,
        block_times: cert.blocks.iter().map(|b| b.n_k as f64 * step).collect(),
    });
    Ok(cert)
}

/// Replays a single-family translation certificate for `T_j(t) = f_j(t) T_1(t)`: every
/// recorded blow-up and chain value of `T_1` must carry over to each `T_j` scaled by at
/// least `c`, which holds when `|f_j| >= c` on the grid.
pub fn inherit_modulated(cert: &SynthesisCertificate, modulations: &[Modulation], c: f64) -> Result<HorizonVerdict, SynthesisError> {
    let ModelSpec::Translation { families, pool } = &cert.config.model else {
        return Err(SynthesisError::InvalidConfig("translation certificate required".into()));
    };
    if families.len() != 1 || !(c > 0.0) || modulations.is_empty() {
        return Err(SynthesisError::InvalidConfig("one base family, c > 0 and some modulations required".into()));
    }
    let h = cert.config.horizon;
    let base = TranslationModel::new(families.clone(), pool.clone(), h)?;
    let modulated: Vec<ContinuousFamilySpec> = modulations
        .iter()
        .map(|m| ContinuousFamilySpec::ScalarModulated { modulation: m.clone(), inner: Box::new(families[0].clone()) })
        .collect();
    let model = TranslationModel::new(modulated, pool.clone(), h)?;
    let mut verdict = HorizonVerdict::new(format!("inherited certificate scaled by {c}"), true, h as f64);
    let step = base.step();
    for (j, m) in modulations.iter().enumerate() {
        if let Some(k) = (0..=h).find(|&k| m.modulus(k as f64 * step) < c) {
            verdict.holds_at_horizon = false;
            verdict.notes.push(format!("|f_{}| < {c} at t = {}", j + 1, k as f64 * step));
            return Ok(verdict);
        }
    }
    let ln_c = c.ln();
    let xs = sparse_of(&cert.x_beta);
    let mut checks: Vec<(usize, Vec<(usize, f64)>)> = cert.chains.iter().map(|ch| (ch.lower_k, xs.clone())).collect();
    for b in &cert.blocks {
        checks.push((b.n_k, scale_sparse(&base.pool_member(b.pool_index), b.ln_scale.exp())));
    }
    for (k, x) in &checks {
        let reference = base.ln_orbit(0, x, *k)?;
        for j in 0..model.families() {
            let v = model.ln_orbit(j, x, *k)?;
            if !(v >= ln_c + reference - 1e-12 * reference.abs().max(1.0)) {
                verdict.holds_at_horizon = false;
                verdict.notes.push(format!("family {} at k = {k}: {} < c * {}", j + 1, v.exp(), reference.exp()));
                return Ok(verdict);
            }
        }
    }
    for ch in &cert.chains {
        let min_v = model.ln_min_family(&xs, ch.lower_k)?;
        verdict.notes.push(format!(
            "r = {}: min_j ||T_j(t) x_beta|| = {:.6e} at t = {} (T_1 value {:.6e})",
            ch.r,
            min_v.exp(),
            ch.lower_k as f64 * step,
            ch.ln_lower.exp()
        ));
    }
    Ok(verdict)
}
