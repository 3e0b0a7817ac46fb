//! Orbit models the synthesis pipeline runs on: monomial sequence families and
//! translation semigroups sampled on a uniform time grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::detectors::{DetectorError, OrbitSource, PairTrace};
use crate::operators::continuous::ContinuousFamilySpec;
use crate::operators::discrete::{ln_norm, FamilyEvaluator, FamilySpec};
use crate::operators::functions::ScalarFunction;
use crate::operators::weights::saturating_exp;
use crate::space::{NormExponent, SpaceSpec, TruncatedVector, WeightedGrid, DEFAULT_METRIC_TERMS};

/// Finitely supported vector as `(index, value)` pairs, indices from 1, sorted.
pub type Sparse = Vec<(usize, f64)>;

pub(crate) fn sparse_of(x: &TruncatedVector) -> Sparse {
    x.nonzeros()
}

pub(crate) fn scale_sparse(x: &[(usize, f64)], c: f64) -> Sparse {
    x.iter().map(|&(i, v)| (i, v * c)).collect()
}

/// `sum_i c_i x_i`, merged by index.
pub(crate) fn combine(terms: &[(f64, &Sparse)]) -> Sparse {
    let mut out: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for (c, x) in terms {
        for &(i, v) in x.iter() {
            *out.entry(i).or_insert(0.0) += c * v;
        }
    }
    out.into_iter().filter(|e| e.1 != 0.0).collect()
}

fn log_abs(x: &[(usize, f64)]) -> Vec<(usize, f64)> {
    x.iter().filter(|e| e.1 != 0.0).map(|&(i, v)| (i, v.abs().ln())).collect()
}

/// Candidate vectors of the dense subspace `X_0` for sequence models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pool", rename_all = "snake_case")]
pub enum PoolSpec {
    /// `e_1, ..., e_count`.
    Basis { count: usize },
    Explicit { vectors: Vec<Sparse> },
}

impl PoolSpec {
    fn len(&self) -> usize {
        match self {
            PoolSpec::Basis { count } => *count,
            PoolSpec::Explicit { vectors } => vectors.len(),
        }
    }

    fn member(&self, i: usize) -> Sparse {
        match self {
            PoolSpec::Basis { .. } => vec![(i + 1, 1.0)],
            PoolSpec::Explicit { vectors } => vectors[i].clone(),
        }
    }

    fn max_index(&self) -> usize {
        match self {
            PoolSpec::Basis { count } => *count,
            PoolSpec::Explicit { vectors } => vectors.iter().flat_map(|v| v.iter().map(|e| e.0)).max().unwrap_or(0),
        }
    }
}

/// Cubic B-spline bumps of one width, centred every `stride` cells from `width / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpPool {
    pub width: f64,
    pub stride: usize,
    pub count: usize,
}

/// Serializable description of a model; rebuilt by certificate verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Sequence { families: Vec<FamilySpec>, space: SpaceSpec, pool: PoolSpec },
    /// Families act on cell values of a shared weighted grid; `horizon` counts time steps
    /// of one cell width.
    Translation { families: Vec<ContinuousFamilySpec>, pool: BumpPool },
}

impl ModelSpec {
    pub fn build(&self, horizon: usize) -> Result<Box<dyn SynthesisModel>, SynthesisError> {
        Ok(match self {
            ModelSpec::Sequence { families, space, pool } => {
                Box::new(SequenceModel::new(families.clone(), space.clone(), pool.clone(), horizon)?)
            }
            ModelSpec::Translation { families, pool } => {
                Box::new(TranslationModel::new(families.clone(), pool.clone(), horizon)?)
            }
        })
    }
}

/// Orbit evaluation in log space over `k = 1..=horizon`, plus the candidate pool.
pub trait SynthesisModel: OrbitSource {
    fn pool_len(&self) -> usize;
    fn pool_member(&self, i: usize) -> Sparse;
    /// `ln ||x||` in the domain space.
    fn ln_norm(&self, x: &[(usize, f64)]) -> f64;
    /// `ln ||T_{j,k} x||` in the target space; `-inf` for a zero image.
    fn ln_orbit(&self, j: usize, x: &[(usize, f64)], k: usize) -> Result<f64, SynthesisError>;
    /// `ln ||T_{j,k}||`, when it is available in closed form.
    fn ln_operator_norm(&self, j: usize, k: usize) -> Option<f64>;
    /// A cheap lower bound for `ln ||T_{j,k}||`; the exact value by default.
    fn ln_operator_norm_floor(&self, j: usize, k: usize) -> Option<f64> {
        self.ln_operator_norm(j, k)
    }
    /// Time value of step `k` (`k` itself for sequences).
    fn time(&self, k: usize) -> f64;
    fn materialize(&self, x: &[(usize, f64)]) -> Result<TruncatedVector, SynthesisError>;

    /// `max_j ln ||T_{j,k} x||` for `k = 1..=horizon`.
    fn ln_max_orbit(&self, x: &[(usize, f64)]) -> Result<Vec<f64>, SynthesisError> {
        (1..=OrbitSource::horizon(self))
            .into_par_iter()
            .map(|k| {
                (0..self.families()).try_fold(f64::NEG_INFINITY, |acc, j| Ok(acc.max(self.ln_orbit(j, x, k)?)))
            })
            .collect()
    }

    /// `min_j ln ||T_{j,k} x||`.
    fn ln_min_family(&self, x: &[(usize, f64)], k: usize) -> Result<f64, SynthesisError> {
        (0..self.families()).try_fold(f64::INFINITY, |acc, j| Ok(acc.min(self.ln_orbit(j, x, k)?)))
    }
}

fn traces_of<M: SynthesisModel + ?Sized>(model: &M, x: &TruncatedVector) -> Result<Vec<PairTrace>, DetectorError> {
    let sx = sparse_of(x);
    let h = model.horizon();
    (0..model.families())
        .map(|j| {
            let norms = (1..=h)
                .map(|k| model.ln_orbit(j, &sx, k).map(saturating_exp))
                .collect::<Result<Vec<f64>, SynthesisError>>()
                .map_err(|e| DetectorError::Misaligned(e.to_string()))?;
            PairTrace::from_norms(j + 1, (1..=h).collect(), norms, 1, DEFAULT_METRIC_TERMS)
        })
        .collect()
}

/// Monomial families on a normed sequence space. Damped families take their vectors in
/// pivot coordinates `u = C^{-1} x`, so the domain norm is `||u||`.
pub struct SequenceModel {
    evaluators: Vec<FamilyEvaluator>,
    norm: NormExponent,
    space_id: String,
    pool: PoolSpec,
    horizon: usize,
    capacity: usize,
}

impl SequenceModel {
    pub fn new(families: Vec<FamilySpec>, space: SpaceSpec, pool: PoolSpec, horizon: usize) -> Result<Self, SynthesisError> {
        if families.is_empty() {
            return Err(SynthesisError::InvalidConfig("no families".into()));
        }
        if horizon == 0 || pool.len() == 0 {
            return Err(SynthesisError::InvalidConfig("horizon and pool must be nonempty".into()));
        }
        let norm = space
            .sequence_norm()
            .ok_or_else(|| SynthesisError::InvalidConfig(format!("space {} has no sequence norm", space.id)))?;
        // backward powers also need room: their operator norm is read off the truncation
        let reach = families
            .iter()
            .map(|f| match f {
                FamilySpec::Power { base } | FamilySpec::DampedPowers { base, .. } => base.shift().unsigned_abs() as usize,
                FamilySpec::Sequence { .. } => 0,
            })
            .max()
            .unwrap_or(0);
        let capacity = pool.max_index() + horizon * reach + 1;
        let evaluators = families
            .into_iter()
            .map(|f| {
                let ev = FamilyEvaluator::new(f, capacity)?;
                if ev.form().is_none() {
                    return Err(SynthesisError::NotMonomial(format!("{:?}", ev.spec())));
                }
                Ok(ev)
            })
            .collect::<Result<Vec<_>, SynthesisError>>()?;
        Ok(Self { evaluators, norm, space_id: space.id, pool, horizon, capacity })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

impl OrbitSource for SequenceModel {
    fn families(&self) -> usize {
        self.evaluators.len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn traces(&self, x: &TruncatedVector) -> Result<Vec<PairTrace>, DetectorError> {
        traces_of(self, x)
    }

    fn operator_norms(&self) -> Option<Vec<f64>> {
        (0..self.evaluators.len()).map(|j| self.ln_operator_norm(j, 1).map(f64::exp)).collect()
    }
}

impl SynthesisModel for SequenceModel {
    fn pool_len(&self) -> usize {
        self.pool.len()
    }

    fn pool_member(&self, i: usize) -> Sparse {
        self.pool.member(i)
    }

    fn ln_norm(&self, x: &[(usize, f64)]) -> f64 {
        ln_norm(self.norm, &log_abs(x))
    }

    fn ln_orbit(&self, j: usize, x: &[(usize, f64)], k: usize) -> Result<f64, SynthesisError> {
        Ok(self.evaluators[j].ln_member_norm(k, &log_abs(x), self.norm)?)
    }

    fn ln_operator_norm(&self, j: usize, k: usize) -> Option<f64> {
        let ev = &self.evaluators[j];
        match ev.spec() {
            FamilySpec::DampedPowers { .. } => Some(ev.ln_regularized_power_norm(k)? + ev.ln_damping(k)),
            _ => ev.ln_member_operator_norm(k, self.capacity),
        }
    }

    /// `max ||T^k e_i||` over a few inputs: the first, those landing on `e_1` or `e_2`,
    /// and the last one inside the tables.
    fn ln_operator_norm_floor(&self, j: usize, k: usize) -> Option<f64> {
        let ev = &self.evaluators[j];
        let (FamilySpec::Power { .. }, Some(form)) = (ev.spec(), ev.form()) else {
            return self.ln_operator_norm(j, k);
        };
        let back = (-form.shift()).max(0) as usize * k;
        let last = form.max_input(k).min(self.capacity);
        let v = [1, back + 1, back + 2, last]
            .into_iter()
            .filter(|&i| i >= 1 && i <= last)
            .filter_map(|i| form.power_coeff(k, i).map(|c| c.1))
            .fold(f64::NEG_INFINITY, f64::max);
        if v > f64::NEG_INFINITY {
            Some(v)
        } else {
            self.ln_operator_norm(j, k)
        }
    }

    fn time(&self, k: usize) -> f64 {
        k as f64
    }

    fn materialize(&self, x: &[(usize, f64)]) -> Result<TruncatedVector, SynthesisError> {
        let len = x.iter().map(|e| e.0).max().unwrap_or(1);
        let mut coeffs = vec![0.0; len];
        for &(i, v) in x {
            coeffs[i - 1] = v;
        }
        Ok(TruncatedVector::new(self.space_id.clone(), coeffs)?)
    }
}

/// Translation semigroups, possibly scalar-modulated, on cell values of one weighted grid.
/// `T(k h)` moves cell `i + k` to cell `i`, where `h` is the cell width.
pub struct TranslationModel {
    families: Vec<ContinuousFamilySpec>,
    grid: WeightedGrid,
    /// Cell measure `rho_i h` (finite exponents) or `rho_i` (sup norm).
    cell_weight: Vec<f64>,
    pool: BumpPool,
    horizon: usize,
}

impl TranslationModel {
    pub fn new(families: Vec<ContinuousFamilySpec>, pool: BumpPool, horizon: usize) -> Result<Self, SynthesisError> {
        let first = families.first().ok_or_else(|| SynthesisError::InvalidConfig("no families".into()))?;
        let grid = first
            .grid()
            .ok_or_else(|| SynthesisError::InvalidConfig("translation families required".into()))?;
        if families.iter().any(|f| f.grid().as_ref() != Some(&grid)) {
            return Err(SynthesisError::InvalidConfig("families must share one weighted grid".into()));
        }
        if horizon == 0 || pool.count == 0 || pool.stride == 0 || !(pool.width > 0.0) {
            return Err(SynthesisError::InvalidConfig("horizon, pool size, stride and width must be positive".into()));
        }
        let weight_ok = grid.weight.iter().all(|w| *w > 0.0 && w.is_finite());
        if !weight_ok {
            return Err(SynthesisError::InvalidConfig("weight must be positive and finite on the grid".into()));
        }
        let h = grid.step;
        let cell_weight = grid
            .weight
            .iter()
            .map(|&w| match grid.norm {
                NormExponent::Sup => w,
                NormExponent::Finite(_) => w * h,
            })
            .collect();
        let model = Self { families, grid, cell_weight, pool, horizon };
        let last = model.pool_member(model.pool.count - 1);
        if last.last().is_some_and(|e| e.0 > model.cells()) {
            return Err(SynthesisError::InvalidConfig("pool bumps extend beyond the grid".into()));
        }
        Ok(model)
    }

    pub fn step(&self) -> f64 {
        self.grid.step
    }

    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    pub fn grid(&self) -> &WeightedGrid {
        &self.grid
    }

    pub fn bump_center(&self, i: usize) -> f64 {
        self.pool.width / 2.0 + (i * self.pool.stride) as f64 * self.grid.step
    }

    fn shifted_norm(&self, x: &[(usize, f64)], k: usize) -> f64 {
        self.grid.norm.weighted_norm(
            x.iter()
                .filter(|e| e.0 > k && e.0 - k <= self.cells())
                .map(|&(i, v)| (v, self.cell_weight[i - k - 1])),
        )
    }

    fn exponent_factor(&self) -> f64 {
        match self.grid.norm {
            NormExponent::Sup => 1.0,
            NormExponent::Finite(p) => 1.0 / p,
        }
    }
}

impl OrbitSource for TranslationModel {
    fn families(&self) -> usize {
        self.families.len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn traces(&self, x: &TruncatedVector) -> Result<Vec<PairTrace>, DetectorError> {
        traces_of(self, x)
    }
}

impl SynthesisModel for TranslationModel {
    fn pool_len(&self) -> usize {
        self.pool.count
    }

    fn pool_member(&self, i: usize) -> Sparse {
        let bump = ScalarFunction::cubic_bump(self.bump_center(i), self.pool.width);
        let h = self.grid.step;
        let lo = ((self.bump_center(i) - self.pool.width / 2.0) / h).floor().max(0.0) as usize;
        let hi = ((self.bump_center(i) + self.pool.width / 2.0) / h).ceil() as usize;
        (lo..=hi)
            .map(|c| (c + 1, bump.value((c as f64 + 0.5) * h)))
            .filter(|e| e.1 != 0.0)
            .collect()
    }

    fn ln_norm(&self, x: &[(usize, f64)]) -> f64 {
        self.shifted_norm(x, 0).ln()
    }

    fn ln_orbit(&self, j: usize, x: &[(usize, f64)], k: usize) -> Result<f64, SynthesisError> {
        let t = k as f64 * self.grid.step;
        Ok(self.families[j].modulus(t).ln() + self.shifted_norm(x, k).ln())
    }

    /// `sup_i (rho_i / rho_{i+k})^(1/p)` over cells of the grid.
    fn ln_operator_norm(&self, j: usize, k: usize) -> Option<f64> {
        let w = &self.grid.weight;
        if k >= w.len() {
            return None;
        }
        let ratio = (0..w.len() - k).map(|i| w[i].ln() - w[i + k].ln()).fold(f64::NEG_INFINITY, f64::max);
        let t = k as f64 * self.grid.step;
        Some(self.families[j].modulus(t).ln() + self.exponent_factor() * ratio)
    }

    fn time(&self, k: usize) -> f64 {
        k as f64 * self.grid.step
    }

    fn materialize(&self, x: &[(usize, f64)]) -> Result<TruncatedVector, SynthesisError> {
        let mut coeffs = vec![0.0; self.cells()];
        for &(i, v) in x {
            if i > self.cells() {
                return Err(SynthesisError::InvalidConfig(format!("cell {i} beyond the grid")));
            }
            coeffs[i - 1] = v;
        }
        Ok(TruncatedVector::new("grid", coeffs)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::continuous::{translation_orbit_norm, GridSource};
    use crate::operators::discrete::OperatorSpec;
    use crate::operators::weights::WeightRule;

    #[test]
    fn sequence_model_log_norms() {
        let fams = vec![
            FamilySpec::power(OperatorSpec::scaled_backward(2.0)),
            FamilySpec::power(OperatorSpec::scaled_backward(3.0)),
        ];
        let m = SequenceModel::new(fams, SpaceSpec::l1(), PoolSpec::Basis { count: 50 }, 40).unwrap();
        let e5 = m.pool_member(4);
        assert_eq!(e5, vec![(5, 1.0)]);
        assert!((m.ln_orbit(1, &e5, 4).unwrap() - 4.0 * 3f64.ln()).abs() < 1e-12);
        assert_eq!(m.ln_orbit(0, &e5, 5).unwrap(), f64::NEG_INFINITY);
        assert!((m.ln_operator_norm(0, 7).unwrap() - 7.0 * 2f64.ln()).abs() < 1e-12);
        let fwd = vec![FamilySpec::power(OperatorSpec::forward(WeightRule::constant(1.0)).scaled(2.0))];
        assert!(SequenceModel::new(fwd, SpaceSpec::l1(), PoolSpec::Basis { count: 3 }, 5).is_ok());
        let seq = vec![FamilySpec::Sequence { members: vec![OperatorSpec::identity()] }];
        assert!(matches!(
            SequenceModel::new(seq, SpaceSpec::l1(), PoolSpec::Basis { count: 3 }, 5),
            Err(SynthesisError::NotMonomial(_))
        ));
    }

    #[test]
    fn translation_cells_match_sampled_route() {
        let rho = ScalarFunction::ExpSine;
        let fam = ContinuousFamilySpec::translation(rho, NormExponent::Finite(1.0), 0.05, 20.0);
        let pool = BumpPool { width: 4.0, stride: 10, count: 20 };
        let model = TranslationModel::new(vec![fam.clone()], pool, 200).unwrap();
        let x = model.pool_member(7);
        let x_dense = model.materialize(&x).unwrap();
        let sampled = GridSource::Sampled { origin: 0.0, step: 0.05, values: x_dense.coeffs().to_vec() };
        let mut padded = x_dense.coeffs().to_vec();
        padded.resize(800, 0.0);
        let sampled_long = GridSource::Sampled { origin: 0.0, step: 0.05, values: padded };
        let grid = fam.grid().unwrap();
        for k in [0usize, 1, 37, 120, 199] {
            let fast = model.ln_orbit(0, &x, k).unwrap().exp();
            let src = if k == 0 { &sampled } else { &sampled_long };
            let slow = translation_orbit_norm(&grid, src, k as f64 * 0.05).unwrap();
            assert!((fast - slow).abs() <= 1e-12 * slow.max(1e-300), "k = {k}: {fast} vs {slow}");
        }
        let analytic = GridSource::Analytic { f: ScalarFunction::cubic_bump(model.bump_center(7), 4.0) };
        let slow = translation_orbit_norm(&grid, &analytic, 1.0).unwrap();
        assert!((model.ln_orbit(0, &x, 20).unwrap().exp() - slow).abs() < 1e-12);
    }
}
