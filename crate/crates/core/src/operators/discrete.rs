//! Shift, diagonal and composition operators on sequence spaces and their
//! discrete families `k -> T_k`.

use serde::{Deserialize, Serialize};

use super::weights::{saturating_exp, WeightRule};
use super::OperatorError;
use crate::space::{NormExponent, TruncatedVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// `(Tx)_n = w_n x_{n+1}`.
    BackwardShift { weights: WeightRule },
    /// `(Fx)_1 = 0`, `(Fx)_{n+1} = w_n x_n`.
    ForwardShift { weights: WeightRule },
    Diagonal { entries: WeightRule },
    Scalar { c: f64, inner: Box<OperatorSpec> },
    /// `factors[0] ∘ factors[1] ∘ ...`; the last factor acts first.
    Composition { factors: Vec<OperatorSpec> },
}

impl OperatorSpec {
    pub fn backward(weights: WeightRule) -> Self {
        OperatorSpec::BackwardShift { weights }
    }

    pub fn forward(weights: WeightRule) -> Self {
        OperatorSpec::ForwardShift { weights }
    }

    pub fn diagonal(entries: WeightRule) -> Self {
        OperatorSpec::Diagonal { entries }
    }

    pub fn identity() -> Self {
        OperatorSpec::diagonal(WeightRule::constant(1.0))
    }

    pub fn scaled(self, c: f64) -> Self {
        OperatorSpec::Scalar { c, inner: Box::new(self) }
    }

    /// `c` times the unweighted backward shift.
    pub fn scaled_backward(c: f64) -> Self {
        OperatorSpec::backward(WeightRule::constant(1.0)).scaled(c)
    }

    pub fn validate(&self) -> Result<(), OperatorError> {
        match self {
            OperatorSpec::BackwardShift { weights }
            | OperatorSpec::ForwardShift { weights }
            | OperatorSpec::Diagonal { entries: weights } => {
                weights.validate().map_err(OperatorError::InvalidSpec)
            }
            OperatorSpec::Scalar { c, inner } => {
                if !c.is_finite() {
                    return Err(OperatorError::InvalidSpec("scalar must be finite".into()));
                }
                inner.validate()
            }
            OperatorSpec::Composition { factors } => {
                if factors.is_empty() {
                    return Err(OperatorError::InvalidSpec("empty composition".into()));
                }
                factors.iter().try_for_each(|f| f.validate())
            }
        }
    }

    /// Scalar factor and elementary factors in application order.
    fn flatten(&self) -> (f64, Vec<Elementary<'_>>) {
        match self {
            OperatorSpec::BackwardShift { weights } => (1.0, vec![Elementary::Backward(weights)]),
            OperatorSpec::ForwardShift { weights } => (1.0, vec![Elementary::Forward(weights)]),
            OperatorSpec::Diagonal { entries } => (1.0, vec![Elementary::Diagonal(entries)]),
            OperatorSpec::Scalar { c, inner } => {
                let (s, e) = inner.flatten();
                (c * s, e)
            }
            OperatorSpec::Composition { factors } => {
                let mut scale = 1.0;
                let mut out = Vec::new();
                for f in factors.iter().rev() {
                    let (s, e) = f.flatten();
                    scale *= s;
                    out.extend(e);
                }
                (scale, out)
            }
        }
    }

    /// Net index shift `e_i -> e_{i+shift}`.
    pub fn shift(&self) -> i64 {
        self.flatten()
            .1
            .iter()
            .map(|e| match e {
                Elementary::Backward(_) => -1,
                Elementary::Forward(_) => 1,
                Elementary::Diagonal(_) => 0,
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
enum Elementary<'a> {
    Backward(&'a WeightRule),
    Forward(&'a WeightRule),
    Diagonal(&'a WeightRule),
}

fn check_finite(coeffs: &[f64]) -> Result<(), OperatorError> {
    match coeffs.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(OperatorError::NonFinite { index: i + 1 }),
        None => Ok(()),
    }
}

/// Exact coordinatewise image `Tx`.
pub fn apply(spec: &OperatorSpec, x: &TruncatedVector) -> Result<TruncatedVector, OperatorError> {
    let (scale, elems) = spec.flatten();
    let mut coeffs = x.coeffs().to_vec();
    for e in elems {
        coeffs = match e {
            Elementary::Backward(w) => {
                if coeffs.is_empty() {
                    return Err(OperatorError::DomainExhausted { needed: 1, available: 0 });
                }
                (1..coeffs.len()).map(|n| w.value(n) * coeffs[n]).collect()
            }
            Elementary::Forward(w) => {
                let mut out = Vec::with_capacity(coeffs.len() + 1);
                out.push(0.0);
                out.extend(coeffs.iter().enumerate().map(|(i, v)| w.value(i + 1) * v));
                out
            }
            Elementary::Diagonal(d) => coeffs
                .iter()
                .enumerate()
                .map(|(i, v)| if *v == 0.0 { 0.0 } else { d.value(i + 1) * v })
                .collect(),
        };
        check_finite(&coeffs)?;
    }
    if scale != 1.0 {
        coeffs.iter_mut().for_each(|v| *v *= scale);
        check_finite(&coeffs)?;
    }
    Ok(x.with_coeffs(coeffs)?)
}

/// Monomial normal form `T e_i = u_i e_{i+shift}` of an operator whose elementary
/// factors all move indices in one direction, with log-multipliers tabulated up to a
/// capacity.
#[derive(Debug, Clone)]
pub struct ShiftForm {
    shift: i64,
    ln_scale: f64,
    /// `ln |u_i|` at index `i - 1`; `-inf` where `e_i` is annihilated.
    ln_u: Vec<f64>,
    /// Running sums of `ln |u|` along steps of `|shift|`, at index `i` (entry 0 is zero).
    cum: Vec<f64>,
}

impl ShiftForm {
    pub fn new(spec: &OperatorSpec, capacity: usize) -> Option<Self> {
        let (scale, elems) = spec.flatten();
        if scale == 0.0 {
            return None;
        }
        let dirs: Vec<i64> = elems
            .iter()
            .map(|e| match e {
                Elementary::Backward(_) => -1,
                Elementary::Forward(_) => 1,
                Elementary::Diagonal(_) => 0,
            })
            .collect();
        if dirs.contains(&-1) && dirs.contains(&1) {
            return None;
        }
        let shift: i64 = dirs.iter().sum();
        let mut ln_u = Vec::with_capacity(capacity);
        for i in 1..=capacity {
            if (i as i64) + shift < 1 {
                ln_u.push(f64::NEG_INFINITY);
                continue;
            }
            let mut c = i;
            let mut acc = 0.0;
            for e in &elems {
                match e {
                    Elementary::Backward(w) => {
                        c -= 1;
                        acc += w.ln_abs(c);
                    }
                    Elementary::Forward(w) => {
                        acc += w.ln_abs(c);
                        c += 1;
                    }
                    Elementary::Diagonal(d) => acc += d.ln_abs(c),
                }
            }
            if acc == f64::NEG_INFINITY || acc.is_nan() {
                // zero weights break the log form; callers fall back to direct iteration
                return None;
            }
            ln_u.push(acc);
        }
        let step = shift.unsigned_abs() as usize;
        let mut cum = vec![0.0; capacity + 1];
        if step > 0 {
            for i in 1..=capacity {
                let v = ln_u[i - 1];
                let prev = if i > step { cum[i - step] } else { 0.0 };
                cum[i] = if v.is_finite() { prev + v } else { prev };
            }
        }
        Some(Self { shift, ln_scale: scale.abs().ln(), ln_u, cum })
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn capacity(&self) -> usize {
        self.ln_u.len()
    }

    /// Largest input index whose `k`-th power image stays inside the tables.
    pub fn max_input(&self, k: usize) -> usize {
        if self.shift > 0 && k > 0 {
            self.capacity().saturating_sub((k - 1) * self.shift as usize)
        } else {
            self.capacity()
        }
    }

    /// `T^k e_i = exp(ln) e_target`, or `None` when `e_i` is annihilated.
    pub fn power_coeff(&self, k: usize, i: usize) -> Option<(usize, f64)> {
        let s = self.shift;
        let target = i as i64 + k as i64 * s;
        if target < 1 {
            return None;
        }
        assert!(i <= self.max_input(k), "index {i} beyond tabulated capacity {}", self.capacity());
        let ln = if k == 0 {
            0.0
        } else if s == 0 {
            k as f64 * self.ln_u[i - 1]
        } else if s < 0 {
            let step = (-s) as usize;
            self.cum[i] - self.cum[i - k * step]
        } else {
            let step = s as usize;
            let hi = i + (k - 1) * step;
            let lo = if i > step { self.cum[i - step] } else { 0.0 };
            self.cum[hi] - lo
        };
        Some((target as usize, ln + k as f64 * self.ln_scale))
    }

    /// Log-abs coefficients of `T^k x` from log-abs entries `(i, ln|x_i|)` of `x`.
    pub fn power_image(&self, k: usize, entries: &[(usize, f64)]) -> Vec<(usize, f64)> {
        entries
            .iter()
            .filter_map(|&(i, lx)| self.power_coeff(k, i).map(|(t, l)| (t, l + lx)))
            .collect()
    }

    /// `sup_i |T^k e_i|` over inputs up to `trunc`.
    pub fn ln_power_norm(&self, k: usize, trunc: usize) -> f64 {
        (1..=trunc.min(self.max_input(k)))
            .filter_map(|i| self.power_coeff(k, i).map(|(_, l)| l))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `ln ||v||` from log-abs coordinates (distinct targets).
pub fn ln_norm(norm: NormExponent, entries: &[(usize, f64)]) -> f64 {
    ln_norm_values(norm, entries.iter().map(|e| e.1))
}

pub fn ln_norm_values(norm: NormExponent, values: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = values.clone().fold(f64::NEG_INFINITY, f64::max);
    match norm {
        NormExponent::Sup => top,
        NormExponent::Finite(p) => {
            if top == f64::NEG_INFINITY {
                return top;
            }
            let s: f64 = values.map(|v| (p * (v - top)).exp()).sum();
            top + s.ln() / p
        }
    }
}

/// Log-abs nonzero entries of a vector.
pub fn log_entries(x: &TruncatedVector) -> Vec<(usize, f64)> {
    x.nonzeros().into_iter().map(|(i, v)| (i, v.abs().ln())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum SetRule {
    Squares,
    All,
    Explicit { elements: Vec<usize> },
}

impl SetRule {
    pub fn contains(&self, k: usize) -> bool {
        match self {
            SetRule::Squares => {
                let r = (k as f64).sqrt().round() as usize;
                r * r == k
            }
            SetRule::All => true,
            SetRule::Explicit { elements } => elements.contains(&k),
        }
    }

    /// Elements `n_1 < n_2 < ...` up to `limit`.
    pub fn enumerate(&self, limit: usize) -> Vec<usize> {
        (1..=limit).filter(|&k| self.contains(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `T_k = base^k`.
    Power { base: OperatorSpec },
    /// `T_k = members[k-1]`.
    Sequence { members: Vec<OperatorSpec> },
    /// `T_k = base^k` for `k` in the set and `(1 + ||base^k C||)^(-exponent) base^k`
    /// otherwise, with `C = diag(regularizer)`.
    DampedPowers { base: OperatorSpec, regularizer: WeightRule, set: SetRule, exponent: f64 },
}

impl FamilySpec {
    pub fn power(base: OperatorSpec) -> Self {
        FamilySpec::Power { base }
    }

    pub fn validate(&self) -> Result<(), OperatorError> {
        match self {
            FamilySpec::Power { base } => base.validate(),
            FamilySpec::Sequence { members } => members.iter().try_for_each(|m| m.validate()),
            FamilySpec::DampedPowers { base, regularizer, .. } => {
                regularizer.validate().map_err(OperatorError::InvalidSpec)?;
                base.validate()
            }
        }
    }
}

/// Family with precomputed monomial tables, for repeated orbit evaluation.
#[derive(Debug, Clone)]
pub struct FamilyEvaluator {
    spec: FamilySpec,
    form: Option<ShiftForm>,
    /// `ln |c_i|` of the regularizer for damped families.
    pre_ln: Option<Vec<f64>>,
    capacity: usize,
}

impl FamilyEvaluator {
    pub fn new(spec: FamilySpec, capacity: usize) -> Result<Self, OperatorError> {
        spec.validate()?;
        let (form, pre_ln) = match &spec {
            FamilySpec::Power { base } => (ShiftForm::new(base, capacity), None),
            FamilySpec::Sequence { .. } => (None, None),
            FamilySpec::DampedPowers { base, regularizer, .. } => {
                let form = ShiftForm::new(base, capacity).ok_or_else(|| {
                    OperatorError::InvalidSpec("damped powers need a monomial base".into())
                })?;
                (Some(form), Some(regularizer.log_table(capacity)))
            }
        };
        Ok(Self { spec, form, pre_ln, capacity })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn form(&self) -> Option<&ShiftForm> {
        self.form.as_ref()
    }

    /// `ln ||base^k C||` over inputs up to the capacity.
    pub fn ln_regularized_power_norm(&self, k: usize) -> Option<f64> {
        let form = self.form.as_ref()?;
        let pre = self.pre_ln.as_ref()?;
        Some(
            (1..=form.max_input(k))
                .filter_map(|i| form.power_coeff(k, i).map(|(_, l)| l + pre[i - 1]))
                .fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// `ln` of the scalar damping factor of `T_k` (zero on the undamped set).
    pub fn ln_damping(&self, k: usize) -> f64 {
        match &self.spec {
            FamilySpec::DampedPowers { set, exponent, .. } => {
                if set.contains(k) {
                    0.0
                } else {
                    let ln_norm = self.ln_regularized_power_norm(k).unwrap();
                    -exponent * ln_1p_exp(ln_norm)
                }
            }
            _ => 0.0,
        }
    }

    /// Log-abs coordinates of `T_k x`; for damped families `x` is given in pivot
    /// coordinates `u` and the image is `T_k C u`.
    pub fn member_image(&self, k: usize, entries: &[(usize, f64)]) -> Result<Vec<(usize, f64)>, OperatorError> {
        match (&self.spec, &self.form) {
            (FamilySpec::DampedPowers { .. }, Some(form)) => {
                let pre = self.pre_ln.as_ref().unwrap();
                let damp = self.ln_damping(k);
                let shifted: Vec<(usize, f64)> = entries
                    .iter()
                    .map(|&(i, l)| {
                        self.check_capacity(form, k, i)?;
                        Ok((i, l + pre[i - 1] + damp))
                    })
                    .collect::<Result<_, OperatorError>>()?;
                Ok(form.power_image(k, &shifted))
            }
            (FamilySpec::Power { .. }, Some(form)) => {
                for &(i, _) in entries {
                    self.check_capacity(form, k, i)?;
                }
                Ok(form.power_image(k, entries))
            }
            _ => {
                let len = entries.iter().map(|e| e.0).max().unwrap_or(0);
                let mut coeffs = vec![0.0; len];
                for &(i, l) in entries {
                    coeffs[i - 1] = l.exp();
                }
                let x = TruncatedVector::new("", coeffs)?;
                let image = apply_member(&self.spec, k, &x)?;
                Ok(log_entries(&image))
            }
        }
    }

    fn check_capacity(&self, form: &ShiftForm, k: usize, i: usize) -> Result<(), OperatorError> {
        if i > form.max_input(k) {
            return Err(OperatorError::CapacityExceeded { index: i, capacity: self.capacity });
        }
        Ok(())
    }

    pub fn ln_member_norm(&self, k: usize, entries: &[(usize, f64)], norm: NormExponent) -> Result<f64, OperatorError> {
        Ok(ln_norm(norm, &self.member_image(k, entries)?))
    }

    /// `ln ||T_k||` as the supremum of monomial multipliers over inputs up to `trunc`
    /// (exact for monomial families on `l^p` and `c_0`).
    pub fn ln_member_operator_norm(&self, k: usize, trunc: usize) -> Option<f64> {
        let form = self.form.as_ref()?;
        match &self.spec {
            FamilySpec::Power { .. } => Some(form.ln_power_norm(k, trunc)),
            _ => None,
        }
    }
}

/// `ln(1 + e^v)` without overflow.
pub(crate) fn ln_1p_exp(v: f64) -> f64 {
    if v > 35.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// Exact image `T_k x` by direct evaluation.
pub fn apply_member(family: &FamilySpec, k: usize, x: &TruncatedVector) -> Result<TruncatedVector, OperatorError> {
    match family {
        FamilySpec::Power { base } => {
            let mut y = x.clone();
            for _ in 0..k {
                y = apply(base, &y)?;
            }
            Ok(y)
        }
        FamilySpec::Sequence { members } => {
            let m = members
                .get(k.wrapping_sub(1))
                .ok_or(OperatorError::MemberOutOfRange { k, len: members.len() })?;
            apply(m, x)
        }
        FamilySpec::DampedPowers { base, .. } => {
            let ev = FamilyEvaluator::new(family.clone(), x.trunc_len() + 1)?;
            let damp = ev.ln_damping(k).exp();
            let mut y = x.clone();
            for _ in 0..k {
                y = apply(base, &y)?;
            }
            Ok(y.scaled(damp)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum OrbitValues {
    Vectors(Vec<TruncatedVector>),
    Seminorms(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub label: usize,
    /// `k` (discrete) or `t` (continuous) values, strictly increasing.
    pub indices: Vec<f64>,
    pub seminorm_index: usize,
    pub values: OrbitValues,
}

impl OrbitRecord {
    pub fn new(label: usize, indices: Vec<f64>, seminorm_index: usize, values: OrbitValues) -> Result<Self, OperatorError> {
        let len = match &values {
            OrbitValues::Vectors(v) => v.len(),
            OrbitValues::Seminorms(v) => v.len(),
        };
        if len != indices.len() {
            return Err(OperatorError::InvalidSpec(format!(
                "{} indices but {len} values",
                indices.len()
            )));
        }
        if indices.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(OperatorError::InvalidSpec("orbit indices must increase strictly".into()));
        }
        Ok(Self { label, indices, seminorm_index, values })
    }

    pub fn seminorms(&self) -> Option<&[f64]> {
        match &self.values {
            OrbitValues::Seminorms(v) => Some(v),
            OrbitValues::Vectors(_) => None,
        }
    }

    /// Rows `j,k_or_t,seminorm,value` (no header).
    pub fn csv_rows(&self) -> Vec<String> {
        let values: Vec<f64> = match &self.values {
            OrbitValues::Seminorms(v) => v.clone(),
            OrbitValues::Vectors(vs) => vs
                .iter()
                .map(|v| ln_norm(NormExponent::Sup, &log_entries(v)).exp())
                .collect(),
        };
        self.indices
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{},{},{},{}", self.label, k, self.seminorm_index, v))
            .collect()
    }
}

/// `x, Tx, ..., T^{k_max} x` for a power family (or `T_1 x, ..., T_{k_max} x` otherwise,
/// preceded by `x`).
pub fn orbit(family: &FamilySpec, x: &TruncatedVector, k_max: usize, label: usize) -> Result<OrbitRecord, OperatorError> {
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(x.clone());
    match family {
        FamilySpec::Power { base } => {
            let s = base.shift();
            if s < 0 {
                let needed = k_max * s.unsigned_abs() as usize + 1;
                if x.trunc_len() < needed {
                    return Err(OperatorError::DomainExhausted { needed, available: x.trunc_len() });
                }
            }
            let mut y = x.clone();
            for _ in 0..k_max {
                y = apply(base, &y)?;
                values.push(y.clone());
            }
        }
        _ => {
            for k in 1..=k_max {
                values.push(apply_member(family, k, x)?);
            }
        }
    }
    OrbitRecord::new(label, (0..=k_max).map(|k| k as f64).collect(), 0, OrbitValues::Vectors(values))
}

/// `ln ||T_k x||` for each `k` in `ks`, finitely supported semantics.
pub fn orbit_log_norms(
    family: &FamilySpec,
    x: &TruncatedVector,
    ks: &[usize],
    norm: NormExponent,
) -> Result<Vec<f64>, OperatorError> {
    let k_top = ks.iter().copied().max().unwrap_or(0);
    let shift = match family {
        FamilySpec::Power { base } | FamilySpec::DampedPowers { base, .. } => base.shift().max(0) as usize,
        FamilySpec::Sequence { .. } => 0,
    };
    let capacity = x.trunc_len() + k_top * shift + 1;
    let ev = FamilyEvaluator::new(family.clone(), capacity)?;
    let entries = log_entries(x);
    if ev.form.is_some() {
        ks.iter().map(|&k| ev.ln_member_norm(k, &entries, norm)).collect()
    } else {
        ks.iter()
            .map(|&k| {
                let y = if k == 0 { x.clone() } else { apply_member(family, k, x)? };
                Ok(ln_norm(norm, &log_entries(&y)))
            })
            .collect()
    }
}

/// `(1/n) sum_{l=1}^n ||T^l x||`.
pub fn cesaro_average(family: &FamilySpec, x: &TruncatedVector, n: usize, norm: NormExponent) -> Result<f64, OperatorError> {
    if n == 0 {
        return Err(OperatorError::InvalidSpec("Cesaro average needs n >= 1".into()));
    }
    let ks: Vec<usize> = (1..=n).collect();
    let logs = orbit_log_norms(family, x, &ks, norm)?;
    Ok(logs.iter().map(|&l| saturating_exp(l)).sum::<f64>() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// `true` when the value is the exact norm over the truncation; otherwise a lower bound.
    pub exact: bool,
}

/// Norm of `spec^k` over inputs `e_1, ..., e_trunc`.
pub fn power_norm_estimate(spec: &OperatorSpec, k: usize, trunc: usize) -> NormEstimate {
    let shift = spec.shift().max(0) as usize;
    if let Some(form) = ShiftForm::new(spec, trunc + k * shift + 1) {
        return NormEstimate { value: saturating_exp(form.ln_power_norm(k, trunc)), exact: true };
    }
    // lower bound from basis vectors
    let family = FamilySpec::power(spec.clone());
    let mut best: f64 = 0.0;
    for i in 1..=trunc {
        let mut coeffs = vec![0.0; trunc];
        coeffs[i - 1] = 1.0;
        let e = TruncatedVector::new("", coeffs).expect("finite");
        if let Ok(y) = apply_member(&family, k, &e) {
            let n = y.coeffs().iter().map(|v| v.abs()).fold(0.0, f64::max);
            best = best.max(n);
        }
    }
    NormEstimate { value: best, exact: false }
}

pub fn operator_norm_estimate(spec: &OperatorSpec, trunc: usize) -> NormEstimate {
    power_norm_estimate(spec, 1, trunc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpaceSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn b(c: f64) -> OperatorSpec {
        OperatorSpec::scaled_backward(c)
    }

    #[test]
    fn apply_examples() {
        let l1 = SpaceSpec::l1();
        let two_b = OperatorSpec::backward(WeightRule::constant(2.0));
        let y = apply(&two_b, &l1.basis(2, 2)).unwrap();
        assert_eq!(y.coeffs(), &[2.0]);
        let f = OperatorSpec::forward(WeightRule::Explicit { values: vec![5.0], tail: super::super::weights::Tail::RepeatLast });
        let y = apply(&f, &l1.basis(1, 1)).unwrap();
        assert_eq!(y.coeffs(), &[0.0, 5.0]);
        let a1 = OperatorSpec::backward(WeightRule::ExpQuadratic { base: 2.0, a: 0.0, b: 1.0, c: 1.0 });
        let y = apply(&a1, &l1.basis(2, 3)).unwrap();
        assert_eq!(y.coeffs(), &[4.0, 0.0]);
    }

    #[test]
    fn apply_domain_errors() {
        let l1 = SpaceSpec::l1();
        assert!(matches!(
            apply(&b(1.0), &l1.zero(0)),
            Err(OperatorError::DomainExhausted { .. })
        ));
        let huge = OperatorSpec::backward(WeightRule::constant(1e300)).scaled(1e300);
        assert!(matches!(
            apply(&huge, &l1.basis(2, 2)),
            Err(OperatorError::NonFinite { .. })
        ));
    }

    #[test]
    fn orbit_examples() {
        let l1 = SpaceSpec::l1();
        let id = FamilySpec::power(OperatorSpec::identity());
        let x = l1.vector(vec![0.5, 0.5]).unwrap();
        let rec = orbit(&id, &x, 5, 1).unwrap();
        match rec.values {
            OrbitValues::Vectors(vs) => assert!(vs.iter().all(|v| v == &x)),
            _ => unreachable!(),
        }
        let fam = FamilySpec::power(b(2.0));
        for k in [1usize, 5, 20] {
            let e = l1.basis(k + 1, k + 1);
            let rec = orbit(&fam, &e, k, 1).unwrap();
            let OrbitValues::Vectors(vs) = &rec.values else { unreachable!() };
            assert_eq!(vs[k].coeffs()[0], 2f64.powi(k as i32));
            let ln = orbit_log_norms(&fam, &e, &[k], NormExponent::Finite(1.0)).unwrap();
            assert_relative_eq!(ln[0].exp(), 2f64.powi(k as i32), max_relative = 1e-12);
        }
        let wallis = FamilySpec::power(OperatorSpec::backward(WeightRule::Wallis { exponent: 1.0 }));
        let ln = orbit_log_norms(&wallis, &l1.basis(3, 3), &[2], NormExponent::Finite(1.0)).unwrap();
        assert_relative_eq!(ln[0].exp(), 8.0 / 3.0, max_relative = 1e-14);
        assert!(matches!(
            orbit(&fam, &l1.basis(2, 3), 3, 1),
            Err(OperatorError::DomainExhausted { .. })
        ));
    }

    #[test]
    fn cesaro_examples() {
        let l1 = SpaceSpec::l1();
        let n1 = NormExponent::Finite(1.0);
        let id = FamilySpec::power(OperatorSpec::identity());
        assert_eq!(cesaro_average(&id, &l1.zero(4), 10, n1).unwrap(), 0.0);
        assert_relative_eq!(cesaro_average(&id, &l1.basis(3, 3), 10, n1).unwrap(), 1.0);
        let wallis = FamilySpec::power(OperatorSpec::backward(WeightRule::Wallis { exponent: 1.0 }));
        let c = cesaro_average(&wallis, &l1.basis(501, 501), 500, n1).unwrap();
        // brute-force oracle: explicit products of weights
        let mut total = 0.0;
        for l in 1..=500usize {
            let p: f64 = (501 - l..=500).map(|i| 2.0 * i as f64 / (2.0 * i as f64 - 1.0)).product();
            total += p;
        }
        assert_relative_eq!(c, total / 500.0, max_relative = 1e-10);
        assert!(c < 10.0);
    }

    #[test]
    fn norm_estimate_examples() {
        let lam = 1.7;
        let e = power_norm_estimate(&b(lam), 6, 50);
        assert!(e.exact);
        assert_relative_eq!(e.value, lam.powi(6), max_relative = 1e-12);
        let d = OperatorSpec::diagonal(WeightRule::Explicit {
            values: vec![0.5, -3.0, 2.0],
            tail: super::super::weights::Tail::Constant { value: 0.1 },
        });
        assert_relative_eq!(operator_norm_estimate(&d, 10).value, 3.0, max_relative = 1e-14);
        let f = OperatorSpec::forward(WeightRule::default_blocks());
        for k in [1usize, 3, 7] {
            let got = power_norm_estimate(&f, k, 40).value;
            let oracle = (1..=40)
                .map(|n| (n..n + k).map(|i| WeightRule::default_blocks().value(i)).product::<f64>())
                .fold(0.0, f64::max);
            assert_relative_eq!(got, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn mixed_composition_falls_back_to_direct_iteration() {
        let l1 = SpaceSpec::l1();
        let mixed = OperatorSpec::Composition {
            factors: vec![
                OperatorSpec::forward(WeightRule::constant(3.0)),
                OperatorSpec::backward(WeightRule::constant(2.0)),
            ],
        };
        assert!(ShiftForm::new(&mixed, 10).is_none());
        let x = l1.vector(vec![1.0, 1.0, 1.0]).unwrap();
        let ln = orbit_log_norms(&FamilySpec::power(mixed), &x, &[1, 2], NormExponent::Finite(1.0)).unwrap();
        assert_relative_eq!(ln[0].exp(), 12.0, max_relative = 1e-14);
        assert_relative_eq!(ln[1].exp(), 72.0, max_relative = 1e-14);
    }

    #[test]
    fn forward_shift_reciprocal_pair_on_e1() {
        let w = WeightRule::default_blocks();
        let fw = FamilySpec::power(OperatorSpec::forward(w.clone()));
        let fs = FamilySpec::power(OperatorSpec::forward(w.reciprocal()));
        let e1 = SpaceSpec::l2().basis(1, 1);
        let ks: Vec<usize> = (1..=300).collect();
        let a = orbit_log_norms(&fw, &e1, &ks, NormExponent::Finite(2.0)).unwrap();
        let c = orbit_log_norms(&fs, &e1, &ks, NormExponent::Finite(2.0)).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert!((x + y).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn direct_and_log_orbits_agree(k in 0usize..20, coeffs in proptest::collection::vec(-3.0f64..3.0, 25..40)) {
            let l1 = SpaceSpec::l1();
            let x = l1.vector(coeffs).unwrap();
            let spec = OperatorSpec::Composition {
                factors: vec![
                    OperatorSpec::diagonal(WeightRule::Wallis { exponent: 0.5 }),
                    OperatorSpec::backward(WeightRule::constant(1.5)),
                ],
            };
            let fam = FamilySpec::power(spec);
            let direct = apply_member(&fam, k, &x).unwrap();
            let want: f64 = direct.coeffs().iter().map(|v| v.abs()).sum();
            let got = orbit_log_norms(&fam, &x, &[k], NormExponent::Finite(1.0)).unwrap()[0];
            if want == 0.0 {
                prop_assert_eq!(got, f64::NEG_INFINITY);
            } else {
                prop_assert!((got.exp() - want).abs() <= 1e-10 * want);
            }
        }

        #[test]
        fn subsampling_growth_bound(m in 1usize..6, n in 1usize..60, seed in proptest::collection::vec(0.0f64..1.0, 70)) {
            let l1 = SpaceSpec::l1();
            let y = l1.vector(seed).unwrap();
            let norm = NormExponent::Finite(1.0);
            for (spec, slack) in [
                (OperatorSpec::backward(WeightRule::constant(2.0)), 0.0),
                (OperatorSpec::backward(WeightRule::Wallis { exponent: 1.0 }), 1e-12),
            ] {
                let t_norm = operator_norm_estimate(&spec, 200).value.max(1.0);
                let fam = FamilySpec::power(spec);
                let sub = m * (n / m);
                let v = orbit_log_norms(&fam, &y, &[sub, n], norm).unwrap();
                let lhs = v[0].exp();
                let rhs = v[1].exp() / t_norm.powi(m as i32);
                prop_assert!(lhs >= rhs * (1.0 - slack), "{} < {}", lhs, rhs);
            }
        }
    }
}
