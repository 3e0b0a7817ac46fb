//! Continuous families: translation and semiflow semigroups on weighted function
//! spaces, Mittag-Leffler orbits, integrated semigroups and scalar modulations.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::discrete::{ln_norm, log_entries};
use super::functions::{MultiFunction, ScalarFunction};
use super::mittag_leffler::mittag_leffler;
use super::weights::WeightRule;
use super::OperatorError;
use crate::space::{NormExponent, TruncatedVector, WeightedGrid};

/// Function fed to a translation semigroup: analytic, or samples on a uniform mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum GridSource {
    Analytic { f: ScalarFunction },
    /// Samples at `origin + (i + 1/2) step`, constant on each cell.
    Sampled { origin: f64, step: f64, values: Vec<f64> },
}

impl GridSource {
    fn coverage(&self) -> f64 {
        match self {
            GridSource::Analytic { .. } => f64::INFINITY,
            GridSource::Sampled { origin, step, values } => origin + step * values.len() as f64,
        }
    }

    fn value(&self, x: f64) -> f64 {
        match self {
            GridSource::Analytic { f } => f.value(x),
            GridSource::Sampled { origin, step, values } => {
                let i = ((x - origin) / step).floor();
                if i < 0.0 || i as usize >= values.len() {
                    0.0
                } else {
                    values[i as usize]
                }
            }
        }
    }
}

/// `||f(. + t)||` in the weighted grid space (rectangle rule on the cell midpoints).
pub fn translation_orbit_norm(grid: &WeightedGrid, f: &GridSource, t: f64) -> Result<f64, OperatorError> {
    if !(t >= 0.0) {
        return Err(OperatorError::InvalidParameter(format!("t = {t} must be non-negative")));
    }
    let end = grid.origin + grid.step * grid.cells() as f64;
    let coverage = f.coverage();
    if end + t > coverage * (1.0 + 1e-12) {
        return Err(OperatorError::BeyondGrid { t, coverage });
    }
    let samples: Vec<f64> = (0..grid.cells()).map(|i| f.value(grid.midpoint(i) + t)).collect();
    Ok(grid.norm_of(&samples))
}

/// `phi(t, x) = (e^(a_1 t) x_1, ..., e^(a_m t) x_m)` with damping `e^(-eps t)` and weight
/// `rho(x) = (1 + |x|^2)^(-q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Semiflow {
    pub rates: Vec<f64>,
    pub damping: f64,
    pub q: f64,
}

impl Semiflow {
    pub fn new(rates: Vec<f64>, damping: f64, q: f64) -> Result<Self, OperatorError> {
        if rates.is_empty() || rates.len() > 2 {
            return Err(OperatorError::InvalidParameter("semiflows are supported in dimension 1 or 2".into()));
        }
        if rates.iter().any(|&a| !(a > 0.0)) {
            return Err(OperatorError::InvalidParameter("all rates must be positive".into()));
        }
        if !(damping >= 0.0) || !(q > 0.0) {
            return Err(OperatorError::InvalidParameter("damping must be >= 0 and q > 0".into()));
        }
        Ok(Self { rates, damping, q })
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }

    /// `eps < min a`, the regime in which damped orbits of `|.|` still blow up.
    pub fn in_growth_regime(&self) -> bool {
        self.damping > 0.0 && self.rates.iter().all(|&a| self.damping < a)
    }

    fn rho(&self, x: &[f64]) -> f64 {
        (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(-self.q)
    }
}

/// Evaluation mesh for semiflow sup-norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiflowGrid {
    /// Fixed mesh on `[-radius, radius]^m`.
    pub radius: f64,
    pub step: f64,
    /// Points per axis of the pulled-back mesh over the support of `f`.
    pub support_points: usize,
}

impl Default for SemiflowGrid {
    fn default() -> Self {
        Self { radius: 10.0, step: 0.01, support_points: 201 }
    }
}

fn axis(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![(lo + hi) / 2.0];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

fn semiflow_sup(flow: &Semiflow, f: &MultiFunction, t: f64, grid: &SemiflowGrid) -> f64 {
    let m = flow.dim();
    let scale: Vec<f64> = flow.rates.iter().map(|a| (a * t).exp()).collect();
    let mut best: f64 = 0.0;
    let mut visit = |x: &[f64]| {
        let y: Vec<f64> = x.iter().zip(&scale).map(|(v, s)| v * s).collect();
        let v = f.value(&y).abs() * flow.rho(x);
        if v > best {
            best = v;
        }
    };
    let count = (2.0 * grid.radius / grid.step).round() as usize + 1;
    let fixed = axis(-grid.radius, grid.radius, count);
    let pulled: Option<Vec<Vec<f64>>> = f.support(m).map(|bounds| {
        bounds
            .iter()
            .zip(&scale)
            .map(|(&(lo, hi), s)| axis(lo / s, hi / s, grid.support_points))
            .collect()
    });
    match m {
        1 => {
            for &x in &fixed {
                visit(&[x]);
            }
            if let Some(p) = &pulled {
                for &x in &p[0] {
                    visit(&[x]);
                }
            }
        }
        _ => {
            for &x0 in &fixed {
                for &x1 in &fixed {
                    visit(&[x0, x1]);
                }
            }
            if let Some(p) = &pulled {
                for &x0 in &p[0] {
                    for &x1 in &p[1] {
                        visit(&[x0, x1]);
                    }
                }
            }
        }
    }
    best
}

/// `e^(-eps t) sup_x |f(phi(t, x))| rho(x)`, checked against a refined mesh.
pub fn semiflow_orbit_norm(flow: &Semiflow, f: &MultiFunction, t: f64, grid: &SemiflowGrid) -> Result<f64, OperatorError> {
    if !(t >= 0.0) {
        return Err(OperatorError::InvalidParameter(format!("t = {t} must be non-negative")));
    }
    let coarse = semiflow_sup(flow, f, t, grid);
    let fine_grid = SemiflowGrid {
        radius: grid.radius,
        step: grid.step / 2.0,
        support_points: (2 * grid.support_points).saturating_sub(1),
    };
    let fine = semiflow_sup(flow, f, t, &fine_grid);
    if fine > 0.0 {
        let change = (fine - coarse).abs() / fine;
        if change > 0.05 {
            return Err(OperatorError::GridTooCoarse { relative_change: change });
        }
    }
    Ok((-flow.damping * t).exp() * fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Components `psi_i(x) = sum_{j=0}^{n+1-i} (±t)^j / j! phi_{i+j}^{(j)}(x ± t)`, `i = 1..=n+1`,
/// sampled at `xs`.
pub fn integrated_semigroup_apply(
    n: usize,
    sign: Sign,
    phis: &[ScalarFunction],
    t: f64,
    xs: &[f64],
) -> Result<Vec<Vec<f64>>, OperatorError> {
    if phis.len() != n + 1 {
        return Err(OperatorError::InvalidParameter(format!(
            "expected {} test functions, got {}",
            n + 1,
            phis.len()
        )));
    }
    let st = sign.factor() * t;
    let mut out = Vec::with_capacity(n + 1);
    for i in 1..=n + 1 {
        let mut values = vec![0.0; xs.len()];
        let mut coef = 1.0;
        for j in 0..=(n + 1 - i) {
            if j > 0 {
                coef *= st / j as f64;
            }
            let phi = &phis[i + j - 1];
            for (v, &x) in values.iter_mut().zip(xs) {
                *v += coef * phi.derivative(j, x + st)?;
            }
        }
        out.push(values);
    }
    Ok(out)
}

/// `sup_x |psi(x)| / (x^(2n) + 1)` for each component.
pub fn integrated_component_norms(n: usize, components: &[Vec<f64>], xs: &[f64]) -> Vec<f64> {
    let rho = ScalarFunction::InverseEvenPower { n: n as u32 };
    components
        .iter()
        .map(|c| c.iter().zip(xs).map(|(v, &x)| v.abs() * rho.value(x)).fold(0.0, f64::max))
        .collect()
}

/// `T(t) x = E_alpha(t^alpha lambda) C x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MittagLefflerOrbit {
    pub alpha: f64,
    /// `[re, im]`.
    pub lambda: [f64; 2],
    pub regularizer: WeightRule,
}

impl MittagLefflerOrbit {
    pub fn new(alpha: f64, lambda: Complex64, regularizer: WeightRule) -> Result<Self, OperatorError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(OperatorError::InvalidParameter(format!("alpha = {alpha} must lie in (0, 2)")));
        }
        let spec = Self { alpha, lambda: [lambda.re, lambda.im], regularizer };
        spec.check_sector()?;
        Ok(spec)
    }

    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.lambda[0], self.lambda[1])
    }

    pub fn check_sector(&self) -> Result<(), OperatorError> {
        let lam = self.lambda();
        let half = self.alpha * PI / 2.0;
        if lam.norm() == 0.0 || lam.arg().abs() >= half {
            return Err(OperatorError::SectorViolation { lambda: format!("{lam}"), half_angle: half });
        }
        Ok(())
    }

    pub fn scalar(&self, t: f64) -> Result<Complex64, OperatorError> {
        let z = self.lambda() * t.powf(self.alpha);
        mittag_leffler(self.alpha, 1.0, z)
    }
}

/// `|E_alpha(t^alpha lambda)| ||C x||`.
pub fn ml_orbit_norm(spec: &MittagLefflerOrbit, x: &TruncatedVector, norm: NormExponent, t: f64) -> Result<f64, OperatorError> {
    spec.check_sector()?;
    if !(t >= 0.0) {
        return Err(OperatorError::InvalidParameter(format!("t = {t} must be non-negative")));
    }
    let entries: Vec<(usize, f64)> = log_entries(x)
        .into_iter()
        .map(|(i, l)| (i, l + spec.regularizer.ln_abs(i)))
        .collect();
    let cx = ln_norm(norm, &entries).exp();
    Ok(spec.scalar(t)?.norm() * cx)
}

/// Scalar factor `f_j(t)` of a modulated family `T_j(t) = f_j(t) T_1(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "modulation", rename_all = "snake_case")]
pub enum Modulation {
    /// `e^(omega t)`, `omega = re + i im`.
    Exponential { re: f64, im: f64 },
    /// `e^(i a t) (1 + t)^b`.
    Oscillating { a: f64, b: f64 },
    Constant { re: f64, im: f64 },
}

impl Modulation {
    pub fn value(&self, t: f64) -> Complex64 {
        match *self {
            Modulation::Exponential { re, im } => (Complex64::new(re, im) * t).exp(),
            Modulation::Oscillating { a, b } => Complex64::new(0.0, a * t).exp() * (1.0 + t).powf(b),
            Modulation::Constant { re, im } => Complex64::new(re, im),
        }
    }

    pub fn modulus(&self, t: f64) -> f64 {
        self.value(t).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ContinuousFamilySpec {
    /// `T(t) f = f(. + t)` on `L^p_rho([0, length])` (or `C_{0,rho}` with the sup norm).
    Translation { rho: ScalarFunction, norm: NormExponent, step: f64, length: f64 },
    Semiflow { flow: Semiflow },
    ScalarModulated { modulation: Modulation, inner: Box<ContinuousFamilySpec> },
    MittagLeffler { orbit: MittagLefflerOrbit },
    IntegratedSemigroup { n: usize, sign: Sign },
}

impl ContinuousFamilySpec {
    pub fn translation(rho: ScalarFunction, norm: NormExponent, step: f64, length: f64) -> Self {
        ContinuousFamilySpec::Translation { rho, norm, step, length }
    }

    /// Weighted grid of a translation family (through any modulation).
    pub fn grid(&self) -> Option<WeightedGrid> {
        match self {
            ContinuousFamilySpec::Translation { rho, norm, step, length } => {
                let cells = (length / step).round() as usize;
                Some(WeightedGrid::from_fn(0.0, *step, cells, *norm, |x| rho.value(x)))
            }
            ContinuousFamilySpec::ScalarModulated { inner, .. } => inner.grid(),
            _ => None,
        }
    }

    /// `|f(t)|` accumulated over the modulation layers.
    pub fn modulus(&self, t: f64) -> f64 {
        match self {
            ContinuousFamilySpec::ScalarModulated { modulation, inner } => modulation.modulus(t) * inner.modulus(t),
            _ => 1.0,
        }
    }

    /// `||T(t) f||` for families acting on scalar functions of `[0, inf)`.
    pub fn function_orbit_norm(&self, f: &GridSource, t: f64) -> Result<f64, OperatorError> {
        match self {
            ContinuousFamilySpec::Translation { .. } => translation_orbit_norm(&self.grid().unwrap(), f, t),
            ContinuousFamilySpec::ScalarModulated { modulation, inner } => {
                Ok(modulation.modulus(t) * inner.function_orbit_norm(f, t)?)
            }
            _ => Err(OperatorError::InvalidParameter("family does not act on scalar functions of [0, inf)".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::erf::erfc;

    fn exp_grid(len: f64) -> WeightedGrid {
        WeightedGrid::from_fn(0.0, 0.001, (len / 0.001) as usize, NormExponent::Finite(1.0), |x| (-x).exp())
    }

    #[test]
    fn translation_examples() {
        let grid = exp_grid(40.0);
        let bump = GridSource::Analytic { f: ScalarFunction::cubic_bump(2.0, 2.0) };
        assert_eq!(translation_orbit_norm(&grid, &bump, 3.5).unwrap(), 0.0);
        let f = GridSource::Analytic { f: ScalarFunction::Exp { rate: 0.5, amplitude: 1.0 } };
        for t in [0.0, 1.0, 4.0] {
            let oracle = 2.0 * (t / 2.0_f64).exp() * (1.0 - (-20.0_f64).exp());
            assert_relative_eq!(translation_orbit_norm(&grid, &f, t).unwrap(), oracle, max_relative = 1e-6);
        }
        let flat = WeightedGrid::from_fn(0.0, 0.01, 2000, NormExponent::Finite(1.0), |_| 1.0);
        let ind = GridSource::Analytic { f: ScalarFunction::Indicator { lo: 5.0, hi: 6.0 } };
        for t in [0.0, 2.0, 4.9] {
            assert_relative_eq!(translation_orbit_norm(&flat, &ind, t).unwrap(), 1.0, max_relative = 1e-9);
        }
        let sampled = GridSource::Sampled { origin: 0.0, step: 0.01, values: vec![1.0; 2500] };
        assert!(matches!(
            translation_orbit_norm(&flat, &sampled, 6.0),
            Err(OperatorError::BeyondGrid { .. })
        ));
    }

    #[test]
    fn semiflow_examples() {
        let flow = Semiflow::new(vec![1.0], 0.5, 1.0).unwrap();
        let abs = MultiFunction::Radial { profile: ScalarFunction::Abs };
        let grid = SemiflowGrid::default();
        for t in [0.0, 3.0, 10.0, 20.0] {
            let v = semiflow_orbit_norm(&flow, &abs, t, &grid).unwrap();
            assert_relative_eq!(v, (0.5 * t).exp() / 2.0, max_relative = 1e-6);
        }
        let bump = MultiFunction::Radial { profile: ScalarFunction::cubic_bump(0.0, 2.0) };
        let sup = 2.0 / 3.0;
        for t in [0.0, 5.0, 20.0] {
            let v = semiflow_orbit_norm(&flow, &bump, t, &grid).unwrap();
            assert!(v <= (-0.5 * t).exp() * sup * (1.0 + 1e-12));
        }
        let still = Semiflow::new(vec![1.0], 0.0, 1.0).unwrap();
        let v = semiflow_orbit_norm(&still, &abs, 0.0, &grid).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn semiflow_detects_coarse_grid() {
        let flow = Semiflow::new(vec![1.0], 0.0, 1.0).unwrap();
        // no support information, so only the fixed mesh sees the spike
        let profile = ScalarFunction::Sum {
            terms: vec![ScalarFunction::cubic_bump(3.2, 0.3), ScalarFunction::Constant { value: 0.0 }],
        };
        let spike = MultiFunction::Radial { profile };
        let coarse = SemiflowGrid { radius: 10.0, step: 0.5, support_points: 2 };
        assert!(matches!(
            semiflow_orbit_norm(&flow, &spike, 0.0, &coarse),
            Err(OperatorError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn integrated_semigroup_examples() {
        let xs: Vec<f64> = (0..200).map(|i| -5.0 + i as f64 * 0.05).collect();
        let b = ScalarFunction::cubic_bump(0.0, 2.0);
        let psi = integrated_semigroup_apply(0, Sign::Plus, &[b.clone()], 1.3, &xs).unwrap();
        for (v, &x) in psi[0].iter().zip(&xs) {
            assert_eq!(*v, b.value(x + 1.3));
        }
        let psi = integrated_semigroup_apply(1, Sign::Minus, &[b.clone(), b.clone()], 0.0, &xs).unwrap();
        for (v, &x) in psi[1].iter().zip(&xs) {
            assert_eq!(*v, b.value(x));
        }
        let psi = integrated_semigroup_apply(1, Sign::Plus, &[b.clone(), b.clone()], 1.0, &xs).unwrap();
        let h = 1e-4;
        for (v, &x) in psi[0].iter().zip(&xs) {
            let fd = (b.value(x + 1.0 + h) - b.value(x + 1.0 - h)) / (2.0 * h);
            assert!((v - (b.value(x + 1.0) + fd)).abs() < 1e-6);
        }
        let shallow = ScalarFunction::BSpline { degree: 1, center: 0.0, width: 1.0, amplitude: 1.0 };
        assert!(matches!(
            integrated_semigroup_apply(1, Sign::Plus, &[shallow.clone(), shallow], 1.0, &xs),
            Err(OperatorError::MissingDerivative { .. })
        ));
    }

    #[test]
    fn ml_orbit_examples() {
        let e1 = TruncatedVector::new("l1", vec![1.0, 2.0]).unwrap();
        let id = WeightRule::constant(1.0);
        let exp = MittagLefflerOrbit::new(1.0, Complex64::new(1.0, 0.0), id.clone()).unwrap();
        let n1 = NormExponent::Finite(1.0);
        assert_relative_eq!(ml_orbit_norm(&exp, &e1, n1, 0.0).unwrap(), 3.0, max_relative = 1e-14);
        assert_relative_eq!(ml_orbit_norm(&exp, &e1, n1, 2.0).unwrap(), 3.0 * 2f64.exp(), max_relative = 1e-12);
        let half = MittagLefflerOrbit::new(0.5, Complex64::new(1.0, 0.0), id.clone()).unwrap();
        let r = ml_orbit_norm(&half, &e1, n1, 10.0).unwrap() / ml_orbit_norm(&half, &e1, n1, 5.0).unwrap();
        let oracle = |t: f64| t.exp() * erfc(-t.sqrt());
        assert_relative_eq!(r, oracle(10.0) / oracle(5.0), max_relative = 1e-9);
        assert!(r > 10.0);
        assert!(matches!(
            MittagLefflerOrbit::new(0.5, Complex64::new(0.0, 1.0), id),
            Err(OperatorError::SectorViolation { .. })
        ));
    }

    #[test]
    fn modulation_modulus() {
        let m = Modulation::Oscillating { a: 3.0, b: 0.5 };
        assert_relative_eq!(m.modulus(3.0), 2.0, max_relative = 1e-14);
        let e = Modulation::Exponential { re: 0.25, im: -2.0 };
        assert_relative_eq!(e.modulus(4.0), 1f64.exp(), max_relative = 1e-14);
    }
}
