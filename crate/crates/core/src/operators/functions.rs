//! Analytic scalar functions used as test functions, weights and modulations.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::binomial;

use super::OperatorError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case")]
pub enum ScalarFunction {
    Constant { value: f64 },
    /// `a + b x`.
    Affine { a: f64, b: f64 },
    /// `amplitude * e^(rate x)`.
    Exp { rate: f64, amplitude: f64 },
    /// `1 / (1 + x)`.
    InverseLinear,
    /// `min(1, 1/x)`.
    MinInverse,
    /// `e^(-x) (2 + sin x)`.
    ExpSine,
    /// `1 / (x^(2n) + 1)`.
    InverseEvenPower { n: u32 },
    /// `(1 + x^2)^(-q)`.
    PolyDecay { q: f64 },
    /// `|x|`.
    Abs,
    /// Indicator of `[lo, hi]`.
    Indicator { lo: f64, hi: f64 },
    /// Cardinal B-spline of the given degree, supported on `[center - width/2, center + width/2]`.
    BSpline { degree: usize, center: f64, width: f64, amplitude: f64 },
    Sum { terms: Vec<ScalarFunction> },
    Scaled { factor: f64, inner: Box<ScalarFunction> },
}

impl ScalarFunction {
    pub fn cubic_bump(center: f64, width: f64) -> Self {
        ScalarFunction::BSpline { degree: 3, center, width, amplitude: 1.0 }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            ScalarFunction::Exp { rate, amplitude } => ScalarFunction::Exp { rate: *rate, amplitude: amplitude * c },
            ScalarFunction::BSpline { degree, center, width, amplitude } => ScalarFunction::BSpline {
                degree: *degree,
                center: *center,
                width: *width,
                amplitude: amplitude * c,
            },
            ScalarFunction::Constant { value } => ScalarFunction::Constant { value: value * c },
            ScalarFunction::Sum { terms } => ScalarFunction::Sum { terms: terms.iter().map(|t| t.scaled(c)).collect() },
            other => ScalarFunction::Scaled { factor: c, inner: Box::new(other.clone()) },
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            ScalarFunction::Constant { value } => *value,
            ScalarFunction::Affine { a, b } => a + b * x,
            ScalarFunction::Exp { rate, amplitude } => amplitude * (rate * x).exp(),
            ScalarFunction::InverseLinear => 1.0 / (1.0 + x),
            ScalarFunction::MinInverse => {
                if x <= 1.0 {
                    1.0
                } else {
                    1.0 / x
                }
            }
            ScalarFunction::ExpSine => (-x).exp() * (2.0 + x.sin()),
            ScalarFunction::InverseEvenPower { n } => 1.0 / (x.powi(2 * *n as i32) + 1.0),
            ScalarFunction::PolyDecay { q } => (1.0 + x * x).powf(-q),
            ScalarFunction::Abs => x.abs(),
            ScalarFunction::Indicator { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarFunction::BSpline { .. } => self.derivative(0, x).expect("order 0 always exists"),
            ScalarFunction::Sum { terms } => terms.iter().map(|t| t.value(x)).sum(),
            ScalarFunction::Scaled { factor, inner } => factor * inner.value(x),
        }
    }

    /// Highest derivative order available in closed form.
    pub fn max_derivative(&self) -> usize {
        match self {
            ScalarFunction::Constant { .. } | ScalarFunction::Affine { .. } | ScalarFunction::Exp { .. } => usize::MAX,
            ScalarFunction::BSpline { degree, .. } => degree.saturating_sub(1),
            ScalarFunction::Sum { terms } => terms.iter().map(|t| t.max_derivative()).min().unwrap_or(usize::MAX),
            ScalarFunction::Scaled { inner, .. } => inner.max_derivative(),
            _ => 0,
        }
    }

    pub fn derivative(&self, order: usize, x: f64) -> Result<f64, OperatorError> {
        let available = self.max_derivative();
        if order > available && order > 0 {
            return Err(OperatorError::MissingDerivative { order, available });
        }
        Ok(match self {
            _ if order == 0 && !matches!(self, ScalarFunction::BSpline { .. }) => self.value(x),
            ScalarFunction::Constant { .. } => 0.0,
            ScalarFunction::Affine { b, .. } => {
                if order == 1 {
                    *b
                } else {
                    0.0
                }
            }
            ScalarFunction::Exp { rate, amplitude } => amplitude * rate.powi(order as i32) * (rate * x).exp(),
            ScalarFunction::BSpline { degree, center, width, amplitude } => {
                let d = *degree;
                let scale = (d + 1) as f64 / width;
                let u = (x - center) * scale + (d + 1) as f64 / 2.0;
                amplitude * scale.powi(order as i32) * cardinal_bspline_derivative(d, order, u)
            }
            ScalarFunction::Sum { terms } => {
                let mut s = 0.0;
                for t in terms {
                    s += t.derivative(order, x)?;
                }
                s
            }
            ScalarFunction::Scaled { factor, inner } => factor * inner.derivative(order, x)?,
            _ => unreachable!("order checked against max_derivative"),
        })
    }

    /// Closed interval outside which the function vanishes, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            ScalarFunction::BSpline { center, width, .. } => Some((center - width / 2.0, center + width / 2.0)),
            ScalarFunction::Indicator { lo, hi } => Some((*lo, *hi)),
            ScalarFunction::Scaled { inner, .. } => inner.support(),
            ScalarFunction::Sum { terms } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for t in terms {
                    let (a, b) = t.support()?;
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                if lo <= hi {
                    Some((lo, hi))
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

/// `r`-th derivative of the cardinal B-spline of degree `d` on knots `0, 1, ..., d+1`:
/// `1/(d-r)! * sum_k (-1)^k C(d+1, k) (u - k)_+^(d-r)`.
pub fn cardinal_bspline_derivative(d: usize, r: usize, u: f64) -> f64 {
    let top = (d + 1) as f64;
    if u <= 0.0 || u >= top || r > d {
        return 0.0;
    }
    let p = (d - r) as i32;
    let fact: f64 = (1..=(d - r)).map(|i| i as f64).product();
    let mut s = 0.0;
    for k in 0..=(d + 1) {
        let base = u - k as f64;
        if base <= 0.0 {
            break;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = if p == 0 { 1.0 } else { base.powi(p) };
        s += sign * binomial((d + 1) as u64, k as u64) * term;
    }
    s / fact
}

/// Function on `R^m` built from scalar functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MultiFunction {
    /// `g(|x|)`.
    Radial { profile: ScalarFunction },
    /// `prod_s g_s(x_s)`.
    Product { factors: Vec<ScalarFunction> },
}

impl MultiFunction {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            MultiFunction::Radial { profile } => profile.value(x.iter().map(|v| v * v).sum::<f64>().sqrt()),
            MultiFunction::Product { factors } => factors.iter().zip(x).map(|(f, &v)| f.value(v)).product(),
        }
    }

    /// Box `[-r, r]^m`-style bounds per axis outside which the function vanishes.
    pub fn support(&self, m: usize) -> Option<Vec<(f64, f64)>> {
        match self {
            MultiFunction::Radial { profile } => {
                let (_, hi) = profile.support()?;
                let r = hi.abs();
                Some(vec![(-r, r); m])
            }
            MultiFunction::Product { factors } => factors.iter().map(|f| f.support()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cubic_spline_known_values() {
        // M_4(1) = 1/6, M_4(2) = 2/3
        assert_relative_eq!(cardinal_bspline_derivative(3, 0, 1.0), 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(cardinal_bspline_derivative(3, 0, 2.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(cardinal_bspline_derivative(3, 0, 4.5), 0.0);
    }

    #[test]
    fn spline_integrates_to_width_over_order() {
        let b = ScalarFunction::BSpline { degree: 5, center: 2.0, width: 3.0, amplitude: 1.0 };
        let h = 1e-4;
        let s: f64 = (0..30_000).map(|i| b.value(0.5 + (i as f64 + 0.5) * h) * h).sum();
        assert_relative_eq!(s, 3.0 / 6.0, max_relative = 1e-6);
    }

    #[test]
    fn spline_derivatives_match_central_differences() {
        let b = ScalarFunction::BSpline { degree: 4, center: 0.3, width: 2.5, amplitude: 1.7 };
        let h = 1e-5;
        for i in 0..40 {
            let x = -1.0 + i as f64 * 0.05 + 0.013;
            for r in 1..=3 {
                let fd = (b.derivative(r - 1, x + h).unwrap() - b.derivative(r - 1, x - h).unwrap()) / (2.0 * h);
                assert!((b.derivative(r, x).unwrap() - fd).abs() < 1e-5, "r={r} x={x}");
            }
        }
        assert!(matches!(b.derivative(4, 0.0), Err(OperatorError::MissingDerivative { order: 4, available: 3 })));
    }
}
