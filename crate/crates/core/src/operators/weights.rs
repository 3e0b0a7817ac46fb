//! Weight and diagonal sequences with a tail rule, so any index is defined.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tail", rename_all = "snake_case")]
pub enum Tail {
    Constant { value: f64 },
    /// Repeat the explicit values cyclically.
    Periodic,
    RepeatLast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WeightRule {
    Constant { value: f64 },
    Explicit { values: Vec<f64>, tail: Tail },
    /// `(2n / (2n-1))^exponent`.
    Wallis { exponent: f64 },
    /// Alternating blocks of `high` and `low`; block `i` (from 0) has length
    /// `round(first_len * growth^i)`.
    Blocks { high: f64, low: f64, first_len: usize, growth: f64 },
    /// `base^(a n^2 + b n + c)`.
    ExpQuadratic { base: f64, a: f64, b: f64, c: f64 },
}

impl WeightRule {
    pub fn constant(value: f64) -> Self {
        WeightRule::Constant { value }
    }

    /// Blocks of 2's and 1/2's of lengths 2, 4, 8, ...
    pub fn default_blocks() -> Self {
        WeightRule::Blocks { high: 2.0, low: 0.5, first_len: 2, growth: 2.0 }
    }

    /// Entrywise reciprocal `1/w_n`, where the rule allows it in closed form.
    pub fn reciprocal(&self) -> Self {
        match self {
            WeightRule::Constant { value } => WeightRule::Constant { value: 1.0 / value },
            WeightRule::Explicit { values, tail } => WeightRule::Explicit {
                values: values.iter().map(|v| 1.0 / v).collect(),
                tail: match tail {
                    Tail::Constant { value } => Tail::Constant { value: 1.0 / value },
                    t => t.clone(),
                },
            },
            WeightRule::Wallis { exponent } => WeightRule::Wallis { exponent: -exponent },
            WeightRule::Blocks { high, low, first_len, growth } => WeightRule::Blocks {
                high: 1.0 / high,
                low: 1.0 / low,
                first_len: *first_len,
                growth: *growth,
            },
            WeightRule::ExpQuadratic { base, a, b, c } => {
                WeightRule::ExpQuadratic { base: *base, a: -a, b: -b, c: -c }
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{what} must be finite"))
            }
        };
        match self {
            WeightRule::Constant { value } => finite(*value, "constant weight"),
            WeightRule::Explicit { values, tail } => {
                if values.is_empty() {
                    return Err("explicit weights need at least one value".into());
                }
                values.iter().try_for_each(|&v| finite(v, "explicit weight"))?;
                if let Tail::Constant { value } = tail {
                    finite(*value, "tail weight")?;
                }
                Ok(())
            }
            WeightRule::Wallis { exponent } => finite(*exponent, "exponent"),
            WeightRule::Blocks { high, low, first_len, growth } => {
                finite(*high, "high")?;
                finite(*low, "low")?;
                if *first_len == 0 || !(*growth >= 1.0) {
                    return Err("blocks need first_len >= 1 and growth >= 1".into());
                }
                Ok(())
            }
            WeightRule::ExpQuadratic { base, a, b, c } => {
                if !(*base > 0.0) {
                    return Err("base must be positive".into());
                }
                [*base, *a, *b, *c].iter().try_for_each(|&v| finite(v, "coefficient"))
            }
        }
    }

    /// `w_n` for `n >= 1`; may be infinite for fast-growing rules.
    pub fn value(&self, n: usize) -> f64 {
        assert!(n >= 1, "weights are indexed from 1");
        match self {
            WeightRule::Constant { value } => *value,
            WeightRule::Explicit { values, tail } => {
                if n <= values.len() {
                    values[n - 1]
                } else {
                    match tail {
                        Tail::Constant { value } => *value,
                        Tail::Periodic => values[(n - 1) % values.len()],
                        Tail::RepeatLast => *values.last().unwrap(),
                    }
                }
            }
            WeightRule::Wallis { exponent } => {
                let n = n as f64;
                (2.0 * n / (2.0 * n - 1.0)).powf(*exponent)
            }
            WeightRule::Blocks { high, low, .. } => {
                if self.block_index(n) % 2 == 0 {
                    *high
                } else {
                    *low
                }
            }
            WeightRule::ExpQuadratic { .. } => self.ln_abs(n).exp(),
        }
    }

    /// `ln |w_n|` (`-inf` for a zero weight).
    pub fn ln_abs(&self, n: usize) -> f64 {
        match self {
            WeightRule::Wallis { exponent } => {
                let n = n as f64;
                // ln(2n/(2n-1)) = -ln(1 - 1/(2n))
                -exponent * (-1.0 / (2.0 * n)).ln_1p()
            }
            WeightRule::ExpQuadratic { base, a, b, c } => {
                let m = n as f64;
                (a * m * m + b * m + c) * base.ln()
            }
            _ => self.value(n).abs().ln(),
        }
    }

    /// Block containing index `n` (0-based) for the block rule.
    pub fn block_index(&self, n: usize) -> usize {
        let WeightRule::Blocks { first_len, growth, .. } = self else {
            return 0;
        };
        let mut end = 0usize;
        let mut len = *first_len as f64;
        let mut i = 0;
        loop {
            end += len.round().max(1.0) as usize;
            if n <= end {
                return i;
            }
            len *= growth;
            i += 1;
        }
    }

    /// `ln |w_n|` for `n = 1..=len` (entry 0 is `n = 1`).
    pub fn log_table(&self, len: usize) -> Vec<f64> {
        (1..=len).map(|n| self.ln_abs(n)).collect()
    }

    /// `sum_{n=lo}^{hi} ln |w_n|`, using a closed form where one exists.
    pub fn log_product(&self, lo: usize, hi: usize) -> f64 {
        if hi < lo {
            return 0.0;
        }
        match self {
            WeightRule::Constant { value } => (hi - lo + 1) as f64 * value.abs().ln(),
            WeightRule::ExpQuadratic { base, a, b, c } => {
                let s0 = |n: f64| n;
                let s1 = |n: f64| n * (n + 1.0) / 2.0;
                let s2 = |n: f64| n * (n + 1.0) * (2.0 * n + 1.0) / 6.0;
                let (h, l) = (hi as f64, lo as f64 - 1.0);
                (a * (s2(h) - s2(l)) + b * (s1(h) - s1(l)) + c * (s0(h) - s0(l))) * base.ln()
            }
            _ => {
                let mut acc = crate::space::CompensatedSum::default();
                for n in lo..=hi {
                    acc.add(self.ln_abs(n));
                }
                acc.value()
            }
        }
    }
}

/// `beta(n) = prod_{i=1}^n w_i`, evaluated through its logarithm; saturates at `f64::MAX`.
pub fn weight_product(weights: &WeightRule, n: usize) -> f64 {
    saturating_exp(weights.log_product(1, n))
}

pub(crate) fn saturating_exp(v: f64) -> f64 {
    let e = v.exp();
    if e.is_infinite() {
        f64::MAX
    } else {
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weight_product_examples() {
        assert_eq!(weight_product(&WeightRule::constant(1.0), 50), 1.0);
        let w = WeightRule::Wallis { exponent: 1.0 };
        assert_relative_eq!(weight_product(&w, 2), 8.0 / 3.0, max_relative = 1e-15);
        let r = weight_product(&w, 10_000) / (std::f64::consts::PI * 1e4).sqrt();
        assert!((r - 1.0).abs() <= 1e-3, "ratio {r}");
    }

    #[test]
    fn wallis_product_matches_central_binomial() {
        // prod_{i<=n} 2i/(2i-1) = 4^n / C(2n, n)
        let w = WeightRule::Wallis { exponent: 1.0 };
        for n in [1usize, 5, 20, 60] {
            let ln_binom = statrs::function::factorial::ln_binomial(2 * n as u64, n as u64);
            let oracle = n as f64 * 4f64.ln() - ln_binom;
            assert_relative_eq!(w.log_product(1, n), oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn blocks_alternate_with_doubling_lengths() {
        let w = WeightRule::default_blocks();
        let got: Vec<f64> = (1..=14).map(|n| w.value(n)).collect();
        let mut want = vec![2.0; 2];
        want.extend([0.5; 4]);
        want.extend([2.0; 8]);
        assert_eq!(got, want);
        let r = w.reciprocal();
        assert_eq!(r.value(3), 2.0);
    }

    #[test]
    fn closed_form_log_products() {
        let w = WeightRule::ExpQuadratic { base: 1.5, a: -1.0, b: 0.5, c: 2.0 };
        let direct: f64 = (3..=40).map(|n| w.ln_abs(n)).sum();
        assert_relative_eq!(w.log_product(3, 40), direct, max_relative = 1e-12);
        let e = WeightRule::Explicit { values: vec![1.0, 2.0, 3.0], tail: Tail::Periodic };
        assert_eq!(e.value(5), 2.0);
        let e = WeightRule::Explicit { values: vec![1.0, 2.0], tail: Tail::Constant { value: 7.0 } };
        assert_eq!(e.value(9), 7.0);
    }
}
