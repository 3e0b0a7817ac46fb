//! Named scenarios: parameters, anchors and the tolerances they are checked against.

use lychaos_core::operators::continuous::Modulation;
use lychaos_core::operators::functions::ScalarFunction;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Label of the worked example or statement the scenario reproduces.
    pub anchor: String,
    pub description: String,
    pub params: Params,
    pub expected: Vec<Expectation>,
}

/// An asserted quantity and its tolerance (a bound, a relative error or a threshold,
/// as described by `meaning`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub check: String,
    pub tolerance: f64,
    pub meaning: String,
}

impl Scenario {
    pub fn tolerance(&self, check: &str) -> f64 {
        self.expected
            .iter()
            .find(|e| e.check == check)
            .unwrap_or_else(|| panic!("scenario {} declares no tolerance for {check}", self.name))
            .tolerance
    }

    /// Replaces the horizon of discrete scenarios; continuous ones keep their time grid.
    pub fn with_horizon(mut self, horizon: usize) -> Self {
        match &mut self.params {
            Params::PrikaShift(p) => p.beta_n = horizon,
            Params::MaloZajebano(p) => p.horizon = horizon,
            Params::ForwardShiftBlocks(p) => p.detect_horizon = horizon,
            Params::SynthBackwardPair(p) => p.horizon = horizon,
            Params::BanachWindows(p) => p.horizon = horizon,
            _ => {}
        }
        self
    }

    /// Merges a table of parameter overrides (keys of the scenario's `params`).
    pub fn with_overrides(mut self, overrides: &toml::Value) -> Result<Self, CliError> {
        let bad = |e: String| CliError::Config(format!("[scenarios.{}]: {e}", self.name));
        let mut params = serde_json::to_value(&self.params).expect("params serialize");
        let patch = serde_json::to_value(overrides).map_err(|e| bad(e.to_string()))?;
        let (Some(target), Some(patch)) = (params.as_object_mut(), patch.as_object()) else {
            return Err(bad("overrides must be a table".into()));
        };
        for (k, v) in patch {
            if k == "kind" || !target.contains_key(k) {
                return Err(bad(format!("unknown parameter '{k}'")));
            }
            target.insert(k.clone(), v.clone());
        }
        self.params = serde_json::from_value(params).map_err(|e| bad(e.to_string()))?;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Params {
    PrikaShift(PrikaShift),
    MaloZajebano(MaloZajebano),
    ForwardShiftBlocks(ForwardShiftBlocks),
    SynthBackwardPair(SynthBackwardPair),
    TranslationWu(TranslationWu),
    PrckoFrcko(PrckoFrcko),
    MlOrbit(MlOrbit),
    IntegratedSemigroup(IntegratedSemigroup),
    NsFaul(NsFaul),
    BanachWindows(BanachWindows),
}

/// Backward shifts with weights `(2n/(2n-1))^zeta` on `l^1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrikaShift {
    pub zetas: Vec<f64>,
    /// `beta(n)` is tabulated for `n <= beta_n`.
    pub beta_n: usize,
    /// Averages for `n <= cesaro_n` over `e_1, ..., e_{cesaro_n + 1}`.
    pub cesaro_n: usize,
    pub sparse_vectors: usize,
    pub sparse_support: usize,
}

/// `A_j x = ((1+j)^(n+1) x_{n+1})` regularized by `C = diag((3/2)^(-n^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaloZajebano {
    pub audit_js: Vec<usize>,
    pub k_from: usize,
    pub k_to: usize,
    pub synth_js: Vec<usize>,
    pub horizon: usize,
}

/// Forward shifts with block weights `2, 1/2` and their reciprocals on `l^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardShiftBlocks {
    pub vectors: usize,
    pub support: usize,
    pub k_max: usize,
    pub detect_horizon: usize,
}

/// Scaled backward shifts `c B` on `l^1` with the basis pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthBackwardPair {
    pub scales: Vec<f64>,
    pub horizon: usize,
    pub samples: usize,
}

/// Translation semigroups on `L^1_rho([0, 2 t_max])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationWu {
    pub weights: Vec<ScalarFunction>,
    pub step: f64,
    pub t_max: f64,
    pub bump_width: f64,
}

/// `T_j(t) = f_j(t) T_1(t)` over the translation certificate of `e^(-x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrckoFrcko {
    pub step: f64,
    pub t_max: f64,
    pub modulations: Vec<Modulation>,
    /// Lower bound `c <= |f_j(t)|` claimed for the modulations.
    pub c: f64,
    /// Modulations violating the lower bound; inheritance must be refused.
    pub decaying: Vec<Modulation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlOrbit {
    pub alpha: f64,
    pub lambda: [f64; 2],
    pub samples: usize,
    pub radius: f64,
    pub erfc_points: usize,
    pub t_near: f64,
    pub t_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratedSemigroup {
    pub n: usize,
    pub t: f64,
    pub bump_width: f64,
    /// Central-difference step of the derivative oracle.
    pub fd_step: f64,
    pub t_end: f64,
}

/// `phi(t, x) = e^(a t) x` on `C_{0,rho}(R)` with `rho = (1 + x^2)^(-q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsFaul {
    pub rate: f64,
    pub damping: f64,
    pub q: f64,
    pub t_end: f64,
    pub t_step: f64,
    pub pool: Vec<ScalarFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanachWindows {
    pub scales: Vec<f64>,
    pub horizon: usize,
    pub s_max: usize,
    pub sigma: f64,
    pub eps: f64,
    /// `m_n = c n` for each listed `c`.
    pub m_slopes: Vec<f64>,
}

fn expect(check: &str, tolerance: f64, meaning: &str) -> Expectation {
    Expectation { check: check.into(), tolerance, meaning: meaning.into() }
}

fn scenario(name: &str, anchor: &str, description: &str, params: Params, expected: Vec<Expectation>) -> Scenario {
    Scenario { name: name.into(), anchor: anchor.into(), description: description.into(), params, expected }
}

fn wu_weights() -> Vec<ScalarFunction> {
    vec![
        ScalarFunction::Exp { rate: -1.0, amplitude: 1.0 },
        ScalarFunction::InverseLinear,
        ScalarFunction::Constant { value: 1.0 },
        ScalarFunction::Affine { a: 1.0, b: 1.0 },
        ScalarFunction::ExpSine,
        ScalarFunction::MinInverse,
    ]
}

pub fn registry() -> Vec<Scenario> {
    vec![
        scenario(
            "prika-shift",
            "Example prika-shift",
            "Wallis-weighted backward shifts: beta(n) against sqrt(pi n) and absolute Cesaro bounds",
            Params::PrikaShift(PrikaShift { zetas: vec![0.5, 1.0], beta_n: 10_000, cesaro_n: 2000, sparse_vectors: 50, sparse_support: 8 }),
            vec![
                expect("stirling-ratio", 1e-3, "|beta(n)/sqrt(pi n) - 1| at n = beta_n"),
                expect("cesaro-bound", 10.0, "max over n and x of (1/n) sum ||T^l x|| / ||x||_1"),
                expect("cesaro-routes", 1e-12, "relative gap between prefix sums and direct averages"),
            ],
        ),
        scenario(
            "malo-zajebano",
            "Example malo-zajebano",
            "Unbounded shifts regularized by a Gaussian diagonal: growth audit and certified synthesis",
            Params::MaloZajebano(MaloZajebano { audit_js: vec![1, 2], k_from: 5, k_to: 30, synth_js: vec![2, 3], horizon: 400 }),
            vec![
                expect("routes-agree", 1e-9, "relative gap between closed-form and tabulated ln norms"),
                expect("growth", 0.0, "smallest increment of ln ||A_j^k C x|| for every j with a growing exponent balance"),
            ],
        ),
        scenario(
            "forward-shift-blocks",
            "Example count-grof-ly324",
            "Forward shifts with 2/(1/2) blocks and reciprocal weights: obstruction bound and Li-Yorke tags",
            Params::ForwardShiftBlocks(ForwardShiftBlocks { vectors: 200, support: 30, k_max: 500, detect_horizon: 250 }),
            vec![
                expect("obstruction", 1e-12, "slack in ||F_w^k x + F_s^k x|| >= 2|x_n0|"),
                expect("adjointness", 1e-12, "|ln ||F_w^k e1|| + ln ||F_s^k e1|||"),
            ],
        ),
        scenario(
            "synth-backward-pair",
            "Theorem na-dobro1-ly",
            "Synthesis for (2B, 3B) on l^1 with certificate replay, irregularity and the implication battery",
            Params::SynthBackwardPair(SynthBackwardPair { scales: vec![2.0, 3.0], horizon: 10_000, samples: 20 }),
            vec![
                expect("blow-up", 1e3, "largest witnessed min_j p_1(T_j^k x_beta) must exceed this"),
                expect("complement-density", 0.05, "lower density of the complement of the near-zero set"),
            ],
        ),
        scenario(
            "translation-wu",
            "Theorem na-dobro1-ly-cont",
            "Six weights: synthesis succeeds exactly when the sampled liminf is small and the weight is bounded above",
            Params::TranslationWu(TranslationWu { weights: wu_weights(), step: 0.02, t_max: 50.0, bump_width: 4.0 }),
            vec![expect("liminf", 1e-3, "sampled liminf of rho below which synthesis must succeed")],
        ),
        scenario(
            "prcko-frcko",
            "Example prcko-frcko",
            "Scalar-modulated translation families inherit the base certificate",
            Params::PrckoFrcko(PrckoFrcko {
                step: 0.05,
                t_max: 50.0,
                modulations: vec![Modulation::Constant { re: 0.5, im: 0.5 }, Modulation::Oscillating { a: 2.0, b: 0.0 }],
                c: 0.5,
                decaying: vec![Modulation::Exponential { re: -1.0, im: 0.0 }],
            }),
            vec![expect("modulus", 1e-12, "relative gap between modulated orbits and |f_j(t)| times the base orbit")],
        ),
        scenario(
            "ml-orbit",
            "Remark dist-chaos-remark",
            "Mittag-Leffler evaluation against exp and erfc, and orbit growth of E_alpha(t^alpha lambda) C x",
            Params::MlOrbit(MlOrbit { alpha: 0.5, lambda: [1.0, 0.0], samples: 100, radius: 5.0, erfc_points: 301, t_near: 5.0, t_far: 10.0 }),
            vec![
                expect("exp", 1e-10, "|E_1,1(z) - e^z| on the seeded disc sample"),
                expect("erfc", 1e-8, "relative error of E_1/2,1(x) against e^(x^2) erfc(-x) on [0, 3]"),
                expect("growth", 10.0, "orbit norm ratio t_far / t_near must exceed this"),
            ],
        ),
        scenario(
            "integrated-semigroup",
            "Example jebiga-radu",
            "Integrated translation semigroup components against a finite-difference derivative oracle",
            Params::IntegratedSemigroup(IntegratedSemigroup { n: 1, t: 1.0, bump_width: 4.0, fd_step: 1e-4, t_end: 5.0 }),
            vec![expect("derivative", 1e-6, "max gap between psi_1 and B(. + t) + t B'(. + t) by central differences")],
        ),
        scenario(
            "ns-faul",
            "Example ns-faul",
            "Damped composition semigroup: e^(-eps t) ||T(t)|.||| = e^(t/2)/2 and decay on compact supports",
            Params::NsFaul(NsFaul {
                rate: 1.0,
                damping: 0.5,
                q: 1.0,
                t_end: 20.0,
                t_step: 0.5,
                pool: vec![
                    ScalarFunction::cubic_bump(0.0, 2.0),
                    ScalarFunction::cubic_bump(3.0, 2.0),
                    ScalarFunction::Indicator { lo: 0.5, hi: 1.5 },
                ],
            }),
            vec![
                expect("closed-form", 0.02, "relative gap to e^(t/2)/2 on the time grid"),
                expect("decay", 1e-3, "pool orbit norms at t_end must fall below this"),
            ],
        ),
        scenario(
            "banach-windows",
            "Proposition banach-space",
            "Window emptiness for the (2B, 3B) certificate under m_n = n and m_n = 2n",
            Params::BanachWindows(BanachWindows {
                scales: vec![2.0, 3.0],
                horizon: 10_000,
                s_max: 20,
                sigma: 1e-3,
                eps: 1e3,
                m_slopes: vec![1.0, 2.0],
            }),
            vec![],
        ),
    ]
}

pub fn find(name: &str) -> Result<Scenario, CliError> {
    registry()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| CliError::Config(format!("unknown scenario '{name}' (see `lychaos list`)")))
}

pub fn to_json() -> String {
    serde_json::to_string_pretty(&registry()).expect("registry serializes")
}

pub fn from_json(text: &str) -> Result<Vec<Scenario>, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}
