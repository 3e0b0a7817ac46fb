//! TOML run configuration. Every section is optional; missing keys take the defaults
//! below.
//!
//! ```toml
//! [run]
//! seed = 7                 # drives every random test vector; echoed in each artifact
//! horizon = 2000           # K (discrete) or the number of time steps (continuous)
//!
//! [space]
//! norm = "l1"              # l1 | l2 | c0 | lp (with p = ...)
//! p = 1.5
//!
//! [operators]
//! families = ["backward:const=2", "backward:const=3"]
//!
//! [orbit]
//! basis = 1                # start vector e_basis, or give coefficients:
//! vector = [1.0, 0.5]
//! k_max = 100
//!
//! [densities]
//! set = "squares"          # squares | periodic | explicit
//! period = 3
//! residues = [0]
//! elements = []
//! m = "linear"             # linear | power | log
//! c = 1.0
//! exponent = 1.0
//! n_min = 1
//! banach_s = 20
//!
//! [detectors]
//! s = 1
//! i = 1
//! weighted = true          # attach m_n from [densities] to the tag
//! mode = "irregular"       # irregular | semi-irregular | classify
//! sample = [[1.0], [2.0]]  # coefficient lists; the first is x for (semi-)irregular
//! expect = true            # optional: exit 1 when the verdict differs
//!
//! [detectors.settings]     # any DetectorSettings field
//! tol_density = 0.05
//!
//! [synthesizer]
//! pool = 2000              # basis pool size, defaults to the horizon
//! r1 = 4
//! max_blocks = 8
//! depth = 12
//! m_c = 1.0                # m_n = m_c n
//!
//! [semigroup]
//! kind = "translation"     # translation | semiflow | mittag-leffler
//! rho = { fn = "exp", rate = -1.0, amplitude = 1.0 }
//! f = { fn = "b_spline", degree = 3, center = 2.0, width = 4.0, amplitude = 1.0 }
//! step = 0.05
//! length = 100.0
//! t_end = 20.0
//! t_step = 0.5
//! rates = [1.0]
//! damping = 0.5
//! q = 1.0
//! alpha = 0.5
//! lambda = [1.0, 0.0]
//!
//! [scenarios.prika-shift]  # overrides of a registered scenario's parameters
//! cesaro_n = 500
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use lychaos_core::densities::{IndexSet, WeightSpec};
use lychaos_core::detectors::DetectorSettings;
use lychaos_core::operators::discrete::{FamilySpec, OperatorSpec};
use lychaos_core::operators::functions::ScalarFunction;
use lychaos_core::operators::WeightRule;
use lychaos_core::space::{NormExponent, SpaceSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub run: RunSection,
    pub space: SpaceSection,
    pub operators: OperatorsSection,
    pub orbit: OrbitSection,
    pub densities: DensitySection,
    pub detectors: DetectorSection,
    pub synthesizer: SynthSection,
    pub semigroup: SemigroupSection,
    /// Raw per-scenario overrides, merged over the registered parameters.
    pub scenarios: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub horizon: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 7, horizon: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceSection {
    pub norm: String,
    pub p: f64,
}

impl Default for SpaceSection {
    fn default() -> Self {
        Self { norm: "l1".into(), p: 2.0 }
    }
}

impl SpaceSection {
    pub fn build(&self) -> Result<SpaceSpec, CliError> {
        match self.norm.as_str() {
            "l1" => Ok(SpaceSpec::l1()),
            "l2" => Ok(SpaceSpec::l2()),
            "c0" => Ok(SpaceSpec::c0()),
            "lp" => SpaceSpec::lp(self.p).map_err(|e| CliError::Config(e.to_string())),
            other => Err(CliError::Config(format!("unknown space norm '{other}' (l1, l2, c0, lp)"))),
        }
    }

    pub fn norm_exponent(&self) -> NormExponent {
        match self.norm.as_str() {
            "l1" => NormExponent::Finite(1.0),
            "l2" => NormExponent::Finite(2.0),
            "lp" => NormExponent::Finite(self.p),
            _ => NormExponent::Sup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorsSection {
    pub families: Vec<String>,
}

impl Default for OperatorsSection {
    fn default() -> Self {
        Self { families: vec!["backward:const=2".into(), "backward:const=3".into()] }
    }
}

impl OperatorsSection {
    pub fn build(&self) -> Result<Vec<FamilySpec>, CliError> {
        if self.families.is_empty() {
            return Err(CliError::Config("[operators] families is empty".into()));
        }
        self.families.iter().map(|s| parse_family(s)).collect()
    }
}

/// `kind[:weights]` with kind in {backward, forward, diagonal, identity} and weights one
/// of `const=v`, `wallis=z`, `blocks`, `blocks-inverse`.
pub fn parse_family(text: &str) -> Result<FamilySpec, CliError> {
    let bad = |why: &str| CliError::Config(format!("family '{text}': {why}"));
    let (kind, weights) = match text.split_once(':') {
        Some((k, w)) => (k.trim(), Some(w.trim())),
        None => (text.trim(), None),
    };
    let rule = match weights {
        None => WeightRule::constant(1.0),
        Some("blocks") => WeightRule::default_blocks(),
        Some("blocks-inverse") => WeightRule::default_blocks().reciprocal(),
        Some(w) => {
            let (name, value) = w.split_once('=').ok_or_else(|| bad("weights need name=value"))?;
            let v: f64 = value.trim().parse().map_err(|_| bad("weight value is not a number"))?;
            match name.trim() {
                "const" => WeightRule::constant(v),
                "wallis" => WeightRule::Wallis { exponent: v },
                _ => return Err(bad("weights are const=, wallis=, blocks or blocks-inverse")),
            }
        }
    };
    let op = match kind {
        "backward" => OperatorSpec::backward(rule),
        "forward" => OperatorSpec::forward(rule),
        "diagonal" => OperatorSpec::diagonal(rule),
        "identity" if weights.is_none() => OperatorSpec::identity(),
        _ => return Err(bad("kind is backward, forward, diagonal or identity")),
    };
    op.validate().map_err(|e| bad(&e.to_string()))?;
    Ok(FamilySpec::power(op))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSection {
    pub basis: Option<usize>,
    pub vector: Vec<f64>,
    pub k_max: usize,
}

impl Default for OrbitSection {
    fn default() -> Self {
        Self { basis: None, vector: Vec::new(), k_max: 100 }
    }
}

impl OrbitSection {
    /// Start coefficients; a basis vector is padded so backward powers stay in range.
    pub fn coefficients(&self) -> Result<Vec<f64>, CliError> {
        match (self.basis, self.vector.is_empty()) {
            (Some(_), false) => Err(CliError::Config("[orbit] give either basis or vector".into())),
            (Some(0), _) => Err(CliError::Config("[orbit] basis index starts at 1".into())),
            (Some(i), true) => {
                let mut c = vec![0.0; i];
                c[i - 1] = 1.0;
                Ok(c)
            }
            (None, false) => Ok(self.vector.clone()),
            (None, true) => Ok(vec![1.0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub set: String,
    pub period: usize,
    pub residues: Vec<usize>,
    pub elements: Vec<usize>,
    pub m: String,
    pub c: f64,
    pub exponent: f64,
    pub n_min: usize,
    pub banach_s: usize,
}

impl Default for DensitySection {
    fn default() -> Self {
        Self {
            set: "squares".into(),
            period: 3,
            residues: vec![0],
            elements: Vec::new(),
            m: "linear".into(),
            c: 1.0,
            exponent: 1.0,
            n_min: 1,
            banach_s: 20,
        }
    }
}

impl DensitySection {
    pub fn index_set(&self, horizon: usize) -> Result<IndexSet, CliError> {
        match self.set.as_str() {
            "squares" => Ok(IndexSet::squares(horizon)),
            "periodic" => {
                if self.period == 0 || self.residues.iter().any(|&r| r >= self.period) {
                    return Err(CliError::Config("[densities] residues must lie in [0, period)".into()));
                }
                Ok(IndexSet::periodic(self.period, self.residues.clone(), horizon))
            }
            "explicit" => IndexSet::from_elements(self.elements.clone(), horizon, None).map_err(|e| CliError::Config(e.to_string())),
            other => Err(CliError::Config(format!("unknown set '{other}' (squares, periodic, explicit)"))),
        }
    }

    pub fn weight(&self) -> Result<WeightSpec, CliError> {
        match self.m.as_str() {
            "linear" => Ok(WeightSpec::Linear { c: self.c }),
            "power" => Ok(WeightSpec::Power { c: self.c, exponent: self.exponent }),
            "log" => Ok(WeightSpec::Log),
            other => Err(CliError::Config(format!("unknown weight sequence '{other}' (linear, power, log)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub s: u8,
    pub i: u8,
    pub weighted: bool,
    pub mode: String,
    pub sample: Vec<Vec<f64>>,
    pub expect: Option<bool>,
    pub settings: DetectorSettings,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            s: 2,
            i: 4,
            weighted: false,
            mode: "classify".into(),
            sample: vec![vec![1.0], vec![2.0]],
            expect: None,
            settings: DetectorSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub pool: Option<usize>,
    pub r1: usize,
    pub max_blocks: usize,
    pub depth: usize,
    pub m_c: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self { pool: None, r1: 4, max_blocks: 8, depth: 12, m_c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemigroupSection {
    pub kind: String,
    pub rho: ScalarFunction,
    pub f: ScalarFunction,
    pub step: f64,
    pub length: f64,
    pub t_end: f64,
    pub t_step: f64,
    pub rates: Vec<f64>,
    pub damping: f64,
    pub q: f64,
    pub alpha: f64,
    pub lambda: [f64; 2],
}

impl Default for SemigroupSection {
    fn default() -> Self {
        Self {
            kind: "translation".into(),
            rho: ScalarFunction::Exp { rate: -1.0, amplitude: 1.0 },
            f: ScalarFunction::cubic_bump(2.0, 4.0),
            step: 0.05,
            length: 100.0,
            t_end: 20.0,
            t_step: 0.5,
            rates: vec![1.0],
            damping: 0.5,
            q: 1.0,
            alpha: 0.5,
            lambda: [1.0, 0.0],
        }
    }
}

impl SemigroupSection {
    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        if !(self.t_step > 0.0 && self.t_end >= 0.0) {
            return Err(CliError::Config("[semigroup] needs t_step > 0 and t_end >= 0".into()));
        }
        let n = (self.t_end / self.t_step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| i as f64 * self.t_step).collect())
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}
