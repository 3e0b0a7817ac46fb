//! `lychaos`: orbits, densities, detectors, synthesis and the scenario registry from
//! the command line. Every command writes its artifacts under `--out`.

pub mod config;
pub mod registry;
pub mod report;
pub mod scenarios;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use lychaos_core::densities::{lower_banach_density, lower_mn_density, Scan};
use lychaos_core::detectors::{classify, classify_irregular, FamilyOrbits, TaxonomyTag};
use lychaos_core::operators::continuous::{ContinuousFamilySpec, GridSource, MittagLefflerOrbit, Semiflow, SemiflowGrid};
use lychaos_core::operators::functions::MultiFunction;
use lychaos_core::operators::{ml_orbit_norm, semiflow_orbit_norm, WeightRule};
use lychaos_core::synthesizer::{synthesize, verify_certificate, ModelSpec, PoolSpec, SynthesisCertificate, SynthesisConfig, SynthesisError};
use lychaos_core::detectors::OrbitSource;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use config::Config;
use report::{Artifacts, Check, OrbitRow, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "lychaos", version, about = "Finite-horizon disjoint Li-Yorke chaos laboratory")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `[run] horizon`.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Overrides `[run] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run independent scenarios on the rayon pool.
    #[arg(long, global = true)]
    pub parallel: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orbit norms `||T_{j,k} x||` of the configured families.
    Orbit,
    /// Lower m_n- and Banach densities of an index set.
    Density {
        /// squares | periodic | explicit (overrides `[densities] set`).
        #[arg(long)]
        set: Option<String>,
        /// linear | power | log (overrides `[densities] m`).
        #[arg(long)]
        m: Option<String>,
    },
    /// Taxonomy verdict for the configured sample.
    Detect,
    /// Synthesize and verify an irregular vector for the configured families.
    Synthesize,
    /// Orbit norms of a continuous family (translation, semiflow or mittag-leffler).
    Semigroup,
    /// Run named scenarios.
    Scenario {
        names: Vec<String>,
        #[arg(long)]
        all: bool,
    },
    /// Replay a certificate.
    Verify { certificate: PathBuf },
    /// List the scenario registry.
    List {
        #[arg(long)]
        json: bool,
    },
}

struct Context {
    config: Config,
    seed: u64,
    horizon: Option<usize>,
    out: PathBuf,
    parallel: bool,
}

/// Runs a parsed command and prints its summary. `Ok(false)` means a check failed.
pub fn run(cli: Cli) -> Result<bool, CliError> {
    let config = Config::load(cli.config.as_deref())?;
    let ctx = Context {
        seed: cli.seed.unwrap_or(config.run.seed),
        horizon: cli.horizon.or(config.run.horizon),
        out: cli.out,
        parallel: cli.parallel,
        config,
    };
    match cli.command {
        Command::Orbit => finish(&ctx, orbit(&ctx)?),
        Command::Density { set, m } => density(&ctx, set, m),
        Command::Detect => finish(&ctx, detect(&ctx)?),
        Command::Synthesize => finish(&ctx, synthesize_cmd(&ctx)?),
        Command::Semigroup => finish(&ctx, semigroup(&ctx)?),
        Command::Scenario { names, all } => scenario_cmd(&ctx, names, all),
        Command::Verify { certificate } => verify(&ctx, &certificate),
        Command::List { json } => {
            list(json);
            Ok(true)
        }
    }
}

fn finish(ctx: &Context, (rep, out): (Report, Artifacts)) -> Result<bool, CliError> {
    out.report(&rep)?;
    print!("{}", rep.summary());
    let _ = ctx;
    Ok(rep.passed)
}

fn artifacts(ctx: &Context, sub: &str) -> Result<Artifacts, CliError> {
    Artifacts::create(&ctx.out.join(sub))
}

fn orbit(ctx: &Context) -> Result<(Report, Artifacts), CliError> {
    let c = &ctx.config;
    let space = c.space.build()?;
    let families = c.operators.build()?;
    let k_max = ctx.horizon.unwrap_or(c.orbit.k_max);
    let x = space.vector(c.orbit.coefficients()?).map_err(|e| CliError::Config(e.to_string()))?;
    let src = FamilyOrbits::new(families, space, k_max).map_err(|e| CliError::Config(e.to_string()))?;
    let mut rows = Vec::new();
    let mut rep = Report::new("orbit", ctx.seed);
    rep.horizon = Some(k_max);
    for j in 0..src.families() {
        let norms = src.orbit_norms(j, &x).map_err(compute)?;
        rep.detail(&format!("final_norm_j{}", j + 1), norms.last().copied());
        rows.extend(norms.into_iter().enumerate().map(|(i, v)| OrbitRow { j: j + 1, k_or_t: (i + 1) as f64, seminorm: 0, value: v }));
    }
    let out = artifacts(ctx, "orbit")?;
    out.orbits(&rows)?;
    Ok((rep, out))
}

fn density(ctx: &Context, set: Option<String>, m: Option<String>) -> Result<bool, CliError> {
    let mut d = ctx.config.densities.clone();
    if let Some(s) = set {
        d.set = s;
    }
    if let Some(m) = m {
        d.m = m;
    }
    let horizon = ctx.horizon.unwrap_or(10_000);
    let a = d.index_set(horizon)?;
    let spec = d.weight()?;
    let m_seq = spec.fit(horizon).map_err(|e| CliError::Config(e.to_string()))?;
    let lower = lower_mn_density(&a, &m_seq, d.n_min.max(1)).map_err(compute)?;
    let s_max = d.banach_s.min(m_seq.len()).max(1);
    let n_end = m_seq.len().saturating_sub(spec.value(s_max).floor() as usize).max(1);
    let banach = lower_banach_density(&a, &m_seq, Scan::new(1, s_max), Scan::new(1, n_end)).map_err(compute)?;
    let value = serde_json::json!({
        "set": d.set,
        "m": spec.label(),
        "horizon": horizon,
        "value": lower.value,
        "estimate": lower,
        "banach": banach.value,
        "banach_estimate": banach,
    });
    let out = artifacts(ctx, "density")?;
    out.json("density.json", &value)?;
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
    Ok(true)
}

fn detect(ctx: &Context) -> Result<(Report, Artifacts), CliError> {
    let c = &ctx.config;
    let d = &c.detectors;
    let space = c.space.build()?;
    let horizon = ctx.horizon.unwrap_or(c.orbit.k_max);
    let src = FamilyOrbits::new(c.operators.build()?, space.clone(), horizon).map_err(|e| CliError::Config(e.to_string()))?;
    let weight = if d.weighted { Some(c.densities.weight()?) } else { None };
    let tag = TaxonomyTag::new(d.s, d.i, weight).map_err(|e| CliError::Config(e.to_string()))?;
    let sample = d
        .sample
        .iter()
        .map(|v| space.vector(v.clone()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let verdict = match d.mode.as_str() {
        "classify" => classify(&tag, &sample, &src, &d.settings),
        "irregular" | "semi-irregular" => {
            let x = sample.first().ok_or_else(|| CliError::Config("[detectors] sample is empty".into()))?;
            classify_irregular(x, &src, &tag, d.mode == "semi-irregular", &d.settings)
        }
        other => return Err(CliError::Config(format!("unknown mode '{other}' (classify, irregular, semi-irregular)"))),
    }
    .map_err(compute)?;
    let mut rep = Report::new("detect", ctx.seed);
    rep.horizon = Some(horizon);
    if let Some(expect) = d.expect {
        rep.check(Check::holds("expected-verdict", verdict.holds_at_horizon == expect));
    }
    rep.detail("verdict", &verdict);
    let out = artifacts(ctx, "detect")?;
    out.json("detect_verdict.json", &verdict)?;
    println!("{}: {}", verdict.claim, if verdict.holds_at_horizon { "holds at horizon" } else { "fails at horizon" });
    Ok((rep, out))
}

fn synthesize_cmd(ctx: &Context) -> Result<(Report, Artifacts), CliError> {
    let c = &ctx.config;
    let s = &c.synthesizer;
    let horizon = ctx.horizon.unwrap_or(2000);
    let model = ModelSpec::Sequence {
        families: c.operators.build()?,
        space: c.space.build()?,
        pool: PoolSpec::Basis { count: s.pool.unwrap_or(horizon) },
    };
    let mut cfg = SynthesisConfig::new(model, horizon, c.densities.weight()?);
    cfg.r1 = s.r1;
    cfg.max_blocks = s.max_blocks;
    cfg.depth = s.depth;
    cfg.settings = c.detectors.settings.clone();
    let cert = synthesize(&cfg).map_err(|e| match e {
        SynthesisError::InvalidConfig(_) | SynthesisError::NotMonomial(_) => CliError::Config(e.to_string()),
        other => compute(other),
    })?;
    let out = artifacts(ctx, "synthesize")?;
    out.json("certificate.json", &cert)?;
    let mut rep = Report::new("synthesize", ctx.seed);
    rep.horizon = Some(horizon);
    verify_into(&cert, &mut rep);
    let model = cert.config.model.build(horizon).map_err(compute)?;
    let src: &dyn OrbitSource = model.as_ref();
    out.orbits(&trace_rows(src, &cert)?)?;
    Ok((rep, out))
}

fn trace_rows(src: &dyn OrbitSource, cert: &SynthesisCertificate) -> Result<Vec<OrbitRow>, CliError> {
    let traces = src.traces(&cert.x_beta).map_err(compute)?;
    Ok(traces
        .iter()
        .flat_map(|t| t.indices.iter().zip(&t.seminorm).map(|(k, v)| OrbitRow { j: t.j, k_or_t: *k as f64, seminorm: 1, value: *v }))
        .collect())
}

fn verify_into(cert: &SynthesisCertificate, rep: &mut Report) {
    match verify_certificate(cert) {
        Ok(v) => {
            rep.check(Check::holds("verify", v.holds_at_horizon).note(v.claim.clone()));
            rep.detail("verify", &v);
        }
        Err(e) => rep.check(Check::holds("verify", false).note(e.to_string())),
    }
}

fn semigroup(ctx: &Context) -> Result<(Report, Artifacts), CliError> {
    let g = &ctx.config.semigroup;
    let times = g.times()?;
    let bad = |e: lychaos_core::operators::OperatorError| CliError::Config(e.to_string());
    let values: Vec<f64> = match g.kind.as_str() {
        "translation" => {
            let fam = ContinuousFamilySpec::translation(g.rho.clone(), ctx.config.space.norm_exponent(), g.step, g.length);
            let f = GridSource::Analytic { f: g.f.clone() };
            times.iter().map(|&t| fam.function_orbit_norm(&f, t)).collect::<Result<_, _>>().map_err(compute)?
        }
        "semiflow" => {
            let flow = Semiflow::new(g.rates.clone(), g.damping, g.q).map_err(bad)?;
            let grid = SemiflowGrid::default();
            let f = MultiFunction::Radial { profile: g.f.clone() };
            times.iter().map(|&t| semiflow_orbit_norm(&flow, &f, t, &grid)).collect::<Result<_, _>>().map_err(compute)?
        }
        "mittag-leffler" => {
            let orbit = MittagLefflerOrbit::new(g.alpha, Complex64::new(g.lambda[0], g.lambda[1]), WeightRule::constant(1.0)).map_err(bad)?;
            let space = ctx.config.space.build()?;
            let x = space.vector(ctx.config.orbit.coefficients()?).map_err(|e| CliError::Config(e.to_string()))?;
            let norm = ctx.config.space.norm_exponent();
            times.iter().map(|&t| ml_orbit_norm(&orbit, &x, norm, t)).collect::<Result<_, _>>().map_err(compute)?
        }
        other => return Err(CliError::Config(format!("unknown semigroup '{other}' (translation, semiflow, mittag-leffler)"))),
    };
    let mut rep = Report::new(format!("semigroup {}", g.kind), ctx.seed);
    rep.detail("final_norm", values.last().copied());
    let out = artifacts(ctx, "semigroup")?;
    let rows: Vec<OrbitRow> = times.iter().zip(&values).map(|(&t, &v)| OrbitRow { j: 1, k_or_t: t, seminorm: 0, value: v }).collect();
    out.orbits(&rows)?;
    Ok((rep, out))
}

fn scenario_cmd(ctx: &Context, names: Vec<String>, all: bool) -> Result<bool, CliError> {
    let chosen: Vec<registry::Scenario> = if all {
        registry::registry()
    } else if names.is_empty() {
        return Err(CliError::Config("name at least one scenario or pass --all".into()));
    } else {
        names.iter().map(|n| registry::find(n)).collect::<Result<_, _>>()?
    };
    let mut prepared = Vec::with_capacity(chosen.len());
    for mut sc in chosen {
        if let Some(h) = ctx.horizon {
            sc = sc.with_horizon(h);
        }
        if let Some(o) = ctx.config.scenarios.get(&sc.name) {
            sc = sc.with_overrides(o)?;
        }
        let out = artifacts(ctx, &sc.name)?;
        prepared.push((sc, out));
    }
    let run_one = |(sc, out): &(registry::Scenario, Artifacts)| scenarios::run(sc, ctx.seed, out);
    let reports: Vec<Result<Report, CliError>> =
        if ctx.parallel { prepared.par_iter().map(run_one).collect() } else { prepared.iter().map(run_one).collect() };
    let mut passed = true;
    for r in reports {
        let r = r?;
        print!("{}", r.summary());
        passed &= r.passed;
    }
    Ok(passed)
}

fn verify(ctx: &Context, path: &Path) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cert = SynthesisCertificate::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut rep = Report::new("verify", ctx.seed);
    rep.horizon = Some(cert.config.horizon);
    verify_into(&cert, &mut rep);
    let out = artifacts(ctx, "verify")?;
    finish(ctx, (rep, out))
}

fn list(json: bool) {
    if json {
        println!("{}", registry::to_json());
        return;
    }
    for sc in registry::registry() {
        println!("{:<22} {:<28} {}", sc.name, sc.anchor, sc.description);
    }
}
