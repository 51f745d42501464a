use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use berknash_core::arbitrage::{
    assemble_qcqp, assemble_qcqp_with, induced_equilibrium_for, kkt_verify, solve_arbitrage, KktReport,
};
use berknash_core::config::ScenarioConfig;
use berknash_core::equilibrium::{solve_bne, solve_nash, vom_bound_check, EquilibriumResult};
use berknash_core::learning::{self, LearningRun, Verdict};
use berknash_core::scenario::{generate_scenario_with, ScenarioOptions};
use berknash_core::timescale::{run_two_timescale, FinalReport};
use berknash_core::{AttentionStructure, Conjecture, ConjectureClass, Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifest::{config_hash, RunManifest};
use crate::{GenerateArgs, Kind, Mode};

/// Designer settings written by `generate`.
pub const GENERATED_BUDGET: f64 = 0.75;
pub const GENERATED_B_HAT: f64 = 0.2;
pub const GENERATED_K1: f64 = 1000.0;

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn attention(cfg: &ScenarioConfig) -> Result<&AttentionStructure> {
    cfg.attention.as_ref().ok_or_else(|| Error::Config("this command needs an `attention` section".into()))
}

pub fn generate(args: &GenerateArgs) -> Result<u8> {
    let opts = ScenarioOptions { sigma: args.sigma, ..Default::default() };
    let sc = generate_scenario_with(args.n, args.degree, args.coverage, args.seed, &opts)?;
    let mut cfg = ScenarioConfig::from_scenario(&sc, args.budget, args.b_hat, args.k1);
    cfg.simulation.seeds = args.seeds;
    cfg.validate()?;
    emit(&cfg.to_json(), args.out.as_deref())?;
    Ok(0)
}

pub fn solve(config: &Path, kind: Kind, out: Option<&Path>) -> Result<u8> {
    let cfg = ScenarioConfig::load(config)?;
    let game = &cfg.game;
    let att = cfg.attention.as_ref();
    let result: EquilibriumResult = match kind {
        Kind::Ne => solve_nash(game)?,
        Kind::BneConst => solve_bne(game, &Conjecture::Constant.into(), att)?,
        Kind::BneGmf => solve_bne(game, &Conjecture::GlobalMeanField.into(), att)?,
        Kind::BneLmf => solve_bne(game, &Conjecture::LocalMeanField.into(), Some(attention(&cfg)?))?,
        Kind::Bne => solve_bne(game, &cfg.conjecture, att)?,
    };
    emit(&to_json(&result), out)?;
    Ok(0)
}

fn parse_scales(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidParams(format!("bad scale {s:?}: {e}")))
        })
        .collect()
}

pub fn vom(config: &Path, scales: &str, out: Option<&Path>) -> Result<u8> {
    let cfg = ScenarioConfig::load(config)?;
    let scales = parse_scales(scales)?;
    let report = vom_bound_check(&cfg.game, attention(&cfg)?, &scales)?;
    let mut text = String::from("scale,vom,cost_ne,cost_bn,delta_g_norm,bound_ok\n");
    for row in &report.rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.scale,
            row.vom + 0.0,
            row.cost_ne, row.cost_bn, row.delta_g_norm, row.bound_ok
        ));
    }
    emit(&text, out)?;
    Ok(0)
}

#[derive(Serialize)]
struct ArbitrageOutput {
    delta: Vec<f64>,
    lambda: f64,
    active: bool,
    f_opt: f64,
    x_induced: Vec<f64>,
    theta_induced: Vec<f64>,
    budget: f64,
    kkt: KktReport,
}

pub fn arbitrage(config: &Path, out: Option<&Path>) -> Result<u8> {
    let cfg = ScenarioConfig::load(config)?;
    let designer = cfg.designer()?;
    let game = &cfg.game;
    let q = match cfg.conjecture.uniform() {
        Some(Conjecture::LocalMeanField) => assemble_qcqp(game, attention(&cfg)?, &designer.alpha, designer.budget)?,
        Some(Conjecture::Constant) => assemble_qcqp_with(game, game.g(), &designer.alpha, designer.budget)?,
        _ => {
            return Err(Error::Config(
                "arbitrage needs a homogeneous constant or local mean-field conjecture".into(),
            ))
        }
    };
    let plan = solve_arbitrage(&q)?;
    let kkt = kkt_verify(&q, &plan);
    let induced = induced_equilibrium_for(game, &cfg.conjecture, cfg.attention.as_ref(), &plan)?;
    let passed = kkt.passed;
    let output = ArbitrageOutput {
        f_opt: plan.objective,
        delta: plan.delta,
        lambda: plan.lambda,
        active: plan.active,
        x_induced: induced.x,
        theta_induced: induced.theta,
        budget: q.budget,
        kkt,
    };
    emit(&to_json(&output), out)?;
    if !passed {
        eprintln!("error: KKT verification failed");
        return Ok(3);
    }
    Ok(0)
}

#[derive(Serialize)]
struct LearningSeed {
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<LearningRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct LearningSummary {
    mode: &'static str,
    seeds: usize,
    failures: usize,
    verdict_counts: BTreeMap<Verdict, usize>,
    runs: Vec<LearningSeed>,
}

#[derive(Serialize)]
struct TwoScaleSeed {
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<String>,
    /// Whether action updates settle before distortion updates.
    #[serde(skip_serializing_if = "Option::is_none")]
    separated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<FinalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct TwoScaleSummary {
    mode: &'static str,
    seeds: usize,
    failures: usize,
    separated: usize,
    runs: Vec<TwoScaleSeed>,
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BERKNASH_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("BERKNASH_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
{
    let mut w = BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn learning_seed(cfg: &ScenarioConfig, seed: u64, dir: &Path) -> Result<LearningSeed> {
    let run = learning::run(&cfg.game, &cfg.conjecture, cfg.attention.as_ref(), &cfg.run_config(), seed)?;
    let name = format!("trace_seed{seed}.csv");
    write_with(&dir.join(&name), |w| run.trace.write_csv(w))?;
    Ok(LearningSeed { seed, trace: Some(name), result: Some(run), error: None })
}

fn two_scale_seed(cfg: &ScenarioConfig, seed: u64, dir: &Path) -> Result<TwoScaleSeed> {
    let ts = cfg.two_scale_config()?;
    let run = run_two_timescale(&cfg.game, attention(cfg)?, &ts, seed)?;
    let trace = format!("trace_seed{seed}.csv");
    let diagnostics = format!("diagnostics_seed{seed}.csv");
    write_with(&dir.join(&trace), |w| run.trace.write_csv(w))?;
    write_with(&dir.join(&diagnostics), |w| run.trace.write_diagnostics(w))?;
    let r = &run.report;
    Ok(TwoScaleSeed {
        seed,
        trace: Some(trace),
        diagnostics: Some(diagnostics),
        separated: Some(r.last_dx_above < r.last_ddelta_above),
        report: Some(run.report),
        error: None,
    })
}

/// Outcome of one seed: listed files, success flag, and the error message.
fn seed_error(seed: u64, err: &Error) -> String {
    log::warn!("seed {seed} failed: {err}");
    err.to_string()
}

pub fn simulate(config: &Path, mode: Mode, seeds: Option<usize>, out: &Path) -> Result<u8> {
    let started = Instant::now();
    let raw = fs::read(config).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", config.display())))?;
    let text = String::from_utf8(raw.clone()).map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?;
    let cfg = ScenarioConfig::from_json(&text)?;
    let count = seeds.unwrap_or(cfg.simulation.seeds);
    if count == 0 {
        return Err(Error::InvalidParams("--seeds must be at least 1".into()));
    }
    // reject configs that cannot run before any worker starts
    match mode {
        Mode::Learning => {}
        Mode::TwoTimescale => {
            cfg.two_scale_config()?;
            if cfg.conjecture.uniform() != Some(Conjecture::LocalMeanField) {
                return Err(Error::Config("two-timescale mode needs a local mean-field conjecture".into()));
            }
            let class = ConjectureClass::Homogeneous(Conjecture::LocalMeanField);
            attention(&cfg)?.validate_for(&cfg.game, &class)?;
            if !(cfg.designer()?.budget > 0.0) {
                return Err(Error::InfeasibleBudget(cfg.designer()?.budget));
            }
        }
    }
    fs::create_dir_all(out)?;
    let seed_list = cfg.seeds(count);
    let pool = thread_pool()?;

    let mut outputs = Vec::new();
    let (summary_text, failures) = match mode {
        Mode::Learning => {
            let runs: Vec<LearningSeed> = pool.install(|| {
                seed_list
                    .par_iter()
                    .map(|&seed| {
                        learning_seed(&cfg, seed, out).unwrap_or_else(|e| LearningSeed {
                            seed,
                            trace: None,
                            result: None,
                            error: Some(seed_error(seed, &e)),
                        })
                    })
                    .collect()
            });
            let mut verdict_counts: BTreeMap<Verdict, usize> = [
                Verdict::ConvergedToNash,
                Verdict::ConvergedToBerkNash,
                Verdict::ConvergedElsewhere,
                Verdict::NotConverged,
            ]
            .into_iter()
            .map(|v| (v, 0))
            .collect();
            for r in runs.iter().filter_map(|r| r.result.as_ref()) {
                *verdict_counts.entry(r.verdict).or_default() += 1;
            }
            outputs.extend(runs.iter().filter_map(|r| r.trace.clone()));
            let failures = runs.iter().filter(|r| r.error.is_some()).count();
            let summary = LearningSummary { mode: "learning", seeds: count, failures, verdict_counts, runs };
            (to_json(&summary), failures)
        }
        Mode::TwoTimescale => {
            let runs: Vec<TwoScaleSeed> = pool.install(|| {
                seed_list
                    .par_iter()
                    .map(|&seed| {
                        two_scale_seed(&cfg, seed, out).unwrap_or_else(|e| TwoScaleSeed {
                            seed,
                            trace: None,
                            diagnostics: None,
                            separated: None,
                            report: None,
                            error: Some(seed_error(seed, &e)),
                        })
                    })
                    .collect()
            });
            for r in &runs {
                outputs.extend(r.trace.clone());
                outputs.extend(r.diagnostics.clone());
            }
            let failures = runs.iter().filter(|r| r.error.is_some()).count();
            let separated = runs.iter().filter(|r| r.separated == Some(true)).count();
            let summary = TwoScaleSummary { mode: "two-timescale", seeds: count, failures, separated, runs };
            (to_json(&summary), failures)
        }
    };
    fs::write(out.join("summary.json"), summary_text)?;
    outputs.push("summary.json".to_string());

    let mode_name = match mode {
        Mode::Learning => "learning",
        Mode::TwoTimescale => "two-timescale",
    };
    let manifest = RunManifest {
        config_hash: config_hash(&raw),
        seed: cfg.simulation.seed,
        seeds: seed_list,
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: format!("simulate --mode {mode_name} --seeds {count}"),
        outputs,
        wall_clock_ms: started.elapsed().as_millis() as u64,
    };
    fs::write(out.join("manifest.json"), to_json(&manifest))?;
    Ok(if failures == count { 3 } else { 0 })
}
