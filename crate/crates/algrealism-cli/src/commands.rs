//! Subcommand implementations.
//!
//! Each runner resolves its parameters (flags over config), delegates to
//! the library, and returns an [`Outcome`]: the JSON report, the CSV
//! verdict rows, and the process exit code (0 pass, 2 bound violation;
//! input errors surface as `Err` and exit 1).

use crate::args::*;
use crate::inputs::{build_critic, distortion_from, kernel_from, require, source_from, Resolver};
use algrealism::codec::{Codebook, EncoderMode, OneShotCode};
use algrealism::critics::{Critic, ValidityMode};
use algrealism::experiments::report::{config_hash, CsvRow, Estimate, TOOL_VERSION};
use algrealism::experiments::{
    derandomization_gap, estimation_rejection, run_separation, simulate_batch,
    small_codebook_score_bound, soft_covering_gap, one_shot_certificate, CapRule, DerandOptions,
    MassMode, RunSepOptions, SimOptions,
};
use algrealism::prob::{Block, FiniteSource};
use algrealism::rdp::{rd_function_classical, rdp_binary_oracle, rdp_function};
use algrealism::rng::derive_seed;
use algrealism::tol;
use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use std::path::PathBuf;

/// Seed label separating the simulation codebook stream from trial streams.
const CODEBOOK_LABEL: u64 = 0xB00C;

/// What a subcommand produced.
pub struct Outcome {
    /// Full JSON report (printed to stdout, optionally written to --json).
    pub report: Value,
    /// Flat verdict rows (optionally written to --csv).
    pub rows: Vec<CsvRow>,
    /// Process exit code: 0 pass, 2 bound violation.
    pub exit: u8,
}

pub fn run(command: &Command, r: &Resolver) -> Result<Outcome> {
    match command {
        Command::Rdp(a) => run_rdp(a, r),
        Command::Critic(CriticCommand::Verify(a)) => run_critic_verify(a, r),
        Command::Critic(CriticCommand::Score(a)) => run_critic_score(a, r),
        Command::Simulate(a) => run_simulate(a, r),
        Command::Certify(a) => run_certify(a, r),
        Command::Softcover(a) => run_softcover(a, r),
        Command::Runsep(a) => run_runsep(a, r),
        Command::Derand(a) => run_derand(a, r),
        Command::Estimate(a) => run_estimate(a, r),
    }
}

fn source_of(r: &Resolver, flag: &Option<String>) -> Result<FiniteSource> {
    source_from(require(r.floats(flag, "pmf")?, "--pmf")?)
}

fn mass_mode_of(r: &Resolver, mode: &Option<String>, trials: Option<u64>) -> Result<MassMode> {
    let id = r
        .string(mode.clone(), "mass_mode")?
        .unwrap_or_else(|| "exact".to_string());
    match id.as_str() {
        "exact" => Ok(MassMode::Exact),
        "mc" => Ok(MassMode::MonteCarlo {
            trials: r.u64(trials, "mass_trials")?.unwrap_or(100_000),
        }),
        other => bail!("unknown mass mode {other:?} (exact | mc)"),
    }
}

fn run_rdp(a: &RdpArgs, r: &Resolver) -> Result<Outcome> {
    let source = source_of(r, &a.pmf)?;
    let delta = require(r.f64(a.delta, "delta")?, "--delta")?;
    let d = distortion_from(
        r.flag(a.hamming, "hamming")?,
        r.matrix(&a.distortion, "distortion")?,
        source.k(),
    )?;
    let oracle_grid = r.usize(a.oracle_grid, "oracle_grid")?.unwrap_or(2001);

    let solution = rdp_function(&source, &d, delta)?;
    let classical = rd_function_classical(&source, &d, delta)?;
    let oracle = if source.k() == 2 {
        Some(rdp_binary_oracle(&source, &d, delta, oracle_grid)?)
    } else {
        None
    };

    let config = json!({
        "command": "rdp",
        "pmf": source.pmf(),
        "distortion": d.rows(),
        "delta": delta,
        "oracle_grid": oracle_grid,
    });
    let hash = config_hash(&config);
    let kernel: Vec<Vec<f64>> = (0..source.k())
        .map(|x| solution.kernel.row(x).to_vec())
        .collect();
    let report = json!({
        "tool_version": TOOL_VERSION,
        "config_hash": hash,
        "rate_bits": solution.rate_bits,
        "achieved_distortion": solution.achieved_distortion,
        "marginal_gap": solution.marginal_gap,
        "multiplier": solution.multiplier,
        "source_entropy_bits": solution.source_entropy_bits,
        "rate_below_entropy": solution.rate_below_entropy(),
        "classical_rate_bits": classical,
        "oracle_rate_bits": oracle,
        "kernel": kernel,
        "config": config,
    });
    let mut rows = vec![
        CsvRow::value(&hash, "rate_bits", solution.rate_bits),
        CsvRow::value(&hash, "achieved_distortion", solution.achieved_distortion),
        CsvRow::value(&hash, "marginal_gap", solution.marginal_gap),
        CsvRow::value(&hash, "classical_rate_bits", classical),
    ];
    if let Some(o) = oracle {
        rows.push(CsvRow::value(&hash, "oracle_rate_bits", o));
    }
    Ok(Outcome {
        report,
        rows,
        exit: 0,
    })
}

/// Everything that pins a critic down for the config hash: its label
/// (kind plus key parameters), construction parameters including fitted
/// quantities, and the base pmf.
fn critic_echo(critic: &Critic) -> Value {
    json!({
        "label": critic.label(),
        "params": critic.metadata(),
        "pmf": critic.base().pmf(),
    })
}

/// Builds the critic shared by the two critic subcommands; the run critic
/// carries its own Bernoulli base, everything else needs --pmf.
fn critic_of(r: &Resolver, pmf: &Option<String>, spec: &CriticSpecArgs) -> Result<Critic> {
    let base = r.floats(pmf, "pmf")?.map(source_from).transpose()?;
    require(
        build_critic(spec, r, base.as_ref())?,
        "--kind or --critic-json",
    )
}

fn run_critic_verify(a: &CriticVerifyArgs, r: &Resolver) -> Result<Outcome> {
    let critic = critic_of(r, &a.pmf, &a.spec)?;
    let n = require(r.usize(a.n, "n")?, "--n")?;
    let mode_id = r
        .string(a.mode.clone(), "mode")?
        .unwrap_or_else(|| "exhaustive".to_string());
    let seed = r.u64(a.seed, "seed")?.unwrap_or(0);
    let trials = r.u64(a.trials, "trials")?.unwrap_or(100_000);
    let mode = match mode_id.as_str() {
        "exhaustive" => ValidityMode::Exhaustive,
        "mc" => ValidityMode::MonteCarlo { trials, seed },
        other => bail!("unknown verification mode {other:?} (exhaustive | mc)"),
    };
    let with_stats = r.flag(a.stats, "stats")?;

    let validity = critic.check_validity(n, mode)?;
    let stats = if with_stats {
        Some(critic.positive_part_stats(n)?)
    } else {
        None
    };

    let config = json!({
        "command": "critic verify",
        "critic": critic_echo(&critic),
        "n": n,
        "mode": mode_id,
        "trials": if mode_id == "mc" { Some(trials) } else { None },
        "stats": with_stats,
    });
    let hash = config_hash(&config);
    let pass = validity.pass && stats.as_ref().is_none_or(|s| s.pass());
    let report = json!({
        "tool_version": TOOL_VERSION,
        "config_hash": hash,
        "seed": seed,
        "validity": validity,
        "stats": stats,
        "pass": pass,
        "config": config,
    });

    let mut rows = vec![CsvRow {
        config_hash: hash.clone(),
        metric: format!("validity_budget(n={n})"),
        estimate: Some(validity.budget),
        half_width: validity.half_width,
        bound: Some(1.0),
        pass: Some(validity.pass),
    }];
    if let Some(s) = &stats {
        let moment = |metric: &str, value: f64, bound: f64| CsvRow {
            config_hash: hash.clone(),
            metric: metric.to_string(),
            estimate: Some(value),
            half_width: None,
            bound: Some(bound),
            pass: Some(value <= bound + tol::VALIDITY_SLACK),
        };
        rows.push(moment("e_exp_positive", s.e_exp_positive, 2.0));
        rows.push(moment("e_positive", s.e_positive, 1.0));
        rows.push(moment("max_positive", s.max_positive, s.max_budget));
    }
    Ok(Outcome {
        report,
        rows,
        exit: if pass { 0 } else { 2 },
    })
}

fn run_critic_score(a: &CriticScoreArgs, r: &Resolver) -> Result<Outcome> {
    let critic = critic_of(r, &a.pmf, &a.spec)?;
    let path = match &a.blocks {
        Some(p) => p.clone(),
        None => PathBuf::from(require(r.string(None, "blocks")?, "--blocks")?),
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read blocks file {}", path.display()))?;

    let k = critic.base().k();
    let mut lines = Vec::new();
    let mut scores = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let digits = raw.trim();
        if digits.is_empty() {
            continue;
        }
        let block = Block::from_digits(k, digits)
            .with_context(|| format!("blocks file line {}", idx + 1))?;
        let score = critic.score(&block)?;
        lines.push(json!({ "block": digits, "score": score }));
        scores.push((digits.to_string(), score));
    }
    if scores.is_empty() {
        bail!("blocks file {} holds no blocks", path.display());
    }
    let mean = if scores.len() >= 2 {
        Some(Estimate::from_samples(
            &scores.iter().map(|(_, s)| *s).collect::<Vec<_>>(),
        )?)
    } else {
        None
    };

    let config = json!({
        "command": "critic score",
        "critic": critic_echo(&critic),
        "blocks": path.display().to_string(),
    });
    let hash = config_hash(&config);
    let report = json!({
        "tool_version": TOOL_VERSION,
        "config_hash": hash,
        "scores": lines,
        "mean_score": mean,
        "config": config,
    });
    let mut rows: Vec<CsvRow> = scores
        .iter()
        .map(|(digits, s)| CsvRow::value(&hash, &format!("score({digits})"), *s))
        .collect();
    if let Some(m) = mean {
        rows.push(CsvRow::plain(&hash, "mean_score", m));
    }
    Ok(Outcome {
        report,
        rows,
        exit: 0,
    })
}

fn run_simulate(a: &SimulateArgs, r: &Resolver) -> Result<Outcome> {
    let source = source_of(r, &a.pmf)?;
    let kernel = kernel_from(
        r.f64(a.bsc, "bsc")?,
        r.matrix(&a.kernel, "kernel")?,
        source.k(),
    )?;
    let d = distortion_from(
        r.flag(a.hamming, "hamming")?,
        r.matrix(&a.distortion, "distortion")?,
        source.k(),
    )?;
    let n = require(r.usize(a.n, "n")?, "--n")?;
    let rate = require(r.f64(a.rate, "rate")?, "--rate")?;
    let batch = r.usize(a.batch, "batch")?.unwrap_or(1);
    let trials = r.u64(a.trials, "trials")?.unwrap_or(100_000);
    let seed = r.u64(a.seed, "seed")?.unwrap_or(0);
    let encoder = EncoderMode::from_id(
        &r.string(a.encoder.clone(), "encoder")?
            .unwrap_or_else(|| "posterior".to_string()),
    )?;
    let critic = build_critic(&a.spec, r, Some(&source))?;

    let codebook = Codebook::sample(&source, n, rate, derive_seed(seed, CODEBOOK_LABEL))?;
    let code = OneShotCode::new(source, kernel, codebook, encoder)?;
    let critics: Vec<&Critic> = critic.iter().collect();
    let report = simulate_batch(
        &code,
        &d,
        &critics,
        &SimOptions {
            batch,
            trials,
            seed,
        },
    )?;
    let rows = report.csv_rows();
    Ok(Outcome {
        report: serde_json::to_value(&report)?,
        rows,
        exit: 0,
    })
}

fn run_certify(a: &CertifyArgs, r: &Resolver) -> Result<Outcome> {
    let source = source_of(r, &a.pmf)?;
    let kernel = kernel_from(
        r.f64(a.bsc, "bsc")?,
        r.matrix(&a.kernel, "kernel")?,
        source.k(),
    )?;
    let d = distortion_from(
        r.flag(a.hamming, "hamming")?,
        r.matrix(&a.distortion, "distortion")?,
        source.k(),
    )?;
    let n = require(r.usize(a.n, "n")?, "--n")?;
    let rate = require(r.f64(a.rate, "rate")?, "--rate")?;
    let batch = r.usize(a.batch, "batch")?.unwrap_or(1);
    let delta = require(r.f64(a.delta, "delta")?, "--delta")?;
    let epsilon = require(r.f64(a.epsilon, "epsilon")?, "--epsilon")?;
    let gamma = require(r.f64(a.gamma, "gamma")?, "--gamma")?;
    let mass_mode = mass_mode_of(r, &a.mass_mode, a.mass_trials)?;
    let codebooks = r.u64(a.codebooks, "codebooks")?.unwrap_or(1000);
    let draws = r.u64(a.draws, "draws")?.unwrap_or(100);
    let seed = r.u64(a.seed, "seed")?.unwrap_or(0);
    let simulate_trials = r.u64(a.simulate_trials, "simulate_trials")?;

    let critic = match build_critic(&a.spec, r, Some(&source))? {
        Some(c) => c,
        None => Critic::frequency(&source, source.k() - 1)?,
    };

    let certificate = one_shot_certificate(
        &source, &kernel, &d, n, rate, batch, delta, epsilon, gamma, mass_mode, seed,
    )?;
    let small = small_codebook_score_bound(
        &source,
        rate,
        batch,
        &critic,
        codebooks,
        draws,
        derive_seed(seed, 1),
    )?;

    let mut rows = certificate.csv_rows();
    rows.extend(small.csv_rows());
    let mut pass = small.pass;

    // Optional empirical validation of the certified bounds.
    let simulated = match simulate_trials {
        Some(trials) => {
            let codebook = Codebook::sample(&source, n, rate, derive_seed(seed, CODEBOOK_LABEL))?;
            let code = OneShotCode::new(source, kernel, codebook, EncoderMode::Posterior)?;
            let report = simulate_batch(
                &code,
                &d,
                &[&critic],
                &SimOptions {
                    batch,
                    trials,
                    seed: derive_seed(seed, 2),
                },
            )?;
            rows.push(CsvRow::checked(
                &certificate.config_hash,
                "simulated_distortion",
                report.distortion,
                certificate.distortion_bound,
            ));
            pass &= report.distortion.within(certificate.distortion_bound);
            for c in &report.critic_scores {
                rows.push(CsvRow::checked(
                    &certificate.config_hash,
                    &format!("simulated_score::{}", c.critic),
                    c.estimate,
                    certificate.score_bound,
                ));
                pass &= c.estimate.within(certificate.score_bound);
            }
            Some(serde_json::to_value(&report)?)
        }
        None => None,
    };

    // Top-level hash covering the composite run; the nested reports carry
    // their own hashes over their individual configs.
    let config = json!({
        "command": "certify",
        "certificate": certificate.config_hash,
        "small_codebook": small.config_hash,
        "simulate_trials": simulate_trials,
    });
    let hash = config_hash(&config);
    let report = json!({
        "tool_version": TOOL_VERSION,
        "config_hash": hash,
        "seed": seed,
        "certificate": certificate,
        "small_codebook": small,
        "simulated": simulated,
        "pass": pass,
        "config": config,
    });
    Ok(Outcome {
        report,
        rows,
        exit: if pass { 0 } else { 2 },
    })
}

fn run_softcover(a: &SoftcoverArgs, r: &Resolver) -> Result<Outcome> {
    let source = source_of(r, &a.pmf)?;
    let kernel = kernel_from(
        r.f64(a.bsc, "bsc")?,
        r.matrix(&a.kernel, "kernel")?,
        source.k(),
    )?;
    let n = require(r.usize(a.n, "n")?, "--n")?;
    let rate = require(r.f64(a.rate, "rate")?, "--rate")?;
    let gamma = require(r.f64(a.gamma, "gamma")?, "--gamma")?;
    let codebooks = r.u64(a.codebooks, "codebooks")?.unwrap_or(1000);
    let mass_mode = mass_mode_of(r, &a.mass_mode, a.mass_trials)?;
    let seed = r.u64(a.seed, "seed")?.unwrap_or(0);

    let report = soft_covering_gap(&source, &kernel, n, rate, gamma, codebooks, mass_mode, seed)?;
    let rows = report.csv_rows();
    let exit = if report.pass { 0 } else { 2 };
    Ok(Outcome {
        report: serde_json::to_value(&report)?,
        rows,
        exit,
    })
}

fn run_runsep(a: &RunsepArgs, r: &Resolver) -> Result<Outcome> {
    let q = require(r.f64(a.q, "q")?, "--q")?;
    let lengths = r
        .usizes(&a.lengths, "lengths")?
        .unwrap_or_else(|| vec![256, 1024, 4096]);
    let trials = r.u64(a.trials, "trials")?.unwrap_or(100_000);
    let cap_rule = CapRule::from_id(
        &r.string(a.cap_rule.clone(), "cap_rule")?
            .unwrap_or_else(|| "loglog".to_string()),
    )?;
    let seed = r.u64(a.seed, "seed")?.unwrap_or(0);

    let report = run_separation(
        q,
        &RunSepOptions {
            lengths,
            trials,
            seed,
            cap_rule,
        },
    )?;
    let rows = report.csv_rows();
    // The i.i.d. series must stay within the critic's unit score budget.
    let exit = if report.points.iter().all(|p| p.iid.within(1.0)) {
        0
    } else {
        2
    };
    Ok(Outcome {
        report: serde_json::to_value(&report)?,
        rows,
        exit,
    })
}

fn run_derand(a: &DerandArgs, r: &Resolver) -> Result<Outcome> {
    let source = source_of(r, &a.pmf)?;
    let kernel = kernel_from(
        r.f64(a.bsc, "bsc")?,
        r.matrix(&a.kernel, "kernel")?,
        source.k(),
    )?;
    let ns = r.usizes(&a.ns, "ns")?.unwrap_or_else(|| vec![4, 8, 12]);
    let rate_per_symbol = require(
        r.f64(a.rate_per_symbol, "rate_per_symbol")?,
        "--rate-per-symbol",
    )?;
    let trials = r.u64(a.trials, "trials")?.unwrap_or(100_000);
    let seed = r.u64(a.seed, "seed")?.unwrap_or(0);

    let report = derandomization_gap(
        &source,
        &kernel,
        &DerandOptions {
            ns,
            rate_per_symbol,
            trials,
            seed,
        },
    )?;
    let rows = report.csv_rows();
    Ok(Outcome {
        report: serde_json::to_value(&report)?,
        rows,
        exit: 0,
    })
}

fn run_estimate(a: &EstimateArgs, r: &Resolver) -> Result<Outcome> {
    let source = source_of(r, &a.pmf)?;
    let n = require(r.usize(a.n, "n")?, "--n")?;
    let blocks = r.usize(a.blocks, "blocks")?.unwrap_or(4096);
    let epsilon = require(r.f64(a.epsilon, "epsilon")?, "--epsilon")?;
    let trials = r.u64(a.trials, "trials")?.unwrap_or(100_000);
    let seed = r.u64(a.seed, "seed")?.unwrap_or(0);

    let report = estimation_rejection(&source, n, blocks, epsilon, trials, seed)?;
    let rows = report.csv_rows();
    Ok(Outcome {
        report: serde_json::to_value(&report)?,
        rows,
        exit: 0,
    })
}
