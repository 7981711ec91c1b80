//! Command-line argument definitions.
//!
//! Every numeric parameter is optional at the flag level so a JSON config
//! file (`--config`) can supply it; explicit flags always win. Required
//! parameters are enforced after the merge, with diagnostics naming the
//! missing key.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

/// Seeded experiments for realism-constrained lossy compression:
/// computable realism critics, a marginal-preserving rate-distortion
/// solver, and one-shot random-code simulations with certified
/// distortion/realism/collision bounds.
#[derive(Debug, Parser)]
#[command(name = "algrealism", version, arg_required_else_help = true)]
pub struct Cli {
    /// JSON config file with snake_case keys; explicit flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Also write the JSON report to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub json: Option<PathBuf>,

    /// Write CSV verdict rows (config_hash, metric, estimate, half_width,
    /// bound, pass) to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub csv: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the marginal-preserving rate-distortion function at a budget,
    /// cross-checked against a classical solver and (for binary sources) a
    /// grid oracle.
    Rdp(RdpArgs),
    /// Critic utilities: validity verification and block scoring.
    #[command(subcommand)]
    Critic(CriticCommand),
    /// Run seeded encode-decode trials through a random codebook and
    /// measure distortion, collisions, and critic scores.
    Simulate(SimulateArgs),
    /// Compute certified distortion and realism-score bounds for a batched
    /// one-shot code, check the small-codebook score bound empirically,
    /// and optionally validate both bounds by simulation.
    Certify(CertifyArgs),
    /// Measure how closely random codebooks synthesize the source product
    /// law, against the covering bound.
    Softcover(SoftcoverArgs),
    /// Compare run-critic scores of i.i.d. strings against run-capped
    /// strings across block lengths.
    Runsep(RunsepArgs),
    /// Measure the message-law gap between the posterior-sampling encoder
    /// and its deterministic (maximum-weight) version.
    Derand(DerandArgs),
    /// Estimate how often the empirical distribution of sampled blocks
    /// strays from the product law by at least a threshold.
    Estimate(EstimateArgs),
}

#[derive(Debug, Subcommand)]
pub enum CriticCommand {
    /// Check the critic budget sum over all length-n blocks (exhaustive)
    /// or by seeded sampling (mc), plus optional positive-part moments.
    Verify(CriticVerifyArgs),
    /// Score a file of blocks (one block per line, base-k digits).
    Score(CriticScoreArgs),
}

/// Critic selection shared by several subcommands.
#[derive(Debug, Args)]
pub struct CriticSpecArgs {
    /// Critic kind: frequency | run | compressor | empirical-tvd | llr |
    /// constant (mixtures go through --critic-json).
    #[arg(long)]
    pub kind: Option<String>,

    /// Symbol whose count the frequency critic tracks.
    #[arg(long)]
    pub e0: Option<usize>,

    /// Ones probability of the run critic's Bernoulli base, in (0, 0.5].
    #[arg(long)]
    pub q: Option<f64>,

    /// Largest block length the run critic accepts.
    #[arg(long)]
    pub n_max: Option<usize>,

    /// Lossless coder for the compressor critic: raw | lz78.
    #[arg(long)]
    pub coder: Option<String>,

    /// Window-table exponent of the empirical-TVD critic (>= 2).
    #[arg(long)]
    pub exponent: Option<u32>,

    /// Comma-separated sub-pmf for the llr critic.
    #[arg(long)]
    pub alt: Option<String>,

    /// Fixed score of the constant critic.
    #[arg(long)]
    pub value: Option<f64>,

    /// Full critic description as inline JSON, e.g.
    /// {"kind":"mixture","parts":[[0.5,{"kind":"frequency","e0":1}],[0.5,{"kind":"compressor","coder":"lz78"}]]}.
    #[arg(long)]
    pub critic_json: Option<String>,
}

#[derive(Debug, Args)]
pub struct RdpArgs {
    /// Source pmf, comma-separated (e.g. 0.5,0.5).
    #[arg(long)]
    pub pmf: Option<String>,

    /// Use the Hamming distortion (default when --distortion is absent).
    #[arg(long)]
    pub hamming: bool,

    /// Distortion matrix, rows separated by ';' (e.g. 0,1;1,0).
    #[arg(long)]
    pub distortion: Option<String>,

    /// Distortion budget.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Initial grid size of the binary cross-check oracle (default 2001).
    #[arg(long)]
    pub oracle_grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CriticVerifyArgs {
    /// Base pmf the critic is checked against (unused by kind=run, which
    /// carries its own Bernoulli base).
    #[arg(long)]
    pub pmf: Option<String>,

    #[command(flatten)]
    pub spec: CriticSpecArgs,

    /// Block length to verify.
    #[arg(long)]
    pub n: Option<usize>,

    /// Verification mode: exhaustive | mc (default exhaustive).
    #[arg(long)]
    pub mode: Option<String>,

    /// Sample count for mc mode (default 100000).
    #[arg(long)]
    pub trials: Option<u64>,

    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Also report exhaustive positive-part moment statistics.
    #[arg(long)]
    pub stats: bool,
}

#[derive(Debug, Args)]
pub struct CriticScoreArgs {
    /// Base pmf of the critic (unused by kind=run).
    #[arg(long)]
    pub pmf: Option<String>,

    #[command(flatten)]
    pub spec: CriticSpecArgs,

    /// File of blocks to score, one block per line as base-k digits.
    #[arg(long, value_name = "FILE")]
    pub blocks: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Source pmf, comma-separated.
    #[arg(long)]
    pub pmf: Option<String>,

    /// Reference channel as a binary symmetric channel flip probability.
    #[arg(long)]
    pub bsc: Option<f64>,

    /// Reference channel matrix, rows separated by ';'.
    #[arg(long)]
    pub kernel: Option<String>,

    /// Use the Hamming distortion (default when --distortion is absent).
    #[arg(long)]
    pub hamming: bool,

    /// Distortion matrix, rows separated by ';'.
    #[arg(long)]
    pub distortion: Option<String>,

    /// Block length.
    #[arg(long)]
    pub n: Option<usize>,

    /// Total rate in bits; the codebook holds floor(2^rate) entries.
    #[arg(long, alias = "R")]
    pub rate: Option<f64>,

    /// Blocks encoded per trial through one shared codebook (default 1).
    #[arg(long, alias = "B")]
    pub batch: Option<usize>,

    /// Number of trials (default 100000).
    #[arg(long)]
    pub trials: Option<u64>,

    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Encoder: posterior | map (default posterior).
    #[arg(long)]
    pub encoder: Option<String>,

    #[command(flatten)]
    pub spec: CriticSpecArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Source pmf, comma-separated.
    #[arg(long)]
    pub pmf: Option<String>,

    /// Reference channel as a binary symmetric channel flip probability.
    #[arg(long)]
    pub bsc: Option<f64>,

    /// Reference channel matrix, rows separated by ';'.
    #[arg(long)]
    pub kernel: Option<String>,

    /// Use the Hamming distortion (default when --distortion is absent).
    #[arg(long)]
    pub hamming: bool,

    /// Distortion matrix, rows separated by ';'.
    #[arg(long)]
    pub distortion: Option<String>,

    /// Block length.
    #[arg(long)]
    pub n: Option<usize>,

    /// Total rate in bits.
    #[arg(long, alias = "R")]
    pub rate: Option<f64>,

    /// Batch size the critic inspects jointly (default 1).
    #[arg(long, alias = "B")]
    pub batch: Option<usize>,

    /// Distortion budget of the reference channel.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Distortion slack, strictly inside (0, delta/2).
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Atypicality exponent (> 0).
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Atypical-mass computation: exact | mc (default exact).
    #[arg(long)]
    pub mass_mode: Option<String>,

    /// Sample count for mc mass mode (default 100000).
    #[arg(long)]
    pub mass_trials: Option<u64>,

    /// Codebooks for the small-codebook score check (default 1000).
    #[arg(long)]
    pub codebooks: Option<u64>,

    /// Batches drawn per codebook in that check (default 100).
    #[arg(long)]
    pub draws: Option<u64>,

    /// Also simulate this many encode-decode trials and fail (exit 2) if a
    /// measured mean exceeds its certified bound.
    #[arg(long)]
    pub simulate_trials: Option<u64>,

    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub spec: CriticSpecArgs,
}

#[derive(Debug, Args)]
pub struct SoftcoverArgs {
    /// Source pmf, comma-separated.
    #[arg(long)]
    pub pmf: Option<String>,

    /// Reference channel as a binary symmetric channel flip probability.
    #[arg(long)]
    pub bsc: Option<f64>,

    /// Reference channel matrix, rows separated by ';'.
    #[arg(long)]
    pub kernel: Option<String>,

    /// Block length (alphabet^n must stay enumerable).
    #[arg(long)]
    pub n: Option<usize>,

    /// Total rate in bits.
    #[arg(long)]
    pub rate: Option<f64>,

    /// Atypicality exponent of the covering bound (> 0).
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Codebooks to average over (default 1000).
    #[arg(long)]
    pub codebooks: Option<u64>,

    /// Atypical-mass computation: exact | mc (default exact).
    #[arg(long)]
    pub mass_mode: Option<String>,

    /// Sample count for mc mass mode (default 100000).
    #[arg(long)]
    pub mass_trials: Option<u64>,

    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunsepArgs {
    /// Ones probability of the Bernoulli source, in (0, 0.5].
    #[arg(long)]
    pub q: Option<f64>,

    /// Comma-separated block lengths (default 256,1024,4096).
    #[arg(long)]
    pub lengths: Option<String>,

    /// Trials per series per length (default 100000).
    #[arg(long)]
    pub trials: Option<u64>,

    /// Run-cap rule for the capped process: loglog | log2minus2
    /// (default loglog).
    #[arg(long)]
    pub cap_rule: Option<String>,

    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DerandArgs {
    /// Source pmf, comma-separated.
    #[arg(long)]
    pub pmf: Option<String>,

    /// Reference channel as a binary symmetric channel flip probability.
    #[arg(long)]
    pub bsc: Option<f64>,

    /// Reference channel matrix, rows separated by ';'.
    #[arg(long)]
    pub kernel: Option<String>,

    /// Comma-separated block lengths (default 4,8,12).
    #[arg(long)]
    pub ns: Option<String>,

    /// Rate per symbol in bits.
    #[arg(long)]
    pub rate_per_symbol: Option<f64>,

    /// Trials per length when exact enumeration is out of reach
    /// (default 100000).
    #[arg(long)]
    pub trials: Option<u64>,

    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Source pmf, comma-separated.
    #[arg(long)]
    pub pmf: Option<String>,

    /// Block length (alphabet^n must stay enumerable).
    #[arg(long)]
    pub n: Option<usize>,

    /// Blocks per empirical distribution (default 4096).
    #[arg(long)]
    pub blocks: Option<usize>,

    /// Rejection threshold on total variation, in [0, 1].
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Number of trials (default 100000).
    #[arg(long)]
    pub trials: Option<u64>,

    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
}
