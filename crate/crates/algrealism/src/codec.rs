//! One-shot random codes: i.i.d. codebooks, posterior-sampling and MAP
//! encoders, table-lookup decoding, and message collision bounds.
//!
//! A code at total rate R carries `M = floor(2^R)` messages. The codebook
//! draws each entry i.i.d. from the source product law, so the decoder's
//! outputs are honest source samples by construction; all the work of
//! matching the input falls on the encoder, which weighs entries by the
//! reverse channel.

use crate::error::{Error, Result};
use crate::prob::{Block, FiniteSource, Kernel};
use crate::rng::{substream, Domain};
use rand::Rng;

/// Hard cap on `M * n`, the total symbols stored in one codebook.
const MAX_CODEBOOK_SYMBOLS: usize = 1 << 26;

/// Number of messages for a total rate in bits: `floor(2^R)`.
pub fn message_count(rate_bits: f64) -> Result<usize> {
    if !rate_bits.is_finite() || rate_bits <= 0.0 {
        return Err(Error::invalid("rate must be positive and finite"));
    }
    if rate_bits > 40.0 {
        return Err(Error::ResourceLimit(format!(
            "rate {rate_bits} implies more than 2^40 messages"
        )));
    }
    Ok(rate_bits.exp2().floor() as usize)
}

/// A sampled codebook: `M` blocks of length `n`, each drawn i.i.d. from the
/// source product law.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    k: usize,
    n: usize,
    rate_bits: f64,
    seed: u64,
    entries: Vec<Block>,
}

/// Serialization shape: entries as base-k digit strings.
#[derive(serde::Serialize, serde::Deserialize)]
struct CodebookWire {
    rate: f64,
    n: usize,
    k: usize,
    seed: u64,
    entries: Vec<String>,
}

impl Codebook {
    /// Samples a codebook of `floor(2^rate_bits)` length-`n` entries.
    ///
    /// Entry `i` draws from substream `(seed, Codebook, i)`, so codebooks
    /// are a pure function of `(source, n, rate_bits, seed)`.
    pub fn sample(source: &FiniteSource, n: usize, rate_bits: f64, seed: u64) -> Result<Codebook> {
        if n == 0 {
            return Err(Error::invalid("codebook entries must be non-empty"));
        }
        let m = message_count(rate_bits)?;
        if m.saturating_mul(n) > MAX_CODEBOOK_SYMBOLS {
            return Err(Error::ResourceLimit(format!(
                "codebook of {m} entries times {n} symbols exceeds the memory guard"
            )));
        }
        let entries = (0..m)
            .map(|i| {
                let mut rng = substream(seed, Domain::Codebook, i as u64);
                source.sample_block(n, &mut rng)
            })
            .collect();
        Ok(Codebook {
            k: source.k(),
            n,
            rate_bits,
            seed,
            entries,
        })
    }

    /// Number of messages.
    pub fn m(&self) -> usize {
        self.entries.len()
    }

    /// Entry length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Alphabet size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Total rate in bits.
    pub fn rate_bits(&self) -> f64 {
        self.rate_bits
    }

    /// The seed the entries were drawn from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The entries, message `i + 1` at position `i`.
    pub fn entries(&self) -> &[Block] {
        &self.entries
    }

    /// Serializes to JSON with entries as base-k digit strings (alphabets
    /// up to 10 symbols).
    pub fn to_json(&self) -> Result<String> {
        let entries = self
            .entries
            .iter()
            .map(|b| b.digits())
            .collect::<Result<Vec<_>>>()?;
        let wire = CodebookWire {
            rate: self.rate_bits,
            n: self.n,
            k: self.k,
            seed: self.seed,
            entries,
        };
        serde_json::to_string_pretty(&wire)
            .map_err(|e| Error::Numeric(format!("codebook serialization failed: {e}")))
    }

    /// Parses and validates a codebook serialized by [`Codebook::to_json`].
    pub fn from_json(json: &str) -> Result<Codebook> {
        let wire: CodebookWire = serde_json::from_str(json)
            .map_err(|e| Error::invalid(format!("malformed codebook JSON: {e}")))?;
        let m = message_count(wire.rate)?;
        if wire.entries.len() != m {
            return Err(Error::invalid(format!(
                "codebook lists {} entries but the rate implies {m}",
                wire.entries.len()
            )));
        }
        let entries = wire
            .entries
            .iter()
            .map(|s| {
                let b = Block::from_digits(wire.k, s)?;
                if b.len() != wire.n {
                    return Err(Error::invalid(format!(
                        "entry {s:?} has length {}, expected {}",
                        b.len(),
                        wire.n
                    )));
                }
                Ok(b)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Codebook {
            k: wire.k,
            n: wire.n,
            rate_bits: wire.rate,
            seed: wire.seed,
            entries,
        })
    }
}

/// How the encoder picks a message for an input block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderMode {
    /// Sample a message proportionally to the reverse-channel posterior.
    Posterior,
    /// Deterministically take the posterior mode, smallest index first.
    Map,
}

impl EncoderMode {
    /// Parses an encoder identifier (`"posterior"` or `"map"`).
    pub fn from_id(id: &str) -> Result<EncoderMode> {
        match id {
            "posterior" => Ok(EncoderMode::Posterior),
            "map" => Ok(EncoderMode::Map),
            other => Err(Error::invalid(format!("unknown encoder mode {other:?}"))),
        }
    }

    /// The canonical identifier.
    pub fn id(&self) -> &'static str {
        match self {
            EncoderMode::Posterior => "posterior",
            EncoderMode::Map => "map",
        }
    }
}

/// A one-shot lossy code: codebook plus reverse-channel encoder.
#[derive(Debug, Clone)]
pub struct OneShotCode {
    source: FiniteSource,
    kernel: Kernel,
    reverse: Kernel,
    codebook: Codebook,
    mode: EncoderMode,
}

impl OneShotCode {
    /// Assembles a code. The reverse channel of `kernel` under `source`
    /// must exist (every output symbol reachable), and all alphabets must
    /// agree.
    pub fn new(
        source: FiniteSource,
        kernel: Kernel,
        codebook: Codebook,
        mode: EncoderMode,
    ) -> Result<OneShotCode> {
        if kernel.k() != source.k() || codebook.k() != source.k() {
            return Err(Error::invalid(
                "source, kernel, and codebook alphabets differ",
            ));
        }
        let reverse = kernel.reverse(&source)?;
        Ok(OneShotCode {
            source,
            kernel,
            reverse,
            codebook,
            mode,
        })
    }

    /// The codebook.
    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    /// The source.
    pub fn source(&self) -> &FiniteSource {
        &self.source
    }

    /// The forward kernel the encoder emulates.
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// The encoder mode.
    pub fn mode(&self) -> EncoderMode {
        self.mode
    }

    /// Natural-log posterior weights of each codebook entry given the
    /// input: `sum_t ln P(x_t | y_t = entry[t])` under the reverse channel.
    /// Entries incompatible with the input get negative infinity.
    pub fn message_log_weights(&self, x: &Block) -> Result<Vec<f64>> {
        if x.k() != self.source.k() || x.len() != self.codebook.n() {
            return Err(Error::invalid(
                "input block shape does not match the codebook",
            ));
        }
        Ok(self
            .codebook
            .entries()
            .iter()
            .map(|entry| {
                entry
                    .symbols()
                    .iter()
                    .zip(x.symbols())
                    .map(|(&y, &xs)| {
                        let p = self.reverse.prob(y, xs);
                        if p > 0.0 {
                            p.ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .sum()
            })
            .collect())
    }

    /// The normalized posterior over messages for an input block. When no
    /// entry has positive weight the posterior is uniform, matching the
    /// encoder's fallback.
    pub fn posterior(&self, x: &Block) -> Result<Vec<f64>> {
        let lw = self.message_log_weights(x)?;
        let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Ok(vec![1.0 / lw.len() as f64; lw.len()]);
        }
        let weights: Vec<f64> = lw.iter().map(|&w| (w - m).exp()).collect();
        let total: f64 = weights.iter().sum();
        Ok(weights.into_iter().map(|w| w / total).collect())
    }

    /// Encodes a block to a 1-based message index.
    ///
    /// Posterior mode draws exactly one uniform variate from `rng`
    /// regardless of the outcome, so downstream draws stay aligned across
    /// inputs; MAP mode ignores `rng` and breaks ties toward the smallest
    /// index. When every entry has zero posterior weight, posterior mode
    /// falls back to a uniform message and MAP picks message 1.
    pub fn encode(&self, x: &Block, rng: &mut impl Rng) -> Result<usize> {
        let lw = self.message_log_weights(x)?;
        match self.mode {
            EncoderMode::Posterior => {
                let u: f64 = rng.random();
                let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if m == f64::NEG_INFINITY {
                    return Ok(1 + (u * lw.len() as f64) as usize % lw.len());
                }
                let weights: Vec<f64> = lw.iter().map(|&w| (w - m).exp()).collect();
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u * total < acc {
                        return Ok(i + 1);
                    }
                }
                Ok(weights.len())
            }
            EncoderMode::Map => {
                let mut best = 0usize;
                let mut best_w = f64::NEG_INFINITY;
                for (i, &w) in lw.iter().enumerate() {
                    if w > best_w {
                        best_w = w;
                        best = i;
                    }
                }
                Ok(best + 1)
            }
        }
    }

    /// Looks up the reconstruction block for a 1-based message index.
    pub fn decode(&self, message: usize) -> Result<&Block> {
        if message == 0 || message > self.codebook.m() {
            return Err(Error::invalid(format!(
                "message {message} outside 1..={}",
                self.codebook.m()
            )));
        }
        Ok(&self.codebook.entries()[message - 1])
    }
}

/// Exact probability and quadratic bound for a collision among `b` i.i.d.
/// uniform messages over `m` possibilities.
///
/// Returns `(exact, bound)` with `exact = 1 - prod_{j<b} (1 - j/m)` (or 1
/// once `b > m`) and `bound = b^2 / m`; the exact value never exceeds the
/// bound.
pub fn collision_bound(b: usize, m: usize) -> Result<(f64, f64)> {
    if b == 0 || m == 0 {
        return Err(Error::invalid("collision bound needs b >= 1 and m >= 1"));
    }
    let bound = (b * b) as f64 / m as f64;
    if b > m {
        return Ok((1.0, bound));
    }
    let mut no_collision = 1.0f64;
    for j in 0..b {
        no_collision *= 1.0 - j as f64 / m as f64;
    }
    Ok(((1.0 - no_collision).clamp(0.0, 1.0), bound))
}
