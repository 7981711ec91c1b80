//! Realism critics: score functions with a universal exponential-moment
//! budget.
//!
//! A critic for a source `p` assigns each block `x` a score `delta(x)` (in
//! bits) such that `E[2^delta] <= 1` under i.i.d. draws from `p`, separately
//! at every block length. High scores therefore certify artifacts: the
//! probability that an honest sample scores above `b` bits is at most
//! `2^-b`. The families here detect mismatched per-symbol likelihoods,
//! skewed symbol frequencies, atypical longest runs, compressible structure,
//! and drifting empirical block statistics; mixtures combine them without
//! losing the budget.

pub mod coding;
pub mod runs;

use crate::error::{Error, Result};
use crate::prob::{empirical_block_distribution, table_size, Batch, Block, FiniteSource, KahanSum};
use crate::rng::{substream, Domain};
use crate::tol;
use coding::{code_len_bits, Coder};
use runs::{longest_run_moments, longest_run_of};
use std::collections::BTreeMap;

/// Largest product table an exhaustive validity sweep will enumerate.
const EXHAUSTIVE_LOG2_CAP: u32 = 22;

/// Enumeration cap for fitting the empirical-distribution critic's shift.
const FIT_ENUMERATION_CAP: usize = 4096;

/// The available critic families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticKind {
    /// Log-likelihood ratio against a single-letter alternative.
    Llr,
    /// Log-likelihood ratio against explicit per-length alternatives.
    LlrPerLength,
    /// Deviation of one symbol's count from its expectation.
    Frequency,
    /// Deviation of the longest run of ones from its typical length.
    LongestRun,
    /// Description-length gain of a lossless coder over the source entropy.
    Compressor,
    /// Scaled total variation between empirical block statistics and the
    /// source product law.
    EmpiricalTvd,
    /// Weighted log-sum of component critics.
    Mixture,
    /// A fixed score, mainly for tests and calibration.
    Constant,
}

impl CriticKind {
    /// Canonical identifier.
    pub fn id(&self) -> &'static str {
        match self {
            CriticKind::Llr => "llr",
            CriticKind::LlrPerLength => "llr-table",
            CriticKind::Frequency => "frequency",
            CriticKind::LongestRun => "run",
            CriticKind::Compressor => "compressor",
            CriticKind::EmpiricalTvd => "empirical-tvd",
            CriticKind::Mixture => "mixture",
            CriticKind::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone)]
enum Imp {
    Llr {
        log_ratio: Vec<f64>,
    },
    LlrPerLength {
        tables: BTreeMap<usize, Vec<f64>>,
    },
    Frequency {
        e0: usize,
    },
    LongestRun {
        q: f64,
        /// penalties[n] keeps the length-n score centered so the budget
        /// holds with equality margin; index 0 unused.
        penalties: Vec<f64>,
    },
    Compressor {
        coder: Coder,
    },
    EmpiricalTvd {
        exponent: u32,
        shift: u32,
    },
    Mixture {
        parts: Vec<(f64, Critic)>,
    },
    Constant {
        value: f64,
    },
}

/// A realism critic for one base source.
#[derive(Debug, Clone)]
pub struct Critic {
    kind: CriticKind,
    base: FiniteSource,
    imp: Imp,
    label: String,
    metadata: serde_json::Value,
}

impl Critic {
    /// Log-likelihood-ratio critic against a single-letter alternative.
    ///
    /// `alt` may be a sub-pmf (entries non-negative, summing to at most 1);
    /// blocks containing a symbol with zero alternative mass score the
    /// floor value.
    pub fn llr(base: &FiniteSource, alt: &[f64]) -> Result<Critic> {
        if alt.len() != base.k() {
            return Err(Error::invalid(
                "alternative pmf has the wrong alphabet size",
            ));
        }
        check_sub_pmf(alt, "alternative pmf")?;
        let log_ratio = alt
            .iter()
            .zip(base.pmf())
            .map(|(&q, &p)| {
                if q > 0.0 {
                    (q / p).log2()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        Ok(Critic {
            kind: CriticKind::Llr,
            base: base.clone(),
            imp: Imp::Llr { log_ratio },
            label: "llr".to_string(),
            metadata: serde_json::json!({ "alternative": alt }),
        })
    }

    /// Log-likelihood-ratio critic with an explicit alternative table per
    /// block length. Each table must cover all `k^n` blocks in index order
    /// and may be a sub-pmf. Lengths without a table are unsupported.
    pub fn llr_per_length(
        base: &FiniteSource,
        tables: BTreeMap<usize, Vec<f64>>,
    ) -> Result<Critic> {
        if tables.is_empty() {
            return Err(Error::invalid("per-length critic needs at least one table"));
        }
        for (&n, table) in &tables {
            if n == 0 {
                return Err(Error::invalid("per-length tables start at length 1"));
            }
            let size = table_size(base.k(), n, EXHAUSTIVE_LOG2_CAP)?;
            if table.len() != size {
                return Err(Error::invalid(format!(
                    "length-{n} table has {} entries, expected {size}",
                    table.len()
                )));
            }
            check_sub_pmf(table, "alternative block pmf")?;
        }
        let lengths: Vec<usize> = tables.keys().cloned().collect();
        Ok(Critic {
            kind: CriticKind::LlrPerLength,
            base: base.clone(),
            imp: Imp::LlrPerLength { tables },
            label: "llr-table".to_string(),
            metadata: serde_json::json!({ "lengths": lengths }),
        })
    }

    /// Critic that scores the count of `e0` against its expectation, on a
    /// square-root scale with a logarithmic wrapper that preserves the
    /// budget.
    pub fn frequency(base: &FiniteSource, e0: usize) -> Result<Critic> {
        if e0 >= base.k() {
            return Err(Error::invalid(format!(
                "tracked symbol {e0} is outside the alphabet"
            )));
        }
        Ok(Critic {
            kind: CriticKind::Frequency,
            base: base.clone(),
            imp: Imp::Frequency { e0 },
            label: format!("frequency(e0={e0})"),
            metadata: serde_json::json!({ "e0": e0 }),
        })
    }

    /// Critic that scores the longest run of ones in a binary block against
    /// its typical length `log_{1/q} n`. Requires `0 < q <= 1/2`; moments
    /// are precomputed exactly for lengths up to `n_max`.
    pub fn longest_run(q: f64, n_max: usize) -> Result<Critic> {
        if !(q > 0.0 && q <= 0.5) {
            return Err(Error::invalid(
                "run critic needs ones probability in (0, 1/2]",
            ));
        }
        let base = FiniteSource::bernoulli(q)?;
        let moments = longest_run_moments(q, n_max)?;
        let mut penalties = vec![0.0f64; n_max + 1];
        let log_inv_q = (1.0 / q).ln();
        for n in 1..=n_max {
            let typical = (n as f64).ln() / log_inv_q;
            penalties[n] = (1.0 + moments.var[n].sqrt() + (moments.mean[n] - typical).abs()).log2();
        }
        Ok(Critic {
            kind: CriticKind::LongestRun,
            base,
            imp: Imp::LongestRun { q, penalties },
            label: format!("run(q={q})"),
            metadata: serde_json::json!({ "q": q, "n_max": n_max }),
        })
    }

    /// Critic that scores the description-length savings of a lossless
    /// coder below the ideal codelength `log2(1/p(x))`.
    pub fn compressor(base: &FiniteSource, coder: Coder) -> Result<Critic> {
        Ok(Critic {
            kind: CriticKind::Compressor,
            base: base.clone(),
            imp: Imp::Compressor { coder },
            label: format!("compressor({})", coder.id()),
            metadata: serde_json::json!({ "coder": coder.id() }),
        })
    }

    /// Critic that scores the scaled total variation between the empirical
    /// distribution of length-`n` sub-blocks and the product law, with the
    /// sub-block length growing as the input gets longer.
    ///
    /// Uses the default schedule: length-`n` statistics activate once
    /// `n * k^(2n)` symbols are available.
    pub fn empirical_tvd(base: &FiniteSource) -> Result<Critic> {
        Critic::empirical_tvd_with_exponent(base, 2)
    }

    /// [`Critic::empirical_tvd`] with sub-block statistics activating at
    /// `n * k^(exponent * n)` symbols. Requires `exponent >= 2` so the
    /// per-block sample count outgrows the table size.
    pub fn empirical_tvd_with_exponent(base: &FiniteSource, exponent: u32) -> Result<Critic> {
        if exponent < 2 {
            return Err(Error::invalid("growth exponent must be at least 2"));
        }
        let (shift, fit_max) = fit_empirical_shift(base, exponent)?;
        Ok(Critic {
            kind: CriticKind::EmpiricalTvd,
            base: base.clone(),
            imp: Imp::EmpiricalTvd { exponent, shift },
            label: "empirical-tvd".to_string(),
            metadata: serde_json::json!({
                "growth_exponent": exponent,
                "shift": shift,
                "shift_fit_max_length": fit_max,
            }),
        })
    }

    /// Weighted combination of critics over the same base source: the score
    /// is `log2` of the weighted average of `2^score_i`. Weights must be
    /// strictly positive and sum to at most 1, which preserves the budget.
    pub fn mixture(parts: Vec<(f64, Critic)>) -> Result<Critic> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("mixture needs at least one component"))?;
        let base = first.1.base.clone();
        let mut total = 0.0;
        for (w, part) in &parts {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::invalid("mixture weights must be strictly positive"));
            }
            total += w;
            if part.base.k() != base.k()
                || part
                    .base
                    .pmf()
                    .iter()
                    .zip(base.pmf())
                    .any(|(a, b)| (a - b).abs() > tol::EXACT_IDENTITY)
            {
                return Err(Error::invalid(
                    "mixture components must share one base source",
                ));
            }
        }
        if total > 1.0 + tol::SUB_PMF_SLACK {
            return Err(Error::invalid(format!(
                "mixture weights sum to {total}, expected <= 1"
            )));
        }
        let label = format!(
            "mixture[{}]",
            parts
                .iter()
                .map(|(_, c)| c.label.as_str())
                .collect::<Vec<_>>()
                .join("+")
        );
        let weights: Vec<f64> = parts.iter().map(|(w, _)| *w).collect();
        Ok(Critic {
            kind: CriticKind::Mixture,
            base,
            imp: Imp::Mixture { parts },
            label,
            metadata: serde_json::json!({ "weights": weights }),
        })
    }

    /// A critic that returns `value` on every block. Valid only when
    /// `value <= 0`; the constructor allows any finite value so tests can
    /// exercise failing budgets.
    pub fn constant(base: &FiniteSource, value: f64) -> Result<Critic> {
        if !value.is_finite() {
            return Err(Error::invalid("constant critic score must be finite"));
        }
        Ok(Critic {
            kind: CriticKind::Constant,
            base: base.clone(),
            imp: Imp::Constant { value },
            label: format!("constant({value})"),
            metadata: serde_json::json!({ "value": value }),
        })
    }

    /// Which family this critic belongs to.
    pub fn kind(&self) -> CriticKind {
        self.kind
    }

    /// The source the budget is taken against.
    pub fn base(&self) -> &FiniteSource {
        &self.base
    }

    /// Short human-readable identifier used in reports.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Construction parameters as JSON, including any fitted quantities.
    pub fn metadata(&self) -> &serde_json::Value {
        &self.metadata
    }

    /// Scores a block, in bits. Scores are clamped below at
    /// [`tol::SCORE_FLOOR`] in place of negative infinity.
    pub fn score(&self, x: &Block) -> Result<f64> {
        if x.k() != self.base.k() {
            return Err(Error::invalid(
                "block alphabet does not match the critic's source",
            ));
        }
        let raw = self.raw_score(x)?;
        if raw.is_nan() {
            return Err(Error::Numeric("critic produced a NaN score".to_string()));
        }
        Ok(raw.max(tol::SCORE_FLOOR))
    }

    fn raw_score(&self, x: &Block) -> Result<f64> {
        match &self.imp {
            Imp::Llr { log_ratio } => Ok(x.symbols().iter().map(|&s| log_ratio[s]).sum()),
            Imp::LlrPerLength { tables } => {
                let n = x.len();
                let table = tables.get(&n).ok_or_else(|| Error::UnsupportedLength {
                    n,
                    reason: "no alternative table for this length".to_string(),
                })?;
                let q = table[x.to_index()?];
                if q > 0.0 {
                    Ok(q.log2() - self.base.log2_block_prob(x))
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            Imp::Frequency { e0 } => {
                let n = x.len();
                let count = x.symbols().iter().filter(|&&s| s == *e0).count() as f64;
                let expected = self.base.prob(*e0) * n as f64;
                let diff = (count - expected).abs();
                let delta = if diff < tol::CEIL_GUARD {
                    0u32
                } else {
                    let inner = guarded_ceil(diff / (n as f64).sqrt()).max(1);
                    coding::ceil_log2(inner)
                };
                Ok(delta as f64 - 2.0 * (delta as f64 + 3.0).log2())
            }
            Imp::LongestRun { q, penalties } => {
                let n = x.len();
                if n == 0 || n >= penalties.len() {
                    return Err(Error::UnsupportedLength {
                        n,
                        reason: format!(
                            "run critic moments precomputed for lengths 1..={}",
                            penalties.len() - 1
                        ),
                    });
                }
                let run = longest_run_of(x, 1) as f64;
                let typical = (n as f64).ln() / (1.0 / q).ln();
                Ok((1.0 + (run - typical).abs()).log2() - penalties[n])
            }
            Imp::Compressor { coder } => {
                let len = code_len_bits(*coder, x)? as f64;
                Ok(-self.base.log2_block_prob(x) - len)
            }
            Imp::EmpiricalTvd { exponent, shift } => {
                let raw = self.empirical_tvd_raw(x, *exponent)?;
                Ok(raw - 2.0 * (raw + 3.0).log2() - *shift as f64)
            }
            Imp::Mixture { parts } => {
                let mut terms = Vec::with_capacity(parts.len());
                for (w, part) in parts {
                    terms.push(w.log2() + part.score(x)?);
                }
                Ok(log2_sum_exp2(&terms))
            }
            Imp::Constant { value } => Ok(*value),
        }
    }

    /// The integer deviation statistic of the empirical-distribution critic
    /// before the logarithmic wrapper.
    fn empirical_tvd_raw(&self, x: &Block, exponent: u32) -> Result<f64> {
        let t = x.len() as u128;
        let k = self.base.k() as u128;
        // Largest n >= 1 whose statistics are active: n * k^(e n) <= t.
        let mut active = 0u32;
        loop {
            let next = active + 1;
            match k.checked_pow(exponent * next) {
                Some(budget) if (next as u128) * budget <= t => active = next,
                _ => break,
            }
        }
        if active == 0 {
            return Ok(0.0);
        }
        let n = active as usize;
        let per_block = k.pow(exponent * active) as usize;
        let used = n * per_block;
        let blocks: Vec<Block> = x.symbols()[..used]
            .chunks(n)
            .map(|chunk| Block::new(self.base.k(), chunk.to_vec()))
            .collect::<Result<_>>()?;
        let empirical = empirical_block_distribution(&Batch::new(blocks)?)?;
        let product = self.base.product_table(n, 20)?;
        let distance = crate::prob::tvd_unchecked(&empirical, &product);
        let scale = guarded_ceil((per_block as f64 / product.len() as f64).powf(4.0 / 9.0));
        Ok(((scale as f64) * distance - tol::CEIL_GUARD)
            .ceil()
            .max(0.0))
    }

    /// Verifies the exponential-moment budget at one block length.
    ///
    /// Exhaustive mode enumerates all `k^n` blocks (guarded at 2^22) and
    /// passes when the weighted sum is at most `1 + `[`tol::VALIDITY_SLACK`].
    /// Monte Carlo mode estimates the budget from i.i.d. draws and passes
    /// when the estimate minus three standard errors is at most 1.
    pub fn check_validity(&self, n: usize, mode: ValidityMode) -> Result<ValidityReport> {
        if n == 0 {
            return Err(Error::invalid("validity is checked at lengths >= 1"));
        }
        match mode {
            ValidityMode::Exhaustive => {
                table_size(self.base.k(), n, EXHAUSTIVE_LOG2_CAP)?;
                let mut block = Block::new(self.base.k(), vec![0; n])?;
                let mut acc = KahanSum::default();
                loop {
                    let score = self.score(&block)?;
                    acc.add(self.base.block_prob(&block) * score.exp2());
                    if !block.advance_odometer() {
                        break;
                    }
                }
                let budget = acc.value();
                Ok(ValidityReport {
                    critic: self.label.clone(),
                    n,
                    exhaustive: true,
                    budget,
                    half_width: None,
                    pass: budget <= 1.0 + tol::VALIDITY_SLACK,
                })
            }
            ValidityMode::MonteCarlo { trials, seed } => {
                if trials < 2 {
                    return Err(Error::invalid(
                        "Monte Carlo validity needs at least 2 trials",
                    ));
                }
                let mut sum = KahanSum::default();
                let mut sum_sq = KahanSum::default();
                for t in 0..trials {
                    let mut rng = substream(seed, Domain::Validity, t);
                    let x = self.base.sample_block(n, &mut rng);
                    let z = self.score(&x)?.exp2();
                    sum.add(z);
                    sum_sq.add(z * z);
                }
                let m = trials as f64;
                let mean = sum.value() / m;
                let var = ((sum_sq.value() - m * mean * mean) / (m - 1.0)).max(0.0);
                let se = (var / m).sqrt();
                Ok(ValidityReport {
                    critic: self.label.clone(),
                    n,
                    exhaustive: false,
                    budget: mean,
                    half_width: Some(se),
                    pass: mean - 3.0 * se <= 1.0,
                })
            }
        }
    }

    /// Exhaustive moments of the positive part of the score at one length,
    /// together with their universal budgets.
    pub fn positive_part_stats(&self, n: usize) -> Result<PositivePartStats> {
        if n == 0 {
            return Err(Error::invalid("stats are computed at lengths >= 1"));
        }
        table_size(self.base.k(), n, EXHAUSTIVE_LOG2_CAP)?;
        let mut block = Block::new(self.base.k(), vec![0; n])?;
        let mut e_exp = KahanSum::default();
        let mut e_pos = KahanSum::default();
        let mut e_score = KahanSum::default();
        let mut max_pos = 0.0f64;
        loop {
            let p = self.base.block_prob(&block);
            let score = self.score(&block)?;
            let pos = score.max(0.0);
            e_exp.add(p * pos.exp2());
            e_pos.add(p * pos);
            e_score.add(p * score);
            max_pos = max_pos.max(pos);
            if !block.advance_odometer() {
                break;
            }
        }
        Ok(PositivePartStats {
            critic: self.label.clone(),
            n,
            e_exp_positive: e_exp.value(),
            e_positive: e_pos.value(),
            max_positive: max_pos,
            mean_score: e_score.value(),
            max_budget: 1.0 + n as f64 * (1.0 / self.base.min_prob()).log2(),
        })
    }
}

/// How a validity check draws its blocks.
#[derive(Debug, Clone, Copy)]
pub enum ValidityMode {
    /// Enumerate every block of the requested length.
    Exhaustive,
    /// Estimate the budget from seeded i.i.d. draws.
    MonteCarlo { trials: u64, seed: u64 },
}

/// Outcome of a single-length validity check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidityReport {
    /// Critic label.
    pub critic: String,
    /// Block length checked.
    pub n: usize,
    /// Whether the budget below is an exact enumeration.
    pub exhaustive: bool,
    /// The budget `E[2^score]`, exact or estimated.
    pub budget: f64,
    /// Standard error of the estimate (Monte Carlo only).
    pub half_width: Option<f64>,
    /// Whether the budget is within tolerance of 1.
    pub pass: bool,
}

/// Exhaustive positive-part moments of a critic's score at one length.
///
/// For any valid critic: `E[2^max(score,0)] <= 2`, `E[max(score,0)] <= 1`,
/// and the maximum positive score is at most `1 + n log2(1/p_min)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PositivePartStats {
    /// Critic label.
    pub critic: String,
    /// Block length.
    pub n: usize,
    /// `E[2^max(score,0)]`; budget 2.
    pub e_exp_positive: f64,
    /// `E[max(score,0)]`; budget 1.
    pub e_positive: f64,
    /// Largest positive score over all blocks.
    pub max_positive: f64,
    /// `E[score]`; at most 0 for valid critics by Jensen's inequality.
    pub mean_score: f64,
    /// The ceiling `1 + n log2(1/p_min)` for `max_positive`.
    pub max_budget: f64,
}

impl PositivePartStats {
    /// Whether all three budgets hold within [`tol::VALIDITY_SLACK`].
    pub fn pass(&self) -> bool {
        self.e_exp_positive <= 2.0 + tol::VALIDITY_SLACK
            && self.e_positive <= 1.0 + tol::VALIDITY_SLACK
            && self.max_positive <= self.max_budget + tol::VALIDITY_SLACK
    }
}

/// Ceiling with a small negative guard so values within
/// [`tol::CEIL_GUARD`] of an integer round to that integer instead of up.
fn guarded_ceil(v: f64) -> u64 {
    (v - tol::CEIL_GUARD).ceil().max(0.0) as u64
}

/// `log2(sum_i 2^(t_i))` with max subtraction for stability.
fn log2_sum_exp2(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&t| (t - m).exp2()).sum();
    m + sum.log2()
}

fn check_sub_pmf(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::invalid(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = values.iter().sum();
    if sum > 1.0 + tol::SUB_PMF_SLACK {
        return Err(Error::invalid(format!(
            "{what} sums to {sum}, expected <= 1"
        )));
    }
    Ok(())
}

/// Fits the empirical-distribution critic's shift: the smallest
/// non-negative integer L such that the exhaustive budget passes at every
/// enumerable fit length. Returns the shift and the largest length checked.
fn fit_empirical_shift(base: &FiniteSource, exponent: u32) -> Result<(u32, usize)> {
    let k = base.k();
    let mut fit_max = 0usize;
    while k
        .checked_pow(fit_max as u32 + 1)
        .map(|s| s <= FIT_ENUMERATION_CAP)
        .unwrap_or(false)
    {
        fit_max += 1;
    }
    let unshifted = Critic {
        kind: CriticKind::EmpiricalTvd,
        base: base.clone(),
        imp: Imp::EmpiricalTvd { exponent, shift: 0 },
        label: "empirical-tvd".to_string(),
        metadata: serde_json::Value::Null,
    };
    let mut worst = 0.0f64;
    for t in 1..=fit_max {
        let report = unshifted.check_validity(t, ValidityMode::Exhaustive)?;
        worst = worst.max(report.budget);
    }
    let mut shift = 0u32;
    while worst * (-(shift as f64)).exp2() > 1.0 + tol::VALIDITY_SLACK {
        shift += 1;
        if shift > 128 {
            return Err(Error::Numeric(
                "empirical critic shift failed to converge".to_string(),
            ));
        }
    }
    Ok((shift, fit_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TWO_LOG2_3: f64 = 3.169925001442312;

    fn uniform2() -> FiniteSource {
        FiniteSource::uniform(2).unwrap()
    }

    #[test]
    fn frequency_worked_examples() {
        let critic = Critic::frequency(&uniform2(), 1).unwrap();
        // Balanced block: count matches expectation exactly.
        let balanced = Block::from_digits(2, "0011").unwrap();
        assert_abs_diff_eq!(
            critic.score(&balanced).unwrap(),
            -TWO_LOG2_3,
            epsilon = 1e-12
        );
        // All ones at n = 4: deviation 2 over sqrt(4) still rounds to 1.
        let ones4 = Block::from_digits(2, "1111").unwrap();
        assert_abs_diff_eq!(critic.score(&ones4).unwrap(), -TWO_LOG2_3, epsilon = 1e-12);
        // All ones at n = 16: deviation 8 over 4 gives delta = 1.
        let ones16 = Block::new(2, vec![1; 16]).unwrap();
        assert_abs_diff_eq!(critic.score(&ones16).unwrap(), -3.0, epsilon = 1e-12);
    }

    #[test]
    fn frequency_biased_source_centering() {
        // Under its own source the zero-deviation branch needs the exact
        // expectation; q = 0.25, n = 8 puts it at count 2.
        let base = FiniteSource::bernoulli(0.25).unwrap();
        let critic = Critic::frequency(&base, 1).unwrap();
        let two_ones = Block::from_digits(2, "11000000").unwrap();
        assert_abs_diff_eq!(
            critic.score(&two_ones).unwrap(),
            -TWO_LOG2_3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn llr_scores_add_per_symbol() {
        let critic = Critic::llr(&uniform2(), &[0.25, 0.75]).unwrap();
        let b = Block::from_digits(2, "11").unwrap();
        assert_abs_diff_eq!(
            critic.score(&b).unwrap(),
            2.0 * 1.5f64.log2(),
            epsilon = 1e-12
        );
        let mixed = Block::from_digits(2, "10").unwrap();
        assert_abs_diff_eq!(
            critic.score(&mixed).unwrap(),
            1.5f64.log2() + 0.5f64.log2(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn llr_zero_alternative_hits_floor() {
        let critic = Critic::llr(&uniform2(), &[1.0, 0.0]).unwrap();
        let b = Block::from_digits(2, "01").unwrap();
        assert_abs_diff_eq!(critic.score(&b).unwrap(), tol::SCORE_FLOOR);
    }

    #[test]
    fn llr_rejects_oversized_alternative() {
        assert!(Critic::llr(&uniform2(), &[0.6, 0.6]).is_err());
        assert!(Critic::llr(&uniform2(), &[0.5, -0.1]).is_err());
        // Sub-pmfs are fine.
        assert!(Critic::llr(&uniform2(), &[0.25, 0.25]).is_ok());
    }

    #[test]
    fn llr_per_length_matches_direct_ratio() {
        let mut tables = BTreeMap::new();
        // Alternative on length 2 concentrating on "11".
        tables.insert(2, vec![0.1, 0.2, 0.2, 0.5]);
        let critic = Critic::llr_per_length(&uniform2(), tables).unwrap();
        let b = Block::from_digits(2, "11").unwrap();
        assert_abs_diff_eq!(
            critic.score(&b).unwrap(),
            (0.5f64 / 0.25).log2(),
            epsilon = 1e-12
        );
        let other_len = Block::from_digits(2, "1").unwrap();
        assert!(matches!(
            critic.score(&other_len),
            Err(Error::UnsupportedLength { n: 1, .. })
        ));
    }

    #[test]
    fn run_score_matches_moment_formula() {
        let critic = Critic::longest_run(0.5, 64).unwrap();
        let moments = longest_run_moments(0.5, 64).unwrap();
        let b = Block::from_digits(2, "1111").unwrap();
        let typical = 4.0f64.ln() / 2.0f64.ln();
        let penalty = (1.0 + moments.var[4].sqrt() + (moments.mean[4] - typical).abs()).log2();
        assert_abs_diff_eq!(
            critic.score(&b).unwrap(),
            (1.0 + (4.0 - typical).abs()).log2() - penalty,
            epsilon = 1e-12
        );
        let too_long = Block::new(2, vec![0; 65]).unwrap();
        assert!(critic.score(&too_long).is_err());
    }

    #[test]
    fn run_critic_rejects_bad_q() {
        assert!(Critic::longest_run(0.6, 32).is_err());
        assert!(Critic::longest_run(0.0, 32).is_err());
        assert!(Critic::longest_run(0.5, 32).is_ok());
    }

    #[test]
    fn compressor_uniform_binary_score_is_constant() {
        let critic = Critic::compressor(&uniform2(), Coder::Raw).unwrap();
        // Ideal codelength 4 bits, code spends 5 (header) + 4 (body).
        for digits in ["0101", "0000", "1111"] {
            let b = Block::from_digits(2, digits).unwrap();
            assert_abs_diff_eq!(critic.score(&b).unwrap(), -5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn compressor_lz78_rewards_structure_relative_to_raw() {
        let base = uniform2();
        let lz = Critic::compressor(&base, Coder::Lz78).unwrap();
        let constant = Block::new(2, vec![1; 512]).unwrap();
        // Ideal codelength is 512 bits; the dictionary coder spends far
        // fewer, so the score goes strongly positive.
        assert!(lz.score(&constant).unwrap() > 100.0);
        let raw = Critic::compressor(&base, Coder::Raw).unwrap();
        assert!(raw.score(&constant).unwrap() < 0.0);
    }

    #[test]
    fn empirical_tvd_worked_examples() {
        let critic = Critic::empirical_tvd(&uniform2()).unwrap();
        assert_eq!(critic.metadata()["shift"], 0);
        // Below the first activation length the statistic is 0.
        let short = Block::from_digits(2, "011").unwrap();
        assert_abs_diff_eq!(critic.score(&short).unwrap(), -TWO_LOG2_3, epsilon = 1e-12);
        // Balanced four-symbol block: empirical equals the product law.
        let balanced = Block::from_digits(2, "0011").unwrap();
        assert_abs_diff_eq!(
            critic.score(&balanced).unwrap(),
            -TWO_LOG2_3,
            epsilon = 1e-12
        );
        // Constant four-symbol block: TVD 1/2, scale 2, statistic 1.
        let constant = Block::from_digits(2, "0000").unwrap();
        assert_abs_diff_eq!(critic.score(&constant).unwrap(), 1.0 - 4.0, epsilon = 1e-12);
    }

    #[test]
    fn empirical_tvd_ternary_fits_zero_shift() {
        let base = FiniteSource::uniform(3).unwrap();
        let critic = Critic::empirical_tvd(&base).unwrap();
        assert_eq!(critic.metadata()["shift"], 0);
        // Ternary activation starts at t = 9; below that scores are flat.
        let b = Block::from_digits(3, "0120").unwrap();
        assert_abs_diff_eq!(critic.score(&b).unwrap(), -TWO_LOG2_3, epsilon = 1e-12);
    }

    #[test]
    fn mixture_combines_constant_scores() {
        let base = uniform2();
        let zero = Critic::constant(&base, 0.0).unwrap();
        let one = Critic::constant(&base, 1.0).unwrap();
        let mix = Critic::mixture(vec![(0.5, zero), (0.5, one)]).unwrap();
        let b = Block::from_digits(2, "01").unwrap();
        assert_abs_diff_eq!(mix.score(&b).unwrap(), 1.5f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn mixture_dominates_components_up_to_weight() {
        let base = uniform2();
        let freq = Critic::frequency(&base, 1).unwrap();
        let comp = Critic::compressor(&base, Coder::Lz78).unwrap();
        let mix = Critic::mixture(vec![(0.3, freq.clone()), (0.7, comp.clone())]).unwrap();
        for digits in ["0000", "0110", "1111", "010101"] {
            let b = Block::from_digits(2, digits).unwrap();
            let m = mix.score(&b).unwrap();
            assert!(m >= freq.score(&b).unwrap() + 0.3f64.log2() - 1e-12);
            assert!(m >= comp.score(&b).unwrap() + 0.7f64.log2() - 1e-12);
        }
    }

    #[test]
    fn mixture_rejects_mismatched_bases() {
        let a = Critic::constant(&uniform2(), 0.0).unwrap();
        let b = Critic::constant(&FiniteSource::bernoulli(0.3).unwrap(), 0.0).unwrap();
        assert!(Critic::mixture(vec![(0.5, a.clone()), (0.5, b)]).is_err());
        assert!(Critic::mixture(vec![(0.6, a.clone()), (0.6, a.clone())]).is_err());
        assert!(Critic::mixture(vec![]).is_err());
    }

    #[test]
    fn exhaustive_validity_catches_cheating_critic() {
        let base = uniform2();
        let honest = Critic::constant(&base, -0.5).unwrap();
        let report = honest.check_validity(3, ValidityMode::Exhaustive).unwrap();
        assert!(report.pass);
        assert_abs_diff_eq!(report.budget, (-0.5f64).exp2(), epsilon = 1e-12);
        let cheat = Critic::constant(&base, 0.5).unwrap();
        let report = cheat.check_validity(3, ValidityMode::Exhaustive).unwrap();
        assert!(!report.pass);
        assert_abs_diff_eq!(report.budget, 0.5f64.exp2(), epsilon = 1e-12);
    }

    #[test]
    fn monte_carlo_validity_tracks_exhaustive() {
        let base = FiniteSource::bernoulli(0.3).unwrap();
        let critic = Critic::frequency(&base, 1).unwrap();
        let exact = critic.check_validity(6, ValidityMode::Exhaustive).unwrap();
        let mc = critic
            .check_validity(
                6,
                ValidityMode::MonteCarlo {
                    trials: 20_000,
                    seed: 11,
                },
            )
            .unwrap();
        assert!(mc.pass);
        let half = mc.half_width.unwrap();
        assert!(
            (mc.budget - exact.budget).abs() <= 5.0 * half,
            "estimate {} too far from exact {}",
            mc.budget,
            exact.budget
        );
    }

    #[test]
    fn monte_carlo_validity_is_seed_deterministic() {
        let critic = Critic::frequency(&uniform2(), 1).unwrap();
        let mode = ValidityMode::MonteCarlo {
            trials: 1000,
            seed: 5,
        };
        let a = critic.check_validity(4, mode).unwrap();
        let b = critic.check_validity(4, mode).unwrap();
        assert_eq!(a.budget.to_bits(), b.budget.to_bits());
    }

    #[test]
    fn positive_part_budgets_hold_for_frequency() {
        let critic = Critic::frequency(&uniform2(), 1).unwrap();
        for n in [1usize, 4, 9] {
            let stats = critic.positive_part_stats(n).unwrap();
            assert!(stats.pass(), "budgets failed at n = {n}: {stats:?}");
            assert!(stats.mean_score <= tol::VALIDITY_SLACK);
        }
    }

    #[test]
    fn score_rejects_alphabet_mismatch() {
        let critic = Critic::frequency(&uniform2(), 1).unwrap();
        let ternary = Block::from_digits(3, "012").unwrap();
        assert!(critic.score(&ternary).is_err());
    }
}
