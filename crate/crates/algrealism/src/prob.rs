//! Finite-alphabet probability primitives: sources, channels, blocks,
//! distortion, total variation distance, and mutual information.
//!
//! Everything downstream (critics, rate-distortion, codes, experiments) is
//! built on the types in this module. Alphabets are `0..k` with `k >= 2`, and
//! length-`n` blocks index product tables in most-significant-digit-first
//! base-`k` order, so block `[1, 0]` over a binary alphabet has index 2.

use crate::error::{Error, Result};
use crate::tol;
use rand::Rng;

/// Compensated (Kahan) accumulator for long sums of small terms.
///
/// Exhaustive validity checks sum up to 2^22 terms against a slack of 1e-9;
/// naive accumulation error is the same order as the slack, compensation
/// keeps it near machine precision.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Returns `k^n` if it stays within `2^max_log2`, else a resource error.
///
/// Used as the gate for every exhaustive product-alphabet enumeration.
pub fn table_size(k: usize, n: usize, max_log2: u32) -> Result<usize> {
    let limit = 1usize << max_log2;
    let mut size = 1usize;
    for _ in 0..n {
        size = size.checked_mul(k).filter(|&s| s <= limit).ok_or_else(|| {
            Error::ResourceLimit(format!(
                "table of size {k}^{n} exceeds the 2^{max_log2} enumeration guard"
            ))
        })?;
    }
    Ok(size)
}

/// Shannon entropy of a pmf in bits, with the 0 log 0 = 0 convention.
pub fn entropy_bits(pmf: &[f64]) -> f64 {
    pmf.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Binary entropy h(x) = -x log2 x - (1-x) log2 (1-x) in bits.
pub fn binary_entropy(x: f64) -> f64 {
    entropy_bits(&[x, 1.0 - x])
}

/// Validates that `pmf` is a probability vector: entries non-negative and
/// summing to 1 within [`tol::PMF_SUM`].
fn check_pmf(pmf: &[f64], what: &str) -> Result<()> {
    if pmf.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::invalid(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > tol::PMF_SUM {
        return Err(Error::invalid(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Total variation distance between two pmfs over the same alphabet.
///
/// Returns a value in [0, 1]. Errors if the dimensions differ or either
/// vector is not a pmf.
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::invalid(format!(
            "tvd needs equal dimensions, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    check_pmf(p, "first pmf")?;
    check_pmf(q, "second pmf")?;
    Ok(tvd_unchecked(p, q))
}

/// Total variation distance without pmf validation, for internal hot paths
/// where both arguments are constructed in-crate.
pub(crate) fn tvd_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = KahanSum::default();
    for (&a, &b) in p.iter().zip(q) {
        acc.add((a - b).abs());
    }
    0.5 * acc.value()
}

/// Exact total variation distance between the `b`-fold products of two pmfs.
///
/// Enumerates the product alphabet, so it requires `len^b <= 81`; that covers
/// batch sizes up to 4 over binary and ternary alphabets.
pub fn product_tvd(p: &[f64], q: &[f64], b: usize) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::invalid(
            "product_tvd needs equal dimensions".to_string(),
        ));
    }
    check_pmf(p, "first pmf")?;
    check_pmf(q, "second pmf")?;
    if b == 0 {
        return Ok(0.0);
    }
    let size = table_size(p.len(), b, 7)?;
    if size > 81 {
        return Err(Error::ResourceLimit(format!(
            "product_tvd table of {size} entries exceeds the 81-entry guard"
        )));
    }
    let pt = product_table_of(p, b);
    let qt = product_table_of(q, b);
    Ok(tvd_unchecked(&pt, &qt))
}

/// Builds the length-`n` product table of a pmf in block-index order.
fn product_table_of(pmf: &[f64], n: usize) -> Vec<f64> {
    let mut table = vec![1.0];
    for _ in 0..n {
        let mut next = Vec::with_capacity(table.len() * pmf.len());
        for &t in &table {
            for &p in pmf {
                next.push(t * p);
            }
        }
        table = next;
    }
    table
}

/// A full-support pmf on the alphabet `0..k`.
///
/// Invariants: `k >= 2`, every entry strictly positive, entries sum to 1
/// within [`tol::SOURCE_SUM`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FiniteSource {
    pmf: Vec<f64>,
}

impl FiniteSource {
    /// Builds a source from an explicit pmf.
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() < 2 {
            return Err(Error::invalid(
                "a source needs an alphabet of at least 2 symbols",
            ));
        }
        if pmf.iter().any(|&p| !p.is_finite() || p <= 0.0) {
            return Err(Error::invalid(
                "every source probability must be strictly positive and finite",
            ));
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > tol::SOURCE_SUM {
            return Err(Error::invalid(format!(
                "source pmf sums to {sum}, expected 1"
            )));
        }
        Ok(FiniteSource { pmf })
    }

    /// The uniform source on `k` symbols.
    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("uniform source needs k >= 2"));
        }
        FiniteSource::new(vec![1.0 / k as f64; k])
    }

    /// A binary source with P(1) = q. Requires `0 < q < 1`.
    pub fn bernoulli(q: f64) -> Result<Self> {
        FiniteSource::new(vec![1.0 - q, q])
    }

    /// Alphabet size.
    pub fn k(&self) -> usize {
        self.pmf.len()
    }

    /// The pmf as a slice.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Probability of a single symbol.
    pub fn prob(&self, symbol: usize) -> f64 {
        self.pmf[symbol]
    }

    /// Smallest symbol probability; strictly positive by construction.
    pub fn min_prob(&self) -> f64 {
        self.pmf.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        entropy_bits(&self.pmf)
    }

    /// Base-2 log-probability of one block under the product measure.
    pub fn log2_block_prob(&self, block: &Block) -> f64 {
        block.symbols().iter().map(|&s| self.pmf[s].log2()).sum()
    }

    /// Probability of one block under the product measure.
    pub fn block_prob(&self, block: &Block) -> f64 {
        block.symbols().iter().map(|&s| self.pmf[s]).product()
    }

    /// The full product pmf over blocks of length `n`, in block-index order.
    ///
    /// Guarded by `k^n <= 2^max_log2`.
    pub fn product_table(&self, n: usize, max_log2: u32) -> Result<Vec<f64>> {
        table_size(self.k(), n, max_log2)?;
        Ok(product_table_of(&self.pmf, n))
    }

    /// Draws one symbol.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.pmf.len() - 1
    }

    /// Draws one i.i.d. block of length `n`.
    pub fn sample_block(&self, n: usize, rng: &mut impl Rng) -> Block {
        let symbols = (0..n).map(|_| self.sample(rng)).collect();
        Block {
            k: self.k(),
            symbols,
        }
    }
}

/// A finite string over the alphabet `0..k`.
///
/// Invariants: `k >= 2` and every symbol is below `k`. Blocks may be empty;
/// the empty block has product probability 1 and index 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    k: usize,
    symbols: Vec<usize>,
}

impl Block {
    /// Builds a block, validating the alphabet.
    pub fn new(k: usize, symbols: Vec<usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("block alphabet needs k >= 2"));
        }
        if symbols.iter().any(|&s| s >= k) {
            return Err(Error::invalid(format!(
                "block contains a symbol >= k = {k}"
            )));
        }
        Ok(Block { k, symbols })
    }

    /// Decodes the block with the given index among length-`n` strings,
    /// most significant digit first.
    pub fn from_index(k: usize, n: usize, mut index: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("block alphabet needs k >= 2"));
        }
        let mut symbols = vec![0usize; n];
        for slot in symbols.iter_mut().rev() {
            *slot = index % k;
            index /= k;
        }
        if index != 0 {
            return Err(Error::invalid("block index out of range for given length"));
        }
        Ok(Block { k, symbols })
    }

    /// Parses a block from base-`k` digit characters, e.g. `"0011"`.
    ///
    /// Only alphabets up to 10 symbols have a digit notation.
    pub fn from_digits(k: usize, digits: &str) -> Result<Self> {
        if k > 10 {
            return Err(Error::invalid(
                "digit notation covers alphabets up to k = 10",
            ));
        }
        let mut symbols = Vec::with_capacity(digits.len());
        for c in digits.chars() {
            let v = c
                .to_digit(10)
                .ok_or_else(|| Error::invalid(format!("invalid block digit {c:?}")))?
                as usize;
            symbols.push(v);
        }
        Block::new(k, symbols)
    }

    /// Renders the block as base-`k` digit characters.
    pub fn digits(&self) -> Result<String> {
        if self.k > 10 {
            return Err(Error::invalid(
                "digit notation covers alphabets up to k = 10",
            ));
        }
        Ok(self
            .symbols
            .iter()
            .map(|&s| char::from_digit(s as u32, 10).expect("symbol below 10"))
            .collect())
    }

    /// Alphabet size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Block length.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Whether the block is empty.
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The symbols as a slice.
    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    /// The index of this block among all length-`n` strings, most significant
    /// digit first. Errors if the index would overflow `usize`.
    pub fn to_index(&self) -> Result<usize> {
        let mut index = 0usize;
        for &s in &self.symbols {
            index = index
                .checked_mul(self.k)
                .and_then(|v| v.checked_add(s))
                .ok_or_else(|| Error::ResourceLimit("block index overflows usize".to_string()))?;
        }
        Ok(index)
    }

    /// Advances the symbols to the next block in index order, returning
    /// `false` after wrapping past the last block. Used by exhaustive loops.
    pub(crate) fn advance_odometer(&mut self) -> bool {
        for slot in self.symbols.iter_mut().rev() {
            *slot += 1;
            if *slot < self.k {
                return true;
            }
            *slot = 0;
        }
        false
    }
}

/// A non-empty batch of equal-length blocks over one alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    blocks: Vec<Block>,
}

impl Batch {
    /// Builds a batch, validating shape uniformity.
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::invalid("a batch needs at least one block"))?;
        let (k, n) = (first.k(), first.len());
        if blocks.iter().any(|b| b.k() != k || b.len() != n) {
            return Err(Error::invalid(
                "batch blocks must share alphabet and length",
            ));
        }
        Ok(Batch { blocks })
    }

    /// Number of blocks.
    pub fn batch_size(&self) -> usize {
        self.blocks.len()
    }

    /// Length of each block.
    pub fn block_len(&self) -> usize {
        self.blocks[0].len()
    }

    /// Alphabet size.
    pub fn k(&self) -> usize {
        self.blocks[0].k()
    }

    /// The blocks as a slice.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// All blocks joined into one long block, in batch order.
    pub fn concatenated(&self) -> Block {
        let mut symbols = Vec::with_capacity(self.batch_size() * self.block_len());
        for b in &self.blocks {
            symbols.extend_from_slice(b.symbols());
        }
        Block {
            k: self.k(),
            symbols,
        }
    }
}

/// Empirical distribution of a batch over the `k^n` possible blocks, in
/// block-index order. Guarded by `k^n <= 2^20`.
pub fn empirical_block_distribution(batch: &Batch) -> Result<Vec<f64>> {
    let size = table_size(batch.k(), batch.block_len(), 20)?;
    let mut hist = vec![0.0; size];
    let weight = 1.0 / batch.batch_size() as f64;
    for b in batch.blocks() {
        hist[b.to_index()?] += weight;
    }
    Ok(hist)
}

/// A per-symbol distortion matrix `d(x, y) >= 0` on a shared alphabet.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DistortionMatrix {
    entries: Vec<Vec<f64>>,
}

impl DistortionMatrix {
    /// Builds a `k x k` matrix with non-negative finite entries.
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let k = entries.len();
        if k < 2 {
            return Err(Error::invalid("distortion matrix needs k >= 2"));
        }
        if entries.iter().any(|row| row.len() != k) {
            return Err(Error::invalid("distortion matrix must be square"));
        }
        if entries.iter().flatten().any(|&d| !d.is_finite() || d < 0.0) {
            return Err(Error::invalid(
                "distortion entries must be non-negative and finite",
            ));
        }
        Ok(DistortionMatrix { entries })
    }

    /// The Hamming distortion: 0 on the diagonal, 1 elsewhere.
    pub fn hamming(k: usize) -> Result<Self> {
        let entries = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
            .collect();
        DistortionMatrix::new(entries)
    }

    /// Alphabet size.
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    /// The distortion between two symbols.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x][y]
    }

    /// Largest entry.
    pub fn max(&self) -> f64 {
        self.entries.iter().flatten().cloned().fold(0.0, f64::max)
    }

    /// The rows as slices.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }
}

/// Average per-symbol distortion between two same-shape batches: the mean of
/// `d(x_t, y_t)` over every position of every block.
pub fn additive_distortion(x: &Batch, y: &Batch, d: &DistortionMatrix) -> Result<f64> {
    if x.batch_size() != y.batch_size() || x.block_len() != y.block_len() {
        return Err(Error::invalid(
            "distortion needs batches of identical shape",
        ));
    }
    if x.k() != d.k() || y.k() != d.k() {
        return Err(Error::invalid(
            "distortion matrix alphabet does not match batches",
        ));
    }
    let mut total = 0.0;
    for (bx, by) in x.blocks().iter().zip(y.blocks()) {
        for (&sx, &sy) in bx.symbols().iter().zip(by.symbols()) {
            total += d.get(sx, sy);
        }
    }
    Ok(total / (x.batch_size() * x.block_len()) as f64)
}

/// A channel `W(y | x)` on a shared alphabet: one row-stochastic row per
/// input symbol.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Kernel {
    rows: Vec<Vec<f64>>,
}

impl Kernel {
    /// Builds a `k x k` kernel; each row must be a pmf within
    /// [`tol::SOURCE_SUM`] (zero entries allowed).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::invalid("kernel needs k >= 2"));
        }
        for row in &rows {
            if row.len() != k {
                return Err(Error::invalid("kernel must be square"));
            }
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::invalid("kernel entries must be non-negative"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol::SOURCE_SUM {
                return Err(Error::invalid(format!(
                    "kernel row sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Kernel { rows })
    }

    /// The binary symmetric channel that flips with probability `eps`.
    pub fn bsc(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::invalid("flip probability must lie in [0, 1]"));
        }
        Kernel::new(vec![vec![1.0 - eps, eps], vec![eps, 1.0 - eps]])
    }

    /// The identity (noiseless) kernel on `k` symbols.
    pub fn identity(k: usize) -> Result<Self> {
        let rows = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Kernel::new(rows)
    }

    /// Alphabet size.
    pub fn k(&self) -> usize {
        self.rows.len()
    }

    /// Transition probability `W(y | x)`.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    /// The row for input `x`.
    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    /// Output distribution when the input follows `pmf`.
    pub fn induced_marginal(&self, pmf: &[f64]) -> Vec<f64> {
        let k = self.k();
        let mut out = vec![0.0; k];
        for (x, &px) in pmf.iter().enumerate() {
            for y in 0..k {
                out[y] += px * self.rows[x][y];
            }
        }
        out
    }

    /// Whether applying the kernel to `source` returns the same marginal
    /// within total variation `tolerance`.
    pub fn preserves_marginal(&self, source: &FiniteSource, tolerance: f64) -> bool {
        let induced = self.induced_marginal(source.pmf());
        tvd_unchecked(&induced, source.pmf()) <= tolerance
    }

    /// Draws one output symbol for input `x`.
    pub fn sample_output(&self, x: usize, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (y, &w) in self.rows[x].iter().enumerate() {
            acc += w;
            if u < acc {
                return y;
            }
        }
        self.rows[x].len() - 1
    }

    /// The reverse channel `P(x | y)` when the input follows `source`.
    ///
    /// Errors if some output symbol has zero probability, since its reverse
    /// row would be undefined.
    pub fn reverse(&self, source: &FiniteSource) -> Result<Kernel> {
        let k = self.k();
        if source.k() != k {
            return Err(Error::invalid("source and kernel alphabets differ"));
        }
        let marginal = self.induced_marginal(source.pmf());
        let mut rows = vec![vec![0.0; k]; k];
        for (y, &my) in marginal.iter().enumerate() {
            if my <= 0.0 {
                return Err(Error::invalid(format!(
                    "output symbol {y} has zero probability, reverse channel undefined"
                )));
            }
            for x in 0..k {
                rows[y][x] = source.prob(x) * self.rows[x][y] / my;
            }
        }
        Kernel::new(rows)
    }
}

/// A joint pmf on a product of two finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    table: Vec<Vec<f64>>,
}

impl JointPmf {
    /// Builds a joint pmf; entries non-negative, total 1 within
    /// [`tol::SOURCE_SUM`].
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        if table.is_empty() || table[0].is_empty() {
            return Err(Error::invalid("joint pmf must be non-empty"));
        }
        let cols = table[0].len();
        if table.iter().any(|row| row.len() != cols) {
            return Err(Error::invalid("joint pmf rows must have equal length"));
        }
        if table.iter().flatten().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::invalid("joint pmf entries must be non-negative"));
        }
        let sum: f64 = table.iter().flatten().sum();
        if (sum - 1.0).abs() > tol::SOURCE_SUM {
            return Err(Error::invalid(format!(
                "joint pmf sums to {sum}, expected 1"
            )));
        }
        Ok(JointPmf { table })
    }

    /// The joint law of `(X, Y)` with `X ~ source` and `Y | X ~ kernel`.
    pub fn from_source_kernel(source: &FiniteSource, kernel: &Kernel) -> Result<Self> {
        if source.k() != kernel.k() {
            return Err(Error::invalid("source and kernel alphabets differ"));
        }
        let table = (0..source.k())
            .map(|x| kernel.row(x).iter().map(|&w| source.prob(x) * w).collect())
            .collect();
        JointPmf::new(table)
    }

    /// Number of rows (x symbols).
    pub fn k_x(&self) -> usize {
        self.table.len()
    }

    /// Number of columns (y symbols).
    pub fn k_y(&self) -> usize {
        self.table[0].len()
    }

    /// The joint probability of `(x, y)`.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.table[x][y]
    }

    /// Marginal law of the row coordinate.
    pub fn marginal_x(&self) -> Vec<f64> {
        self.table.iter().map(|row| row.iter().sum()).collect()
    }

    /// Marginal law of the column coordinate.
    pub fn marginal_y(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k_y()];
        for row in &self.table {
            for (y, &p) in row.iter().enumerate() {
                out[y] += p;
            }
        }
        out
    }

    /// The table flattened row-major into one pmf, for comparisons with
    /// [`tvd`].
    pub fn flatten(&self) -> Vec<f64> {
        self.table.iter().flatten().cloned().collect()
    }

    /// Mutual information between the coordinates, in bits.
    ///
    /// Always non-negative; tiny negative rounding residue is clamped to 0.
    pub fn mutual_information_bits(&self) -> f64 {
        let mx = self.marginal_x();
        let my = self.marginal_y();
        let mut acc = KahanSum::default();
        for (x, row) in self.table.iter().enumerate() {
            for (y, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    acc.add(p * (p / (mx[x] * my[y])).log2());
                }
            }
        }
        acc.value().max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn source_rejects_bad_pmfs() {
        assert!(FiniteSource::new(vec![1.0]).is_err());
        assert!(FiniteSource::new(vec![0.5, 0.5000001]).is_err());
        assert!(FiniteSource::new(vec![1.0, 0.0]).is_err());
        assert!(FiniteSource::new(vec![-0.5, 1.5]).is_err());
        assert!(FiniteSource::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn bernoulli_orders_symbols() {
        let s = FiniteSource::bernoulli(0.2).unwrap();
        assert_abs_diff_eq!(s.prob(0), 0.8);
        assert_abs_diff_eq!(s.prob(1), 0.2);
        assert_abs_diff_eq!(s.min_prob(), 0.2);
    }

    #[test]
    fn entropy_matches_closed_forms() {
        assert_abs_diff_eq!(FiniteSource::uniform(2).unwrap().entropy_bits(), 1.0);
        assert_abs_diff_eq!(
            FiniteSource::uniform(8).unwrap().entropy_bits(),
            3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(binary_entropy(0.5), 1.0, epsilon = 1e-12);
        // h(0.11) appears in classic channel-capacity tables.
        assert_abs_diff_eq!(binary_entropy(0.11), 0.499916, epsilon = 1e-6);
    }

    #[test]
    fn block_index_roundtrip_is_msb_first() {
        let b = Block::from_digits(2, "10").unwrap();
        assert_eq!(b.to_index().unwrap(), 2);
        let c = Block::from_index(3, 4, 35).unwrap();
        assert_eq!(c.digits().unwrap(), "1022");
        assert_eq!(c.to_index().unwrap(), 35);
    }

    #[test]
    fn odometer_covers_all_blocks_in_index_order() {
        let mut b = Block::new(3, vec![0, 0, 0]).unwrap();
        let mut seen = vec![b.to_index().unwrap()];
        while b.advance_odometer() {
            seen.push(b.to_index().unwrap());
        }
        assert_eq!(seen, (0..27).collect::<Vec<_>>());
    }

    #[test]
    fn product_table_matches_block_probs() {
        let s = FiniteSource::new(vec![0.2, 0.3, 0.5]).unwrap();
        let t = s.product_table(3, 22).unwrap();
        assert_eq!(t.len(), 27);
        let total: f64 = t.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        for idx in [0usize, 5, 13, 26] {
            let b = Block::from_index(3, 3, idx).unwrap();
            assert_abs_diff_eq!(t[idx], s.block_prob(&b), epsilon = 1e-15);
        }
    }

    #[test]
    fn tvd_basics() {
        let p = [0.5, 0.5];
        let q = [0.9, 0.1];
        assert_abs_diff_eq!(tvd(&p, &q).unwrap(), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(tvd(&p, &p).unwrap(), 0.0);
        assert!(tvd(&p, &[0.5, 0.4]).is_err());
        assert!(tvd(&p, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn product_tvd_binary_hand_check() {
        // TVD((0.5,0.5)^2, (1,0)-ish^2) via direct enumeration of 4 cells.
        let p = [0.5, 0.5];
        let q = [0.9, 0.1];
        let direct = {
            let pt = [0.25f64, 0.25, 0.25, 0.25];
            let qt = [0.81f64, 0.09, 0.09, 0.01];
            0.5 * pt
                .iter()
                .zip(qt.iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        };
        assert_abs_diff_eq!(product_tvd(&p, &q, 2).unwrap(), direct, epsilon = 1e-15);
        assert!(product_tvd(&p, &q, 8).is_err());
    }

    #[test]
    fn empirical_distribution_counts_blocks() {
        let blocks = vec![
            Block::from_digits(2, "01").unwrap(),
            Block::from_digits(2, "01").unwrap(),
            Block::from_digits(2, "11").unwrap(),
            Block::from_digits(2, "00").unwrap(),
        ];
        let hist = empirical_block_distribution(&Batch::new(blocks).unwrap()).unwrap();
        assert_abs_diff_eq!(hist[0], 0.25);
        assert_abs_diff_eq!(hist[1], 0.5);
        assert_abs_diff_eq!(hist[2], 0.0);
        assert_abs_diff_eq!(hist[3], 0.25);
    }

    #[test]
    fn hamming_distortion_averages_mismatches() {
        let d = DistortionMatrix::hamming(2).unwrap();
        let x = Batch::new(vec![
            Block::from_digits(2, "0011").unwrap(),
            Block::from_digits(2, "1111").unwrap(),
        ])
        .unwrap();
        let y = Batch::new(vec![
            Block::from_digits(2, "0111").unwrap(),
            Block::from_digits(2, "1111").unwrap(),
        ])
        .unwrap();
        assert_abs_diff_eq!(additive_distortion(&x, &y, &d).unwrap(), 0.125);
    }

    #[test]
    fn bsc_preserves_uniform_but_not_biased() {
        let w = Kernel::bsc(0.1).unwrap();
        let uniform = FiniteSource::uniform(2).unwrap();
        let biased = FiniteSource::bernoulli(0.2).unwrap();
        assert!(w.preserves_marginal(&uniform, 1e-12));
        assert!(!w.preserves_marginal(&biased, 1e-3));
    }

    #[test]
    fn reverse_channel_inverts_joint() {
        let p = FiniteSource::bernoulli(0.3).unwrap();
        let w = Kernel::bsc(0.1).unwrap();
        let rev = w.reverse(&p).unwrap();
        let my = w.induced_marginal(p.pmf());
        // Joint factorizations p(x) w(y|x) and m(y) rev(x|y) must agree.
        for x in 0..2 {
            for y in 0..2 {
                assert_abs_diff_eq!(
                    p.prob(x) * w.prob(x, y),
                    my[y] * rev.prob(y, x),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn reverse_rejects_dead_outputs() {
        let p = FiniteSource::uniform(2).unwrap();
        let w = Kernel::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(w.reverse(&p).is_err());
    }

    #[test]
    fn mutual_information_closed_forms() {
        let p = FiniteSource::uniform(2).unwrap();
        // Noiseless channel: I = H(X) = 1 bit.
        let ident = JointPmf::from_source_kernel(&p, &Kernel::identity(2).unwrap()).unwrap();
        assert_abs_diff_eq!(ident.mutual_information_bits(), 1.0, epsilon = 1e-12);
        // Uniform input on a BSC(eps): I = 1 - h(eps).
        let bsc = JointPmf::from_source_kernel(&p, &Kernel::bsc(0.11).unwrap()).unwrap();
        assert_abs_diff_eq!(
            bsc.mutual_information_bits(),
            1.0 - binary_entropy(0.11),
            epsilon = 1e-12
        );
        // Independent coordinates: I = 0.
        let indep = JointPmf::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert_abs_diff_eq!(indep.mutual_information_bits(), 0.0);
    }

    #[test]
    fn joint_marginals_sum_correctly() {
        let p = FiniteSource::bernoulli(0.3).unwrap();
        let w = Kernel::bsc(0.2).unwrap();
        let j = JointPmf::from_source_kernel(&p, &w).unwrap();
        let mx = j.marginal_x();
        assert_abs_diff_eq!(mx[0], 0.7, epsilon = 1e-14);
        let my = j.marginal_y();
        assert_abs_diff_eq!(my[1], 0.7 * 0.2 + 0.3 * 0.8, epsilon = 1e-14);
    }

    #[test]
    fn table_size_guard_trips() {
        assert_eq!(table_size(2, 10, 22).unwrap(), 1024);
        assert!(table_size(2, 23, 22).is_err());
        assert!(table_size(3, 30, 22).is_err());
    }
}
