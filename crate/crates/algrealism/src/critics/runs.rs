//! Exact longest-run statistics for i.i.d. binary strings.
//!
//! The run-length critic needs E[R_n] and Var(R_n), where R_n is the longest
//! run of ones in an n-bit string with ones probability q. Both are computed
//! exactly from the tail identities E[R] = sum_L P(R >= L) and
//! E[R^2] = sum_L (2L - 1) P(R >= L), with P(R_n < L) obtained by a
//! first-zero recurrence.

use crate::error::{Error, Result};
use crate::prob::Block;

/// Probability mass below which remaining tail terms are dropped.
///
/// P(R_n >= L) <= n q^L, so truncating at the first L with n q^L below this
/// threshold perturbs the moments by far less than any tolerance in use.
const TAIL_EPSILON: f64 = 1e-20;

/// Longest run of `symbol` in a block; 0 for an empty block.
pub fn longest_run_of(block: &Block, symbol: usize) -> usize {
    let mut best = 0usize;
    let mut current = 0usize;
    for &s in block.symbols() {
        if s == symbol {
            current += 1;
            best = best.max(current);
        } else {
            current = 0;
        }
    }
    best
}

/// Exact mean and variance of the longest run of ones, for every length up
/// to `n_max`. Index 0 is present but unused.
#[derive(Debug, Clone)]
pub struct RunMoments {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Computes [`RunMoments`] for ones probability `q` in `(0, 1)`.
///
/// For each threshold L the recurrence conditions on the first zero: a
/// length-m string has longest run < L exactly when it starts with j < L
/// ones followed by a zero and a valid remainder, or is all ones with
/// m < L. Work is O(n_max * L_cut^2) total, well under a second for the
/// lengths used here.
pub fn longest_run_moments(q: f64, n_max: usize) -> Result<RunMoments> {
    if !(0.0..1.0).contains(&q) || q <= 0.0 {
        return Err(Error::invalid("run moments need q in (0, 1)"));
    }
    if n_max == 0 {
        return Err(Error::invalid("run moments need n_max >= 1"));
    }
    // Smallest L with n_max * q^L < TAIL_EPSILON, capped at n_max.
    let l_cut = {
        let bound = ((TAIL_EPSILON / n_max as f64).ln() / q.ln()).ceil() as usize;
        bound.clamp(1, n_max)
    };
    let mut sum_tail = vec![0.0f64; n_max + 1];
    let mut sum_weighted = vec![0.0f64; n_max + 1];
    let mut below = vec![0.0f64; n_max + 1];
    for l in 1..=l_cut {
        // below[m] = P(longest run of ones in m bits < l).
        below[0] = 1.0;
        for m in 1..=n_max {
            let mut acc = 0.0;
            let mut qj = 1.0;
            for j in 0..l.min(m) {
                acc += qj * (1.0 - q) * below[m - j - 1];
                qj *= q;
            }
            if m < l {
                acc += q.powi(m as i32);
            }
            below[m] = acc;
        }
        let weight = (2 * l - 1) as f64;
        for m in 1..=n_max {
            let tail = (1.0 - below[m]).max(0.0);
            sum_tail[m] += tail;
            sum_weighted[m] += weight * tail;
        }
    }
    let mut var = vec![0.0f64; n_max + 1];
    for m in 1..=n_max {
        var[m] = (sum_weighted[m] - sum_tail[m] * sum_tail[m]).max(0.0);
    }
    Ok(RunMoments {
        mean: sum_tail,
        var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute-force moments by enumerating all 2^n strings.
    fn brute_force_moments(q: f64, n: usize) -> (f64, f64) {
        let mut mean = 0.0;
        let mut second = 0.0;
        for bits in 0u64..(1 << n) {
            let symbols: Vec<usize> = (0..n).map(|i| ((bits >> i) & 1) as usize).collect();
            let ones = symbols.iter().filter(|&&s| s == 1).count();
            let p = q.powi(ones as i32) * (1.0 - q).powi((n - ones) as i32);
            let block = Block::new(2, symbols).unwrap();
            let r = longest_run_of(&block, 1) as f64;
            mean += p * r;
            second += p * r * r;
        }
        (mean, second - mean * mean)
    }

    #[test]
    fn longest_run_hand_checks() {
        let b = Block::from_digits(2, "0110111").unwrap();
        assert_eq!(longest_run_of(&b, 1), 3);
        assert_eq!(longest_run_of(&b, 0), 1);
        let all = Block::from_digits(2, "1111").unwrap();
        assert_eq!(longest_run_of(&all, 1), 4);
        assert_eq!(longest_run_of(&all, 0), 0);
        let empty = Block::new(2, vec![]).unwrap();
        assert_eq!(longest_run_of(&empty, 1), 0);
    }

    #[test]
    fn moments_match_enumeration_fair_coin() {
        let m = longest_run_moments(0.5, 12).unwrap();
        for n in 1..=12 {
            let (mean, var) = brute_force_moments(0.5, n);
            assert_abs_diff_eq!(m.mean[n], mean, epsilon = 1e-10);
            assert_abs_diff_eq!(m.var[n], var, epsilon = 1e-10);
        }
    }

    #[test]
    fn moments_match_enumeration_biased_coin() {
        for q in [0.1, 0.3, 0.5] {
            let m = longest_run_moments(q, 10).unwrap();
            for n in [1usize, 5, 10] {
                let (mean, var) = brute_force_moments(q, n);
                assert_abs_diff_eq!(m.mean[n], mean, epsilon = 1e-10);
                assert_abs_diff_eq!(m.var[n], var, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn tiny_cases_match_closed_forms() {
        // n = 1: R is Bernoulli(q).
        let m = longest_run_moments(0.3, 1).unwrap();
        assert_abs_diff_eq!(m.mean[1], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(m.var[1], 0.3 * 0.7, epsilon = 1e-12);
        // n = 2: P(R=0) = (1-q)^2, P(R=1) = 2q(1-q), P(R=2) = q^2.
        let m2 = longest_run_moments(0.3, 2).unwrap();
        let mean = 2.0 * 0.3 * 0.7 + 2.0 * 0.09;
        let second = 2.0 * 0.3 * 0.7 + 4.0 * 0.09;
        assert_abs_diff_eq!(m2.mean[2], mean, epsilon = 1e-12);
        assert_abs_diff_eq!(m2.var[2], second - mean * mean, epsilon = 1e-12);
    }

    #[test]
    fn mean_grows_like_log_n() {
        let m = longest_run_moments(0.5, 4096).unwrap();
        // The fair-coin longest run concentrates near log2(n).
        assert!((m.mean[1024] - 10.0).abs() < 1.5);
        assert!((m.mean[4096] - 12.0).abs() < 1.5);
        assert!(m.mean[4096] > m.mean[1024]);
        // Variance stays bounded for fair coins.
        assert!(m.var[4096] < 4.0);
        assert!(m.var[4096] > 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(longest_run_moments(0.0, 8).is_err());
        assert!(longest_run_moments(1.0, 8).is_err());
        assert!(longest_run_moments(0.5, 0).is_err());
    }
}
