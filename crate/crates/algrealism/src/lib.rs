//! Algorithmic realism for lossy compression on finite alphabets.
//!
//! This crate provides the pieces needed to build and audit one-shot lossy
//! codes whose reconstructions are statistically indistinguishable from the
//! source, as judged by computable tests:
//!
//! * [`critics`]: score functions ("critics") that assign realism scores to
//!   reconstruction blocks. Each critic family satisfies a universal budget,
//!   so high scores certify detectable artifacts rather than bad luck.
//! * [`rdp`]: the marginal-preserving rate-distortion function, the smallest
//!   coding rate compatible with a distortion budget when the reconstruction
//!   must reproduce the source distribution exactly.
//! * [`codec`]: one-shot random codebooks with posterior-sampling or MAP
//!   encoders, plus collision bounds for batched use.
//! * [`experiments`]: seeded, parallel Monte Carlo and exhaustive experiments
//!   that verify the distortion, realism, collision, and covering bounds,
//!   emitting reproducible JSON and CSV reports.
//!
//! Randomness is fully deterministic given a master seed: every trial draws
//! from its own counter-indexed stream (see [`rng`]), so reports are
//! bit-identical across thread counts.

// Index-based loops over matrices mirror the p(x), W(y|x) notation used
// throughout; iterator rewrites obscure which axis is which.
#![allow(clippy::needless_range_loop)]

pub mod codec;
pub mod critics;
pub mod error;
pub mod experiments;
pub mod prob;
pub mod rdp;
pub mod rng;

pub use error::{Error, Result};

/// Named tolerances used across the crate. Each constant is the single
/// source of truth for one class of comparison.
pub mod tol {
    /// Slack allowed when a source pmf must sum to exactly 1.
    pub const SOURCE_SUM: f64 = 1e-12;

    /// Slack allowed for general pmfs (empirical and derived tables).
    pub const PMF_SUM: f64 = 1e-9;

    /// Slack allowed on sub-pmfs and mixture weights, which may sum to at
    /// most 1.
    pub const SUB_PMF_SLACK: f64 = 1e-12;

    /// Slack on the exhaustive critic-validity budget: a critic passes at
    /// length n when the weighted sum of 2^score is at most 1 + this.
    pub const VALIDITY_SLACK: f64 = 1e-9;

    /// Largest total-variation gap tolerated between a solved channel's
    /// output distribution and the source marginal.
    pub const MARGINAL_GAP: f64 = 1e-6;

    /// Total-variation gap within which a kernel counts as
    /// marginal-preserving for certificate preconditions.
    pub const KERNEL_PRESERVES: f64 = 1e-9;

    /// Tolerance for identities that hold exactly in real arithmetic.
    pub const EXACT_IDENTITY: f64 = 1e-12;

    /// Guard below which a float that should be a non-negative integer is
    /// snapped before applying a ceiling.
    pub const CEIL_GUARD: f64 = 1e-9;

    /// Floor applied to realism scores in place of negative infinity.
    pub const SCORE_FLOOR: f64 = -1024.0;
}
