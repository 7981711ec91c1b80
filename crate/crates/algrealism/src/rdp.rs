//! Marginal-preserving rate-distortion: the smallest mutual information
//! I(X; Y) over channels W(y | x) whose output distribution equals the
//! source distribution, subject to an average-distortion budget.
//!
//! The solver runs an outer bisection over a distortion multiplier. For each
//! multiplier it projects the Gibbs kernel `exp(-s d)` onto the couplings
//! with both marginals equal to the source by alternating log-domain
//! scaling, then repairs the output marginal exactly with a convex
//! combination, so the returned channel never violates the constraint by
//! more than float rounding. Feasibility is decided first by an exact
//! transportation linear program (vertex enumeration) for small alphabets.
//!
//! Two independent cross-checks live alongside the solver: a grid oracle
//! over the one-parameter family of binary marginal-preserving channels,
//! and the classical (unconstrained-output) rate-distortion function, which
//! the marginal-preserving rate can never undercut.

use crate::error::{Error, Result};
use crate::prob::{tvd_unchecked, DistortionMatrix, FiniteSource, JointPmf, Kernel};
use crate::tol;

/// Iteration cap for the alternating-scaling projection.
const MAX_SCALING_ITERS: usize = 20_000;

/// Column-marginal residual at which the scaling loop stops early.
const SCALING_RESIDUAL: f64 = 1e-14;

/// Bisection steps over the distortion multiplier.
const BISECT_ITERS: usize = 100;

/// Doublings allowed while searching for a feasible multiplier.
const MAX_DOUBLINGS: usize = 60;

/// Slack accepted on the distortion constraint during the search; well
/// inside the 1e-9 budget the solution must satisfy.
const DISTORTION_SLACK: f64 = 1e-10;

/// A solved marginal-preserving rate-distortion point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RdpSolution {
    /// The minimized mutual information in bits.
    pub rate_bits: f64,
    /// Average distortion of the returned channel; at most the budget plus
    /// 1e-9.
    pub achieved_distortion: f64,
    /// Total variation between the channel's output distribution and the
    /// source; at most [`tol::MARGINAL_GAP`].
    pub marginal_gap: f64,
    /// The distortion multiplier the solver settled on.
    pub multiplier: f64,
    /// The optimizing channel.
    pub kernel: Kernel,
    /// Source entropy in bits, for rate comparisons.
    pub source_entropy_bits: f64,
}

impl RdpSolution {
    /// Whether the solved rate is below the source entropy by more than the
    /// solver's accuracy margin, i.e. the constrained code genuinely
    /// compresses. At a zero budget the two coincide and this is false.
    pub fn rate_below_entropy(&self) -> bool {
        self.rate_bits < self.source_entropy_bits - 1e-6
    }
}

/// `log(sum exp(v))` with max subtraction.
fn ln_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - m).exp()).sum();
    m + sum.ln()
}

/// One candidate channel produced at a fixed multiplier.
struct Candidate {
    kernel: Kernel,
    rate_bits: f64,
    distortion: f64,
    marginal_gap: f64,
}

/// Projects the Gibbs kernel at multiplier `s` onto couplings with both
/// marginals `p`, then repairs the output marginal exactly and converts the
/// coupling to a channel.
fn solve_at_multiplier(source: &FiniteSource, d: &DistortionMatrix, s: f64) -> Result<Candidate> {
    let k = source.k();
    let p = source.pmf();
    let lnp: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let mut a = vec![0.0f64; k];
    let mut b = vec![0.0f64; k];
    let mut buf = vec![0.0f64; k];
    for _ in 0..MAX_SCALING_ITERS {
        // Row scaling: afterwards row sums equal p exactly up to rounding.
        for x in 0..k {
            for y in 0..k {
                buf[y] = b[y] - s * d.get(x, y);
            }
            a[x] = lnp[x] - ln_sum_exp(&buf);
        }
        // Column residual decides convergence.
        let mut resid = 0.0f64;
        for y in 0..k {
            let mut col = 0.0;
            for x in 0..k {
                col += (a[x] + b[y] - s * d.get(x, y)).exp();
            }
            resid = resid.max((col - p[y]).abs());
        }
        if resid < SCALING_RESIDUAL {
            break;
        }
        // Column scaling.
        for y in 0..k {
            for x in 0..k {
                buf[x] = a[x] - s * d.get(x, y);
            }
            b[y] = lnp[y] - ln_sum_exp(&buf);
        }
    }
    // Leave the loop on a row update so rows match p.
    for x in 0..k {
        for y in 0..k {
            buf[y] = b[y] - s * d.get(x, y);
        }
        a[x] = lnp[x] - ln_sum_exp(&buf);
    }
    let mut joint: Vec<Vec<f64>> = (0..k)
        .map(|x| {
            (0..k)
                .map(|y| (a[x] + b[y] - s * d.get(x, y)).exp())
                .collect()
        })
        .collect();

    // Exact repair: mix with a product coupling so columns equal p exactly.
    // With t = 1 - min_y p(y)/m(y) the correction row c is a pmf and
    // (1-t) m + t c = p identically; rows stay p because both parts have
    // row marginal p.
    let mut m = vec![0.0f64; k];
    for row in &joint {
        for (y, &v) in row.iter().enumerate() {
            m[y] += v;
        }
    }
    let ratio = (0..k).map(|y| p[y] / m[y]).fold(f64::INFINITY, f64::min);
    let t = (1.0 - ratio).clamp(0.0, 1.0);
    // Below ~1e-15 the correction row cancels to zero in floats; the
    // marginal is already exact to rounding, so skip the mix.
    if t > 1e-15 {
        let mut c: Vec<f64> = (0..k)
            .map(|y| (p[y] - (1.0 - t) * m[y]).max(0.0) / t)
            .collect();
        let c_sum: f64 = c.iter().sum();
        if c_sum > 0.0 {
            for v in &mut c {
                *v /= c_sum;
            }
            for (x, row) in joint.iter_mut().enumerate() {
                for (y, v) in row.iter_mut().enumerate() {
                    *v = (1.0 - t) * *v + t * p[x] * c[y];
                }
            }
        }
    }

    // Convert to a channel with exactly stochastic rows.
    let rows: Vec<Vec<f64>> = joint
        .iter()
        .map(|row| {
            let sum: f64 = row.iter().sum();
            row.iter().map(|&v| v / sum).collect()
        })
        .collect();
    let kernel = Kernel::new(rows)?;
    let pair = JointPmf::from_source_kernel(source, &kernel)?;
    let mut distortion = 0.0;
    for x in 0..k {
        for y in 0..k {
            distortion += pair.prob(x, y) * d.get(x, y);
        }
    }
    let marginal_gap = tvd_unchecked(&kernel.induced_marginal(p), p);
    Ok(Candidate {
        rate_bits: pair.mutual_information_bits(),
        kernel,
        distortion,
        marginal_gap,
    })
}

/// Smallest average distortion of any coupling with both marginals equal to
/// the source.
///
/// For alphabets up to 4 symbols this is the exact transportation linear
/// program, solved by enumerating candidate bases of the constraint system
/// (every vertex of the bounded feasible polytope is such a basic
/// solution). Larger alphabets fall back to the scaling projection at a
/// huge multiplier, accurate to roughly 1e-7.
pub fn min_marginal_preserving_distortion(
    source: &FiniteSource,
    d: &DistortionMatrix,
) -> Result<f64> {
    if source.k() != d.k() {
        return Err(Error::invalid("source and distortion alphabets differ"));
    }
    let k = source.k();
    if k > 4 {
        let c = solve_at_multiplier(source, d, 1e9)?;
        return Ok(c.distortion);
    }
    let p = source.pmf();
    let cells = k * k;
    let rank = 2 * k - 1;
    // Constraint matrix: one row-sum equation per x, one column-sum
    // equation per y except the last (implied by total mass).
    let mut best = f64::INFINITY;
    let mut basis: Vec<usize> = (0..rank).collect();
    loop {
        if let Some(values) = solve_basis(p, k, &basis) {
            if values.iter().all(|&v| v >= -1e-12) {
                let cost: f64 = basis
                    .iter()
                    .zip(&values)
                    .map(|(&cell, &v)| v.max(0.0) * d.get(cell / k, cell % k))
                    .sum();
                best = best.min(cost);
            }
        }
        // Advance the combination of `rank` cells out of `cells`.
        let mut i = rank;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if basis[i] != i + cells - rank {
                basis[i] += 1;
                for j in i + 1..rank {
                    basis[j] = basis[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves the transportation constraints restricted to the given support
/// cells. Returns `None` when the restricted system is singular.
fn solve_basis(p: &[f64], k: usize, basis: &[usize]) -> Option<Vec<f64>> {
    let rank = basis.len();
    // Equations: rows 0..k are row sums, rows k..2k-1 are column sums for
    // y = 0..k-1.
    let mut mat = vec![vec![0.0f64; rank + 1]; rank];
    for (col, &cell) in basis.iter().enumerate() {
        let (x, y) = (cell / k, cell % k);
        mat[x][col] = 1.0;
        if y + 1 < k {
            mat[k + y][col] = 1.0;
        }
    }
    for x in 0..k {
        mat[x][rank] = p[x];
    }
    for y in 0..k - 1 {
        mat[k + y][rank] = p[y];
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..rank {
        let pivot = (col..rank)
            .max_by(|&a, &b| mat[a][col].abs().partial_cmp(&mat[b][col].abs()).unwrap())?;
        if mat[pivot][col].abs() < 1e-12 {
            return None;
        }
        mat.swap(col, pivot);
        for row in 0..rank {
            if row != col && mat[row][col] != 0.0 {
                let f = mat[row][col] / mat[col][col];
                for j in col..=rank {
                    mat[row][j] -= f * mat[col][j];
                }
            }
        }
    }
    Some((0..rank).map(|i| mat[i][rank] / mat[i][i]).collect())
}

/// Computes the marginal-preserving rate-distortion function at budget
/// `delta`.
///
/// Errors with [`Error::InfeasibleDistortion`] when even the best coupling
/// exceeds the budget; the error names the achievable minimum.
pub fn rdp_function(
    source: &FiniteSource,
    d: &DistortionMatrix,
    delta: f64,
) -> Result<RdpSolution> {
    if source.k() != d.k() {
        return Err(Error::invalid("source and distortion alphabets differ"));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::invalid(
            "distortion budget must be non-negative and finite",
        ));
    }
    let entropy = source.entropy_bits();
    let minimum = min_marginal_preserving_distortion(source, d)?;
    let feasibility_slack = if source.k() <= 4 { 1e-9 } else { 1e-6 };
    if delta < minimum - feasibility_slack {
        return Err(Error::InfeasibleDistortion {
            requested: delta,
            minimum,
        });
    }

    let finish = |c: Candidate, s: f64| -> Result<RdpSolution> {
        if c.marginal_gap > tol::MARGINAL_GAP {
            return Err(Error::Numeric(format!(
                "output marginal off by {} after repair",
                c.marginal_gap
            )));
        }
        if c.distortion > delta + 1e-9 {
            return Err(Error::Numeric(format!(
                "solver accepted distortion {} over budget {delta}",
                c.distortion
            )));
        }
        Ok(RdpSolution {
            rate_bits: c.rate_bits,
            achieved_distortion: c.distortion,
            marginal_gap: c.marginal_gap,
            multiplier: s,
            kernel: c.kernel,
            source_entropy_bits: entropy,
        })
    };

    // The product coupling is the zero-rate point; if it meets the budget
    // there is nothing to optimize.
    let p = source.pmf();
    let product_distortion: f64 = (0..source.k())
        .flat_map(|x| (0..source.k()).map(move |y| (x, y)))
        .map(|(x, y)| p[x] * p[y] * d.get(x, y))
        .sum();
    if product_distortion <= delta + DISTORTION_SLACK {
        let rows = vec![p.to_vec(); source.k()];
        let kernel = Kernel::new(rows)?;
        return finish(
            Candidate {
                kernel,
                rate_bits: 0.0,
                distortion: product_distortion,
                marginal_gap: 0.0,
            },
            0.0,
        );
    }

    // Distortion decreases in the multiplier; find a feasible upper end,
    // then bisect down to the smallest feasible multiplier, which carries
    // the smallest mutual information.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut at_hi = solve_at_multiplier(source, d, hi)?;
    let mut doublings = 0;
    while at_hi.distortion > delta + DISTORTION_SLACK {
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Numeric(format!(
                "no multiplier reached the budget {delta}; best distortion {}",
                at_hi.distortion
            )));
        }
        lo = hi;
        hi *= 2.0;
        at_hi = solve_at_multiplier(source, d, hi)?;
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let at_mid = solve_at_multiplier(source, d, mid)?;
        if at_mid.distortion <= delta + DISTORTION_SLACK {
            hi = mid;
            at_hi = at_mid;
        } else {
            lo = mid;
        }
    }
    finish(at_hi, hi)
}

/// Independent grid oracle for binary sources.
///
/// Every binary channel preserving the marginal of `source` is determined
/// by its 0-to-1 flip probability `a`, with the 1-to-0 probability forced
/// to `p0 a / p1`. The oracle sweeps `a`, keeps the budget-feasible points,
/// and refines the grid until successive minima differ by less than 1e-5
/// bits.
pub fn rdp_binary_oracle(
    source: &FiniteSource,
    d: &DistortionMatrix,
    delta: f64,
    initial_grid: usize,
) -> Result<f64> {
    if source.k() != 2 || d.k() != 2 {
        return Err(Error::invalid(
            "the grid oracle handles binary alphabets only",
        ));
    }
    if initial_grid < 2 {
        return Err(Error::invalid("oracle grid needs at least 2 points"));
    }
    let (p0, p1) = (source.prob(0), source.prob(1));
    let a_max = (p1 / p0).min(1.0);
    let evaluate = |a: f64| -> (f64, f64) {
        let b = p0 * a / p1;
        let distortion = p0 * ((1.0 - a) * d.get(0, 0) + a * d.get(0, 1))
            + p1 * (b * d.get(1, 0) + (1.0 - b) * d.get(1, 1));
        let rows = [vec![1.0 - a, a], vec![b, 1.0 - b]];
        let joint: Vec<Vec<f64>> = rows
            .iter()
            .zip([p0, p1])
            .map(|(row, px)| row.iter().map(|&w| px * w).collect())
            .collect();
        let rate = JointPmf::new(joint)
            .expect("parameterized coupling is a valid joint pmf")
            .mutual_information_bits();
        (rate, distortion)
    };
    // Distortion is linear in a, so the feasibility boundary is explicit;
    // sweeping it along with the grid removes the discretization error at a
    // binding budget, where the optimum usually sits.
    let d0 = evaluate(0.0).1;
    let d1 = evaluate(a_max).1;
    let boundary = if (d1 - d0).abs() > f64::MIN_POSITIVE {
        Some(((delta - d0) / (d1 - d0) * a_max).clamp(0.0, a_max))
    } else {
        None
    };
    let sweep = |grid: usize| -> Option<f64> {
        let mut best: Option<f64> = None;
        let points = (0..grid)
            .map(|i| a_max * i as f64 / (grid - 1) as f64)
            .chain(boundary);
        for a in points {
            let (rate, distortion) = evaluate(a);
            if distortion <= delta + DISTORTION_SLACK {
                best = Some(best.map_or(rate, |b: f64| b.min(rate)));
            }
        }
        best
    };
    let mut grid = initial_grid;
    let mut answer = sweep(grid).ok_or(
        // By linearity the smallest distortion on the family sits at an
        // endpoint of the sweep interval.
        Error::InfeasibleDistortion {
            requested: delta,
            minimum: d0.min(d1),
        },
    )?;
    loop {
        grid = grid * 2 - 1;
        let refined = sweep(grid).expect("feasible set persists under refinement");
        let done = (refined - answer).abs() < 1e-5 || grid > (1 << 22);
        answer = refined;
        if done {
            return Ok(answer);
        }
    }
}

/// Classical rate-distortion function (output distribution unconstrained),
/// solved by alternating minimization with an outer multiplier bisection.
///
/// The marginal-preserving rate can never fall below this value, which
/// makes it a useful cross-check.
pub fn rd_function_classical(
    source: &FiniteSource,
    d: &DistortionMatrix,
    delta: f64,
) -> Result<f64> {
    if source.k() != d.k() {
        return Err(Error::invalid("source and distortion alphabets differ"));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::invalid(
            "distortion budget must be non-negative and finite",
        ));
    }
    let k = source.k();
    let p = source.pmf();
    let minimum: f64 = (0..k)
        .map(|x| p[x] * (0..k).map(|y| d.get(x, y)).fold(f64::INFINITY, f64::min))
        .sum();
    if delta < minimum - 1e-9 {
        return Err(Error::InfeasibleDistortion {
            requested: delta,
            minimum,
        });
    }
    // Rate 0 once some constant reconstruction meets the budget.
    let zero_rate_at = (0..k)
        .map(|y| (0..k).map(|x| p[x] * d.get(x, y)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if delta >= zero_rate_at - 1e-12 {
        return Ok(0.0);
    }
    let evaluate = |s: f64| -> (f64, f64) {
        let mut q = p.to_vec();
        for _ in 0..10_000 {
            let mut q_new = vec![0.0f64; k];
            for x in 0..k {
                let weights: Vec<f64> = (0..k).map(|y| q[y] * (-s * d.get(x, y)).exp()).collect();
                let z: f64 = weights.iter().sum();
                for y in 0..k {
                    q_new[y] += p[x] * weights[y] / z;
                }
            }
            let diff = q
                .iter()
                .zip(&q_new)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            q = q_new;
            if diff < 1e-15 {
                break;
            }
        }
        let joint: Vec<Vec<f64>> = (0..k)
            .map(|x| {
                let weights: Vec<f64> = (0..k).map(|y| q[y] * (-s * d.get(x, y)).exp()).collect();
                let z: f64 = weights.iter().sum();
                weights.iter().map(|w| p[x] * w / z).collect()
            })
            .collect();
        let pair = JointPmf::new(joint).expect("alternating update keeps a valid joint");
        let mut distortion = 0.0;
        for x in 0..k {
            for y in 0..k {
                distortion += pair.prob(x, y) * d.get(x, y);
            }
        }
        (pair.mutual_information_bits(), distortion)
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut rate_hi = evaluate(hi);
    let mut doublings = 0;
    while rate_hi.1 > delta + DISTORTION_SLACK {
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Numeric(
                "classical solver found no feasible multiplier".to_string(),
            ));
        }
        lo = hi;
        hi *= 2.0;
        rate_hi = evaluate(hi);
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let at_mid = evaluate(mid);
        if at_mid.1 <= delta + DISTORTION_SLACK {
            hi = mid;
            rate_hi = at_mid;
        } else {
            lo = mid;
        }
    }
    Ok(rate_hi.0)
}
