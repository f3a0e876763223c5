//! Deterministic vector inequalities and their seeded sweeps.

use std::f64::consts::SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian_vec;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::model::{frobenius_rank2, sum_diff_norms, Signal};
use crate::rng::{derive_seed, Stream};

const SWEEP_CHUNK: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; nonnegative when the inequality holds exactly.
    pub slack: f64,
    pub pass: bool,
}

/// `|x + y| + (sqrt2 - 1)|x - y| >= |x| + |y|` for `x^T y >= 0`, with additive
/// tolerance `1e-12 (|x| + |y|)`.
pub fn lemma_sum_diff_check(x: &Signal, y: &Signal) -> Result<LemmaCheck> {
    same_len(x, y)?;
    if dot(x.as_slice(), y.as_slice()) < 0.0 {
        return Err(Error::Precondition(
            "x^T y must be nonnegative (flip the sign of y)".into(),
        ));
    }
    Ok(sum_diff_raw(x.as_slice(), y.as_slice()))
}

fn sum_diff_raw(x: &[f64], y: &[f64]) -> LemmaCheck {
    let (s, d) = sum_diff_norms(x, y);
    let lhs = s + (SQRT_2 - 1.0) * d;
    let rhs = norm(x) + norm(y);
    LemmaCheck {
        lhs,
        rhs,
        slack: lhs - rhs,
        pass: lhs >= rhs - 1e-12 * rhs,
    }
}

/// `sqrt2 ||xx^T - yy^T||_F >= |x + y| |x - y|`, with relative tolerance `1e-12`.
pub fn lemma_rank2_check(x: &Signal, y: &Signal) -> Result<LemmaCheck> {
    same_len(x, y)?;
    Ok(rank2_raw(x.as_slice(), y.as_slice()))
}

fn rank2_raw(x: &[f64], y: &[f64]) -> LemmaCheck {
    let lhs = SQRT_2 * frobenius_rank2(x, y);
    let (s, d) = sum_diff_norms(x, y);
    let rhs = s * d;
    LemmaCheck {
        lhs,
        rhs,
        slack: lhs - rhs,
        pass: lhs >= rhs * (1.0 - 1e-12),
    }
}

fn same_len(x: &Signal, y: &Signal) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
            context: "paired signal length",
        });
    }
    Ok(())
}

/// `q(t, rho) = (sqrt(t^2 - 2 rho t + 1) + sqrt(t^2 + 2 rho t + 1) - 1 - t) / sqrt(t^2 - 2 rho t + 1)`
/// on `[0, 1]^2` minus `(1, 1)`.
pub fn lemma1_quotient(t: f64, rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("(t, rho) = ({t}, {rho}) outside [0, 1]^2")));
    }
    let lo = (t * t - 2.0 * rho * t + 1.0).max(0.0).sqrt();
    if lo == 0.0 {
        return Err(Error::invalid("denominator vanishes at t = rho = 1"));
    }
    let hi = (t * t + 2.0 * rho * t + 1.0).sqrt();
    Ok((lo + hi - 1.0 - t) / lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientGridMin {
    pub min: f64,
    pub argmin_t: f64,
    pub argmin_rho: f64,
    pub evaluated: usize,
}

/// Minimum of `q` over the grid `{0, step, 2 step, ..., 1}^2` without `(1, 1)`.
pub fn quotient_grid_min(step: f64) -> Result<QuotientGridMin> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid(format!("grid step must lie in (0, 1], got {step}")));
    }
    let k = (1.0 / step).round() as usize;
    let coord = |i: usize| if i == k { 1.0 } else { i as f64 / k as f64 };
    let rows: Vec<QuotientGridMin> = (0..=k)
        .into_par_iter()
        .map(|i| {
            let t = coord(i);
            let mut best = QuotientGridMin {
                min: f64::INFINITY,
                argmin_t: t,
                argmin_rho: 0.0,
                evaluated: 0,
            };
            for j in 0..=k {
                let rho = coord(j);
                if i == k && j == k {
                    continue;
                }
                let q = lemma1_quotient(t, rho).expect("grid stays inside the domain");
                best.evaluated += 1;
                if q < best.min {
                    best.min = q;
                    best.argmin_rho = rho;
                }
            }
            best
        })
        .collect();
    let evaluated = rows.iter().map(|r| r.evaluated).sum();
    let best = rows
        .into_iter()
        .reduce(|a, b| if b.min < a.min { b } else { a })
        .expect("grid is nonempty");
    Ok(QuotientGridMin { evaluated, ..best })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCounts {
    pub pairs: usize,
    pub passed: usize,
    pub failed: usize,
    /// Smallest slack relative to the right-hand side.
    pub worst_relative_slack: f64,
}

fn sweep(
    num_pairs: usize,
    n: usize,
    seed: u64,
    check: impl Fn(&[f64], &[f64]) -> LemmaCheck + Sync,
    flip_to_acute: bool,
) -> Result<SweepCounts> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let chunks = num_pairs.div_ceil(SWEEP_CHUNK);
    let parts: Vec<SweepCounts> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(&[seed, c as u64]));
            rng.set_stream(Stream::MonteCarlo as u64);
            let count = SWEEP_CHUNK.min(num_pairs - c * SWEEP_CHUNK);
            let mut out = SweepCounts {
                pairs: count,
                passed: 0,
                failed: 0,
                worst_relative_slack: f64::INFINITY,
            };
            for _ in 0..count {
                let x = gaussian_vec(n, &mut rng);
                let mut y = gaussian_vec(n, &mut rng);
                if flip_to_acute && dot(&x, &y) < 0.0 {
                    y.iter_mut().for_each(|v| *v = -*v);
                }
                let r = check(&x, &y);
                if r.pass {
                    out.passed += 1;
                } else {
                    out.failed += 1;
                }
                if r.rhs > 0.0 {
                    out.worst_relative_slack = out.worst_relative_slack.min(r.slack / r.rhs);
                }
            }
            out
        })
        .collect();
    Ok(parts.into_iter().fold(
        SweepCounts {
            pairs: 0,
            passed: 0,
            failed: 0,
            worst_relative_slack: f64::INFINITY,
        },
        |a, b| SweepCounts {
            pairs: a.pairs + b.pairs,
            passed: a.passed + b.passed,
            failed: a.failed + b.failed,
            worst_relative_slack: a.worst_relative_slack.min(b.worst_relative_slack),
        },
    ))
}

/// Checks the sum/difference inequality on `num_pairs` Gaussian pairs in `R^n`,
/// flipping `y` so that `x^T y >= 0`.
pub fn sweep_sum_diff(num_pairs: usize, n: usize, seed: u64) -> Result<SweepCounts> {
    sweep(num_pairs, n, seed, sum_diff_raw, true)
}

/// Checks the rank-2 Frobenius inequality on `num_pairs` Gaussian pairs in `R^n`.
pub fn sweep_rank2(num_pairs: usize, n: usize, seed: u64) -> Result<SweepCounts> {
    sweep(num_pairs, n, seed ^ 0x5eed, rank2_raw, false)
}
