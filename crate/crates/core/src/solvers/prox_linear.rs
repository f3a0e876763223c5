use super::{check_start, Method, Recorder, SolveTrace, SolverConfig, Termination};
use crate::error::{Error, Result};
use crate::instance::Problem;
use crate::linalg::{axpy, dot, spectral_norm_sq};
use crate::model::{objective_unchecked, sign, MeasurementModel, Signal};

/// The convex model `d -> sum_i |c_i + g_i^T d| + |d|^2 / (2t)` built at `x_k`,
/// with `c_i = (a_i^T x_k)^2 - b_i` and `g_i = 2 (a_i^T x_k) a_i`.
#[derive(Debug, Clone)]
pub struct ProxModel {
    offsets: Vec<f64>,
    /// Row-major `m x n` linearization.
    slopes: Vec<f64>,
    n: usize,
    t: f64,
}

/// Result of one inner solve.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub step: Vec<f64>,
    pub gap: f64,
    pub sweeps: usize,
}

impl ProxModel {
    pub fn at(problem: &Problem<'_>, x: &[f64], t: f64) -> Self {
        let a = problem.matrix;
        let n = a.cols();
        let mut offsets = Vec::with_capacity(a.rows());
        let mut slopes = Vec::with_capacity(a.rows() * n);
        for (row, bi) in a.row_iter().zip(problem.b.values()) {
            let y = dot(row, x);
            offsets.push(y * y - bi);
            slopes.extend(row.iter().map(|v| 2.0 * y * v));
        }
        Self { offsets, slopes, n, t }
    }

    fn slope(&self, i: usize) -> &[f64] {
        &self.slopes[i * self.n..(i + 1) * self.n]
    }

    /// Model value at displacement `d`.
    pub fn value(&self, d: &[f64]) -> f64 {
        let l1: f64 = self
            .offsets
            .iter()
            .enumerate()
            .map(|(i, c)| (c + dot(self.slope(i), d)).abs())
            .sum();
        l1 + dot(d, d) / (2.0 * self.t)
    }

    /// Minimizes the model by cyclic coordinate ascent on its dual
    /// `max_{|lambda| <= 1} lambda^T c - (t/2) |G^T lambda|^2`, with primal
    /// `d = -t G^T lambda`. The duality gap `sum_i (|r_i| - lambda_i r_i)`,
    /// `r = c + G d`, certifies the accuracy.
    pub fn minimize(&self, gap_tol: f64, max_sweeps: usize) -> InnerSolution {
        let m = self.offsets.len();
        let t = self.t;
        let gsq: Vec<f64> = (0..m).map(|i| dot(self.slope(i), self.slope(i))).collect();
        let mut lambda = vec![0.0; m];
        let mut v = vec![0.0; self.n];
        let mut sweeps = 0;
        loop {
            let step: Vec<f64> = v.iter().map(|vi| -t * vi).collect();
            let gap = self.gap(&lambda, &step);
            if gap <= gap_tol || sweeps >= max_sweeps {
                return InnerSolution { step, gap, sweeps };
            }
            for i in 0..m {
                let gi = self.slope(i);
                let next = if gsq[i] == 0.0 {
                    sign(self.offsets[i])
                } else {
                    let raw = lambda[i] + (self.offsets[i] - t * dot(gi, &v)) / (t * gsq[i]);
                    raw.clamp(-1.0, 1.0)
                };
                let delta = next - lambda[i];
                if delta != 0.0 {
                    axpy(delta, gi, &mut v);
                    lambda[i] = next;
                }
            }
            sweeps += 1;
        }
    }

    fn gap(&self, lambda: &[f64], d: &[f64]) -> f64 {
        self.offsets
            .iter()
            .zip(lambda)
            .enumerate()
            .map(|(i, (c, l))| {
                let r = c + dot(self.slope(i), d);
                r.abs() - l * r
            })
            .sum()
    }
}

/// Prox-linear method for `f_2`: each outer step moves to the minimizer of
/// the convex model of `f_2` at the current point.
pub fn solve_prox_linear(problem: &Problem<'_>, config: &SolverConfig, x0: &Signal) -> Result<SolveTrace> {
    if problem.model() != MeasurementModel::Intensity {
        return Err(Error::ProxLinearRequiresSmooth);
    }
    check_start(problem, x0)?;
    let mut rec = Recorder::new(problem, config, Method::ProxLinear)?;
    let prox = config.prox;
    let t = match prox.t {
        Some(t) => t,
        None => {
            let l = spectral_norm_sq(problem.matrix, 500);
            if l == 0.0 {
                return Err(Error::DegenerateMeasurements);
            }
            0.5 / l
        }
    };
    let max_sweeps = prox.inner_max_iters.unwrap_or_else(|| {
        let n = problem.matrix.cols() as f64;
        (10.0 * n * (1.0 / prox.inner_tol).ln()).ceil().max(1.0) as usize
    });

    let mut x = x0.as_slice().to_vec();
    let mut f = objective_unchecked(problem.matrix, problem.b, &x);
    if let Some(term) = rec.record(0, &x, f) {
        return Ok(rec.finish(x, term));
    }
    for k in 1..=config.max_iters {
        let model = ProxModel::at(problem, &x, t);
        let inner = model.minimize(prox.inner_tol * f.max(1.0), max_sweeps);
        for (xi, di) in x.iter_mut().zip(&inner.step) {
            *xi += di;
        }
        f = objective_unchecked(problem.matrix, problem.b, &x);
        if let Some(term) = rec.record(k, &x, f) {
            return Ok(rec.finish(x, term));
        }
    }
    Ok(rec.finish(x, Termination::MaxIters))
}
