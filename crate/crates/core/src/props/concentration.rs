use std::f64::consts::FRAC_2_PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agp::pair_rng;
use super::unit_vec;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalize};
use crate::model::{SensingMatrix, Signal};
use crate::rng::{stream_rng, Stream};

pub const MEAN_ABS_REFINE_STEPS: usize = 100;

/// Extremes of `(1/m) sum_i |a_i^T h| / (sqrt(2/pi) |h|)` over sampled directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanAbsReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub min_direction: Signal,
    pub max_direction: Signal,
    pub samples: usize,
}

/// Normalized mean absolute projection of the rows of `a` onto `h`.
pub fn mean_abs_ratio(a: &SensingMatrix, h: &[f64]) -> f64 {
    let m = a.rows() as f64;
    let s: f64 = a.row_iter().map(|row| dot(row, h).abs()).sum();
    s / (m * FRAC_2_PI.sqrt() * norm(h))
}

pub fn mean_abs_gauss_check(a: &SensingMatrix, num_dirs: usize, seed: u64) -> Result<MeanAbsReport> {
    if num_dirs == 0 {
        return Err(Error::invalid("num_dirs must be at least 1"));
    }
    let n = a.cols();
    let sampled: Vec<(Vec<f64>, f64)> = (0..num_dirs)
        .into_par_iter()
        .map(|i| {
            let mut rng = pair_rng(seed, i as u64);
            let h = unit_vec(n, &mut rng);
            let r = mean_abs_ratio(a, &h);
            (h, r)
        })
        .collect();
    let mut lo = 0;
    let mut hi = 0;
    for (i, s) in sampled.iter().enumerate() {
        if s.1 < sampled[lo].1 {
            lo = i;
        }
        if s.1 > sampled[hi].1 {
            hi = i;
        }
    }
    let mut rng = stream_rng(seed, Stream::Ascent);
    let (min_dir, min_ratio) = refine(a, &sampled[lo], |c, b| c < b, &mut rng);
    let (max_dir, max_ratio) = refine(a, &sampled[hi], |c, b| c > b, &mut rng);
    Ok(MeanAbsReport {
        min_ratio,
        max_ratio,
        min_direction: Signal::from_vec_unchecked(min_dir),
        max_direction: Signal::from_vec_unchecked(max_dir),
        samples: num_dirs,
    })
}

fn refine(
    a: &SensingMatrix,
    start: &(Vec<f64>, f64),
    better: impl Fn(f64, f64) -> bool,
    rng: &mut rand_chacha::ChaCha20Rng,
) -> (Vec<f64>, f64) {
    let (mut h, mut best) = start.clone();
    let n = h.len() as f64;
    let mut eta = 0.1;
    for _ in 0..MEAN_ABS_REFINE_STEPS {
        let mut cand: Vec<f64> = h
            .iter()
            .map(|v| {
                let z: f64 = rng.sample(StandardNormal);
                v + eta * z / n.sqrt()
            })
            .collect();
        if normalize(&mut cand) == 0.0 {
            continue;
        }
        let r = mean_abs_ratio(a, &cand);
        if better(r, best) {
            h = cand;
            best = r;
            eta = (eta * 1.5).min(1.0);
        } else {
            eta = (eta * 0.7).max(1e-6);
        }
    }
    (h, best)
}
