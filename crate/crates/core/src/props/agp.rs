use std::f64::consts::{FRAC_2_PI, SQRT_2};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{perturb_pair, sample_pair, Stratum};
use crate::error::{Error, Result};
use crate::model::{lifted, phi_unchecked, MeasurementModel, SensingMatrix, Signal};
use crate::rng::{derive_seed, stream_rng, Stream};

/// Local search steps applied to each extreme witness.
pub const AGP_REFINE_STEPS: usize = 100;

/// Empirical growth band `[mu1_hat, mu2_hat]` of
/// `|| |Ax|^p - |Ay|^p ||_1 / (m phi_p(x, y))` with the predicted constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgpBand {
    pub p: u8,
    pub epsilon: f64,
    pub mu1_hat: f64,
    pub mu2_hat: f64,
    pub mu1_pred: f64,
    pub mu2_pred: f64,
    pub min_witness: (Signal, Signal),
    pub max_witness: (Signal, Signal),
    pub samples: usize,
    pub refine_steps: usize,
    /// `mu2_hat < 2 mu1_hat`.
    pub ratio_below_two: bool,
}

/// Predicted `(mu1, mu2)` at accuracy `epsilon`: `(0.9(1-e), sqrt2 (1+e))` for
/// `p = 2` and `(sqrt(2/pi)(2 - sqrt2 - e), sqrt(2/pi)(1+e))` for `p = 1`.
pub fn predicted_agp_constants(model: MeasurementModel, epsilon: f64) -> (f64, f64) {
    match model {
        MeasurementModel::Intensity => (0.9 * (1.0 - epsilon), SQRT_2 * (1.0 + epsilon)),
        MeasurementModel::Magnitude => {
            let c = FRAC_2_PI.sqrt();
            (c * (2.0 - SQRT_2 - epsilon), c * (1.0 + epsilon))
        }
    }
}

/// `|| |Ax|^p - |Ay|^p ||_1 / (m phi_p(x, y))`.
pub fn agp_ratio(a: &SensingMatrix, x: &Signal, y: &Signal, model: MeasurementModel) -> Result<f64> {
    a.check_cols(x.len(), "signal length")?;
    a.check_cols(y.len(), "signal length")?;
    ratio_raw(a, x.as_slice(), y.as_slice(), model).ok_or(Error::RatioUndefinedAtSignPair)
}

pub(crate) fn ratio_raw(a: &SensingMatrix, x: &[f64], y: &[f64], model: MeasurementModel) -> Option<f64> {
    let phi = phi_unchecked(x, y, model);
    if phi <= 0.0 {
        return None;
    }
    let num: f64 = lifted(a, x, model)
        .iter()
        .zip(lifted(a, y, model))
        .map(|(u, v)| (u - v).abs())
        .sum();
    Some(num / (a.rows() as f64 * phi))
}

pub fn estimate_agp_band(
    a: &SensingMatrix,
    model: MeasurementModel,
    num_pairs: usize,
    seed: u64,
    epsilon: f64,
) -> Result<AgpBand> {
    if num_pairs == 0 {
        return Err(Error::invalid("num_pairs must be at least 1"));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::invalid(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let n = a.cols();
    let sampled: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..num_pairs)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = pair_rng(seed, i as u64);
            let (x, y) = sample_pair(n, Stratum::of_index(i), &mut rng);
            ratio_raw(a, &x, &y, model).map(|r| (x, y, r))
        })
        .collect();
    if sampled.is_empty() {
        return Err(Error::RatioUndefinedAtSignPair);
    }

    let argmin = extreme_index(&sampled, |r, best| r < best);
    let argmax = extreme_index(&sampled, |r, best| r > best);
    let mut rng = stream_rng(seed, Stream::Ascent);
    let (min_x, min_y, mu1_hat) = refine(a, model, &sampled[argmin], |r, best| r < best, &mut rng);
    let (max_x, max_y, mu2_hat) = refine(a, model, &sampled[argmax], |r, best| r > best, &mut rng);
    let (mu1_pred, mu2_pred) = predicted_agp_constants(model, epsilon);

    Ok(AgpBand {
        p: model.exponent(),
        epsilon,
        mu1_hat,
        mu2_hat,
        mu1_pred,
        mu2_pred,
        min_witness: (Signal::from_vec_unchecked(min_x), Signal::from_vec_unchecked(min_y)),
        max_witness: (Signal::from_vec_unchecked(max_x), Signal::from_vec_unchecked(max_y)),
        samples: sampled.len(),
        refine_steps: AGP_REFINE_STEPS,
        ratio_below_two: mu2_hat < 2.0 * mu1_hat,
    })
}

pub(crate) fn pair_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(&[seed, index]));
    rng.set_stream(Stream::Pairs as u64);
    rng
}

fn extreme_index(pairs: &[(Vec<f64>, Vec<f64>, f64)], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, p) in pairs.iter().enumerate().skip(1) {
        if better(p.2, pairs[best].2) {
            best = i;
        }
    }
    best
}

fn refine(
    a: &SensingMatrix,
    model: MeasurementModel,
    start: &(Vec<f64>, Vec<f64>, f64),
    better: impl Fn(f64, f64) -> bool,
    rng: &mut ChaCha20Rng,
) -> (Vec<f64>, Vec<f64>, f64) {
    let (mut x, mut y, mut best) = start.clone();
    let mut eta = 0.1;
    for _ in 0..AGP_REFINE_STEPS {
        let (nx, ny) = perturb_pair(&x, &y, eta, rng);
        match ratio_raw(a, &nx, &ny, model) {
            Some(r) if better(r, best) => {
                x = nx;
                y = ny;
                best = r;
                eta = (eta * 1.5).min(1.0);
            }
            _ => eta = (eta * 0.7).max(1e-6),
        }
    }
    (x, y, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::sample_matrix;

    #[test]
    fn ratio_undefined_at_sign_pair() {
        let a = sample_matrix(10, 3, 1).unwrap();
        let x = Signal::new(vec![1.0, 2.0, 3.0]).unwrap();
        for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
            assert!(matches!(
                agp_ratio(&a, &x, &x, model),
                Err(Error::RatioUndefinedAtSignPair)
            ));
            assert!(agp_ratio(&a, &x, &-&x, model).is_err());
        }
    }

    #[test]
    fn witnesses_reproduce_extremes() {
        let a = sample_matrix(300, 4, 2).unwrap();
        for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
            let band = estimate_agp_band(&a, model, 30, 9, 0.1).unwrap();
            let lo = agp_ratio(&a, &band.min_witness.0, &band.min_witness.1, model).unwrap();
            let hi = agp_ratio(&a, &band.max_witness.0, &band.max_witness.1, model).unwrap();
            assert!((lo - band.mu1_hat).abs() <= 1e-12 * band.mu1_hat);
            assert!((hi - band.mu2_hat).abs() <= 1e-12 * band.mu2_hat);
            assert!(0.0 <= band.mu1_hat && band.mu1_hat <= band.mu2_hat);
            assert_eq!(band, estimate_agp_band(&a, model, 30, 9, 0.1).unwrap());
        }
    }
}
