use std::f64::consts::{FRAC_2_PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arp::ratio_on_mask;
use super::{agp::ratio_raw, unit_vec};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::model::{
    dist_unchecked, lifted, objective_unchecked, residual_unchecked, top_l_mask, MeasurementModel, Signal,
};
use crate::rng::{derive_seed, Stream};

/// Probes closer than this to `{x*, -x*}` are skipped.
pub const MIN_PROBE_DIST: f64 = 1e-10;

const RADII: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub p: u8,
    /// `min (f(x) - f(x*)) / (m dist(x, {x*, -x*}))` over the probes.
    pub mu_hat: f64,
    pub mu_pred: Option<f64>,
    pub psi: Option<f64>,
    pub epsilon: f64,
    pub fstar: f64,
    pub worst_probe: Signal,
    pub worst_dist: f64,
    pub probes: usize,
    pub excluded: usize,
    /// Probes whose ARP ratio at the top-L residual set of `x*` is at most
    /// `psi` and whose growth ratio against `x*` is at least the predicted
    /// lower constant. On these the predicted slope is implied deterministically.
    pub certified: usize,
    pub mu_hat_certified: Option<f64>,
}

/// `(f(x) - f(x*)) / (m dist(x, {x*, -x*}))` for a single probe.
pub fn sharpness_ratio(instance: &ProblemInstance, x: &Signal) -> Result<f64> {
    instance.matrix.check_cols(x.len(), "probe length")?;
    let d = dist_unchecked(x.as_slice(), instance.xstar.as_slice());
    if d < MIN_PROBE_DIST {
        return Err(Error::invalid(format!(
            "probe lies within {MIN_PROBE_DIST} of the solution set"
        )));
    }
    let a = &instance.matrix;
    let f = objective_unchecked(a, &instance.b, x.as_slice());
    Ok((f - instance.planted_objective()) / (a.rows() as f64 * d))
}

/// Predicted sharpness constant: `(1-psi)/(1+psi)` times `0.45 sqrt2 (1-e) |x*|`
/// (`p = 2`) or `sqrt(2/pi)(2 - sqrt2 - e)` (`p = 1`).
fn predicted_mu(model: MeasurementModel, psi: f64, epsilon: f64, xstar_norm: f64) -> f64 {
    let shrink = (1.0 - psi) / (1.0 + psi);
    shrink
        * match model {
            MeasurementModel::Intensity => 0.45 * SQRT_2 * (1.0 - epsilon) * xstar_norm,
            MeasurementModel::Magnitude => FRAC_2_PI.sqrt() * (2.0 - SQRT_2 - epsilon),
        }
}

struct Probe {
    x: Vec<f64>,
    dist: f64,
    ratio: f64,
    certified: bool,
}

/// Empirical sharpness of `f_p` at the planted solution.
///
/// Probe `i` sits at radius `{0.01, 0.1, 1, 10}|x*|` in a random direction
/// around `x*` or `-x*` (cycling through the eight combinations); every
/// ninth probe is a random point of norm uniform in `[0, 10|x*|]`.
pub fn sharpness_scan(
    instance: &ProblemInstance,
    psi: Option<f64>,
    epsilon: f64,
    num_probes: usize,
    seed: u64,
) -> Result<SharpnessReport> {
    if num_probes == 0 {
        return Err(Error::invalid("num_probes must be at least 1"));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let psi = psi.filter(|v| *v > 0.0 && *v < 1.0);
    let a = &instance.matrix;
    let model = instance.model;
    let xstar = instance.xstar.as_slice();
    let xnorm = instance.xstar.norm();
    let n = a.cols();
    let m = a.rows() as f64;
    let fstar = instance.planted_objective();
    let lifted_star = lifted(a, xstar, model);
    let mask = top_l_mask(&residual_unchecked(a, &instance.b, xstar), instance.support.len());
    let agp_floor = super::predicted_agp_constants(model, epsilon).0;

    let probes: Vec<Option<Probe>> = (0..num_probes)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(&[seed, i as u64]));
            rng.set_stream(Stream::Probes as u64);
            let kind = i % 9;
            let x: Vec<f64> = if kind == 8 {
                let radius = 10.0 * xnorm * rng.random::<f64>();
                unit_vec(n, &mut rng).iter().map(|v| radius * v).collect()
            } else {
                let sign = if kind % 2 == 0 { 1.0 } else { -1.0 };
                let radius = RADII[kind / 2] * xnorm;
                let dir = unit_vec(n, &mut rng);
                xstar.iter().zip(&dir).map(|(s, d)| sign * s + radius * d).collect()
            };
            let dist = dist_unchecked(&x, xstar);
            if dist < MIN_PROBE_DIST {
                return None;
            }
            let f = objective_unchecked(a, &instance.b, &x);
            let ratio = (f - fstar) / (m * dist);
            let certified = psi.is_some_and(|psi| {
                let diff: Vec<f64> = lifted(a, &x, model)
                    .iter()
                    .zip(&lifted_star)
                    .map(|(u, v)| u - v)
                    .collect();
                ratio_on_mask(&diff, &mask) <= psi && ratio_raw(a, &x, xstar, model).is_some_and(|g| g >= agp_floor)
            });
            Some(Probe {
                x,
                dist,
                ratio,
                certified,
            })
        })
        .collect();

    let excluded = probes.iter().filter(|p| p.is_none()).count();
    let kept: Vec<&Probe> = probes.iter().flatten().collect();
    let worst = kept
        .iter()
        .copied()
        .reduce(|a, b| if b.ratio < a.ratio { b } else { a })
        .ok_or_else(|| Error::invalid("every probe fell inside the exclusion radius"))?;
    let certified: Vec<&Probe> = kept.iter().copied().filter(|p| p.certified).collect();
    let mu_hat_certified = certified.iter().map(|p| p.ratio).reduce(f64::min);

    Ok(SharpnessReport {
        p: model.exponent(),
        mu_hat: worst.ratio,
        mu_pred: psi.map(|psi| predicted_mu(model, psi, epsilon, xnorm)),
        psi,
        epsilon,
        fstar,
        worst_probe: Signal::from_vec_unchecked(worst.x.clone()),
        worst_dist: worst.dist,
        probes: kept.len(),
        excluded,
        certified: certified.len(),
        mu_hat_certified,
    })
}
