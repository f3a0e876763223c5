//! Empirical estimators and analytic oracles for the structural properties
//! behind exact recovery: absolute growth (AGP), absolute range (ARP),
//! sharpness, Gaussian concentration, the deterministic vector inequalities
//! used in the p = 1 analysis, and the `e(s)` curve.
//!
//! Sup/inf estimates over all pairs `(x, y)` are nonconvex programs; the
//! estimators here sample stratified pairs and refine the extremes by random
//! local search, so an estimated sup is a lower bound of the true sup (and an
//! estimated inf an upper bound of the true inf).

mod agp;
mod arp;
mod concentration;
mod ecurve;
mod lemmas;
mod sharpness;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub use agp::{agp_ratio, estimate_agp_band, predicted_agp_constants, AgpBand};
pub use arp::{
    arp_ratio_exact_t, estimate_arp_psi, predicted_psi, reverse_triangle_check, ArpReport, PsiPrediction,
    ReverseTriangleReport,
};
pub use concentration::{mean_abs_gauss_check, mean_abs_ratio, MeanAbsReport};
pub use ecurve::{e_curve_scan, e_of_s, write_e_curve_csv, ECurvePoint, ECurveScan};
pub use lemmas::{
    lemma1_quotient, lemma_rank2_check, lemma_sum_diff_check, quotient_grid_min, sweep_rank2, sweep_sum_diff,
    LemmaCheck, QuotientGridMin, SweepCounts,
};
pub use sharpness::{sharpness_ratio, sharpness_scan, SharpnessReport, MIN_PROBE_DIST};

use crate::linalg::{dot, normalize};

/// Strata used when sampling pairs `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stratum {
    /// Independent standard Gaussian vectors.
    Independent,
    /// `y = +-x + delta` with a small Gaussian `delta`.
    NearSign,
    /// Orthonormal pair.
    Orthonormal,
}

impl Stratum {
    pub(crate) fn of_index(i: usize) -> Self {
        match i % 3 {
            0 => Self::Independent,
            1 => Self::NearSign,
            _ => Self::Orthonormal,
        }
    }
}

pub(crate) fn gaussian_vec(n: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub(crate) fn unit_vec(n: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(n, rng);
        if normalize(&mut v) > 0.0 {
            return v;
        }
    }
}

pub(crate) fn sample_pair(n: usize, stratum: Stratum, rng: &mut ChaCha20Rng) -> (Vec<f64>, Vec<f64>) {
    match stratum {
        Stratum::Independent => (gaussian_vec(n, rng), gaussian_vec(n, rng)),
        Stratum::NearSign => {
            let x = gaussian_vec(n, rng);
            let sgn = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let width = 0.05 * crate::linalg::norm(&x) / (n as f64).sqrt();
            let y = x
                .iter()
                .map(|xi| {
                    let z: f64 = rng.sample(StandardNormal);
                    sgn * xi + width * z
                })
                .collect();
            (x, y)
        }
        Stratum::Orthonormal => {
            let x = unit_vec(n, rng);
            if n == 1 {
                return (x, vec![0.0]);
            }
            loop {
                let mut y = gaussian_vec(n, rng);
                let c = dot(&x, &y);
                y.iter_mut().zip(&x).for_each(|(yi, xi)| *yi -= c * xi);
                if normalize(&mut y) > 1e-8 {
                    return (x, y);
                }
            }
        }
    }
}

/// Random perturbation of both members of a pair, each scaled to its own norm.
pub(crate) fn perturb_pair(x: &[f64], y: &[f64], eta: f64, rng: &mut ChaCha20Rng) -> (Vec<f64>, Vec<f64>) {
    let scale = crate::linalg::norm(x).max(crate::linalg::norm(y)).max(1e-12);
    let n = x.len() as f64;
    let step = eta * scale / n.sqrt();
    let bump = |v: &[f64], rng: &mut ChaCha20Rng| -> Vec<f64> {
        v.iter()
            .map(|vi| {
                let z: f64 = rng.sample(StandardNormal);
                vi + step * z
            })
            .collect()
    };
    let nx = bump(x, rng);
    let ny = bump(y, rng);
    (nx, ny)
}
