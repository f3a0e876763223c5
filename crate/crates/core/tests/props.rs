use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use robustpr::props::{
    agp_ratio, arp_ratio_exact_t, e_of_s, estimate_agp_band, estimate_arp_psi, reverse_triangle_check, sharpness_ratio,
    sharpness_scan,
};
use robustpr::{
    eval_objective, forward_map, plant_instance, sample_matrix, CorruptionSpec, MeasurementModel, NoiseModel, Signal,
};

fn gaussian(n: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Max over every `|T| = L` of `|r_T|_1 / |r_{T^c}|_1`, by enumeration.
fn brute_force_arp(r: &[f64], l: usize) -> f64 {
    let m = r.len();
    let mut best = f64::NEG_INFINITY;
    let mut idx: Vec<usize> = (0..l).collect();
    loop {
        let on: f64 = idx.iter().map(|&i| r[i].abs()).sum();
        // summed directly: `total - on` cancels badly when the complement is tiny
        let off: f64 = (0..m).filter(|i| !idx.contains(i)).map(|i| r[i].abs()).sum();
        let ratio = if off > 0.0 { on / off } else { f64::INFINITY };
        best = best.max(ratio);
        // next combination in lexicographic order
        let mut k = l;
        while k > 0 && idx[k - 1] == m - l + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return best;
        }
        idx[k - 1] += 1;
        for j in k..l {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[test]
fn arp_ratio_matches_exhaustive_enumeration() {
    let mut mismatches = 0;
    for m in 2..=12usize {
        for l in 1..=3usize.min(m - 1) {
            for pair in 0..100u64 {
                let n = 1 + (pair as usize % 4);
                let a = sample_matrix(m, n, pair * 131 + m as u64).unwrap();
                let mut rng = ChaCha20Rng::seed_from_u64(pair ^ (m as u64) << 8 ^ (l as u64) << 16);
                let x = Signal::new(gaussian(n, &mut rng)).unwrap();
                let y = Signal::new(gaussian(n, &mut rng)).unwrap();
                for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
                    let fx = forward_map(&a, &x, model).unwrap();
                    let fy = forward_map(&a, &y, model).unwrap();
                    let r: Vec<f64> = fx.iter().zip(&fy).map(|(u, v)| u - v).collect();
                    let exact = arp_ratio_exact_t(&a, &x, &y, l, model).unwrap();
                    let brute = brute_force_arp(&r, l);
                    if (exact - brute).abs() > 1e-12 * brute.abs().max(1.0) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn psi_estimate_is_scale_invariant_per_pair() {
    let a = sample_matrix(50, 4, 3).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let x = Signal::new(gaussian(4, &mut rng)).unwrap();
    let y = Signal::new(gaussian(4, &mut rng)).unwrap();
    for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
        let r = arp_ratio_exact_t(&a, &x, &y, 3, model).unwrap();
        for c in [-3.0, 0.25, 7.0] {
            let rc = arp_ratio_exact_t(&a, &x.scaled(c), &y.scaled(c), 3, model).unwrap();
            assert!((r - rc).abs() <= 1e-12 * r, "{r} vs {rc}");
        }
    }
}

#[test]
fn psi_below_one_for_small_corrupted_fraction() {
    for seed in 0..20 {
        let a = sample_matrix(2000, 10, 1000 + seed).unwrap();
        let rep = estimate_arp_psi(&a, 20, MeasurementModel::Intensity, 30, 100, seed, Some(0.1)).unwrap();
        assert!(rep.psi_hat < 1.0, "seed {seed}: {}", rep.psi_hat);
        let (x, y) = &rep.witness;
        let again = arp_ratio_exact_t(&a, x, y, 20, MeasurementModel::Intensity).unwrap();
        assert!((again - rep.psi_hat).abs() <= 1e-12 * rep.psi_hat);
        assert!(rep.pair_ratios.iter().all(|r| *r <= rep.psi_hat));
        assert!(rep.psi_pred.is_some());
    }
}

#[test]
fn psi_above_one_when_complement_is_a_single_entry() {
    for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
        let a = sample_matrix(12, 3, 4).unwrap();
        let rep = estimate_arp_psi(&a, 11, model, 20, 50, 1, None).unwrap();
        assert!(rep.psi_hat > 1.0);
        assert!(rep.psi_pred.is_none());
    }
}

#[test]
fn agp_ratio_examples() {
    let a = sample_matrix(20000, 5, 77).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let x = Signal::new(gaussian(5, &mut rng)).unwrap();
    let zero = Signal::zeros(5);
    let r2 = agp_ratio(&a, &x, &zero, MeasurementModel::Intensity).unwrap();
    assert!((r2 - 1.0).abs() <= 0.03, "{r2}");
    let r1 = agp_ratio(&a, &x, &zero, MeasurementModel::Magnitude).unwrap();
    assert!((r1 - FRAC_2_PI.sqrt()).abs() <= 0.02, "{r1}");

    let e1 = Signal::new(vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let e2 = Signal::new(vec![0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
    let ro = agp_ratio(&a, &e1, &e2, MeasurementModel::Intensity).unwrap();
    assert!((ro - 4.0 / (PI * SQRT_2)).abs() <= 0.02, "{ro}");
}

#[test]
fn agp_bands_at_moderate_size() {
    let a = sample_matrix(5000, 10, 12).unwrap();
    let band2 = estimate_agp_band(&a, MeasurementModel::Intensity, 150, 3, 0.1).unwrap();
    assert!(band2.mu1_hat >= 0.9 * 0.9, "{}", band2.mu1_hat);
    assert!(band2.mu2_hat <= SQRT_2 * 1.1, "{}", band2.mu2_hat);
    assert!(band2.ratio_below_two);
    let band1 = estimate_agp_band(&a, MeasurementModel::Magnitude, 150, 3, 0.1).unwrap();
    let c = FRAC_2_PI.sqrt();
    assert!(band1.mu1_hat >= c * (2.0 - SQRT_2) * 0.9, "{}", band1.mu1_hat);
    assert!(band1.mu2_hat <= c * 1.1, "{}", band1.mu2_hat);
    assert!(band1.ratio_below_two);
}

/// `E|Z1^2 - s Z2^2|^{1/2}` by Monte Carlo with 1e7 samples.
fn monte_carlo_e(s: f64, seed: u64) -> (f64, f64) {
    const CHUNKS: u64 = 100;
    const PER: u64 = 100_000;
    let (sum, sq) = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed * 1000 + c);
            let (mut a, mut b) = (0.0, 0.0);
            for _ in 0..PER {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let v = (z1 * z1 - s * z2 * z2).abs().sqrt();
                a += v;
                b += v * v;
            }
            (a, b)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    let k = (CHUNKS * PER) as f64;
    let mean = sum / k;
    let var = sq / k - mean * mean;
    (mean, (var / k).sqrt())
}

#[test]
fn quadrature_agrees_with_monte_carlo() {
    for (i, s) in [-1.0, -0.5, 0.0, 0.5, 1.0].into_iter().enumerate() {
        let q = e_of_s(s, 1e-10).unwrap();
        let (mc, se) = monte_carlo_e(s, i as u64 + 1);
        assert!(
            (q.e_s - mc).abs() <= 4.0 * se,
            "s={s}: quad {} vs mc {mc} (se {se})",
            q.e_s
        );
    }
}

#[test]
fn reverse_triangle_at_planted_solution() {
    for p in [1u8, 2] {
        let model = MeasurementModel::from_exponent(p).unwrap();
        let spec = CorruptionSpec::uniform(0.01, NoiseModel::AdversarialLarge { scale: 10.0 });
        let inst = plant_instance(2000, 10, model, &spec, 40 + p as u64).unwrap();
        let l = inst.support.len();
        let rep = estimate_arp_psi(&inst.matrix, l, model, 30, 100, 2, None).unwrap();
        assert!(rep.psi_hat < 1.0);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for k in 0..200 {
            let scale = [0.01, 0.1, 1.0, 10.0][k % 4];
            let x = Signal::new(
                inst.xstar
                    .as_slice()
                    .iter()
                    .map(|v| v + scale * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            )
            .unwrap();
            let r = reverse_triangle_check(&inst.matrix, &inst.b, &x, &inst.xstar, l, rep.psi_hat, model).unwrap();
            assert!(r.pass, "p={p} probe {k}: lhs {} rhs {}", r.lhs, r.rhs);
            let f = eval_objective(&inst.matrix, &inst.b, &x).unwrap();
            assert!(f >= inst.planted_objective() * (1.0 - 1e-12));
        }
    }
}

#[test]
fn sharpness_is_positive_on_planted_instances() {
    let spec = CorruptionSpec::uniform(0.02, NoiseModel::AdversarialLarge { scale: 10.0 });
    for p in [1u8, 2] {
        let model = MeasurementModel::from_exponent(p).unwrap();
        for seed in 0..20 {
            let inst = plant_instance(500, 10, model, &spec, seed).unwrap();
            let rep = sharpness_scan(&inst, None, 0.1, 90, seed).unwrap();
            assert!(rep.mu_hat > 0.0, "p={p} seed {seed}: {}", rep.mu_hat);
            assert!(rep.worst_dist >= 1e-10);
            let again = sharpness_ratio(&inst, &rep.worst_probe).unwrap();
            assert_eq!(again, rep.mu_hat);
        }
    }
}
