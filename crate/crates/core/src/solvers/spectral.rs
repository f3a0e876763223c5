use crate::error::{Error, Result};
use crate::linalg::{dot, normalize, weighted_median};
use crate::model::{MeasurementModel, MeasurementVector, SensingMatrix, Signal};

const POWER_ITERS: usize = 200;
const POWER_RESIDUAL_TOL: f64 = 1e-10;
const KEEP_PERCENTILE: usize = 90;

/// Truncated spectral initialization.
///
/// Direction: leading eigenvector of `D = (1/m) sum_{i in K} w_i a_i a_i^T`
/// with `w_i = b_i` (`p = 2`) or `b_i^2` (`p = 1`), where `K` keeps the
/// measurements with `b_i >= 0` and `w_i` at most the 90th percentile
/// (nearest rank) of the weights.
///
/// Scale: `alpha` minimizing `f_p(alpha u)` over `alpha >= 0`, i.e. `alpha^p`
/// is the weighted median of `b_i / |a_i^T u|^p` with weights `|a_i^T u|^p`.
pub fn spectral_init(a: &SensingMatrix, b: &MeasurementVector, model: MeasurementModel) -> Result<Signal> {
    a.check_rows(b.len(), "measurement length")?;
    if b.model() != model {
        return Err(Error::invalid(
            "measurement vector model disagrees with requested model",
        ));
    }
    let values = b.values();
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateMeasurements);
    }
    let weights: Vec<f64> = values
        .iter()
        .map(|&v| match model {
            MeasurementModel::Intensity => v,
            MeasurementModel::Magnitude => v * v,
        })
        .collect();
    let threshold = percentile_nearest_rank(&weights, KEEP_PERCENTILE);
    let keep: Vec<bool> = values
        .iter()
        .zip(&weights)
        .map(|(&v, &w)| v >= 0.0 && w <= threshold)
        .collect();

    let n = a.cols();
    let m = a.rows() as f64;
    let mut d = vec![0.0; n * n];
    for ((row, &w), &k) in a.row_iter().zip(&weights).zip(&keep) {
        if !k || w == 0.0 {
            continue;
        }
        for r in 0..n {
            let s = w * row[r] / m;
            for c in r..n {
                d[r * n + c] += s * row[c];
            }
        }
    }
    for r in 0..n {
        for c in 0..r {
            d[r * n + c] = d[c * n + r];
        }
    }
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateMeasurements);
    }

    let dir = leading_eigenvector(&d, n);
    let proj: Vec<f64> = a.row_iter().map(|row| model.lift(dot(row, &dir))).collect();
    let ratios: Vec<f64> = values
        .iter()
        .zip(&proj)
        .map(|(&bi, &pi)| if pi > 0.0 { bi / pi } else { 0.0 })
        .collect();
    let scale_p = weighted_median(&ratios, &proj).ok_or(Error::DegenerateMeasurements)?;
    let scale = match model {
        MeasurementModel::Intensity => scale_p.max(0.0).sqrt(),
        MeasurementModel::Magnitude => scale_p.max(0.0),
    };
    Ok(Signal::from_vec_unchecked(dir.iter().map(|v| scale * v).collect()))
}

/// Value at rank `ceil(pct/100 * len)` of the sorted data. Invariant under
/// duplicating every entry.
fn percentile_nearest_rank(values: &[f64], pct: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (pct * v.len()).div_ceil(100).max(1);
    v[rank - 1]
}

/// Power iteration on a symmetric PSD matrix from a fixed start vector.
fn leading_eigenvector(d: &[f64], n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + j as f64 / n as f64).collect();
    normalize(&mut v);
    for _ in 0..POWER_ITERS {
        let mut w: Vec<f64> = (0..n).map(|r| dot(&d[r * n..(r + 1) * n], &v)).collect();
        let rayleigh = dot(&w, &v);
        let resid: f64 = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - rayleigh * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if normalize(&mut w) == 0.0 {
            break;
        }
        v = w;
        if resid <= POWER_RESIDUAL_TOL * rayleigh.abs() {
            break;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentile() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&v, 90), 9.0);
        let dup: Vec<f64> = v.iter().chain(v.iter()).copied().collect();
        assert_eq!(percentile_nearest_rank(&dup, 90), 9.0);
        assert_eq!(percentile_nearest_rank(&[4.0], 90), 4.0);
    }

    #[test]
    fn power_iteration_finds_dominant_axis() {
        let d = [1.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 2.0];
        let v = leading_eigenvector(&d, 3);
        assert!((v[1].abs() - 1.0).abs() < 1e-9);
    }
}
