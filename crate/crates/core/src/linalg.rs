//! Small dense vector kernels shared by the rest of the crate.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(c: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

/// Normalizes in place; returns the previous norm. Leaves a zero vector untouched.
pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// Median of a nonempty slice (mean of the two central order statistics for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Lower weighted median: smallest `v` such that the weight of `{values <= v}`
/// reaches half of the total. Minimizes `sum_i w_i |v - values_i|`.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Option<f64> {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, w)| (*v, *w))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for (v, w) in &pairs {
        acc += w;
        if acc >= 0.5 * total {
            return Some(*v);
        }
    }
    pairs.last().map(|p| p.0)
}

/// Largest eigenvalue of `A^T A` by power iteration (squared spectral norm).
pub fn spectral_norm_sq(a: &crate::model::SensingMatrix, iters: usize) -> f64 {
    let n = a.cols();
    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + j as f64 / n as f64).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let av = a.apply_unchecked(&v);
        let mut w = a.apply_transpose_unchecked(&av);
        let next = normalize(&mut w);
        if next == 0.0 {
            return 0.0;
        }
        let done = (next - lambda).abs() <= 1e-12 * next;
        lambda = next;
        v = w;
        if done {
            break;
        }
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_median_minimizes_weighted_l1() {
        let v = [3.0, -1.0, 2.0, 10.0, 0.5];
        let w = [1.0, 2.0, 0.5, 0.1, 3.0];
        let med = weighted_median(&v, &w).unwrap();
        let cost = |c: f64| v.iter().zip(&w).map(|(x, wi)| wi * (c - x).abs()).sum::<f64>();
        for probe in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0, 10.0] {
            assert!(cost(med) <= cost(probe) + 1e-12);
        }
        assert!(weighted_median(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
