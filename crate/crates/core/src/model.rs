//! Signals, sensing matrices, measurements and the nonsmooth objective
//! `f_p(x) = sum_i | |a_i^T x|^p - b_i |`.
//!
//! Everything here is a pure function of its inputs. The objective is stored
//! as the unnormalized sum; callers that want the `1/m` normalization divide
//! by [`SensingMatrix::rows`] themselves.

use std::ops::Neg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// Exponent of the measurement model: magnitudes (`p = 1`) or intensities (`p = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum MeasurementModel {
    Magnitude,
    Intensity,
}

impl MeasurementModel {
    pub fn from_exponent(p: u8) -> Result<Self> {
        match p {
            1 => Ok(Self::Magnitude),
            2 => Ok(Self::Intensity),
            _ => Err(Error::invalid(format!("measurement exponent must be 1 or 2, got {p}"))),
        }
    }

    pub fn exponent(self) -> u8 {
        match self {
            Self::Magnitude => 1,
            Self::Intensity => 2,
        }
    }

    /// `|t|^p`.
    #[inline]
    pub fn lift(self, t: f64) -> f64 {
        match self {
            Self::Magnitude => t.abs(),
            Self::Intensity => t * t,
        }
    }

    /// Derivative selection `d/dt |t|^p` with `sign(0) = 0`.
    #[inline]
    fn lift_slope(self, t: f64) -> f64 {
        match self {
            Self::Magnitude => sign(t),
            Self::Intensity => 2.0 * t,
        }
    }
}

impl TryFrom<u8> for MeasurementModel {
    type Error = Error;

    fn try_from(p: u8) -> Result<Self> {
        Self::from_exponent(p)
    }
}

impl From<MeasurementModel> for u8 {
    fn from(m: MeasurementModel) -> u8 {
        m.exponent()
    }
}

/// Sign with the kink convention `sign(0) = 0`.
#[inline]
pub fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A real signal of length `n >= 1` with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("signal must have at least one entry"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("signal entries must be finite"));
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n.max(1)])
    }

    /// Wraps entries produced internally; callers guarantee the invariants.
    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| c * v).collect())
    }
}

impl TryFrom<Vec<f64>> for Signal {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Signal> for Vec<f64> {
    fn from(s: Signal) -> Vec<f64> {
        s.0
    }
}

impl Neg for &Signal {
    type Output = Signal;

    fn neg(self) -> Signal {
        Signal(self.0.iter().map(|v| -v).collect())
    }
}

impl Neg for Signal {
    type Output = Signal;

    fn neg(self) -> Signal {
        -&self
    }
}

/// Dense row-major `m x n` matrix; row `i` is the sensing vector `a_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct SensingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for SensingMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Self::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<SensingMatrix> for RawMatrix {
    fn from(a: SensingMatrix) -> Self {
        RawMatrix {
            rows: a.rows,
            cols: a.cols,
            data: a.data,
        }
    }
}

impl SensingMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix must have at least one row and column"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
                context: "matrix data length",
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
                context: "matrix row length",
            });
        }
        Self::new(m, n, rows.concat())
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    /// Matrix with the rows listed in `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self::from_vec_unchecked(idx.len(), self.cols, data)
    }

    /// Vertical concatenation `(self; other)`.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        self.check_cols(other.cols, "stacked matrix columns")?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self::from_vec_unchecked(self.rows + other.rows, self.cols, data))
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_cols(x.len(), "signal length")?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.row_iter().map(|a| dot(a, x)).collect()
    }

    /// `A^T w`.
    pub(crate) fn apply_transpose_unchecked(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (a, &wi) in self.row_iter().zip(w) {
            if wi != 0.0 {
                crate::linalg::axpy(wi, a, &mut out);
            }
        }
        out
    }

    pub(crate) fn check_cols(&self, got: usize, context: &'static str) -> Result<()> {
        if got != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got,
                context,
            });
        }
        Ok(())
    }

    pub(crate) fn check_rows(&self, got: usize, context: &'static str) -> Result<()> {
        if got != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got,
                context,
            });
        }
        Ok(())
    }
}

/// Measurements `b`, magnitudes for `p = 1` and squared magnitudes for `p = 2`.
/// Entries may be negative after corruption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    values: Vec<f64>,
    model: MeasurementModel,
}

impl MeasurementVector {
    pub fn new(values: Vec<f64>, model: MeasurementModel) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("measurements must be finite"));
        }
        Ok(Self { values, model })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn model(&self) -> MeasurementModel {
        self.model
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(b; other)`.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::invalid("cannot stack measurements of different models"));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            values,
            model: self.model,
        })
    }
}

fn check_pair(a: &SensingMatrix, b: &MeasurementVector, x: &Signal) -> Result<()> {
    a.check_cols(x.len(), "signal length")?;
    a.check_rows(b.len(), "measurement length")
}

/// `|A x|^p` componentwise.
pub fn forward_map(a: &SensingMatrix, x: &Signal, model: MeasurementModel) -> Result<Vec<f64>> {
    a.check_cols(x.len(), "signal length")?;
    Ok(lifted(a, x.as_slice(), model))
}

pub(crate) fn lifted(a: &SensingMatrix, x: &[f64], model: MeasurementModel) -> Vec<f64> {
    a.row_iter().map(|row| model.lift(dot(row, x))).collect()
}

/// Residual `|A x|^p - b`.
pub fn residual(a: &SensingMatrix, b: &MeasurementVector, x: &Signal) -> Result<Vec<f64>> {
    check_pair(a, b, x)?;
    Ok(residual_unchecked(a, b, x.as_slice()))
}

pub(crate) fn residual_unchecked(a: &SensingMatrix, b: &MeasurementVector, x: &[f64]) -> Vec<f64> {
    let model = b.model();
    a.row_iter()
        .zip(b.values())
        .map(|(row, bi)| model.lift(dot(row, x)) - bi)
        .collect()
}

/// `f_p(x) = || |Ax|^p - b ||_1` (unnormalized).
pub fn eval_objective(a: &SensingMatrix, b: &MeasurementVector, x: &Signal) -> Result<f64> {
    check_pair(a, b, x)?;
    Ok(objective_unchecked(a, b, x.as_slice()))
}

pub(crate) fn objective_unchecked(a: &SensingMatrix, b: &MeasurementVector, x: &[f64]) -> f64 {
    let model = b.model();
    a.row_iter()
        .zip(b.values())
        .map(|(row, bi)| (model.lift(dot(row, x)) - bi).abs())
        .sum()
}

/// Clarke subgradient selection of `f_p` at `x`:
/// `sum_i sign(r_i) * d/dt|t|^p (a_i^T x) * a_i` with `sign(0) = 0` at every kink.
pub fn subgradient(a: &SensingMatrix, b: &MeasurementVector, x: &Signal) -> Result<Signal> {
    check_pair(a, b, x)?;
    Ok(Signal::from_vec_unchecked(subgradient_unchecked(a, b, x.as_slice()).0))
}

/// Returns the subgradient together with the objective value at `x`.
pub(crate) fn subgradient_unchecked(a: &SensingMatrix, b: &MeasurementVector, x: &[f64]) -> (Vec<f64>, f64) {
    let model = b.model();
    let mut g = vec![0.0; a.cols()];
    let mut f = 0.0;
    for (row, bi) in a.row_iter().zip(b.values()) {
        let t = dot(row, x);
        let r = model.lift(t) - bi;
        f += r.abs();
        let w = sign(r) * model.lift_slope(t);
        if w != 0.0 {
            crate::linalg::axpy(w, row, &mut g);
        }
    }
    (g, f)
}

/// Sign-invariant distance: `||xx^T - yy^T||_F` for `p = 2`,
/// `min(||x + y||, ||x - y||)` for `p = 1`.
pub fn phi(x: &Signal, y: &Signal, model: MeasurementModel) -> Result<f64> {
    check_same_len(x, y)?;
    Ok(phi_unchecked(x.as_slice(), y.as_slice(), model))
}

pub(crate) fn phi_unchecked(x: &[f64], y: &[f64], model: MeasurementModel) -> f64 {
    match model {
        MeasurementModel::Magnitude => {
            let (s, d) = sum_diff_norms(x, y);
            s.min(d)
        }
        MeasurementModel::Intensity => frobenius_rank2(x, y),
    }
}

/// `||xx^T - yy^T||_F` through Gram quantities only.
///
/// With `u = x + y`, `v = x - y` we have `xx^T - yy^T = (uv^T + vu^T)/2`, hence
/// `||.||_F^2 = (|u|^2 |v|^2 + (u^T v)^2) / 2`. This equals
/// `|x|^4 + |y|^4 - 2 (x^T y)^2` but has no cancellation near `x = +-y`.
pub(crate) fn frobenius_rank2(x: &[f64], y: &[f64]) -> f64 {
    let (mut uu, mut vv, mut uv) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let u = xi + yi;
        let v = xi - yi;
        uu += u * u;
        vv += v * v;
        uv += u * v;
    }
    (0.5 * (uu * vv + uv * uv)).sqrt()
}

pub(crate) fn sum_diff_norms(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut s, mut d) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        s += (xi + yi) * (xi + yi);
        d += (xi - yi) * (xi - yi);
    }
    (s.sqrt(), d.sqrt())
}

/// `dist(x, {x*, -x*}) = min(||x - x*||, ||x + x*||)`.
pub fn dist_to_sign_pair(x: &Signal, xstar: &Signal) -> Result<f64> {
    check_same_len(x, xstar)?;
    Ok(dist_unchecked(x.as_slice(), xstar.as_slice()))
}

pub(crate) fn dist_unchecked(x: &[f64], xstar: &[f64]) -> f64 {
    let (s, d) = sum_diff_norms(x, xstar);
    s.min(d)
}

fn check_same_len(x: &Signal, y: &Signal) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
            context: "paired signal length",
        });
    }
    Ok(())
}

/// Indicator of the `l` entries of largest magnitude; ties go to the lowest index.
pub fn top_l_mask(values: &[f64], l: usize) -> Vec<bool> {
    let mut mask = vec![false; values.len()];
    if l == 0 {
        return mask;
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let key = |i: &usize, j: &usize| values[*j].abs().total_cmp(&values[*i].abs()).then(i.cmp(j));
    if l < idx.len() {
        idx.select_nth_unstable_by(l - 1, key);
    }
    for &i in idx.iter().take(l) {
        mask[i] = true;
    }
    mask
}

/// Splits `sum |v_i|` into the mass on the mask and on its complement,
/// each accumulated in index order.
pub(crate) fn split_mass(values: &[f64], mask: &[bool]) -> (f64, f64) {
    let (mut on, mut off) = (0.0, 0.0);
    for (v, &m) in values.iter().zip(mask) {
        if m {
            on += v.abs();
        } else {
            off += v.abs();
        }
    }
    (on, off)
}

/// `sigma_L^p(x)`: l1 mass of the residual outside its `L` largest entries.
pub fn sigma_tail(a: &SensingMatrix, b: &MeasurementVector, x: &Signal, l: usize) -> Result<f64> {
    check_pair(a, b, x)?;
    if l > a.rows() {
        return Err(Error::invalid(format!(
            "tail order L = {l} exceeds measurement count {}",
            a.rows()
        )));
    }
    Ok(tail_mass(&residual_unchecked(a, b, x.as_slice()), l))
}

/// Sum of the `len - l` smallest magnitudes of `r`.
pub fn tail_mass(r: &[f64], l: usize) -> f64 {
    let mask = top_l_mask(r, l.min(r.len()));
    split_mass(r, &mask).1
}

/// Number of entries with `|r_i| > threshold`.
pub fn count_nonzero(r: &[f64], threshold: f64) -> usize {
    r.iter().filter(|v| v.abs() > threshold).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> SensingMatrix {
        SensingMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn sig(v: &[f64]) -> Signal {
        Signal::new(v.to_vec()).unwrap()
    }

    #[test]
    fn model_rejects_other_exponents() {
        assert!(MeasurementModel::from_exponent(0).is_err());
        assert!(MeasurementModel::from_exponent(3).is_err());
        assert_eq!(MeasurementModel::from_exponent(2).unwrap().exponent(), 2);
        let parsed: std::result::Result<MeasurementModel, _> = serde_json::from_str("3");
        assert!(parsed.is_err());
    }

    #[test]
    fn signal_rejects_empty_and_nonfinite() {
        assert!(Signal::new(vec![]).is_err());
        assert!(Signal::new(vec![1.0, f64::NAN]).is_err());
        assert!(SensingMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(SensingMatrix::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn forward_map_hand_values() {
        let a = mat(&[&[1.0], &[1.0], &[1.0]]);
        let y = forward_map(&a, &sig(&[2.0]), MeasurementModel::Intensity).unwrap();
        assert_eq!(y, vec![4.0, 4.0, 4.0]);
        let z = forward_map(&a, &sig(&[0.0]), MeasurementModel::Magnitude).unwrap();
        assert_eq!(z, vec![0.0; 3]);
        let a2 = mat(&[&[0.3, -1.2], &[2.0, 0.5], &[-0.7, 0.1]]);
        let x = sig(&[0.9, -0.4]);
        for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
            assert_eq!(
                forward_map(&a2, &x, model).unwrap(),
                forward_map(&a2, &-&x, model).unwrap()
            );
        }
        assert!(forward_map(&a2, &sig(&[1.0]), MeasurementModel::Magnitude).is_err());
    }

    #[test]
    fn objective_hand_values() {
        let a = mat(&[&[1.0], &[1.0], &[1.0]]);
        let b = MeasurementVector::new(vec![1.0; 3], MeasurementModel::Intensity).unwrap();
        assert_eq!(eval_objective(&a, &b, &sig(&[1.0])).unwrap(), 0.0);

        let a = mat(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let b = MeasurementVector::new(vec![1.0, 1.0, 0.0], MeasurementModel::Magnitude).unwrap();
        assert_eq!(eval_objective(&a, &b, &sig(&[1.0, 1.0])).unwrap(), 2.0);
        assert!(eval_objective(&a, &b, &sig(&[1.0])).is_err());
    }

    #[test]
    fn subgradient_hand_values() {
        let a = mat(&[&[1.0]]);
        let b = MeasurementVector::new(vec![0.0], MeasurementModel::Intensity).unwrap();
        assert_eq!(subgradient(&a, &b, &sig(&[1.0])).unwrap().as_slice(), &[2.0]);

        // every inner product zero and b = 0: all kinks
        let a = mat(&[&[1.0, -1.0], &[2.0, -2.0]]);
        for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
            let b = MeasurementVector::new(vec![0.0, 0.0], model).unwrap();
            let g = subgradient(&a, &b, &sig(&[1.0, 1.0])).unwrap();
            assert_eq!(g.as_slice(), &[0.0, 0.0]);
        }
    }

    #[test]
    fn phi_hand_values() {
        let x = sig(&[1.0, 0.0]);
        let y = sig(&[0.0, 1.0]);
        let r2 = 2f64.sqrt();
        assert!((phi(&x, &y, MeasurementModel::Intensity).unwrap() - r2).abs() < 1e-15);
        assert!((phi(&x, &y, MeasurementModel::Magnitude).unwrap() - r2).abs() < 1e-15);
        let z = sig(&[0.3, -2.0, 1.1]);
        assert_eq!(phi(&z, &z, MeasurementModel::Magnitude).unwrap(), 0.0);
        assert_eq!(phi(&z, &-&z, MeasurementModel::Intensity).unwrap(), 0.0);
        assert!(phi(&x, &sig(&[1.0]), MeasurementModel::Intensity).is_err());
    }

    #[test]
    fn phi2_matches_explicit_outer_products() {
        let x = [0.3, -1.7, 0.25, 2.0];
        let y = [1.1, 0.4, -0.9, 0.6];
        let mut fro = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let d = x[i] * x[j] - y[i] * y[j];
                fro += d * d;
            }
        }
        let got = phi_unchecked(&x, &y, MeasurementModel::Intensity);
        assert!((got - fro.sqrt()).abs() < 1e-13 * fro.sqrt());
    }

    #[test]
    fn dist_hand_values() {
        let xs = sig(&[1.0, 0.0]);
        assert_eq!(dist_to_sign_pair(&xs, &xs).unwrap(), 0.0);
        assert_eq!(dist_to_sign_pair(&-&xs, &xs).unwrap(), 0.0);
        assert_eq!(dist_to_sign_pair(&sig(&[3.0, 0.0]), &xs).unwrap(), 2.0);
    }

    #[test]
    fn sigma_tail_hand_values() {
        assert_eq!(tail_mass(&[0.0, 5.0, 0.0, 2.0], 2), 0.0);
        assert_eq!(tail_mass(&[0.0, 5.0, 0.0, 2.0], 1), 2.0);
        assert_eq!(tail_mass(&[1.0, 1.0, 1.0, 1.0], 1), 3.0);
        assert_eq!(tail_mass(&[1.0, -4.0, 2.0], 3), 0.0);

        let a = mat(&[&[1.0], &[2.0]]);
        let b = MeasurementVector::new(vec![0.0, 0.0], MeasurementModel::Magnitude).unwrap();
        assert!(sigma_tail(&a, &b, &sig(&[1.0]), 3).is_err());
        assert_eq!(sigma_tail(&a, &b, &sig(&[1.0]), 2).unwrap(), 0.0);
    }

    #[test]
    fn top_l_ties_go_to_lowest_index() {
        let mask = top_l_mask(&[1.0, -1.0, 1.0, 1.0], 2);
        assert_eq!(mask, vec![true, true, false, false]);
        let mask = top_l_mask(&[0.5, 3.0, -3.0, 1.0], 1);
        assert_eq!(mask, vec![false, true, false, false]);
    }

    fn arb_instance() -> impl Strategy<Value = (SensingMatrix, Vec<f64>, Vec<f64>, u8)> {
        (1usize..8, 1usize..5, 1u8..=2).prop_flat_map(|(m, n, p)| {
            (
                proptest::collection::vec(-3.0f64..3.0, m * n),
                proptest::collection::vec(-2.0f64..2.0, n),
                proptest::collection::vec(-4.0f64..6.0, m),
                Just((m, n, p)),
            )
                .prop_map(|(data, x, b, (m, n, p))| (SensingMatrix::new(m, n, data).unwrap(), x, b, p))
        })
    }

    proptest! {
        #[test]
        fn objective_and_subgradient_sign_symmetry((a, x, b, p) in arb_instance()) {
            let model = MeasurementModel::from_exponent(p).unwrap();
            let b = MeasurementVector::new(b, model).unwrap();
            let x = Signal::new(x).unwrap();
            let nx = -&x;
            prop_assert_eq!(
                eval_objective(&a, &b, &x).unwrap().to_bits(),
                eval_objective(&a, &b, &nx).unwrap().to_bits()
            );
            let g = subgradient(&a, &b, &x).unwrap();
            let gn = subgradient(&a, &b, &nx).unwrap();
            prop_assert_eq!(gn, -&g);
        }

        #[test]
        fn phi_homogeneity(
            x in proptest::collection::vec(-3.0f64..3.0, 4),
            y in proptest::collection::vec(-3.0f64..3.0, 4),
            c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
            p in 1u8..=2,
        ) {
            let model = MeasurementModel::from_exponent(p).unwrap();
            let base = phi_unchecked(&x, &y, model);
            let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
            let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
            let scaled = phi_unchecked(&cx, &cy, model);
            let expect = c.abs().powi(p as i32) * base;
            prop_assert!((scaled - expect).abs() <= 1e-12 * expect.max(1e-300));
        }

        #[test]
        fn dist_equals_phi1(
            x in proptest::collection::vec(-3.0f64..3.0, 5),
            y in proptest::collection::vec(-3.0f64..3.0, 5),
        ) {
            let xs = Signal::new(x).unwrap();
            let ys = Signal::new(y).unwrap();
            prop_assert_eq!(
                dist_to_sign_pair(&xs, &ys).unwrap(),
                phi(&xs, &ys, MeasurementModel::Magnitude).unwrap()
            );
        }

        #[test]
        fn sigma_monotone_in_l((a, x, b, p) in arb_instance()) {
            let model = MeasurementModel::from_exponent(p).unwrap();
            let b = MeasurementVector::new(b, model).unwrap();
            let x = Signal::new(x).unwrap();
            let f = eval_objective(&a, &b, &x).unwrap();
            prop_assert_eq!(sigma_tail(&a, &b, &x, 0).unwrap(), f);
            let mut prev = f;
            for l in 1..=a.rows() {
                let s = sigma_tail(&a, &b, &x, l).unwrap();
                prop_assert!(s <= prev);
                prev = s;
            }
        }
    }
}
