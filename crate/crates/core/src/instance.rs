//! Seeded generation of Gaussian sensing matrices, planted signals and
//! sparsely corrupted measurements.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::normalize;
use crate::model::{eval_objective, forward_map, MeasurementModel, MeasurementVector, SensingMatrix, Signal};
use crate::rng::{stream_rng, Stream};

/// Format version written into instance documents.
pub const INSTANCE_FORMAT_VERSION: u32 = 1;

/// How corrupted entries of `b` are rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `b_i = 0`.
    ReplaceZero,
    /// `b_i += scale * N(0, 1)`.
    AdditiveGaussian { scale: f64 },
    /// `b_i = +-scale * ||x*||^p * U[1, 2]`.
    AdversarialLarge { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportModel {
    UniformRandom,
    Fixed { indices: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    /// Corrupted fraction `s`; `L = floor(s * m)` entries are rewritten.
    pub fraction: f64,
    pub noise: NoiseModel,
    pub support: SupportModel,
}

impl CorruptionSpec {
    pub fn noiseless() -> Self {
        Self {
            fraction: 0.0,
            noise: NoiseModel::ReplaceZero,
            support: SupportModel::UniformRandom,
        }
    }

    pub fn uniform(fraction: f64, noise: NoiseModel) -> Self {
        Self {
            fraction,
            noise,
            support: SupportModel::UniformRandom,
        }
    }

    /// Number of corrupted entries for `m` measurements.
    pub fn corrupted_count(&self, m: usize) -> usize {
        match &self.support {
            SupportModel::Fixed { indices } => indices.len(),
            SupportModel::UniformRandom => (self.fraction * m as f64).floor() as usize,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.fraction) {
            return Err(Error::invalid(format!(
                "corruption fraction must lie in [0, 1), got {}",
                self.fraction
            )));
        }
        match self.noise {
            NoiseModel::AdditiveGaussian { scale } | NoiseModel::AdversarialLarge { scale } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid(format!("noise scale must be > 0, got {scale}")));
                }
            }
            NoiseModel::ReplaceZero => {}
        }
        if let SupportModel::Fixed { indices } = &self.support {
            let mut seen = vec![false; m];
            for &i in indices {
                if i >= m {
                    return Err(Error::invalid(format!(
                        "fixed support index {i} out of range for m = {m}"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::invalid(format!("fixed support index {i} repeated")));
                }
            }
        }
        let l = self.corrupted_count(m);
        if l >= m {
            return Err(Error::invalid(format!(
                "corrupted count {l} must be smaller than m = {m}"
            )));
        }
        Ok(())
    }
}

/// A complete planted experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub version: u32,
    pub seed: u64,
    pub model: MeasurementModel,
    pub corruption: CorruptionSpec,
    pub matrix: SensingMatrix,
    pub xstar: Signal,
    pub b: MeasurementVector,
    /// Corrupted indices `T`, ascending.
    pub support: Vec<usize>,
    /// `b_i - |a_i^T x*|^p` for each `i` in `support`, same order.
    pub noise_values: Vec<f64>,
}

/// Borrowed view consumed by the solvers.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub matrix: &'a SensingMatrix,
    pub b: &'a MeasurementVector,
    /// Planted solution, when known (enables distance tracking).
    pub xstar: Option<&'a Signal>,
}

impl<'a> Problem<'a> {
    pub fn new(matrix: &'a SensingMatrix, b: &'a MeasurementVector) -> Result<Self> {
        matrix.check_rows(b.len(), "measurement length")?;
        Ok(Self { matrix, b, xstar: None })
    }

    pub fn with_solution(mut self, xstar: &'a Signal) -> Result<Self> {
        self.matrix.check_cols(xstar.len(), "planted signal length")?;
        self.xstar = Some(xstar);
        Ok(self)
    }

    pub fn model(&self) -> MeasurementModel {
        self.b.model()
    }
}

impl ProblemInstance {
    pub fn m(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n(&self) -> usize {
        self.matrix.cols()
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem {
            matrix: &self.matrix,
            b: &self.b,
            xstar: Some(&self.xstar),
        }
    }

    /// `f_p(x*)`, the planted optimal value.
    pub fn planted_objective(&self) -> f64 {
        eval_objective(&self.matrix, &self.b, &self.xstar).expect("instance dimensions agree")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        inst.check()?;
        Ok(inst)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        self.matrix.check_rows(self.b.len(), "measurement length")?;
        self.matrix.check_cols(self.xstar.len(), "planted signal length")?;
        if self.b.model() != self.model {
            return Err(Error::invalid("measurement model disagrees with instance model"));
        }
        if self.support.len() != self.noise_values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.support.len(),
                got: self.noise_values.len(),
                context: "noise values",
            });
        }
        if self.support.iter().any(|&i| i >= self.m()) {
            return Err(Error::invalid("support index out of range"));
        }
        Ok(())
    }
}

/// `m x n` matrix of i.i.d. standard normals from the matrix stream of `seed`.
pub fn sample_matrix(m: usize, n: usize, seed: u64) -> Result<SensingMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!("matrix size must be positive, got {m}x{n}")));
    }
    let mut rng = stream_rng(seed, Stream::Matrix);
    let data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    Ok(SensingMatrix::from_vec_unchecked(m, n, data))
}

/// Uniformly random direction scaled to `norm`.
pub fn sample_signal(n: usize, norm: f64, seed: u64) -> Result<Signal> {
    if n == 0 {
        return Err(Error::invalid("signal length must be positive"));
    }
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid(format!("signal norm must be > 0, got {norm}")));
    }
    let mut rng = stream_rng(seed, Stream::Signal);
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) > 0.0 {
            v.iter_mut().for_each(|e| *e *= norm);
            return Signal::new(v);
        }
    }
}

/// Plants a unit-norm signal and corrupts `floor(s m)` measurements.
pub fn plant_instance(
    m: usize,
    n: usize,
    model: MeasurementModel,
    spec: &CorruptionSpec,
    seed: u64,
) -> Result<ProblemInstance> {
    plant_instance_with_norm(m, n, model, spec, 1.0, seed)
}

pub fn plant_instance_with_norm(
    m: usize,
    n: usize,
    model: MeasurementModel,
    spec: &CorruptionSpec,
    signal_norm: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    spec.validate(m)?;
    let matrix = sample_matrix(m, n, seed)?;
    let xstar = sample_signal(n, signal_norm, seed)?;
    let clean = forward_map(&matrix, &xstar, model)?;

    let support = match &spec.support {
        SupportModel::Fixed { indices } => {
            let mut t = indices.clone();
            t.sort_unstable();
            t
        }
        SupportModel::UniformRandom => {
            let l = spec.corrupted_count(m);
            let mut rng = stream_rng(seed, Stream::Support);
            let mut t = rand::seq::index::sample(&mut rng, m, l).into_vec();
            t.sort_unstable();
            t
        }
    };

    let mut values = clean.clone();
    let mut rng = stream_rng(seed, Stream::Noise);
    let scale_p = model.lift(xstar.norm());
    for &i in &support {
        values[i] = match spec.noise {
            NoiseModel::ReplaceZero => 0.0,
            NoiseModel::AdditiveGaussian { scale } => {
                let z: f64 = rng.sample(StandardNormal);
                clean[i] + scale * z
            }
            NoiseModel::AdversarialLarge { scale } => {
                let u: f64 = rng.random_range(1.0..2.0);
                let sgn = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sgn * scale * scale_p * u
            }
        };
    }
    let noise_values = support.iter().map(|&i| values[i] - clean[i]).collect();
    let b = MeasurementVector::new(values, model)?;

    Ok(ProblemInstance {
        version: INSTANCE_FORMAT_VERSION,
        seed,
        model,
        corruption: spec.clone(),
        matrix,
        xstar,
        b,
        support,
        noise_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{count_nonzero, residual};

    fn adversarial(s: f64) -> CorruptionSpec {
        CorruptionSpec::uniform(s, NoiseModel::AdversarialLarge { scale: 3.0 })
    }

    #[test]
    fn matrix_is_deterministic_and_gaussian() {
        assert_eq!(sample_matrix(7, 3, 11).unwrap(), sample_matrix(7, 3, 11).unwrap());
        assert_ne!(sample_matrix(7, 3, 11).unwrap(), sample_matrix(7, 3, 12).unwrap());
        let a = sample_matrix(20000, 1, 5).unwrap();
        let m = a.rows() as f64;
        let mean_abs = a.data().iter().map(|v| v.abs()).sum::<f64>() / m;
        let mean_sq = a.data().iter().map(|v| v * v).sum::<f64>() / m;
        assert!((mean_abs - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.02);
        assert!((mean_sq - 1.0).abs() < 0.03);
        assert!(sample_matrix(0, 3, 1).is_err());
    }

    #[test]
    fn signal_norm_and_determinism() {
        let x = sample_signal(9, 2.5, 3).unwrap();
        assert!((x.norm() - 2.5).abs() < 1e-12 * 2.5);
        assert_eq!(x, sample_signal(9, 2.5, 3).unwrap());
        let x1 = sample_signal(1, 0.7, 4).unwrap();
        assert!((x1.as_slice()[0].abs() - 0.7).abs() < 1e-15);
        assert!(sample_signal(3, 0.0, 1).is_err());
        assert!(sample_signal(3, -1.0, 1).is_err());
    }

    #[test]
    fn noiseless_instance_has_zero_objective() {
        for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
            let inst = plant_instance(40, 4, model, &CorruptionSpec::noiseless(), 9).unwrap();
            assert!(inst.support.is_empty());
            let clean = forward_map(&inst.matrix, &inst.xstar, model).unwrap();
            assert_eq!(inst.b.values(), clean.as_slice());
            assert_eq!(inst.planted_objective(), 0.0);
        }
    }

    #[test]
    fn corrupted_instance_contract() {
        for noise in [
            NoiseModel::ReplaceZero,
            NoiseModel::AdditiveGaussian { scale: 0.5 },
            NoiseModel::AdversarialLarge { scale: 2.0 },
        ] {
            let spec = CorruptionSpec::uniform(0.1, noise);
            let inst = plant_instance(100, 5, MeasurementModel::Intensity, &spec, 21).unwrap();
            assert_eq!(inst.support.len(), 10);
            let clean = forward_map(&inst.matrix, &inst.xstar, inst.model).unwrap();
            for (i, c) in clean.iter().enumerate() {
                if !inst.support.contains(&i) {
                    assert_eq!(inst.b.values()[i], *c);
                }
            }
            let r = residual(&inst.matrix, &inst.b, &inst.xstar).unwrap();
            assert!(count_nonzero(&r, 0.0) <= 10);
            let planted: f64 = inst
                .support
                .iter()
                .map(|&i| (clean[i] - inst.b.values()[i]).abs())
                .sum();
            assert!((inst.planted_objective() - planted).abs() <= 1e-12 * planted.max(1.0));
        }
    }

    #[test]
    fn fixed_support_is_respected_and_validated() {
        let spec = CorruptionSpec {
            fraction: 0.0,
            noise: NoiseModel::ReplaceZero,
            support: SupportModel::Fixed { indices: vec![4, 1] },
        };
        let inst = plant_instance(6, 2, MeasurementModel::Magnitude, &spec, 1).unwrap();
        assert_eq!(inst.support, vec![1, 4]);
        assert_eq!(inst.b.values()[1], 0.0);
        assert_eq!(inst.b.values()[4], 0.0);

        let bad = CorruptionSpec {
            support: SupportModel::Fixed { indices: vec![6] },
            ..spec.clone()
        };
        assert!(plant_instance(6, 2, MeasurementModel::Magnitude, &bad, 1).is_err());
        let dup = CorruptionSpec {
            support: SupportModel::Fixed { indices: vec![2, 2] },
            ..spec
        };
        assert!(plant_instance(6, 2, MeasurementModel::Magnitude, &dup, 1).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        let m = MeasurementModel::Intensity;
        assert!(plant_instance(10, 2, m, &CorruptionSpec::uniform(1.0, NoiseModel::ReplaceZero), 0).is_err());
        assert!(plant_instance(10, 2, m, &CorruptionSpec::uniform(-0.1, NoiseModel::ReplaceZero), 0).is_err());
        assert!(plant_instance(
            10,
            2,
            m,
            &CorruptionSpec::uniform(0.1, NoiseModel::AdditiveGaussian { scale: 0.0 }),
            0
        )
        .is_err());
    }

    #[test]
    fn regeneration_is_bit_exact_and_json_round_trips() {
        let spec = adversarial(0.05);
        let a = plant_instance(60, 4, MeasurementModel::Magnitude, &spec, 77).unwrap();
        let b = plant_instance(60, 4, MeasurementModel::Magnitude, &spec, 77).unwrap();
        assert_eq!(a, b);
        let back = ProblemInstance::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn support_stream_independent_of_matrix_stream() {
        // the matrix for a given seed does not depend on how many support draws happen
        let s1 = plant_instance(50, 3, MeasurementModel::Intensity, &adversarial(0.02), 5).unwrap();
        let s2 = plant_instance(50, 3, MeasurementModel::Intensity, &adversarial(0.3), 5).unwrap();
        assert_eq!(s1.matrix, s2.matrix);
        assert_eq!(s1.xstar, s2.xstar);
    }
}
