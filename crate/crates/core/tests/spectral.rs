use robustpr::linalg::dot;
use robustpr::solvers::spectral_init;
use robustpr::{
    dist_to_sign_pair, plant_instance, CorruptionSpec, Error, MeasurementModel, MeasurementVector, SensingMatrix,
};

#[test]
fn one_dimensional_noiseless_is_exact_up_to_sign() {
    for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
        for seed in 0..20 {
            let inst = plant_instance(30, 1, model, &CorruptionSpec::noiseless(), seed).unwrap();
            let x0 = spectral_init(&inst.matrix, &inst.b, model).unwrap();
            let d = dist_to_sign_pair(&x0, &inst.xstar).unwrap();
            assert!(d <= 1e-6 * inst.xstar.norm(), "seed {seed}: {d}");
        }
    }
}

#[test]
fn direction_aligns_with_signal_for_many_measurements() {
    let aligned = (0..50)
        .filter(|&seed| {
            let inst =
                plant_instance(5000, 5, MeasurementModel::Intensity, &CorruptionSpec::noiseless(), seed).unwrap();
            let x0 = spectral_init(&inst.matrix, &inst.b, MeasurementModel::Intensity).unwrap();
            let c = dot(x0.as_slice(), inst.xstar.as_slice()) / (x0.norm() * inst.xstar.norm());
            c.abs() >= 0.95
        })
        .count();
    assert!(aligned >= 45, "{aligned}/50");
}

#[test]
fn duplicated_measurements_give_the_same_point() {
    for model in [MeasurementModel::Magnitude, MeasurementModel::Intensity] {
        let inst = plant_instance(
            300,
            6,
            model,
            &CorruptionSpec::uniform(0.05, robustpr::NoiseModel::AdversarialLarge { scale: 10.0 }),
            9,
        )
        .unwrap();
        let once = spectral_init(&inst.matrix, &inst.b, model).unwrap();
        let a2 = inst.matrix.stack(&inst.matrix).unwrap();
        let b2 = inst.b.stack(&inst.b).unwrap();
        let twice = spectral_init(&a2, &b2, model).unwrap();
        for (u, v) in once.as_slice().iter().zip(twice.as_slice()) {
            assert!((u - v).abs() <= 1e-8 * once.norm(), "{u} vs {v}");
        }
    }
}

#[test]
fn all_zero_measurements_are_degenerate() {
    let a = SensingMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, -1.0], vec![3.0, 0.0]]).unwrap();
    let b = MeasurementVector::new(vec![0.0; 3], MeasurementModel::Intensity).unwrap();
    let err = spectral_init(&a, &b, MeasurementModel::Intensity).unwrap_err();
    assert!(matches!(err, Error::DegenerateMeasurements));
    assert_eq!(err.to_string(), "degenerate measurements");
}
