use stochconv::noise::*;
use stochconv::Error;

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn increments(path: &NoisePath) -> &[f64] {
    match path {
        NoisePath::Brownian { increments, .. } => increments,
        NoisePath::Poisson { .. } => panic!("expected a Brownian path"),
    }
}

fn events(path: &NoisePath) -> &[(f64, f64)] {
    match path {
        NoisePath::Poisson { events, .. } => events,
        NoisePath::Brownian { .. } => panic!("expected a Poisson path"),
    }
}

#[test]
fn brownian_increment_moments() {
    let dt = 1e-2;
    let spec = NoiseSpec::brownian(2.0 * dt, 2, 11).unwrap();
    let n = 100_000;
    let dw: Vec<f64> = (0..n).map(|m| increments(&sample_path(&spec, m))[0]).collect();
    let (mean, _) = mean_and_se(&dw);
    assert!(mean.abs() < 3.0 * (dt / n as f64).sqrt());
    let sq: Vec<f64> = dw.iter().map(|w| (w - mean).powi(2)).collect();
    let (var, se) = mean_and_se(&sq);
    assert!((var - dt).abs() < 3.0 * se, "{var}");
}

#[test]
fn poisson_event_count() {
    let spec = NoiseSpec::poisson(2.0, 16, JumpMeasure::finite(5.0, MarkLaw::default()), 3).unwrap();
    let counts: Vec<f64> = (0..10_000).map(|m| events(&sample_path(&spec, m)).len() as f64).collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 10.0).abs() < 3.0 * se, "{mean}");
    let path = sample_path(&spec, 5);
    assert!(events(&path).windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn streams_are_reproducible_and_uncorrelated() {
    let spec = NoiseSpec::brownian(1.0, 4096, 42).unwrap();
    assert_eq!(sample_path(&spec, 9), sample_path(&spec, 9));
    let a = increments(&sample_path(&spec, 0)).to_vec();
    let b = increments(&sample_path(&spec, 1)).to_vec();
    assert_ne!(a, b);
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let norm = (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|x| x * x).sum::<f64>()).sqrt();
    assert!((dot / norm).abs() < 3.0 / (a.len() as f64).sqrt());
    let other = NoiseSpec::brownian(1.0, 4096, 43).unwrap();
    assert_ne!(sample_path(&other, 0), sample_path(&spec, 0));
}

#[test]
fn zero_integrand_integrates_to_zero() {
    let spec = NoiseSpec::poisson(1.0, 4, JumpMeasure::finite(3.0, MarkLaw::default()), 1).unwrap();
    let path = sample_path(&spec, 0);
    assert_eq!(compensated_integral(&path, |_, _| 0.0).unwrap(), 0.0);
}

fn isometry_check<F: Fn(f64, f64) -> f64 + Copy>(h: F, oracle: f64, mean_zero: bool) {
    let lambda = 4.0;
    let horizon = 1.5;
    let measure = JumpMeasure::finite(lambda, MarkLaw::TwoSidedExponential { rate: 1.0 });
    let spec = NoiseSpec::poisson(horizon, 8, measure, 17).unwrap();
    let integrator = CompensatedIntegrator::new(measure, horizon, h).unwrap();
    let values: Vec<f64> = (0..10_000).map(|m| integrator.integrate(&sample_path(&spec, m)).unwrap()).collect();
    if mean_zero {
        let (mean, se) = mean_and_se(&values);
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    }
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    let (second, se) = mean_and_se(&sq);
    assert!((second - oracle).abs() < 3.0 * se, "{second} vs {oracle} (se {se})");
}

#[test]
fn compensated_isometry_three_integrands() {
    // E z² = 2 for the unit two-sided exponential law
    let (lambda, horizon) = (4.0, 1.5f64);
    isometry_check(|_, z| z, horizon * lambda * 2.0, true);
    isometry_check(|t, z| t * z, lambda * 2.0 * horizon.powi(3) / 3.0, true);
    let cos_sq = 0.5 * horizon + 0.25 * (2.0 * horizon).sin();
    isometry_check(|t, z| t.cos() * z.abs(), lambda * 2.0 * cos_sq, true);
}

#[test]
fn kunita_ratio_is_finite_and_stable() {
    let measure = JumpMeasure::finite(6.0, MarkLaw::default());
    let horizon = 1.0;
    let h = |_t: f64, z: f64| z / (1.0 + z.abs());
    let spec = NoiseSpec::poisson(horizon, 8, measure, 5).unwrap();
    let integrator = CompensatedIntegrator::new(measure, horizon, h).unwrap();
    let rhs = integrator.kunita_rhs(4.0).unwrap();
    let ratio = |m: u64| {
        let total: f64 = (0..m)
            .map(|k| integrator.running_sup(&sample_path(&spec, k)).unwrap().powi(4))
            .sum();
        total / m as f64 / rhs
    };
    let small = ratio(4000);
    let large = ratio(16_000);
    assert!(small.is_finite() && large.is_finite() && large > 0.0);
    assert!((small / large - 1.0).abs() < 0.25, "{small} {large}");
}

#[test]
fn invalid_specs_rejected() {
    assert!(NoiseSpec::brownian(0.0, 8, 0).is_err());
    assert!(NoiseSpec::brownian(1.0, 1, 0).is_err());
    assert!(matches!(
        NoiseSpec::poisson(1.0, 8, JumpMeasure::finite(-1.0, MarkLaw::default()), 0),
        Err(Error::InvalidSpec(_))
    ));
}

#[test]
fn path_csv_has_one_row_per_increment() {
    let spec = NoiseSpec::brownian(1.0, 10, 0).unwrap();
    let mut out = Vec::new();
    sample_path(&spec, 0).write_csv(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 11);
}

fn ito_check<F: Fn(f64) -> f64 + Copy>(h: F, oracle: f64) {
    let horizon = 1.5;
    let spec = NoiseSpec::brownian(horizon, 4096, 23).unwrap();
    let values: Vec<f64> = (0..10_000).map(|m| ito_integral(&sample_path(&spec, m), h).unwrap()).collect();
    let (mean, se) = mean_and_se(&values);
    assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    let (second, se) = mean_and_se(&sq);
    assert!((second - oracle).abs() < 3.0 * se, "{second} vs {oracle} (se {se})");
}

#[test]
fn ito_isometry_three_integrands() {
    let horizon = 1.5f64;
    ito_check(|_| 1.0, horizon);
    ito_check(|t| t, horizon.powi(3) / 3.0);
    ito_check(|t| t.cos(), 0.5 * horizon + 0.25 * (2.0 * horizon).sin());
}

#[test]
fn ito_sum_rejects_poisson_paths() {
    let spec = NoiseSpec::poisson(1.0, 4, JumpMeasure::finite(3.0, MarkLaw::default()), 1).unwrap();
    assert!(ito_integral(&sample_path(&spec, 0), |_| 1.0).is_err());
}
