use std::f64::consts::PI;

use proptest::prelude::*;
use stochconv::campanato::*;
use stochconv::Error;

fn unit_square() -> DomainSpec {
    DomainSpec::single((0.0, 1.0), vec![(0.0, 1.0)]).unwrap()
}

fn pt(t: f64, x: f64) -> SpaceTimePoint {
    SpaceTimePoint::new(t, vec![x])
}

/// Mean-deviation form over `D ∩ Q_ρ(X)` by a 200 × 200 midpoint grid on the
/// bounding box of the intersection, for `D = (0,1)²`.
fn brute_force(u: impl Fn(f64, f64) -> f64, center: &SpaceTimePoint, rho: f64, p: f64, theta: f64) -> f64 {
    let n = 200;
    let (t0, t1) = ((center.t - rho * rho).max(0.0), (center.t + rho * rho).min(1.0));
    let (x0, x1) = ((center.x[0] - rho).max(0.0), (center.x[0] + rho).min(1.0));
    let (dt, dx) = ((t1 - t0) / n as f64, (x1 - x0) / n as f64);
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            cells.push(u(t0 + (i as f64 + 0.5) * dt, x0 + (j as f64 + 0.5) * dx));
        }
    }
    let measure = (t1 - t0) * (x1 - x0);
    let mean = cells.iter().sum::<f64>() / cells.len() as f64;
    let integral = cells.iter().map(|v| (v - mean).abs().powf(p)).sum::<f64>() * dt * dx;
    integral / measure.powf(theta)
}

#[test]
fn linear_field_matches_brute_force() {
    let domain = unit_square();
    let budget = SamplingBudget {
        random_centers: 4,
        points_per_cylinder: 4096,
        radii: (1..=4).map(|k| 2f64.powi(-k)).collect(),
        seed: 3,
    };
    let field = |_t: f64, x: &[f64]| x[0];
    let report = campanato_seminorm(&field, &domain, 2.0, 1.0, &budget).unwrap();
    let centers = seminorm_centers(&domain, &budget);
    for s in &report.scales {
        let oracle = centers
            .iter()
            .map(|c| brute_force(|_, x| x, c, s.radius, 2.0, 1.0))
            .fold(0.0, f64::max);
        let est = s.mean_deviation.unwrap();
        assert!((est / oracle - 1.0).abs() < 0.05, "rho={} {est} {oracle}", s.radius);
    }
    assert!(report.pairwise_dominates);
}

#[test]
fn constant_field_has_zero_seminorms() {
    let domain = unit_square();
    let budget = SamplingBudget::default();
    let field = |_t: f64, _x: &[f64]| 3.25;
    let c = campanato_seminorm(&field, &domain, 2.0, 1.2, &budget).unwrap();
    assert!(c.seminorm.abs() < 1e-12);
    let h = holder_seminorm(&field, &domain, 0.5, &budget).unwrap();
    assert_eq!(h.seminorm, 0.0);
}

#[test]
fn holder_examples() {
    let domain = unit_square();
    let budget = SamplingBudget::default();
    let linear = holder_seminorm(&|_t: f64, x: &[f64]| x[0], &domain, 1.0, &budget).unwrap();
    assert!((linear.seminorm - 1.0).abs() < 0.02, "{}", linear.seminorm);
    let root = holder_seminorm(&|t: f64, _x: &[f64]| t.sqrt(), &domain, 1.0, &budget).unwrap();
    assert!(root.seminorm <= 1.0 + 1e-12 && root.seminorm > 0.0);
    let steep = holder_seminorm(&|_t: f64, x: &[f64]| x[0], &domain, 1.5, &budget).unwrap();
    assert!(!steep.notes.is_empty());
}

#[test]
fn scaling_is_exact() {
    let domain = unit_square();
    let budget = SamplingBudget {
        radii: vec![0.5, 0.25, 0.125],
        ..Default::default()
    };
    let u = |t: f64, x: &[f64]| (3.0 * x[0]).sin() + t * t;
    let base = campanato_seminorm(&u, &domain, 2.0, 1.1, &budget).unwrap();
    let doubled = campanato_seminorm(&|t: f64, x: &[f64]| 2.0 * u(t, x), &domain, 2.0, 1.1, &budget).unwrap();
    for (a, b) in base.scales.iter().zip(&doubled.scales) {
        assert_eq!(4.0 * a.value, b.value);
        assert_eq!(4.0 * a.mean_deviation.unwrap(), b.mean_deviation.unwrap());
    }
    let base3 = campanato_seminorm(&u, &domain, 3.0, 1.1, &budget).unwrap();
    let scaled = campanato_seminorm(&|t: f64, x: &[f64]| -1.7 * u(t, x), &domain, 3.0, 1.1, &budget).unwrap();
    for (a, b) in base3.scales.iter().zip(&scaled.scales) {
        assert!((1.7f64.powi(3) * a.value / b.value - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fitted_theta_recovers_holder_exponent() {
    let domain = unit_square();
    let budget = SamplingBudget::default();
    let gamma = 0.5;
    let u = move |t: f64, x: &[f64]| x[0].abs().powf(gamma) + t.abs().powf(0.5 * gamma);
    let p = 2.0;
    let report = campanato_seminorm(&u, &domain, p, 1.0 + gamma * p / 3.0, &budget).unwrap();
    let theta = report.fitted.unwrap().value;
    let alpha = embedding_exponent(p, theta, 1).unwrap();
    assert!((alpha - gamma).abs() < 0.15, "theta {theta} alpha {alpha}");
}

#[test]
fn embedding_round_trip() {
    for d in 1..=2 {
        for &p in &[1.0, 2.0, 3.0, 4.5] {
            for &gamma in &[0.1, 0.25, 0.5, 0.75, 1.0] {
                let theta = 1.0 + gamma * p / (d as f64 + 2.0);
                let alpha = embedding_exponent(p, theta, d).unwrap();
                assert!((alpha - gamma).abs() <= 4.0 * f64::EPSILON, "{p} {gamma} {alpha}");
            }
        }
    }
    assert!(matches!(
        embedding_exponent(4.0, 1.0, 2),
        Err(Error::ThetaOutOfEmbeddingRange { .. })
    ));
    assert!(matches!(
        embedding_exponent(2.0, 1.0 + 2.0 / 3.0 + 1e-6, 1),
        Err(Error::ThetaOutOfEmbeddingRange { .. })
    ));
}

#[test]
fn a_type_examples() {
    let big = DomainSpec::single((-4.0, 4.0), vec![(-2.0, 2.0)]).unwrap();
    let a = a_type_constant(&big, &[pt(0.0, 0.0)], &[0.5, 1.0]).unwrap();
    assert!((a - 1.0).abs() < 1e-12);
    let square = unit_square();
    let corner = a_type_constant(&square, &[pt(0.0, 0.0)], &[0.01]).unwrap();
    assert!((corner - 0.25).abs() < 1e-12);
    assert!(matches!(
        a_type_constant(&square, &[pt(0.5, 0.5)], &[1.5]),
        Err(Error::RadiusExceedsDiameter { .. })
    ));
    assert!(matches!(
        a_type_constant(&square, &[pt(2.0, 0.5)], &[0.5]),
        Err(Error::OutsideDomain { .. })
    ));
}

#[test]
fn union_domains() {
    let d = DomainSpec::new(vec![
        SpaceTimeBox { t: (0.0, 1.0), x: vec![(0.0, 1.0)] },
        SpaceTimeBox { t: (0.0, 1.0), x: vec![(1.0, 2.0)] },
    ])
    .unwrap();
    assert!((d.measure() - 2.0).abs() < 1e-15);
    // the seam is invisible to the intersection measure
    let a = a_type_constant(&d, &[pt(0.5, 1.0)], &[0.25]).unwrap();
    assert!((a - 1.0).abs() < 1e-12);
    assert!(DomainSpec::new(vec![
        SpaceTimeBox { t: (0.0, 1.0), x: vec![(0.0, 1.0)] },
        SpaceTimeBox { t: (0.5, 1.5), x: vec![(0.5, 2.0)] },
    ])
    .is_err());
}

#[test]
fn report_exports() {
    let report = campanato_seminorm(&|_t: f64, x: &[f64]| x[0], &unit_square(), 2.0, 1.0, &SamplingBudget::default()).unwrap();
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("scale,value,stderr"));
    assert_eq!(text.lines().count(), 1 + report.scales.len());
    let json = serde_json::to_string(&report).unwrap();
    let back: SeminormReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
}

fn point2() -> impl Strategy<Value = SpaceTimePoint> {
    (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0).prop_map(|(t, a, b)| SpaceTimePoint::new(t, vec![a, b]))
}

proptest! {
    #[test]
    fn metric_axioms(x in point2(), y in point2(), z in point2()) {
        let dxy = parabolic_distance(&x, &y).unwrap();
        prop_assert_eq!(dxy, parabolic_distance(&y, &x).unwrap());
        prop_assert_eq!(parabolic_distance(&x, &x).unwrap(), 0.0);
        if x != y {
            prop_assert!(dxy > 0.0);
        }
        let dxz = parabolic_distance(&x, &z).unwrap();
        let dyz = parabolic_distance(&y, &z).unwrap();
        prop_assert!(dxz <= dxy + dyz + 1e-12);
    }

    #[test]
    fn cylinder_measure(c in 0.01f64..3.0) {
        let q1 = ParabolicCylinder::new(pt(0.0, 0.0), c).unwrap();
        prop_assert!((q1.measure() / (2.0 * c * c * 2.0 * c) - 1.0).abs() < 1e-14);
        let q2 = ParabolicCylinder::new(SpaceTimePoint::new(0.0, vec![0.0, 0.0]), c).unwrap();
        prop_assert!((q2.measure() / (2.0 * c * c * PI * c * c) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn a_type_never_exceeds_one(t in 0.0f64..1.0, x in 0.0f64..1.0, y in 0.0f64..1.0, r in 0.01f64..1.0) {
        let d = DomainSpec::single((0.0, 1.0), vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let a = a_type_constant(&d, &[SpaceTimePoint::new(t, vec![x, y])], &[r]).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn inclusion_monotone_in_sigma(p in 1.0f64..4.0, dq in 0.0f64..3.0, theta in 0.0f64..6.0, sigma in 0.0f64..6.0, ds in 0.0f64..3.0) {
        let q = p + dq;
        if inclusion_holds(p, theta, q, sigma) {
            prop_assert!(inclusion_holds(p, theta, q, sigma + ds));
        }
        prop_assert!(inclusion_holds(p, theta, p, theta));
    }
}
