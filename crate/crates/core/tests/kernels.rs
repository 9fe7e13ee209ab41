use std::f64::consts::PI;

use proptest::prelude::*;
use stochconv::kernels::*;
use stochconv::{eval_kernel, Error, KernelSpec, SpectralGrid};

fn spectral(alpha: f64, dim: usize) -> KernelSpec {
    KernelSpec::spectral(alpha, 0.0, dim).unwrap()
}

#[test]
fn gaussian_mass_and_peak_value() {
    let grid = SpectralGrid::new(8.0, 1024).unwrap();
    let p = eval_kernel(&spectral(2.0, 1), &grid, 0.1).unwrap();
    assert!((p.integral() - 1.0).abs() < 1e-6);
    let peak = p.at(&[0.0]);
    assert!((peak - 1.0 / (4.0 * PI * 0.1f64).sqrt()).abs() < 1e-10);
    assert!((peak - 0.8921).abs() < 1e-4);
}

#[test]
fn cauchy_value_matches_density() {
    let grid = SpectralGrid::new(128.0, 8192).unwrap();
    let p = eval_kernel(&spectral(1.0, 1), &grid, 0.5).unwrap();
    let expected = 0.5 / (PI * 1.25);
    assert!((expected - 0.12732).abs() < 1e-5);
    assert!((p.at(&[1.0]) / expected - 1.0).abs() < 1e-4);
}

#[test]
fn gaussian_spectral_matches_closed_form() {
    // relative agreement where the kernel is large; absolute round-off floor below
    let grid = SpectralGrid::new(8.0, 2048).unwrap();
    for &t in &[0.05, 0.5, 2.0] {
        let p = eval_kernel(&spectral(2.0, 1), &grid, t).unwrap();
        for (idx, v) in p.values.iter().enumerate() {
            let x = p.coords(idx)[0];
            let exact = periodic_gaussian_1d(t, x, grid.length);
            if exact > 1e-10 {
                let err = (v - exact).abs();
                assert!(err <= 1e-8 * exact + 1e-15, "t={t} x={x} {v} {exact}");
            }
        }
    }
}

#[test]
fn two_dimensional_gaussian_is_a_product() {
    let grid = SpectralGrid::new(6.0, 128).unwrap();
    let p = eval_kernel(&spectral(2.0, 2), &grid, 0.3).unwrap();
    let closed = eval_kernel(&KernelSpec::gaussian(2), &grid, 0.3).unwrap();
    for (a, b) in p.values.iter().zip(&closed.values) {
        assert!((a - b).abs() < 1e-8 * b.max(1e-4));
    }
}

#[test]
fn cauchy_bounds_hold_with_tolerance_ten() {
    let grid = SpectralGrid::new(64.0, 1 << 14).unwrap();
    let report = check_sharp_bounds(&spectral(1.0, 1), &grid, 1.0, 10.0).unwrap();
    assert!(report.pass, "{report:?}");
    // independent ratio from the density itself
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for k in 1..=3200 {
        let x = 0.01 * k as f64;
        let r = cauchy_density(1.0, x) / sharp_bound(1.0, 1, 1.0, x);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    assert!(lo > 0.1 && hi < 10.0);
}

#[test]
fn branches_cross_at_kernel_scale() {
    let t: f64 = 0.7;
    let r = t.powf(1.0 / 1.5);
    let near = t / r.powf(2.5);
    let far = t.powf(-1.0 / 1.5);
    assert!((near / far - 1.0).abs() < 1e-14);
}

/// `p(1, w)` for `α < 1` by the non-oscillatory Laplace-type representation.
fn stable_density_unit(alpha: f64, w: f64) -> f64 {
    let (s_a, c_a) = (0.5 * PI * alpha).sin_cos();
    let f = |s: f64| (-s * w - s.powf(alpha) * c_a).exp() * (s.powf(alpha) * s_a).sin();
    // s = e^u, composite Simpson on u
    let (a, b, n) = (-40.0f64, 12.0 - w.ln().max(-30.0), 40_000usize);
    let h = (b - a) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let u = a + i as f64 * h;
        let weight = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += weight * f(u.exp()) * u.exp();
    }
    sum * h / 3.0 / PI
}

#[test]
fn half_order_kernel_matches_numerical_inversion() {
    let alpha = 0.5;
    let t: f64 = 0.01;
    let grid = SpectralGrid::new(0.5, 1 << 22).unwrap();
    let spec = spectral(alpha, 1);
    let p = eval_kernel(&spec, &grid, t).unwrap();
    let scale = t.powf(1.0 / alpha);
    // periodic images contribute below 0.6% for |x| <= 1e-2
    for k in 0..20 {
        let x = grid.coordinate(grid.nearest_index(2e-5 * (500f64).powf(k as f64 / 19.0)));
        let oracle = stable_density_unit(alpha, x.abs() / scale) / scale;
        let v = p.at(&[x]);
        assert!((v / oracle - 1.0).abs() < 1e-2, "x={x} {v} {oracle}");
    }
    let report = check_sharp_bounds(&spec, &grid, t, 50.0).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn gradient_bounds_for_cauchy_kernel() {
    let grid = SpectralGrid::new(64.0, 1 << 14).unwrap();
    let spec = KernelSpec::spectral(1.0, 1.0, 1).unwrap();
    let report = check_sharp_bounds(&spec, &grid, 1.0, 10.0).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn bound_check_rejects_fractional_order() {
    let grid = SpectralGrid::new(8.0, 256).unwrap();
    let spec = KernelSpec::spectral(1.5, 0.3, 1).unwrap();
    assert!(matches!(
        check_sharp_bounds(&spec, &grid, 1.0, 10.0),
        Err(Error::UnsupportedOrder(_))
    ));
}

#[test]
fn errors_surface() {
    let grid = SpectralGrid::new(8.0, 64).unwrap();
    assert!(matches!(
        eval_kernel(&spectral(2.0, 1), &grid, 0.0),
        Err(Error::NonPositiveTime(_))
    ));
    assert!(matches!(
        eval_kernel(&spectral(2.0, 1), &grid, 1e-4),
        Err(Error::AliasingViolation { .. })
    ));
    assert!(matches!(
        KernelSpec::new(1.5, 0.0, 1, Method::ClosedForm),
        Err(Error::UnsupportedClosedForm { .. })
    ));
}

fn mass_grid(alpha: f64, dim: usize, t: f64) -> SpectralGrid {
    let cap = if dim == 1 { 1 << 22 } else { 1 << 11 };
    SpectralGrid::for_kernel(&spectral(alpha, dim), t, t, cap).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_is_one(alpha in 0.8f64..=2.0, t in 0.05f64..1.0) {
        let grid = mass_grid(alpha, 1, t);
        let p = eval_kernel(&spectral(alpha, 1), &grid, t).unwrap();
        prop_assert!((p.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn kernel_is_even_and_nonnegative(alpha in 0.5f64..=2.0, t in 0.05f64..1.0, eps in 0.0f64..0.2) {
        let grid = SpectralGrid::with_tolerance(8.0, 4096, 1e-6).unwrap();
        let spec = KernelSpec::spectral(alpha, eps, 1).unwrap();
        if grid.check_guard(&spec, t).is_err() {
            return Ok(());
        }
        let p = eval_kernel(&spec, &grid, t).unwrap();
        let n = grid.points_per_axis;
        for j in 1..n {
            prop_assert_eq!(p.values[j], p.values[n - j]);
        }
        if eps == 0.0 {
            prop_assert!(p.values.iter().all(|v| *v >= -1e-10));
        }
    }

    #[test]
    fn semigroup(alpha in 1.0f64..=2.0, s in 0.1f64..0.5, t in 0.1f64..0.5) {
        let grid = SpectralGrid::new(16.0, 4096).unwrap();
        let spec = spectral(alpha, 1);
        let a = eval_kernel(&spec, &grid, s).unwrap();
        let b = eval_kernel(&spec, &grid, t).unwrap();
        let c = eval_kernel(&spec, &grid, s + t).unwrap();
        let conv = convolve_lattice(&a, &b).unwrap();
        let err = conv.values.iter().zip(&c.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-6, "{}", err);
    }

    #[test]
    fn two_dimensional_symmetry(alpha in 0.8f64..=2.0, t in 0.2f64..1.0) {
        let grid = SpectralGrid::with_tolerance(8.0, 128, 1e-4).unwrap();
        let spec = spectral(alpha, 2);
        prop_assume!(grid.check_guard(&spec, t).is_ok());
        let p = eval_kernel(&spec, &grid, t).unwrap();
        let n = grid.points_per_axis;
        for i in 1..n {
            for j in 1..n {
                let v = p.values[i * n + j];
                prop_assert_eq!(v, p.values[(n - i) * n + j]);
                prop_assert_eq!(v, p.values[i * n + (n - j)]);
                prop_assert!((v - p.values[j * n + i]).abs() <= 1e-12 * p.max_abs());
            }
        }
    }
}
