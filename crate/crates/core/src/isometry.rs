//! Exact second moments of Gaussian-kernel Brownian convolutions via the Itô isometry.

use statrs::function::gamma::ln_gamma;

use crate::convolution::{Family, TestFunctionSpec};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{adaptive, Tolerance};

/// `₁F₁(a; b; -z)` for `z ≥ 0`, `b > 0`, `b - a > 0`.
pub fn hyp1f1_neg(a: f64, b: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    if z <= 500.0 {
        // Kummer: e^{-z} ₁F₁(b - a; b; z), all terms positive
        let c = b - a;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 0.0;
        loop {
            term *= (c + n) / (b + n) * z / (n + 1.0);
            sum += term;
            n += 1.0;
            if n > z && term < 1e-17 * sum {
                break;
            }
        }
        return (sum.ln() - z).exp();
    }
    // z^{-a} Γ(b)/Γ(b-a) Σ_s (a)_s (a-b+1)_s / s! z^{-s}
    let lead = (ln_gamma(b) - ln_gamma(b - a) - a * z.ln()).exp();
    let mut term = 1.0;
    let mut sum = 1.0;
    for s in 0..30 {
        let s = s as f64;
        let next = term * (a + s) * (a - b + 1.0 + s) / ((s + 1.0) * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    lead * sum
}

/// `E|μ + σZ|^β` for a standard normal `Z` in `ℝ^d`, with `|μ| = mu_norm`.
pub fn expected_abs_power(mu_norm: f64, sigma: f64, beta: f64, dim: usize) -> f64 {
    if sigma == 0.0 {
        return mu_norm.powf(beta);
    }
    let d = dim as f64;
    let log_norm = 0.5 * beta * 2f64.ln() + ln_gamma(0.5 * (d + beta)) - ln_gamma(0.5 * d);
    let z = mu_norm * mu_norm / (2.0 * sigma * sigma);
    sigma.powf(beta) * log_norm.exp() * hyp1f1_neg(-0.5 * beta, 0.5 * d, z)
}

/// `G(t, r, x) = ∫ p(t-r, x-y) g(r, y) dy` for the Gaussian kernel.
pub fn smoothed_coefficient(g: &TestFunctionSpec, dim: usize, t: f64, r: f64, x: &[f64]) -> f64 {
    let sigma = (2.0 * (t - r).max(0.0)).sqrt();
    let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let a = g.amplitude;
    match g.family {
        Family::Constant => a,
        Family::Spatial => a * expected_abs_power(norm, sigma, g.beta, dim),
        Family::Parabolic => a * (expected_abs_power(norm, sigma, g.beta, dim) + r.powf(0.5 * g.beta)),
    }
}

/// `E|u(t,x) - u(s,y)|²` for `u = ∫_0^· ∫ p(·-r, x-y) g(r,y) dy dW(r)` with the Gaussian kernel.
pub fn gaussian_increment_moment(g: &TestFunctionSpec, dim: usize, x: (f64, &[f64]), y: (f64, &[f64])) -> Result<f64> {
    if x.1.len() != dim || y.1.len() != dim {
        return Err(Error::DimensionMismatch(x.1.len().max(y.1.len()), dim));
    }
    let ((t, xp), (s, yp)) = if x.0 >= y.0 { (x, y) } else { (y, x) };
    if !(s >= 0.0) {
        return Err(invalid("times must be non-negative"));
    }
    let tol = Tolerance {
        relative: 1e-10,
        absolute: 1e-18,
        max_segments: 4000,
    };
    let overlap = adaptive(
        |r| {
            let d = smoothed_coefficient(g, dim, t, r, xp) - smoothed_coefficient(g, dim, s, r, yp);
            d * d
        },
        0.0,
        s,
        tol,
    )?;
    let fresh = adaptive(
        |r| smoothed_coefficient(g, dim, t, r, xp).powi(2),
        s,
        t,
        tol,
    )?;
    Ok(overlap.value + fresh.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypergeometric_branches_agree() {
        for &(a, b) in &[(-0.15, 0.5), (-0.25, 1.0)] {
            let series = {
                // direct alternating series is fine for small z
                let z = 2.0;
                let (mut term, mut sum) = (1.0, 1.0);
                for n in 0..80 {
                    let n = n as f64;
                    term *= (a + n) / (b + n) * (-z) / (n + 1.0);
                    sum += term;
                }
                sum
            };
            assert!((hyp1f1_neg(a, b, 2.0) - series).abs() < 1e-13);
        }
        // reference values at either side of the branch switch
        let below = hyp1f1_neg(-0.15, 0.5, 499.999);
        let above = hyp1f1_neg(-0.15, 0.5, 500.001);
        assert!((below / 3.250_791_623_662_835_4 - 1.0).abs() < 1e-12, "{below}");
        assert!((above / 3.250_793_575_507_019 - 1.0).abs() < 1e-12, "{above}");
    }

    #[test]
    fn absolute_moment_limits() {
        // centred: σ^β 2^{β/2} Γ((1+β)/2)/√π; β = 2 gives σ²
        let v = expected_abs_power(0.0, 1.5, 1.0, 1);
        assert!((v - 1.5 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        let v = expected_abs_power(0.7, 0.3, 2.0 - 1e-12, 1);
        assert!((v - (0.49 + 0.09)).abs() < 1e-9);
        // far from the origin the noise barely matters
        let v = expected_abs_power(10.0, 0.01, 0.5, 1);
        assert!((v - 10f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn constant_coefficient_gives_brownian_variance() {
        let g = TestFunctionSpec::new(Family::Constant, 0.5, 1.0).unwrap();
        let v = gaussian_increment_moment(&g, 1, (0.7, &[0.1]), (0.2, &[0.4])).unwrap();
        assert!((v - 0.5).abs() < 1e-10);
    }
}
