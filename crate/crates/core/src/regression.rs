//! Log-log least squares for power-law exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fits spanning fewer decades than this are flagged.
pub const MIN_DECADES: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// Decades spanned by the scales.
    pub decades: f64,
    pub narrow_range: bool,
    pub points: usize,
}

impl PowerFit {
    pub fn predict(&self, scale: f64) -> f64 {
        (self.intercept + self.slope * scale.ln()).exp()
    }
}

/// Ordinary least squares of `log value` on `log scale`.
pub fn fit_exponent(pairs: &[(f64, f64)]) -> Result<PowerFit> {
    if pairs.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: pairs.len(),
        });
    }
    if let Some(i) = pairs
        .iter()
        .position(|(s, v)| !(*s > 0.0 && *v > 0.0 && s.is_finite() && v.is_finite()))
    {
        return Err(Error::NonPositiveData(i));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::NonPositiveData(0));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    let decades = (hi - lo) / std::f64::consts::LN_10;
    Ok(PowerFit {
        slope,
        intercept,
        stderr,
        decades,
        narrow_range: decades < MIN_DECADES,
        points: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pairs: Vec<_> = (3..=7).map(|k| (2f64.powi(-k), 2f64.powi(-k))).collect();
        let fit = fit_exponent(&pairs).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-14);
        assert!(fit.stderr < 1e-7);
        assert!(fit.narrow_range);
    }

    #[test]
    fn prefactor_lands_in_intercept() {
        let pairs: Vec<_> = (3..=7)
            .map(|k| (2f64.powi(-k), 5.0 * 2f64.powf(-0.5 * k as f64)))
            .collect();
        let fit = fit_exponent(&pairs).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-14);
        assert!((fit.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            fit_exponent(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]),
            Err(Error::InsufficientPoints { needed: 4, got: 3 })
        ));
        assert!(matches!(
            fit_exponent(&[(1.0, 1.0), (2.0, 0.0), (3.0, 3.0), (4.0, 4.0)]),
            Err(Error::NonPositiveData(1))
        ));
    }
}
