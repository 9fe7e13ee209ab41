//! Seeded Brownian increments and marked Poisson random measures.
//!
//! Every path is a pure function of `(seed, stream_index)`: the generator is
//! ChaCha8 keyed by the seed, with the stream index selecting an independent
//! keystream.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{adaptive, adaptive_semi_infinite, Tolerance};

/// Generator for one stream of a seeded family.
pub fn stream_rng(seed: u64, stream_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MarkLaw {
    /// Density `(b/2) e^{-b|z|}`.
    TwoSidedExponential { rate: f64 },
    Gaussian { std: f64 },
}

impl Default for MarkLaw {
    fn default() -> Self {
        MarkLaw::TwoSidedExponential { rate: 1.0 }
    }
}

impl MarkLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MarkLaw::TwoSidedExponential { rate } => rate > 0.0 && rate.is_finite(),
            MarkLaw::Gaussian { std } => std > 0.0 && std.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("mark law parameter must be positive: {self:?}")))
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        match *self {
            MarkLaw::TwoSidedExponential { rate } => 0.5 * rate * (-rate * z.abs()).exp(),
            MarkLaw::Gaussian { std } => {
                (-0.5 * (z / std).powi(2)).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    /// `E|z|^p`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        match *self {
            MarkLaw::TwoSidedExponential { rate } => gamma(p + 1.0) / rate.powf(p),
            MarkLaw::Gaussian { std } => {
                std.powf(p) * 2f64.powf(0.5 * p) * gamma(0.5 * (p + 1.0)) / std::f64::consts::PI.sqrt()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkLaw::TwoSidedExponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    e / rate
                } else {
                    -e / rate
                }
            }
            MarkLaw::Gaussian { std } => {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            }
        }
    }
}

/// Jump-size measure `ν` on `Z = ℝ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpMeasure {
    /// `ν = λ · (mark law)`.
    Finite {
        intensity: f64,
        #[serde(default)]
        marks: MarkLaw,
    },
    /// `ν(dz) = c e^{-decay |z|} |z|^{-1-index} dz` restricted to `|z| > truncation`.
    TemperedStable {
        scale: f64,
        index: f64,
        decay: f64,
        truncation: f64,
    },
}

impl JumpMeasure {
    pub fn finite(intensity: f64, marks: MarkLaw) -> Self {
        JumpMeasure::Finite { intensity, marks }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpMeasure::Finite { intensity, marks } => {
                if !(intensity > 0.0 && intensity.is_finite()) {
                    return Err(invalid(format!("jump intensity must be positive, got {intensity}")));
                }
                marks.validate()
            }
            JumpMeasure::TemperedStable {
                scale,
                index,
                decay,
                truncation,
            } => {
                if !(scale > 0.0 && index > 0.0 && index < 2.0 && decay > 0.0 && truncation > 0.0) {
                    return Err(invalid(
                        "tempered-stable measure needs scale, decay, truncation > 0 and index in (0, 2)",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Total mass `ν(Z)` of the simulated (possibly truncated) measure.
    pub fn total_intensity(&self) -> f64 {
        match *self {
            JumpMeasure::Finite { intensity, .. } => intensity,
            JumpMeasure::TemperedStable { .. } => self.abs_moment(0.0),
        }
    }

    /// Density of `ν` with respect to `dz`.
    pub fn density(&self, z: f64) -> f64 {
        match *self {
            JumpMeasure::Finite { intensity, marks } => intensity * marks.density(z),
            JumpMeasure::TemperedStable {
                scale,
                index,
                decay,
                truncation,
            } => {
                let a = z.abs();
                if a <= truncation {
                    0.0
                } else {
                    scale * (-decay * a).exp() * a.powf(-1.0 - index)
                }
            }
        }
    }

    /// `∫ |z|^p ν(dz)` over the simulated part of the measure.
    pub fn abs_moment(&self, p: f64) -> f64 {
        match *self {
            JumpMeasure::Finite { intensity, marks } => intensity * marks.abs_moment(p),
            JumpMeasure::TemperedStable { truncation, .. } => {
                let f = |z: f64| z.powf(p) * self.density(z);
                2.0 * adaptive_semi_infinite(f, truncation, Tolerance::relative(1e-10))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// Variance `∫_{|z|≤ε} z² ν(dz)` of the dropped small jumps (zero when finite).
    pub fn truncated_variance(&self) -> f64 {
        match *self {
            JumpMeasure::Finite { .. } => 0.0,
            JumpMeasure::TemperedStable {
                scale,
                index,
                decay,
                truncation,
            } => {
                let f = |z: f64| scale * (-decay * z).exp() * z.powf(1.0 - index);
                2.0 * adaptive(f, 0.0, truncation, Tolerance::relative(1e-10))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// One mark drawn from `ν / ν(Z)`.
    pub fn sample_mark<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpMeasure::Finite { marks, .. } => marks.sample(rng),
            JumpMeasure::TemperedStable {
                index,
                decay,
                truncation,
                ..
            } => loop {
                // Pareto proposal on (ε, ∞), thinned by the exponential tempering
                let u: f64 = rng.random();
                let a = truncation * (1.0 - u).powf(-1.0 / index);
                let accept: f64 = rng.random();
                if accept < (-decay * (a - truncation)).exp() {
                    return if rng.random::<bool>() { a } else { -a };
                }
            },
        }
    }

    /// `∫ f(z) ν(dz)` by adaptive quadrature on each half line.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, tol: Tolerance) -> Result<f64> {
        let lower = match *self {
            JumpMeasure::Finite { .. } => 0.0,
            JumpMeasure::TemperedStable { truncation, .. } => truncation,
        };
        let fail = |e: Error| Error::CompensatorQuadratureFailure(e.to_string());
        let pos = adaptive_semi_infinite(|z| f(z) * self.density(z), lower, tol).map_err(fail)?;
        let neg = adaptive_semi_infinite(|z| f(-z) * self.density(-z), lower, tol).map_err(fail)?;
        Ok(pos.value + neg.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Brownian,
    CompensatedPoisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub horizon: f64,
    pub steps: usize,
    #[serde(default)]
    pub jump: Option<JumpMeasure>,
    #[serde(default)]
    pub seed: u64,
    /// Moment order `p₀ > 2` that the marks must have.
    #[serde(default = "default_p0")]
    pub p0: f64,
}

fn default_p0() -> f64 {
    4.0
}

impl NoiseSpec {
    pub fn brownian(horizon: f64, steps: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            kind: NoiseKind::Brownian,
            horizon,
            steps,
            jump: None,
            seed,
            p0: default_p0(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn poisson(horizon: f64, steps: usize, jump: JumpMeasure, seed: u64) -> Result<Self> {
        let spec = Self {
            kind: NoiseKind::CompensatedPoisson,
            horizon,
            steps,
            jump: Some(jump),
            seed,
            p0: default_p0(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.steps < 2 {
            return Err(invalid(format!("need at least 2 time steps, got {}", self.steps)));
        }
        match (self.kind, &self.jump) {
            (NoiseKind::Brownian, None) => Ok(()),
            (NoiseKind::Brownian, Some(_)) => Err(invalid("Brownian noise takes no jump measure")),
            (NoiseKind::CompensatedPoisson, None) => Err(invalid("Poisson noise needs a jump measure")),
            (NoiseKind::CompensatedPoisson, Some(j)) => {
                j.validate()?;
                if !(self.p0 > 2.0) {
                    return Err(invalid(format!("p0 must exceed 2, got {}", self.p0)));
                }
                if !j.abs_moment(self.p0).is_finite() {
                    return Err(invalid("mark law lacks a finite p0-th moment"));
                }
                Ok(())
            }
        }
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoisePath {
    Brownian {
        dt: f64,
        increments: Vec<f64>,
    },
    Poisson {
        horizon: f64,
        /// `(τ_k, z_k)` with strictly increasing times.
        events: Vec<(f64, f64)>,
        measure: JumpMeasure,
    },
}

impl NoisePath {
    pub fn horizon(&self) -> f64 {
        match self {
            NoisePath::Brownian { dt, increments } => dt * increments.len() as f64,
            NoisePath::Poisson { horizon, .. } => *horizon,
        }
    }

    /// CSV `(t, increment)` or `(tau, z)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        match self {
            NoisePath::Brownian { dt, increments } => {
                writeln!(out, "t,increment")?;
                for (i, dw) in increments.iter().enumerate() {
                    writeln!(out, "{},{dw:.16e}", i as f64 * dt)?;
                }
            }
            NoisePath::Poisson { events, .. } => {
                writeln!(out, "tau,z")?;
                for (tau, z) in events {
                    writeln!(out, "{tau:.16e},{z:.16e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Path number `stream_index` of the family keyed by `spec.seed`.
pub fn sample_path(spec: &NoiseSpec, stream_index: u64) -> NoisePath {
    let mut rng = stream_rng(spec.seed, stream_index);
    match spec.kind {
        NoiseKind::Brownian => {
            let sd = spec.dt().sqrt();
            let increments = (0..spec.steps)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sd * z
                })
                .collect();
            NoisePath::Brownian {
                dt: spec.dt(),
                increments,
            }
        }
        NoiseKind::CompensatedPoisson => {
            let measure = spec.jump.expect("validated Poisson spec carries a jump measure");
            let waiting = Exp::new(measure.total_intensity()).expect("positive intensity");
            let mut events = Vec::new();
            let mut t = 0.0;
            loop {
                t += waiting.sample(&mut rng);
                if t > spec.horizon {
                    break;
                }
                events.push((t, measure.sample_mark(&mut rng)));
            }
            NoisePath::Poisson {
                horizon: spec.horizon,
                events,
                measure,
            }
        }
    }
}

/// Left-endpoint Itô sum `Σ h(t_k) ΔW_k`.
pub fn ito_integral<F: Fn(f64) -> f64>(path: &NoisePath, h: F) -> Result<f64> {
    match path {
        NoisePath::Brownian { dt, increments } => Ok(increments
            .iter()
            .enumerate()
            .map(|(k, dw)| h(k as f64 * dt) * dw)
            .sum()),
        NoisePath::Poisson { .. } => Err(invalid("Itô sum needs a Brownian path")),
    }
}

/// Compensated integrals of a fixed integrand `h(t, z)` against many paths of one measure.
#[derive(Debug, Clone)]
pub struct CompensatedIntegrator<F> {
    h: F,
    measure: JumpMeasure,
    horizon: f64,
    /// Cumulative compensator on a uniform time grid.
    cumulative: Vec<f64>,
}

const COMPENSATOR_SEGMENTS: usize = 256;

impl<F: Fn(f64, f64) -> f64> CompensatedIntegrator<F> {
    pub fn new(measure: JumpMeasure, horizon: f64, h: F) -> Result<Self> {
        measure.validate()?;
        let tol = Tolerance {
            relative: 1e-8,
            absolute: 1e-13,
            max_segments: 2000,
        };
        let rate = |t: f64| measure.integrate(|z| h(t, z), tol);
        let dt = horizon / COMPENSATOR_SEGMENTS as f64;
        let mut cumulative = vec![0.0];
        let mut acc = 0.0;
        for i in 0..COMPENSATOR_SEGMENTS {
            let a = i as f64 * dt;
            let mut failure = None;
            let seg = adaptive(
                |t| match rate(t) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                },
                a,
                a + dt,
                Tolerance {
                    relative: 1e-7,
                    absolute: 1e-14,
                    max_segments: 200,
                },
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let seg = seg.map_err(|e| Error::CompensatorQuadratureFailure(e.to_string()))?;
            acc += seg.value;
            cumulative.push(acc);
        }
        Ok(Self {
            h,
            measure,
            horizon,
            cumulative,
        })
    }

    /// `∫_0^T ∫ h ν(dz) dt`.
    pub fn compensator(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    /// Compensator up to `t`, linear between grid nodes.
    pub fn compensator_until(&self, t: f64) -> f64 {
        let x = (t / self.horizon * COMPENSATOR_SEGMENTS as f64).clamp(0.0, COMPENSATOR_SEGMENTS as f64);
        let i = (x.floor() as usize).min(COMPENSATOR_SEGMENTS - 1);
        let frac = x - i as f64;
        self.cumulative[i] * (1.0 - frac) + self.cumulative[i + 1] * frac
    }

    fn events<'p>(&self, path: &'p NoisePath) -> Result<&'p [(f64, f64)]> {
        match path {
            NoisePath::Poisson { events, measure, horizon } => {
                if *measure != self.measure || (*horizon - self.horizon).abs() > 1e-12 * self.horizon {
                    return Err(invalid("path was drawn from a different jump measure or horizon"));
                }
                Ok(events)
            }
            NoisePath::Brownian { .. } => Err(invalid("compensated integral needs a Poisson path")),
        }
    }

    /// `Σ_k h(τ_k, z_k) - ∫_0^T ∫ h ν(dz) dt`.
    pub fn integrate(&self, path: &NoisePath) -> Result<f64> {
        let events = self.events(path)?;
        let jumps: f64 = events.iter().map(|(t, z)| (self.h)(*t, *z)).sum();
        Ok(jumps - self.compensator())
    }

    /// `sup_t |I(t)|` over event times (both one-sided limits) and a uniform grid.
    pub fn running_sup(&self, path: &NoisePath) -> Result<f64> {
        let events = self.events(path)?;
        let mut sup = 0.0f64;
        let mut jumps = 0.0;
        let mut k = 0;
        let grid = COMPENSATOR_SEGMENTS;
        for i in 0..=grid {
            let t = self.horizon * i as f64 / grid as f64;
            while k < events.len() && events[k].0 <= t {
                let (tau, z) = events[k];
                let comp = self.compensator_until(tau);
                sup = sup.max((jumps - comp).abs());
                jumps += (self.h)(tau, z);
                sup = sup.max((jumps - comp).abs());
                k += 1;
            }
            sup = sup.max((jumps - self.compensator_until(t)).abs());
        }
        Ok(sup)
    }

    /// `(∫∫ h² ν dt)^{p/2} + ∫∫ |h|^p ν dt`, the bracket on the right of Kunita's inequality
    /// for a deterministic integrand.
    pub fn kunita_rhs(&self, p: f64) -> Result<f64> {
        let tol = Tolerance::relative(1e-8);
        let moment = |q: f64| -> Result<f64> {
            let mut failure = None;
            let r = adaptive(
                |t| match self.measure.integrate(|z| (self.h)(t, z).abs().powf(q), tol) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                },
                0.0,
                self.horizon,
                Tolerance::relative(1e-7),
            );
            if let Some(e) = failure {
                return Err(e);
            }
            r.map(|r| r.value)
                .map_err(|e| Error::CompensatorQuadratureFailure(e.to_string()))
        };
        Ok(moment(2.0)?.powf(0.5 * p) + moment(p)?)
    }
}

/// One-off compensated integral; builds the compensator for this call only.
pub fn compensated_integral<F: Fn(f64, f64) -> f64>(path: &NoisePath, h: F) -> Result<f64> {
    match path {
        NoisePath::Poisson { horizon, measure, .. } => {
            CompensatedIntegrator::new(*measure, *horizon, h)?.integrate(path)
        }
        NoisePath::Brownian { .. } => Err(invalid("compensated integral needs a Poisson path")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_spec() -> NoiseSpec {
        NoiseSpec::poisson(2.0, 16, JumpMeasure::finite(5.0, MarkLaw::default()), 7).unwrap()
    }

    #[test]
    fn same_stream_is_bit_identical() {
        let spec = NoiseSpec::brownian(1.0, 32, 99).unwrap();
        assert_eq!(sample_path(&spec, 3), sample_path(&spec, 3));
        assert_ne!(sample_path(&spec, 3), sample_path(&spec, 4));
        let spec = poisson_spec();
        assert_eq!(sample_path(&spec, 11), sample_path(&spec, 11));
    }

    #[test]
    fn zero_integrand_gives_zero() {
        let path = sample_path(&poisson_spec(), 0);
        assert_eq!(compensated_integral(&path, |_, _| 0.0).unwrap(), 0.0);
    }

    #[test]
    fn event_times_increase_within_horizon() {
        let spec = poisson_spec();
        for s in 0..50 {
            if let NoisePath::Poisson { events, .. } = sample_path(&spec, s) {
                assert!(events.windows(2).all(|w| w[0].0 < w[1].0));
                assert!(events.iter().all(|e| e.0 > 0.0 && e.0 <= 2.0));
            }
        }
    }

    #[test]
    fn mark_moments() {
        let law = MarkLaw::TwoSidedExponential { rate: 2.0 };
        assert!((law.abs_moment(2.0) - 0.5).abs() < 1e-14);
        let law = MarkLaw::Gaussian { std: 3.0 };
        assert!((law.abs_moment(2.0) - 9.0).abs() < 1e-12);
        assert!((law.abs_moment(4.0) - 243.0).abs() < 1e-9);
    }

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::brownian(0.0, 10, 0).is_err());
        assert!(NoiseSpec::brownian(1.0, 1, 0).is_err());
        assert!(NoiseSpec::poisson(1.0, 10, JumpMeasure::finite(-1.0, MarkLaw::default()), 0).is_err());
    }

    #[test]
    fn tempered_stable_truncation() {
        let m = JumpMeasure::TemperedStable {
            scale: 1.0,
            index: 0.8,
            decay: 1.0,
            truncation: 0.01,
        };
        m.validate().unwrap();
        assert!(m.total_intensity() > 10.0);
        assert!(m.truncated_variance() > 0.0 && m.truncated_variance() < 1e-2);
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            assert!(m.sample_mark(&mut rng).abs() > 0.01);
        }
    }
}
