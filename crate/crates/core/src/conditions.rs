//! Time-integrated kernel conditions: increment, mass and tail integrals, and
//! the exponents `γ1`, `γ2` fitted from them.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{required_points, KernelSpec, SpectralGrid, SpectralPlan};
use crate::quadrature::{graded_nodes, GaussLegendre};
use crate::regression::{fit_exponent, PowerFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureOptions {
    /// Cells `J` of the graded time mesh at the coarse level.
    pub cells: usize,
    /// Grading exponent `κ`.
    pub grading: f64,
    pub gauss_points: usize,
    pub warn_disagreement: f64,
    pub fail_disagreement: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            cells: 64,
            grading: 3.0,
            gauss_points: 4,
            warn_disagreement: 0.01,
            fail_disagreement: 0.05,
        }
    }
}

/// Per-time spatial grids adapted to the kernel scale `σ^{1/α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScaledResolution {
    /// Box half-width in units of the larger kernel scale.
    pub box_factor: f64,
    /// Lattice points per unit of the smaller kernel scale.
    pub points_per_scale: f64,
    /// Cap on the total number of lattice points.
    pub max_points: usize,
    pub aliasing_tolerance: f64,
}

impl Default for ScaledResolution {
    fn default() -> Self {
        Self {
            box_factor: 64.0,
            points_per_scale: 8.0,
            max_points: 1 << 19,
            aliasing_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Increment,
    Mass,
    Tail,
}

impl Condition {
    pub fn name(&self) -> &'static str {
        match self {
            Condition::Increment => "increment",
            Condition::Mass => "mass",
            Condition::Tail => "tail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionProbe {
    pub kernel: KernelSpec,
    /// Moment order of the weight `1 + |z|^β`; `β = 0` drops the weight.
    pub beta: f64,
    /// Power `q` applied to the inner spatial integral.
    pub power: f64,
    pub time_pairs: Vec<(f64, f64)>,
    pub resolution: ScaledResolution,
    pub quadrature: QuadratureOptions,
}

impl ConditionProbe {
    pub fn new(kernel: KernelSpec, beta: f64, power: f64, time_pairs: Vec<(f64, f64)>) -> Result<Self> {
        let probe = Self {
            kernel,
            beta,
            power,
            time_pairs,
            resolution: ScaledResolution::default(),
            quadrature: QuadratureOptions::default(),
        };
        probe.validate()?;
        Ok(probe)
    }

    /// Pairs `(s, s + 2^{-k})` for `k` in `lags`.
    pub fn dyadic(kernel: KernelSpec, beta: f64, power: f64, s: f64, lags: std::ops::RangeInclusive<i32>) -> Result<Self> {
        let pairs = lags.rev().map(|k| (s, s + 2f64.powi(-k))).collect();
        Self::new(kernel, beta, power, pairs)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate_for_conditions()?;
        if !(0.0..1.0).contains(&self.beta) {
            return Err(invalid(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        if !(self.power >= 1.0) {
            return Err(invalid(format!("power must be >= 1, got {}", self.power)));
        }
        for &(s, t) in &self.time_pairs {
            if !(s > 0.0 && s < t) {
                return Err(Error::DegenerateInterval { s, t });
            }
        }
        let q = &self.quadrature;
        if q.cells < 2 || q.gauss_points < 1 || !(q.grading >= 1.0) {
            return Err(invalid("quadrature needs cells >= 2, gauss_points >= 1, grading >= 1"));
        }
        Ok(())
    }

    fn check_weight(&self) -> Result<()> {
        if self.beta == 0.0 {
            return Ok(());
        }
        if self.kernel.alpha < 2.0 && self.beta >= self.kernel.alpha {
            return Err(Error::MomentDivergence(format!(
                "beta = {} >= alpha = {}: the beta-moment of the stable kernel is infinite",
                self.beta, self.kernel.alpha
            )));
        }
        if self.kernel.epsilon > 0.0 && self.beta >= self.kernel.epsilon {
            return Err(Error::MomentDivergence(format!(
                "beta = {} >= epsilon = {}: the derivative kernel decays like |z|^(-d-epsilon)",
                self.beta, self.kernel.epsilon
            )));
        }
        Ok(())
    }
}

/// Inner integral `∫ |p(τ+δ) - p(τ)| w` (or `∫ |p(τ)| w` when `δ = 0`).
struct InnerIntegral<'a> {
    probe: &'a ConditionProbe,
    weighted: bool,
}

struct NodeValue {
    value: f64,
    residual: f64,
    capped: bool,
}

impl InnerIntegral<'_> {
    fn per_axis_cap(&self) -> usize {
        let dim = self.probe.kernel.dim as f64;
        let per_axis = (self.probe.resolution.max_points as f64).powf(1.0 / dim).floor() as usize;
        let mut p = 2usize;
        while p * 2 <= per_axis {
            p *= 2;
        }
        p
    }

    fn points_for(&self, tau: f64, delta: f64) -> (f64, usize) {
        let spec = &self.probe.kernel;
        let res = &self.probe.resolution;
        let length = res.box_factor * spec.scale(tau + delta);
        let guard = required_points(spec.alpha, length, tau, res.aliasing_tolerance);
        let resolve = (2.0 * length * res.points_per_scale / spec.scale(tau))
            .ceil()
            .min((1u64 << 40) as f64) as usize;
        (length, guard.max(resolve.next_power_of_two()))
    }

    fn evaluate(&self, tau: f64, delta: f64) -> Result<NodeValue> {
        let (length, n) = self.points_for(tau, delta);
        let cap = self.per_axis_cap();
        if n > cap {
            if delta > 0.0 {
                // the two kernels live on separated scales: |a - b| ≈ |a| + |b|
                let a = self.evaluate(tau, 0.0)?;
                let b = self.evaluate(tau + delta, 0.0)?;
                return Ok(NodeValue {
                    value: a.value + b.value,
                    residual: a.residual.max(b.residual),
                    capped: true,
                });
            }
            return self.evaluate_on(length, cap, tau, delta, true);
        }
        self.evaluate_on(length, n, tau, delta, false)
    }

    fn evaluate_on(&self, length: f64, n: usize, tau: f64, delta: f64, capped: bool) -> Result<NodeValue> {
        let spec = &self.probe.kernel;
        let grid = SpectralGrid::with_tolerance(length, n, 0.5)?;
        let residual = grid.aliasing_residual(spec, tau);
        let plan = SpectralPlan::new(grid, spec.dim);
        let multiplier: Vec<f64> = plan
            .xi_norm()
            .iter()
            .map(|&xi| {
                let m = spec.multiplier(tau, xi);
                if delta > 0.0 {
                    m * (-delta * xi.powf(spec.alpha)).exp_m1()
                } else {
                    m
                }
            })
            .collect();
        let values = plan.synthesize(&multiplier);
        let field = crate::kernels::LatticeField {
            grid,
            dim: spec.dim,
            values,
        };
        let beta = self.probe.beta;
        let value = if self.weighted && beta > 0.0 {
            field.weighted_abs_integral(|x| 1.0 + x.iter().map(|c| c * c).sum::<f64>().powf(0.5 * beta))
        } else {
            field.weighted_abs_integral(|_| 1.0)
        };
        Ok(NodeValue {
            value,
            residual,
            capped,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionValue {
    pub condition: Condition,
    pub s: f64,
    pub t: f64,
    pub lhs: f64,
    /// Relative disagreement between the `J` and `2J` meshes.
    pub disagreement: f64,
    /// Largest aliasing residual met at any node.
    pub max_residual: f64,
    /// Nodes that fell back to the separated-scale asymptote.
    pub capped_nodes: usize,
}

/// `∫_0^S A(τ)^q dτ` on two graded meshes.
fn time_integral(
    probe: &ConditionProbe,
    condition: Condition,
    s: f64,
    t: f64,
    warnings: &mut Vec<String>,
) -> Result<ConditionValue> {
    let (span, delta, weighted) = match condition {
        Condition::Increment => (s, t - s, true),
        Condition::Mass => (s, 0.0, false),
        Condition::Tail => (t - s, 0.0, true),
    };
    let inner = InnerIntegral { probe, weighted };
    let q = &probe.quadrature;
    let rule = GaussLegendre::new(q.gauss_points);
    let level = |cells: usize| -> Result<(f64, f64, usize)> {
        let nodes = graded_nodes(span, cells, q.grading, &rule);
        let values: Vec<Result<NodeValue>> = nodes
            .par_iter()
            .map(|&(tau, _)| inner.evaluate(tau, delta))
            .collect();
        let mut sum = 0.0;
        let mut residual = 0.0f64;
        let mut capped = 0;
        for ((_, w), v) in nodes.iter().zip(values) {
            let v = v?;
            sum += w * v.value.powf(probe.power);
            residual = residual.max(v.residual);
            capped += usize::from(v.capped);
        }
        Ok((sum, residual, capped))
    };
    let (coarse, r1, c1) = level(q.cells)?;
    let (fine, r2, c2) = level(2 * q.cells)?;
    let disagreement = if fine == 0.0 {
        0.0
    } else {
        (coarse - fine).abs() / fine.abs()
    };
    if disagreement > q.fail_disagreement {
        return Err(Error::QuadratureNotConverged { disagreement });
    }
    if disagreement > q.warn_disagreement {
        warnings.push(format!(
            "{} condition at (s, t) = ({s}, {t}): mesh disagreement {disagreement:.3e}",
            condition.name()
        ));
    }
    Ok(ConditionValue {
        condition,
        s,
        t,
        lhs: fine,
        disagreement,
        max_residual: r1.max(r2),
        capped_nodes: c1 + c2,
    })
}

fn check_pair(s: f64, t: f64) -> Result<()> {
    if !(s > 0.0 && s < t) {
        return Err(Error::DegenerateInterval { s, t });
    }
    Ok(())
}

/// `∫_0^s (∫ |p(t-r) - p(s-r)| (1+|z|^β) dz)^q dr`.
pub fn condition_increment(probe: &ConditionProbe, s: f64, t: f64) -> Result<ConditionValue> {
    check_pair(s, t)?;
    probe.kernel.validate_for_conditions()?;
    probe.check_weight()?;
    time_integral(probe, Condition::Increment, s, t, &mut Vec::new())
}

/// `∫_0^s (∫ |p(s-r)| dz)^q dr`.
pub fn condition_mass(probe: &ConditionProbe, s: f64) -> Result<ConditionValue> {
    if !(s > 0.0) {
        return Err(Error::DegenerateInterval { s: 0.0, t: s });
    }
    probe.kernel.validate_for_conditions()?;
    time_integral(probe, Condition::Mass, s, s, &mut Vec::new())
}

/// `∫_s^t (∫ |p(t-r)| (1+|z|^β) dz)^q dr`.
pub fn condition_tail(probe: &ConditionProbe, s: f64, t: f64) -> Result<ConditionValue> {
    check_pair(s, t)?;
    probe.kernel.validate_for_conditions()?;
    probe.check_weight()?;
    time_integral(probe, Condition::Tail, s, t, &mut Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    /// `γ = 2 slope / q`.
    pub gamma: f64,
    pub stderr: f64,
    pub fit: PowerFit,
}

impl ExponentEstimate {
    fn from_fit(fit: PowerFit, power: f64) -> Self {
        Self {
            gamma: 2.0 * fit.slope / power,
            stderr: 2.0 * fit.stderr / power,
            fit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub kernel: KernelSpec,
    pub beta: f64,
    pub power: f64,
    pub increment: Vec<ConditionValue>,
    pub mass: Vec<ConditionValue>,
    pub tail: Vec<ConditionValue>,
    pub fitted_gamma1: Option<ExponentEstimate>,
    pub fitted_gamma2: Option<ExponentEstimate>,
    /// Slope of the mass integral against `s` when enough distinct `s` are probed.
    pub mass_slope: Option<PowerFit>,
    pub n0_estimate: f64,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct ConditionJson<'a> {
    condition: &'a str,
    pairs: Vec<(f64, f64)>,
    lhs: Vec<f64>,
    fitted_gamma: Option<f64>,
    stderr: Option<f64>,
}

impl ConditionReport {
    pub fn values(&self, condition: Condition) -> &[ConditionValue] {
        match condition {
            Condition::Increment => &self.increment,
            Condition::Mass => &self.mass,
            Condition::Tail => &self.tail,
        }
    }

    /// `[{condition, pairs, lhs, fitted_gamma, stderr}, ...]`.
    pub fn to_json(&self) -> Result<String> {
        let entry = |c: Condition, est: Option<(f64, f64)>| ConditionJson {
            condition: c.name(),
            pairs: self.values(c).iter().map(|v| (v.s, v.t)).collect(),
            lhs: self.values(c).iter().map(|v| v.lhs).collect(),
            fitted_gamma: est.map(|e| e.0),
            stderr: est.map(|e| e.1),
        };
        let items = vec![
            entry(Condition::Increment, self.fitted_gamma1.map(|e| (e.gamma, e.stderr))),
            entry(Condition::Mass, self.mass_slope.map(|f| (f.slope, f.stderr))),
            entry(Condition::Tail, self.fitted_gamma2.map(|e| (e.gamma, e.stderr))),
        ];
        Ok(serde_json::to_string_pretty(&items)?)
    }

    /// CSV `condition,s,t,lag,lhs,disagreement`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "condition,s,t,lag,lhs,disagreement")?;
        for c in [Condition::Increment, Condition::Mass, Condition::Tail] {
            for v in self.values(c) {
                writeln!(
                    out,
                    "{},{},{},{},{:.12e},{:.3e}",
                    c.name(),
                    v.s,
                    v.t,
                    v.t - v.s,
                    v.lhs,
                    v.disagreement
                )?;
            }
        }
        Ok(())
    }
}

/// Evaluates all three conditions on every pair and fits `γ1`, `γ2` against `t - s`.
pub fn run_conditions(probe: &ConditionProbe) -> Result<ConditionReport> {
    probe.validate()?;
    probe.check_weight()?;
    let mut warnings = Vec::new();
    let mut increment = Vec::new();
    let mut tail = Vec::new();
    let mut mass: Vec<ConditionValue> = Vec::new();
    for &(s, t) in &probe.time_pairs {
        increment.push(time_integral(probe, Condition::Increment, s, t, &mut warnings)?);
        tail.push(time_integral(probe, Condition::Tail, s, t, &mut warnings)?);
        if !mass.iter().any(|m| m.s == s) {
            mass.push(time_integral(probe, Condition::Mass, s, s, &mut warnings)?);
        }
    }
    let lag_fit = |values: &[ConditionValue]| -> Option<ExponentEstimate> {
        let pairs: Vec<(f64, f64)> = values.iter().map(|v| (v.t - v.s, v.lhs)).collect();
        fit_exponent(&pairs)
            .ok()
            .map(|f| ExponentEstimate::from_fit(f, probe.power))
    };
    let fitted_gamma1 = lag_fit(&increment);
    let fitted_gamma2 = lag_fit(&tail);
    for (name, est) in [("gamma1", &fitted_gamma1), ("gamma2", &fitted_gamma2)] {
        if let Some(e) = est {
            if e.fit.narrow_range {
                warnings.push(format!("{name} fitted over only {:.2} decades", e.fit.decades));
            }
        }
    }
    let mass_pairs: Vec<(f64, f64)> = mass.iter().map(|m| (m.s, m.lhs)).collect();
    let mass_slope = fit_exponent(&mass_pairs).ok();
    let n0_estimate = mass.iter().map(|m| m.lhs).fold(0.0, f64::max);
    Ok(ConditionReport {
        kernel: probe.kernel,
        beta: probe.beta,
        power: probe.power,
        increment,
        mass,
        tail,
        fitted_gamma1,
        fitted_gamma2,
        mass_slope,
        n0_estimate,
        warnings,
    })
}
