//! Parabolic geometry, Campanato and Hölder seminorms, and the exponent relations
//! between them.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::moments::{abs_pow, MomentField};
use crate::noise::stream_rng;
use crate::regression::{fit_exponent, PowerFit};

/// Minimum sampled points per cylinder.
pub const MIN_POINTS_PER_CYLINDER: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub x: Vec<f64>,
}

impl SpaceTimePoint {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        Self { t, x }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// `δ(X, Y) = max(|x - y|, |t - s|^{1/2})`.
pub fn parabolic_distance(a: &SpaceTimePoint, b: &SpaceTimePoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let space = a.x.iter().zip(&b.x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    Ok(space.max((a.t - b.t).abs().sqrt()))
}

/// Volume of the unit ball in `ℝ^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    PI.powf(0.5 * d) / gamma(0.5 * d + 1.0)
}

/// `(t₀ - c², t₀ + c²) × B_c(x₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    pub center: SpaceTimePoint,
    pub radius: f64,
}

impl ParabolicCylinder {
    pub fn new(center: SpaceTimePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("cylinder radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// `2c² ω_d c^d`.
    pub fn measure(&self) -> f64 {
        let c = self.radius;
        2.0 * c * c * unit_ball_volume(self.dim()) * c.powi(self.dim() as i32)
    }

    pub fn contains(&self, p: &SpaceTimePoint) -> bool {
        let c = self.radius;
        (p.t - self.center.t).abs() < c * c
            && p.x.iter().zip(&self.center.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() < c * c
    }

    /// Uniform point of the cylinder.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpaceTimePoint {
        let c = self.radius;
        let t = self.center.t + c * c * (2.0 * rng.random::<f64>() - 1.0);
        loop {
            let offset: Vec<f64> = (0..self.dim()).map(|_| c * (2.0 * rng.random::<f64>() - 1.0)).collect();
            if offset.iter().map(|o| o * o).sum::<f64>() < c * c {
                let x = self.center.x.iter().zip(&offset).map(|(a, o)| a + o).collect();
                return SpaceTimePoint { t, x };
            }
        }
    }
}

/// Axis-aligned space-time box `(t₀, t₁) × Π (a_i, b_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTimeBox {
    pub t: (f64, f64),
    pub x: Vec<(f64, f64)>,
}

impl SpaceTimeBox {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn measure(&self) -> f64 {
        (self.t.1 - self.t.0) * self.x.iter().map(|(a, b)| b - a).product::<f64>()
    }

    pub fn contains(&self, p: &SpaceTimePoint) -> bool {
        p.t >= self.t.0 && p.t <= self.t.1 && p.x.iter().zip(&self.x).all(|(v, (a, b))| v >= a && v <= b)
    }

    fn corners(&self) -> Vec<SpaceTimePoint> {
        let d = self.dim();
        let mut out = Vec::new();
        for mask in 0..(1usize << (d + 1)) {
            let t = if mask & 1 == 0 { self.t.0 } else { self.t.1 };
            let x = (0..d)
                .map(|i| if mask >> (i + 1) & 1 == 0 { self.x[i].0 } else { self.x[i].1 })
                .collect();
            out.push(SpaceTimePoint { t, x });
        }
        out
    }

    /// `|box ∩ Q|` in closed form.
    pub fn intersection_measure(&self, q: &ParabolicCylinder) -> f64 {
        let c = q.radius;
        let time = (self.t.1.min(q.center.t + c * c) - self.t.0.max(q.center.t - c * c)).max(0.0);
        if time == 0.0 {
            return 0.0;
        }
        let space = match self.dim() {
            1 => {
                let (a, b) = self.x[0];
                let x0 = q.center.x[0];
                (b.min(x0 + c) - a.max(x0 - c)).max(0.0)
            }
            2 => {
                let (x0, x1) = (self.x[0].0 - q.center.x[0], self.x[0].1 - q.center.x[0]);
                let (y0, y1) = (self.x[1].0 - q.center.x[1], self.x[1].1 - q.center.x[1]);
                let s = |a: f64, b: f64| signed_quadrant_area(a, b, c);
                (s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0)).max(0.0)
            }
            d => unreachable!("dimension {d} rejected at validation"),
        };
        time * space
    }
}

/// `∫_0^a ∫_0^b 1{x² + y² < R²} dy dx` with signs.
fn signed_quadrant_area(a: f64, b: f64, r: f64) -> f64 {
    let sign = a.signum() * b.signum();
    let a = a.abs().min(r);
    let b = b.abs().min(r);
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    // ∫_0^u sqrt(R² - x²) dx
    let chord = |u: f64| 0.5 * (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).clamp(-1.0, 1.0).asin());
    let cross = (r * r - b * b).max(0.0).sqrt();
    let flat = a.min(cross);
    sign * (b * flat + chord(a) - chord(flat))
}

/// Finite union of disjoint space-time boxes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub boxes: Vec<SpaceTimeBox>,
    #[serde(skip)]
    diameter: Option<f64>,
}

impl PartialEq for DomainSpec {
    fn eq(&self, other: &Self) -> bool {
        self.boxes == other.boxes
    }
}

impl DomainSpec {
    pub fn new(boxes: Vec<SpaceTimeBox>) -> Result<Self> {
        let mut d = Self { boxes, diameter: None };
        d.validate()?;
        d.diameter = Some(d.compute_diameter());
        Ok(d)
    }

    pub fn single(t: (f64, f64), x: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(vec![SpaceTimeBox { t, x }])
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.boxes.first().ok_or_else(|| invalid("domain needs at least one box"))?;
        let dim = first.dim();
        if !(1..=2).contains(&dim) {
            return Err(invalid(format!("domain dimension must be 1 or 2, got {dim}")));
        }
        for b in &self.boxes {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch(b.dim(), dim));
            }
            let ok = b.t.0 < b.t.1 && b.x.iter().all(|(lo, hi)| lo < hi) && b.measure().is_finite();
            if !ok {
                return Err(invalid("domain boxes must be bounded with non-empty interior"));
            }
        }
        for (i, a) in self.boxes.iter().enumerate() {
            for b in &self.boxes[i + 1..] {
                let overlap = (a.t.1.min(b.t.1) - a.t.0.max(b.t.0)) > 0.0
                    && a.x.iter().zip(&b.x).all(|(p, q)| p.1.min(q.1) - p.0.max(q.0) > 0.0);
                if overlap {
                    return Err(invalid("domain boxes must be disjoint"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    pub fn measure(&self) -> f64 {
        self.boxes.iter().map(SpaceTimeBox::measure).sum()
    }

    pub fn contains(&self, p: &SpaceTimePoint) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    /// Diameter in the parabolic metric.
    pub fn diameter(&self) -> f64 {
        self.diameter.unwrap_or_else(|| self.compute_diameter())
    }

    fn compute_diameter(&self) -> f64 {
        let corners: Vec<SpaceTimePoint> = self.boxes.iter().flat_map(|b| b.corners()).collect();
        let mut diam = 0.0f64;
        for (i, a) in corners.iter().enumerate() {
            for b in &corners[i..] {
                diam = diam.max(parabolic_distance(a, b).unwrap_or(0.0));
            }
        }
        diam
    }

    pub fn corners(&self) -> Vec<SpaceTimePoint> {
        self.boxes.iter().flat_map(|b| b.corners()).collect()
    }

    /// `|D ∩ Q|`.
    pub fn intersection_measure(&self, q: &ParabolicCylinder) -> f64 {
        self.boxes.iter().map(|b| b.intersection_measure(q)).sum()
    }

    /// Uniform point of the domain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpaceTimePoint {
        let total = self.measure();
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = &self.boxes[self.boxes.len() - 1];
        for b in &self.boxes {
            if pick < b.measure() {
                chosen = b;
                break;
            }
            pick -= b.measure();
        }
        let t = chosen.t.0 + (chosen.t.1 - chosen.t.0) * rng.random::<f64>();
        let x = chosen.x.iter().map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect();
        SpaceTimePoint { t, x }
    }

    /// Uniform point of `D ∩ Q` by rejection from `Q`.
    pub fn sample_in<R: Rng + ?Sized>(&self, q: &ParabolicCylinder, rng: &mut R, max_tries: usize) -> Option<SpaceTimePoint> {
        (0..max_tries).map(|_| q.sample(rng)).find(|p| self.contains(p))
    }
}

/// Lower estimate of the A-type constant: `min |D ∩ Q_ρ(X)| / |Q_ρ(X)|`.
pub fn a_type_constant(domain: &DomainSpec, centers: &[SpaceTimePoint], radii: &[f64]) -> Result<f64> {
    domain.validate()?;
    if centers.is_empty() || radii.is_empty() {
        return Err(Error::EmptyRequest("need at least one center and one radius".into()));
    }
    let diameter = domain.diameter();
    let mut a = 1.0f64;
    for c in centers {
        if c.dim() != domain.dim() {
            return Err(Error::DimensionMismatch(c.dim(), domain.dim()));
        }
        if !domain.contains(c) {
            return Err(Error::OutsideDomain { t: c.t, x: c.x.clone() });
        }
        for &r in radii {
            if r > diameter {
                return Err(Error::RadiusExceedsDiameter { radius: r, diameter });
            }
            let q = ParabolicCylinder::new(c.clone(), r)?;
            a = a.min(domain.intersection_measure(&q) / q.measure());
        }
    }
    Ok(a.min(1.0))
}

/// Deterministic field `u(t, x)`.
pub trait SpaceTimeField: Sync {
    fn eval(&self, t: f64, x: &[f64]) -> f64;
}

impl<F: Fn(f64, &[f64]) -> f64 + Sync> SpaceTimeField for F {
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self(t, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingBudget {
    /// Random centers in addition to the domain corners.
    pub random_centers: usize,
    pub points_per_cylinder: usize,
    pub radii: Vec<f64>,
    pub seed: u64,
}

impl Default for SamplingBudget {
    fn default() -> Self {
        Self {
            random_centers: 16,
            points_per_cylinder: 512,
            radii: (1..=6).map(|k| 2f64.powi(-k)).collect(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeminormKind {
    Campanato,
    Holder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleStatistic {
    pub radius: f64,
    pub cylinder_measure: f64,
    /// Sup over centers of the normalized pairwise form (Campanato) or of the
    /// Hölder ratio.
    pub value: f64,
    /// Sup over centers of the normalized mean-deviation form (Campanato only).
    pub mean_deviation: Option<f64>,
    /// Sup over centers of the unnormalized pairwise average, or of `|u(X) - u(Y)|` (Hölder).
    pub raw: f64,
    pub stderr: f64,
    pub centers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedExponent {
    pub value: f64,
    pub stderr: f64,
    pub fit: PowerFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub kind: SeminormKind,
    pub p: f64,
    /// `θ` for Campanato, `α` for Hölder.
    pub parameter: f64,
    pub scales: Vec<ScaleStatistic>,
    /// Sup of `value` over all scales.
    pub seminorm: f64,
    /// `θ̂` (Campanato) or `γ̂` (Hölder).
    pub fitted: Option<FittedExponent>,
    /// Pairwise form ≥ mean-deviation form on every sampled cylinder.
    pub pairwise_dominates: bool,
    pub notes: Vec<String>,
}

impl SeminormReport {
    /// CSV `scale,value,stderr`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "scale,value,stderr")?;
        for s in &self.scales {
            writeln!(out, "{},{:.12e},{:.6e}", s.radius, s.value, s.stderr)?;
        }
        Ok(())
    }
}

fn budget_check(budget: &SamplingBudget) -> Result<()> {
    if budget.points_per_cylinder < MIN_POINTS_PER_CYLINDER {
        return Err(Error::SamplingBudgetTooSmall {
            needed: MIN_POINTS_PER_CYLINDER,
            got: budget.points_per_cylinder,
        });
    }
    if budget.radii.is_empty() {
        return Err(Error::EmptyRequest("need at least one radius".into()));
    }
    Ok(())
}

/// Cylinder centers used by the seminorm estimators: the domain corners, then
/// `budget.random_centers` seeded uniform points.
pub fn seminorm_centers(domain: &DomainSpec, budget: &SamplingBudget) -> Vec<SpaceTimePoint> {
    let mut centers = domain.corners();
    let mut rng = stream_rng(budget.seed, u64::MAX);
    centers.extend((0..budget.random_centers).map(|_| domain.sample(&mut rng)));
    centers
}

struct CylinderStat {
    pairwise: f64,
    mean_deviation: f64,
    raw: f64,
    stderr: f64,
}

fn cylinder_statistic(values: &[f64], p: f64, measure: f64, theta: f64) -> CylinderStat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let row: Vec<f64> = values
        .iter()
        .map(|a| values.iter().map(|b| abs_pow(a - b, p)).sum::<f64>() / n)
        .collect();
    let raw = row.iter().sum::<f64>() / n;
    let dev = values.iter().map(|a| abs_pow(a - mean, p)).sum::<f64>() / n;
    let var = row.iter().map(|r| (r - raw).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let norm = measure.powf(1.0 - theta);
    CylinderStat {
        pairwise: norm * raw,
        mean_deviation: norm * dev,
        raw,
        // rows are dependent; this is the usual V-statistic leading-order error
        stderr: norm * 2.0 * (var / n).sqrt(),
    }
}

/// Campanato seminorm of a deterministic field over `D ∩ Q_ρ(X)`, by uniform sampling.
pub fn campanato_seminorm(
    field: &dyn SpaceTimeField,
    domain: &DomainSpec,
    p: f64,
    theta: f64,
    budget: &SamplingBudget,
) -> Result<SeminormReport> {
    if !(p >= 1.0) || !(theta >= 0.0) {
        return Err(invalid(format!("need p >= 1 and theta >= 0, got p = {p}, theta = {theta}")));
    }
    domain.validate()?;
    budget_check(budget)?;
    let centers = seminorm_centers(domain, budget);
    let diameter = domain.diameter();
    let mut notes = Vec::new();
    let mut scales = Vec::new();
    let mut dominates = true;
    for (ri, &rho) in budget.radii.iter().enumerate() {
        if rho > diameter {
            notes.push(format!("radius {rho} exceeds the domain diameter {diameter} and was skipped"));
            continue;
        }
        let stats: Vec<Result<CylinderStat>> = centers
            .par_iter()
            .enumerate()
            .map(|(ci, c)| {
                let q = ParabolicCylinder::new(c.clone(), rho)?;
                let measure = domain.intersection_measure(&q);
                let mut rng = stream_rng(budget.seed, ((ri as u64) << 32) | ci as u64);
                let mut values = Vec::with_capacity(budget.points_per_cylinder);
                for _ in 0..budget.points_per_cylinder {
                    let y = domain
                        .sample_in(&q, &mut rng, 10_000)
                        .ok_or(Error::EmptyCylinder { t: c.t })?;
                    values.push(field.eval(y.t, &y.x));
                }
                Ok(cylinder_statistic(&values, p, measure, theta))
            })
            .collect();
        let mut value = 0.0f64;
        let mut dev = 0.0f64;
        let mut raw = 0.0f64;
        let mut stderr = 0.0f64;
        for s in stats {
            let s = s?;
            if s.pairwise < s.mean_deviation {
                dominates = false;
            }
            if s.pairwise >= value {
                value = s.pairwise;
                stderr = s.stderr;
            }
            dev = dev.max(s.mean_deviation);
            raw = raw.max(s.raw);
        }
        scales.push(ScaleStatistic {
            radius: rho,
            cylinder_measure: ParabolicCylinder::new(centers[0].clone(), rho)?.measure(),
            value,
            mean_deviation: Some(dev),
            raw,
            stderr,
            centers: centers.len(),
        });
    }
    let fitted = fit_theta(&scales);
    Ok(SeminormReport {
        kind: SeminormKind::Campanato,
        p,
        parameter: theta,
        seminorm: scales.iter().map(|s| s.value).fold(0.0, f64::max),
        scales,
        fitted,
        pairwise_dominates: dominates,
        notes,
    })
}

/// `θ̂ = 1 + slope` of the per-scale raw pairwise average against `|Q_ρ|`.
fn fit_theta(scales: &[ScaleStatistic]) -> Option<FittedExponent> {
    let pairs: Vec<(f64, f64)> = scales.iter().map(|s| (s.cylinder_measure, s.raw)).collect();
    fit_exponent(&pairs).ok().map(|fit| FittedExponent {
        value: 1.0 + fit.slope,
        stderr: fit.stderr,
        fit,
    })
}

/// Stochastic Campanato form over the cylinders of a within-cylinder [`MomentField`]:
/// `|Q|^{1-θ}` times the mean pair moment in each cylinder.
pub fn campanato_from_moments(moments: &MomentField, theta: f64) -> Result<SeminormReport> {
    if !(theta >= 0.0) {
        return Err(invalid("theta must be non-negative"));
    }
    let cylinders = &moments.cylinders;
    if cylinders.is_empty() {
        return Err(Error::EmptyRequest("moment field carries no cylinders".into()));
    }
    let mut radii: Vec<f64> = cylinders.iter().map(|c| c.radius).collect();
    radii.sort_by(|a, b| b.total_cmp(a));
    radii.dedup();
    let mut scales = Vec::new();
    for rho in radii {
        let mut value = 0.0f64;
        let mut raw = 0.0f64;
        let mut stderr = 0.0;
        let mut count = 0;
        let mut measure = 0.0;
        for (ci, cyl) in cylinders.iter().enumerate().filter(|(_, c)| c.radius == rho) {
            let idx: Vec<usize> = (0..moments.pairs.len())
                .filter(|&i| moments.pairs[i].cylinder == Some(ci))
                .collect();
            if idx.is_empty() {
                continue;
            }
            let n = idx.len() as f64;
            let mean = idx.iter().map(|&i| moments.estimates[i]).sum::<f64>() / n;
            let se = (idx.iter().map(|&i| moments.stderr[i].powi(2)).sum::<f64>()).sqrt() / n;
            measure = cyl.measure();
            let norm = measure.powf(1.0 - theta);
            if norm * mean >= value {
                value = norm * mean;
                stderr = norm * se;
            }
            raw = raw.max(mean);
            count += 1;
        }
        if count > 0 {
            scales.push(ScaleStatistic {
                radius: rho,
                cylinder_measure: measure,
                value,
                mean_deviation: None,
                raw,
                stderr,
                centers: count,
            });
        }
    }
    let fitted = fit_theta(&scales);
    Ok(SeminormReport {
        kind: SeminormKind::Campanato,
        p: moments.p,
        parameter: theta,
        seminorm: scales.iter().map(|s| s.value).fold(0.0, f64::max),
        scales,
        fitted,
        pairwise_dominates: true,
        notes: vec!["pair moments substitute E|u(Y)-u(Z)|^p; no mean-deviation form".into()],
    })
}

/// Sampled Hölder seminorm `max |u(X) - u(Y)| / δ(X,Y)^α`, per dyadic scale.
pub fn holder_seminorm(
    field: &dyn SpaceTimeField,
    domain: &DomainSpec,
    alpha: f64,
    budget: &SamplingBudget,
) -> Result<SeminormReport> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("Hölder order must be positive, got {alpha}")));
    }
    domain.validate()?;
    budget_check(budget)?;
    let mut notes = Vec::new();
    if alpha > 1.0 {
        notes.push(format!("alpha = {alpha} > 1: only constants are Hölder of this order on connected sets"));
    }
    let centers = seminorm_centers(domain, budget);
    let mut scales = Vec::new();
    for (ri, &rho) in budget.radii.iter().enumerate() {
        let per_center: Vec<Result<(f64, f64)>> = centers
            .par_iter()
            .enumerate()
            .map(|(ci, c)| {
                let q = ParabolicCylinder::new(c.clone(), rho)?;
                let mut rng = stream_rng(budget.seed ^ 0x9e37_79b9_7f4a_7c15, ((ri as u64) << 32) | ci as u64);
                let mut best_ratio = 0.0f64;
                let mut best_diff = 0.0f64;
                for _ in 0..budget.points_per_cylinder / 2 {
                    let a = domain.sample_in(&q, &mut rng, 10_000).ok_or(Error::EmptyCylinder { t: c.t })?;
                    let b = domain.sample_in(&q, &mut rng, 10_000).ok_or(Error::EmptyCylinder { t: c.t })?;
                    let d = parabolic_distance(&a, &b)?;
                    if d == 0.0 {
                        continue;
                    }
                    let diff = (field.eval(a.t, &a.x) - field.eval(b.t, &b.x)).abs();
                    best_ratio = best_ratio.max(diff / d.powf(alpha));
                    best_diff = best_diff.max(diff);
                }
                Ok((best_ratio, best_diff))
            })
            .collect();
        let mut value = 0.0f64;
        let mut raw = 0.0f64;
        for r in per_center {
            let (ratio, diff) = r?;
            value = value.max(ratio);
            raw = raw.max(diff);
        }
        scales.push(ScaleStatistic {
            radius: rho,
            cylinder_measure: ParabolicCylinder::new(centers[0].clone(), rho)?.measure(),
            value,
            mean_deviation: None,
            raw,
            stderr: 0.0,
            centers: centers.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = scales.iter().map(|s| (s.radius, s.raw)).collect();
    let fitted = fit_exponent(&pairs).ok().map(|fit| FittedExponent {
        value: fit.slope,
        stderr: fit.stderr,
        fit,
    });
    Ok(SeminormReport {
        kind: SeminormKind::Holder,
        p: 1.0,
        parameter: alpha,
        seminorm: scales.iter().map(|s| s.value).fold(0.0, f64::max),
        scales,
        fitted,
        pairwise_dominates: true,
        notes,
    })
}

/// `α = (d + 2)(θ - 1)/p` for `1 < θ ≤ 1 + p/(d + 2)`.
pub fn embedding_exponent(p: f64, theta: f64, dim: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid(format!("p must be >= 1, got {p}")));
    }
    let d = dim as f64;
    let upper = 1.0 + p / (d + 2.0);
    // a relative slack absorbs rounding in θ = 1 + γp/(d+2) at γ = 1
    if !(theta > 1.0 && theta <= upper * (1.0 + 4.0 * f64::EPSILON)) {
        return Err(Error::ThetaOutOfEmbeddingRange { theta, p, dim, upper });
    }
    Ok(((d + 2.0) * (theta - 1.0) / p).min(1.0))
}

/// Exponent condition for `𝓛^{q,σ} ⊂ 𝓛^{p,θ}`: `1 ≤ p ≤ q` and `(θ - p)/p ≤ (σ - p)/q`.
pub fn inclusion_holds(p: f64, theta: f64, q: f64, sigma: f64) -> bool {
    p >= 1.0 && p <= q && (theta - p) / p <= (sigma - p) / q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, x: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(t, vec![x])
    }

    #[test]
    fn distance_examples() {
        assert_eq!(parabolic_distance(&pt(0.0, 0.0), &pt(0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(parabolic_distance(&pt(0.0, 0.0), &pt(1.0, 2.0)).unwrap(), 2.0);
        assert!((parabolic_distance(&pt(0.0, 0.0), &pt(0.04, 0.1)).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            parabolic_distance(&pt(0.0, 0.0), &SpaceTimePoint::new(0.0, vec![0.0, 1.0])),
            Err(Error::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn cylinder_measure_formula() {
        let q = ParabolicCylinder::new(SpaceTimePoint::new(0.0, vec![0.0, 0.0]), 0.5).unwrap();
        assert!((q.measure() - 2.0 * 0.25 * PI * 0.25).abs() < 1e-15);
        let q = ParabolicCylinder::new(pt(0.0, 0.0), 0.5).unwrap();
        assert!((q.measure() - 2.0 * 0.25 * 1.0).abs() < 1e-15);
    }

    #[test]
    fn corner_ratio_is_quarter() {
        let d = DomainSpec::single((0.0, 1.0), vec![(0.0, 1.0)]).unwrap();
        let a = a_type_constant(&d, &[pt(0.0, 0.0)], &[0.1]).unwrap();
        assert!((a - 0.25).abs() < 1e-12);
    }

    #[test]
    fn disc_rectangle_area() {
        // full disc inside, quarter disc, half disc
        let b = SpaceTimeBox {
            t: (0.0, 1.0),
            x: vec![(-2.0, 2.0), (-2.0, 2.0)],
        };
        let q = ParabolicCylinder::new(SpaceTimePoint::new(0.5, vec![0.0, 0.0]), 0.5).unwrap();
        assert!((b.intersection_measure(&q) - q.measure()).abs() < 1e-14);
        let b = SpaceTimeBox {
            t: (0.0, 1.0),
            x: vec![(0.0, 2.0), (-2.0, 2.0)],
        };
        assert!((b.intersection_measure(&q) - 0.5 * q.measure()).abs() < 1e-14);
        let b = SpaceTimeBox {
            t: (0.0, 1.0),
            x: vec![(0.0, 2.0), (0.0, 2.0)],
        };
        assert!((b.intersection_measure(&q) - 0.25 * q.measure()).abs() < 1e-14);
    }

    #[test]
    fn embedding_examples() {
        assert!((embedding_exponent(2.0, 1.0 + 2.0 / 3.0, 1).unwrap() - 1.0).abs() < 1e-15);
        let theta = 1.0 + 0.5 * 2.0 / 3.0;
        assert!((embedding_exponent(2.0, theta, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            embedding_exponent(4.0, 1.0, 2),
            Err(Error::ThetaOutOfEmbeddingRange { .. })
        ));
    }

    #[test]
    fn inclusion_examples() {
        assert!(inclusion_holds(2.0, 2.0, 4.0, 4.0));
        assert!(!inclusion_holds(2.0, 3.0, 4.0, 3.0));
        assert!(!inclusion_holds(0.5, 0.5, 1.0, 1.0));
        assert!(inclusion_holds(3.0, 1.7, 3.0, 1.7));
    }

    #[test]
    fn small_budget_rejected() {
        let d = DomainSpec::single((0.0, 1.0), vec![(0.0, 1.0)]).unwrap();
        let budget = SamplingBudget {
            points_per_cylinder: 10,
            ..Default::default()
        };
        let f = |_t: f64, _x: &[f64]| 1.0;
        assert!(matches!(
            campanato_seminorm(&f, &d, 2.0, 1.0, &budget),
            Err(Error::SamplingBudgetTooSmall { .. })
        ));
    }
}
