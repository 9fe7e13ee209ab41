//! Pair sampling on an ensemble lattice and Monte Carlo estimates of `E|u(X) - u(Y)|^p`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::campanato::{parabolic_distance, ParabolicCylinder, SpaceTimePoint};
use crate::convolution::{EnsembleLattice, FieldEnsemble};
use crate::error::{invalid, Error, Result};
use crate::noise::stream_rng;
use crate::regression::{fit_exponent, PowerFit};

/// Minimum realizations for a moment estimate.
pub const MIN_REALIZATIONS: usize = 30;

/// `|x|^p`, exact for small integer `p`.
pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else if p.fract() == 0.0 && p <= 16.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagDirection {
    /// `Y = X + h e₁`.
    Space,
    /// `Y = X + (h², 0)`.
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", deny_unknown_fields)]
pub enum PairRule {
    /// Both points uniform over the lattice points of a cylinder.
    WithinCylinder,
    /// Pairs at prescribed parabolic lags, anchored at `center + offset·h` along the lag direction.
    DyadicLag {
        lags: Vec<f64>,
        direction: LagDirection,
        #[serde(default)]
        offset: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub x: SpaceTimePoint,
    pub y: SpaceTimePoint,
    /// Index of the cylinder the pair was drawn from.
    pub cylinder: Option<usize>,
    /// Lag asked for, when the rule prescribes one.
    pub requested_lag: Option<f64>,
}

impl PointPair {
    pub fn distance(&self) -> f64 {
        parabolic_distance(&self.x, &self.y).expect("pair points share a dimension")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub pairs: Vec<PointPair>,
    pub cylinders: Vec<ParabolicCylinder>,
    /// Largest `|δ - requested lag|` after snapping to the lattice.
    pub max_lag_rounding: f64,
}

fn nearest(values: &[f64], v: f64) -> usize {
    let pos = values.partition_point(|a| *a < v);
    match pos {
        0 => 0,
        p if p == values.len() => p - 1,
        p => {
            if (values[p] - v).abs() < (values[p - 1] - v).abs() {
                p
            } else {
                p - 1
            }
        }
    }
}

fn snap(lattice: &EnsembleLattice, p: &SpaceTimePoint) -> SpaceTimePoint {
    SpaceTimePoint {
        t: lattice.times[nearest(&lattice.times, p.t)],
        x: p.x.iter().map(|c| lattice.axis[nearest(&lattice.axis, *c)]).collect(),
    }
}

fn lattice_points_in(lattice: &EnsembleLattice, q: &ParabolicCylinder) -> Vec<SpaceTimePoint> {
    let c = q.radius;
    let slack = 1e-12 * c.max(1.0);
    let times: Vec<f64> = lattice
        .times
        .iter()
        .copied()
        .filter(|t| (t - q.center.t).abs() <= c * c + slack)
        .collect();
    let mut out = Vec::new();
    for si in 0..lattice.space_len() {
        let x = lattice.point(si);
        let r2: f64 = x.iter().zip(&q.center.x).map(|(a, b)| (a - b).powi(2)).sum();
        if r2 <= c * c + slack {
            out.extend(times.iter().map(|&t| SpaceTimePoint { t, x: x.clone() }));
        }
    }
    out
}

/// Draws `count` pairs per cylinder (per cylinder and lag for [`PairRule::DyadicLag`]).
/// Every point is snapped onto the ensemble lattice.
pub fn sample_pairs(
    lattice: &EnsembleLattice,
    cylinders: &[ParabolicCylinder],
    count: usize,
    rule: &PairRule,
    seed: u64,
) -> Result<PairSet> {
    if count == 0 || cylinders.is_empty() {
        return Err(Error::EmptyRequest("need a positive count and at least one cylinder".into()));
    }
    for q in cylinders {
        if q.dim() != lattice.dim {
            return Err(Error::DimensionMismatch(q.dim(), lattice.dim));
        }
    }
    let mut pairs = Vec::new();
    let mut rounding = 0.0f64;
    for (ci, q) in cylinders.iter().enumerate() {
        let mut rng = stream_rng(seed, ci as u64);
        let points = lattice_points_in(lattice, q);
        if points.is_empty() {
            return Err(Error::EmptyCylinder { t: q.center.t });
        }
        match rule {
            PairRule::WithinCylinder => {
                for _ in 0..count {
                    let x = points[rng.random_range(0..points.len())].clone();
                    let y = points[rng.random_range(0..points.len())].clone();
                    pairs.push(PointPair {
                        x,
                        y,
                        cylinder: Some(ci),
                        requested_lag: None,
                    });
                }
            }
            PairRule::DyadicLag { lags, direction, offset } => {
                if lags.is_empty() || lags.iter().any(|h| !(*h > 0.0)) {
                    return Err(invalid("dyadic lags must be a non-empty list of positive values"));
                }
                for &h in lags {
                    for j in 0..count {
                        let base = if j == 0 {
                            snap(lattice, &q.center)
                        } else {
                            points[rng.random_range(0..points.len())].clone()
                        };
                        let mut x = base.clone();
                        let mut y = base;
                        match direction {
                            LagDirection::Space => {
                                x.x[0] += offset * h;
                                y.x[0] += (offset + 1.0) * h;
                            }
                            LagDirection::Time => {
                                x.t += offset * h * h;
                                y.t += (offset + 1.0) * h * h;
                            }
                        }
                        let x = snap(lattice, &x);
                        let y = snap(lattice, &y);
                        let pair = PointPair {
                            x,
                            y,
                            cylinder: Some(ci),
                            requested_lag: Some(h),
                        };
                        rounding = rounding.max((pair.distance() - h).abs());
                        pairs.push(pair);
                    }
                }
            }
        }
    }
    Ok(PairSet {
        pairs,
        cylinders: cylinders.to_vec(),
        max_lag_rounding: rounding,
    })
}

/// Pair moments estimated from an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentField {
    pub p: f64,
    pub realizations: usize,
    pub pairs: Vec<PointPair>,
    pub cylinders: Vec<ParabolicCylinder>,
    pub distances: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagFit {
    /// `γ̂ = slope / p`.
    pub gamma: f64,
    pub stderr: f64,
    pub fit: PowerFit,
}

impl MomentField {
    /// Mean estimate per requested lag, ascending in lag.
    pub fn by_lag(&self) -> Vec<(f64, f64)> {
        let mut lags: Vec<f64> = self.pairs.iter().filter_map(|p| p.requested_lag).collect();
        lags.sort_by(f64::total_cmp);
        lags.dedup();
        lags.into_iter()
            .map(|h| {
                let vals: Vec<f64> = self
                    .pairs
                    .iter()
                    .zip(&self.estimates)
                    .filter(|(p, _)| p.requested_lag == Some(h))
                    .map(|(_, e)| *e)
                    .collect();
                (h, vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect()
    }

    /// Fits `E|Δu|^p ∝ δ^{γp}` over the requested lags.
    pub fn fit_lag_exponent(&self) -> Result<LagFit> {
        let fit = fit_exponent(&self.by_lag())?;
        Ok(LagFit {
            gamma: fit.slope / self.p,
            stderr: fit.stderr / self.p,
            fit,
        })
    }

    /// CSV `t,x..,s,y..,delta,estimate,stderr`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.pairs.first().map_or(1, |p| p.x.dim());
        let xs: Vec<String> = (0..dim).map(|a| format!("x{a}")).collect();
        let ys: Vec<String> = (0..dim).map(|a| format!("y{a}")).collect();
        writeln!(out, "t,{},s,{},delta,estimate,stderr", xs.join(","), ys.join(","))?;
        for (i, p) in self.pairs.iter().enumerate() {
            let fx: Vec<String> = p.x.x.iter().map(|c| c.to_string()).collect();
            let fy: Vec<String> = p.y.x.iter().map(|c| c.to_string()).collect();
            writeln!(
                out,
                "{},{},{},{},{},{:.12e},{:.6e}",
                p.x.t,
                fx.join(","),
                p.y.t,
                fy.join(","),
                self.distances[i],
                self.estimates[i],
                self.stderr[i]
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `(1/M) Σ_m |u_m(X) - u_m(Y)|^p` with its standard error, per pair.
pub fn estimate_pair_moments(ensemble: &FieldEnsemble, pairs: &PairSet, p: f64) -> Result<MomentField> {
    if !(p >= 1.0) {
        return Err(invalid(format!("moment order must be at least 1, got {p}")));
    }
    let m = ensemble.realizations;
    if m < MIN_REALIZATIONS {
        return Err(Error::EnsembleTooSmall {
            needed: MIN_REALIZATIONS,
            got: m,
        });
    }
    if pairs.pairs.is_empty() {
        return Err(Error::EmptyRequest("no pairs to estimate".into()));
    }
    let located: Vec<((usize, usize), (usize, usize))> = pairs
        .pairs
        .iter()
        .map(|pp| Ok((ensemble.lattice.locate(pp.x.t, &pp.x.x)?, ensemble.lattice.locate(pp.y.t, &pp.y.x)?)))
        .collect::<Result<_>>()?;
    let stats: Vec<(f64, f64)> = located
        .par_iter()
        .map(|&((ti, si), (tj, sj))| {
            let samples: Vec<f64> = (0..m)
                .map(|r| abs_pow(ensemble.value(r, ti, si) - ensemble.value(r, tj, sj), p))
                .collect();
            let mean = samples.iter().sum::<f64>() / m as f64;
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (mean, (var / m as f64).sqrt())
        })
        .collect();
    Ok(MomentField {
        p,
        realizations: m,
        distances: pairs.pairs.iter().map(PointPair::distance).collect(),
        pairs: pairs.pairs.clone(),
        cylinders: pairs.cylinders.clone(),
        estimates: stats.iter().map(|s| s.0).collect(),
        stderr: stats.iter().map(|s| s.1).collect(),
    })
}
