//! Discretized stochastic convolutions `Σ_k [p(t_i - r_k) ⊛ g(r_k)] ΔW_k` and their
//! compensated Poisson analogue, stored as ensembles of realizations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelSpec, SpectralGrid, SpectralPlan};
use crate::noise::{sample_path, JumpMeasure, NoiseKind, NoisePath, NoiseSpec};
use crate::quadrature::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `A (|x|^β + t^{β/2})`.
    Parabolic,
    /// `A |x|^β`.
    Spatial,
    /// `A`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MarkFactor {
    Identity,
    Abs,
    #[default]
    Unit,
}

impl MarkFactor {
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            MarkFactor::Identity => z,
            MarkFactor::Abs => z.abs(),
            MarkFactor::Unit => 1.0,
        }
    }
}

/// Deterministic coefficient `g(t, x) g₁(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSpec {
    pub family: Family,
    pub beta: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub mark_factor: MarkFactor,
}

fn one() -> f64 {
    1.0
}

impl TestFunctionSpec {
    pub fn new(family: Family, beta: f64, amplitude: f64) -> Result<Self> {
        let spec = Self {
            family,
            beta,
            amplitude,
            mark_factor: MarkFactor::Unit,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_marks(mut self, mark_factor: MarkFactor) -> Self {
        self.mark_factor = mark_factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) && self.family != Family::Constant {
            return Err(invalid(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude must be finite"));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        match self.family {
            Family::Parabolic => self.amplitude * (r.powf(self.beta) + t.abs().powf(0.5 * self.beta)),
            Family::Spatial => self.amplitude * r.powf(self.beta),
            Family::Constant => self.amplitude,
        }
    }

    pub fn g1(&self, z: f64) -> f64 {
        self.mark_factor.apply(z)
    }

    /// `C_g` in `|g(t,x) - g(s,y)| ≤ C_g δ((t,x),(s,y))^β`.
    pub fn holder_constant(&self) -> f64 {
        match self.family {
            Family::Parabolic => 2.0 * self.amplitude.abs(),
            Family::Spatial => self.amplitude.abs(),
            Family::Constant => 0.0,
        }
    }

    pub fn is_time_independent(&self) -> bool {
        self.family != Family::Parabolic
    }
}

/// Which lattice times and spatial points an ensemble keeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputWindow {
    /// Stored time-step indices; empty keeps every step `0..=n_t`.
    pub steps: Vec<usize>,
    /// Half-width of the stored central region; `None` keeps `|x| ≤ L/2`.
    pub half_width: Option<f64>,
    /// Keep every `space_stride`-th lattice point counted from `x = 0`.
    pub space_stride: usize,
}

/// Space-time points kept by an ensemble: times × (tensor sub-lattice).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleLattice {
    pub dim: usize,
    pub dt: f64,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    /// Stored coordinates along each axis.
    pub axis: Vec<f64>,
    /// Grid indices of `axis` on the full lattice.
    pub axis_indices: Vec<usize>,
}

impl EnsembleLattice {
    pub fn space_len(&self) -> usize {
        self.axis.len().pow(self.dim as u32)
    }

    pub fn point(&self, si: usize) -> Vec<f64> {
        let n = self.axis.len();
        let mut rem = si;
        let mut x = vec![0.0; self.dim];
        for a in (0..self.dim).rev() {
            x[a] = self.axis[rem % n];
            rem /= n;
        }
        x
    }

    fn full_index(&self, si: usize, n_full: usize) -> usize {
        let n = self.axis.len();
        let mut rem = si;
        let mut idx = 0;
        let mut mult = 1;
        for _ in 0..self.dim {
            idx += self.axis_indices[rem % n] * mult;
            rem /= n;
            mult *= n_full;
        }
        idx
    }

    fn locate_axis(&self, x: f64) -> Option<usize> {
        let spacing = if self.axis.len() > 1 {
            self.axis[1] - self.axis[0]
        } else {
            1.0
        };
        let tol = 1e-9 * spacing.abs().max(1e-300);
        let pos = self.axis.partition_point(|a| *a < x - tol);
        (pos < self.axis.len() && (self.axis[pos] - x).abs() <= tol).then_some(pos)
    }

    /// `(time index, space index)` of a stored point.
    pub fn locate(&self, t: f64, x: &[f64]) -> Result<(usize, usize)> {
        let off = || Error::PairOffGrid { t, x: x.to_vec() };
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(x.len(), self.dim));
        }
        let tol = 1e-9 * self.dt;
        let ti = self.times.iter().position(|s| (s - t).abs() <= tol).ok_or_else(off)?;
        let mut si = 0;
        for c in x {
            si = si * self.axis.len() + self.locate_axis(*c).ok_or_else(off)?;
        }
        Ok((ti, si))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kernel: KernelSpec,
    pub grid: SpectralGrid,
    pub noise: NoiseSpec,
    pub test_function: TestFunctionSpec,
    pub seed: u64,
}

/// `M` realizations on an [`EnsembleLattice`], realization-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEnsemble {
    pub lattice: EnsembleLattice,
    pub realizations: usize,
    pub data: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    shape: [usize; 3],
    lattice: EnsembleLattice,
    provenance: Provenance,
    data_file: String,
}

impl FieldEnsemble {
    fn slab(&self) -> usize {
        self.lattice.times.len() * self.lattice.space_len()
    }

    pub fn value(&self, m: usize, ti: usize, si: usize) -> f64 {
        self.data[m * self.slab() + ti * self.lattice.space_len() + si]
    }

    pub fn realization(&self, m: usize) -> &[f64] {
        let slab = self.slab();
        &self.data[m * slab..(m + 1) * slab]
    }

    /// Writes `<stem>.bin` (little-endian f64) and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let bin_name = format!("{stem}.bin");
        let mut out = BufWriter::new(File::create(dir.join(&bin_name))?);
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        let sidecar = Sidecar {
            shape: [self.realizations, self.lattice.times.len(), self.lattice.space_len()],
            lattice: self.lattice.clone(),
            provenance: self.provenance.clone(),
            data_file: bin_name,
        };
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(json_path)
    }

    /// Loads an ensemble from its JSON sidecar.
    pub fn load(sidecar_path: &Path) -> Result<Self> {
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;
        let dir = sidecar_path.parent().unwrap_or(Path::new("."));
        let mut bytes = Vec::new();
        BufReader::new(File::open(dir.join(&sidecar.data_file))?).read_to_end(&mut bytes)?;
        let expected = sidecar.shape.iter().product::<usize>();
        if bytes.len() != expected * 8 {
            return Err(invalid(format!(
                "ensemble data holds {} bytes, shape needs {}",
                bytes.len(),
                expected * 8
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self {
            lattice: sidecar.lattice,
            realizations: sidecar.shape[0],
            data,
            provenance: sidecar.provenance,
        })
    }

    /// CSV `t,x0[,x1],u` of one realization.
    pub fn write_realization_csv<W: Write>(&self, m: usize, mut out: W) -> Result<()> {
        let dims: Vec<String> = (0..self.lattice.dim).map(|a| format!("x{a}")).collect();
        writeln!(out, "t,{},u", dims.join(","))?;
        for (ti, t) in self.lattice.times.iter().enumerate() {
            for si in 0..self.lattice.space_len() {
                let x: Vec<String> = self.lattice.point(si).iter().map(|c| format!("{c}")).collect();
                writeln!(out, "{t},{},{:.16e}", x.join(","), self.value(m, ti, si))?;
            }
        }
        Ok(())
    }
}

/// Deterministic weights `Φ_{i,k}(x) = [p(lag_{ik}) ⊛ g(r_k)](x)` at the stored points,
/// with `lag = (i-k)Δt` and `Δt/2` on the last step.
#[derive(Debug, Clone)]
pub struct ConvolutionWeights {
    pub lattice: EnsembleLattice,
    /// Number of noise steps.
    pub steps: usize,
    /// `phi[(ti * steps + k) * space + si]`, zero for `k ≥ i`.
    phi: Vec<f64>,
}

impl ConvolutionWeights {
    pub fn new(
        kernel: &KernelSpec,
        grid: &SpectralGrid,
        g: &TestFunctionSpec,
        noise: &NoiseSpec,
        window: &OutputWindow,
    ) -> Result<Self> {
        kernel.validate()?;
        grid.validate()?;
        g.validate()?;
        noise.validate()?;
        let dt = noise.dt();
        let n_t = noise.steps;
        grid.check_guard(kernel, 0.5 * dt)?;
        let lattice = build_lattice(grid, kernel.dim, dt, n_t, window)?;
        let n_space = lattice.space_len();
        let n_full = grid.points_per_axis;
        let plan = SpectralPlan::new(*grid, kernel.dim);
        let full_indices: Vec<usize> = (0..n_space).map(|si| lattice.full_index(si, n_full)).collect();
        let max_step = lattice.steps.iter().copied().max().unwrap_or(0);
        let mut phi = vec![0.0; lattice.steps.len() * n_t * n_space];
        let mut g_hat = None;
        for k in 0..max_step.min(n_t) {
            let r = k as f64 * dt;
            if g_hat.is_none() || !g.is_time_independent() {
                let values: Vec<f64> = crate::kernels::LatticeField::from_fn(*grid, kernel.dim, |x| g.eval(r, x)).values;
                g_hat = Some(plan.forward_real(&values));
            }
            let gh = g_hat.as_ref().expect("set above");
            let mut cache: Vec<(usize, Vec<f64>)> = Vec::new();
            for (ti, &i) in lattice.steps.iter().enumerate() {
                if i <= k {
                    continue;
                }
                let gap = i - k;
                let sampled = match cache.iter().find(|(l, _)| *l == gap) {
                    Some((_, v)) => v.clone(),
                    None => {
                        let lag = if gap == 1 { 0.5 * dt } else { gap as f64 * dt };
                        let conv = plan.apply_multiplier(&plan.multiplier(kernel, lag), gh);
                        let v: Vec<f64> = full_indices.iter().map(|&j| conv[j]).collect();
                        cache.push((gap, v.clone()));
                        v
                    }
                };
                let base = (ti * n_t + k) * n_space;
                phi[base..base + n_space].copy_from_slice(&sampled);
            }
        }
        Ok(Self {
            lattice,
            steps: n_t,
            phi,
        })
    }

    pub fn phi(&self, ti: usize, k: usize) -> &[f64] {
        let n = self.lattice.space_len();
        let base = (ti * self.steps + k) * n;
        &self.phi[base..base + n]
    }

    /// `Σ_k (Φ_{X,k} - Φ_{Y,k})² Δt`: the exact second moment of the discrete
    /// Brownian field increment.
    pub fn increment_variance(&self, x: (usize, usize), y: (usize, usize)) -> f64 {
        (0..self.steps)
            .map(|k| {
                let d = self.phi(x.0, k)[x.1] - self.phi(y.0, k)[y.1];
                d * d
            })
            .sum::<f64>()
            * self.lattice.dt
    }

    /// `Σ_k Φ_{i,k} c_k` for every stored point and time.
    fn combine(&self, coeffs: &[f64], out: &mut [f64]) {
        let n_space = self.lattice.space_len();
        for ti in 0..self.lattice.steps.len() {
            let row = &mut out[ti * n_space..(ti + 1) * n_space];
            row.iter_mut().for_each(|v| *v = 0.0);
            let i = self.lattice.steps[ti];
            for (k, c) in coeffs.iter().enumerate().take(i.min(self.steps)) {
                if *c == 0.0 {
                    continue;
                }
                for (v, p) in row.iter_mut().zip(self.phi(ti, k)) {
                    *v += p * c;
                }
            }
        }
    }
}

fn build_lattice(grid: &SpectralGrid, dim: usize, dt: f64, n_t: usize, window: &OutputWindow) -> Result<EnsembleLattice> {
    let steps: Vec<usize> = if window.steps.is_empty() {
        (0..=n_t).collect()
    } else {
        window.steps.clone()
    };
    if steps.iter().any(|&i| i > n_t) {
        return Err(Error::GridMismatch(format!(
            "output steps must not exceed the {n_t} noise steps"
        )));
    }
    if steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("output steps must be strictly increasing"));
    }
    let half = window.half_width.unwrap_or(0.5 * grid.length);
    if !(half >= 0.0 && half < grid.length) {
        return Err(Error::GridMismatch(format!(
            "output half-width {half} must lie inside the box half-width {}",
            grid.length
        )));
    }
    let stride = window.space_stride.max(1);
    let n = grid.points_per_axis;
    let h = grid.spacing();
    let center = n / 2;
    let reach = ((half / h + 1e-9).floor() as usize) / stride;
    let axis_indices: Vec<usize> = (0..=2 * reach)
        .map(|j| center + j * stride - reach * stride)
        .collect();
    let axis = axis_indices.iter().map(|&j| grid.coordinate(j)).collect();
    Ok(EnsembleLattice {
        dim,
        dt,
        times: steps.iter().map(|&i| i as f64 * dt).collect(),
        steps,
        axis,
        axis_indices,
    })
}

fn check_kind(noise: &NoiseSpec, kind: NoiseKind) -> Result<()> {
    if noise.kind != kind {
        return Err(Error::GridMismatch(format!(
            "convolution expects {kind:?} noise, got {:?}",
            noise.kind
        )));
    }
    Ok(())
}

fn run_ensemble<F>(weights: &ConvolutionWeights, m: usize, coefficients: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let slab = weights.lattice.steps.len() * weights.lattice.space_len();
    let mut data = vec![0.0; m * slab];
    data.par_chunks_mut(slab)
        .enumerate()
        .try_for_each(|(r, out)| -> Result<()> {
            let coeffs = coefficients(r)?;
            weights.combine(&coeffs, out);
            Ok(())
        })?;
    Ok(data)
}

/// Brownian convolution ensemble; realization `m` uses noise stream `m`.
pub fn convolve_brownian(
    kernel: &KernelSpec,
    grid: &SpectralGrid,
    g: &TestFunctionSpec,
    noise: &NoiseSpec,
    m: usize,
    window: &OutputWindow,
) -> Result<FieldEnsemble> {
    check_kind(noise, NoiseKind::Brownian)?;
    let weights = ConvolutionWeights::new(kernel, grid, g, noise, window)?;
    brownian_from_weights(&weights, kernel, grid, g, noise, m)
}

/// Brownian ensemble from precomputed weights.
pub fn brownian_from_weights(
    weights: &ConvolutionWeights,
    kernel: &KernelSpec,
    grid: &SpectralGrid,
    g: &TestFunctionSpec,
    noise: &NoiseSpec,
    m: usize,
) -> Result<FieldEnsemble> {
    check_kind(noise, NoiseKind::Brownian)?;
    if m == 0 {
        return Err(Error::EmptyRequest("ensemble size must be positive".into()));
    }
    let data = run_ensemble(weights, m, |r| match sample_path(noise, r as u64) {
        NoisePath::Brownian { increments, .. } => Ok(increments),
        NoisePath::Poisson { .. } => unreachable!("Brownian spec"),
    })?;
    Ok(FieldEnsemble {
        lattice: weights.lattice.clone(),
        realizations: m,
        data,
        provenance: Provenance {
            kernel: *kernel,
            grid: *grid,
            noise: *noise,
            test_function: *g,
            seed: noise.seed,
        },
    })
}

/// `∫ g₁(z) ν(dz)` and `∫ g₁(z)² ν(dz)`.
pub fn mark_moments(measure: &JumpMeasure, g: &TestFunctionSpec) -> Result<(f64, f64)> {
    let tol = Tolerance {
        relative: 1e-10,
        absolute: 1e-14,
        max_segments: 2000,
    };
    let first = measure.integrate(|z| g.g1(z), tol)?;
    let second = measure.integrate(|z| g.g1(z).powi(2), tol)?;
    Ok((first, second))
}

/// Compensated Poisson convolution ensemble. An event in the cell `(r_k, r_{k+1}]`
/// acts with the weight `Φ_{·,k}`; the compensator `Σ_k Φ_{·,k} Δt ∫ g₁ dν` uses
/// the same cells.
pub fn convolve_poisson(
    kernel: &KernelSpec,
    grid: &SpectralGrid,
    g: &TestFunctionSpec,
    noise: &NoiseSpec,
    m: usize,
    window: &OutputWindow,
) -> Result<FieldEnsemble> {
    check_kind(noise, NoiseKind::CompensatedPoisson)?;
    let weights = ConvolutionWeights::new(kernel, grid, g, noise, window)?;
    poisson_from_weights(&weights, kernel, grid, g, noise, m)
}

pub fn poisson_from_weights(
    weights: &ConvolutionWeights,
    kernel: &KernelSpec,
    grid: &SpectralGrid,
    g: &TestFunctionSpec,
    noise: &NoiseSpec,
    m: usize,
) -> Result<FieldEnsemble> {
    check_kind(noise, NoiseKind::CompensatedPoisson)?;
    if m == 0 {
        return Err(Error::EmptyRequest("ensemble size must be positive".into()));
    }
    let measure = noise.jump.ok_or_else(|| invalid("Poisson noise needs a jump measure"))?;
    let (mean_mark, _) = mark_moments(&measure, g)?;
    let dt = noise.dt();
    let n_t = noise.steps;
    let data = run_ensemble(weights, m, |r| {
        let mut coeffs = vec![-mean_mark * dt; n_t];
        if let NoisePath::Poisson { events, .. } = sample_path(noise, r as u64) {
            for (tau, z) in events {
                // τ ∈ (r_k, r_{k+1}]
                let k = ((tau / dt).ceil() as usize).saturating_sub(1).min(n_t - 1);
                coeffs[k] += g.g1(z);
            }
        }
        Ok(coeffs)
    })?;
    Ok(FieldEnsemble {
        lattice: weights.lattice.clone(),
        realizations: m,
        data,
        provenance: Provenance {
            kernel: *kernel,
            grid: *grid,
            noise: *noise,
            test_function: *g,
            seed: noise.seed,
        },
    })
}
