//! Heat kernels of the semigroup generated by `-(-Δ)^{α/2}` on a periodic box,
//! with an optional Riesz derivative `|ξ|^ε`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default aliasing tolerance for [`SpectralGrid`].
pub const DEFAULT_ALIASING_TOLERANCE: f64 = 1e-12;
/// Values below this are treated as spectral noise by the bound check.
pub const TAIL_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub alpha: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub dim: usize,
    #[serde(default = "default_method")]
    pub method: Method,
}

fn default_method() -> Method {
    Method::Spectral
}

impl KernelSpec {
    pub fn new(alpha: f64, epsilon: f64, dim: usize, method: Method) -> Result<Self> {
        let spec = Self {
            alpha,
            epsilon,
            dim,
            method,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn spectral(alpha: f64, epsilon: f64, dim: usize) -> Result<Self> {
        Self::new(alpha, epsilon, dim, Method::Spectral)
    }

    pub fn gaussian(dim: usize) -> Self {
        Self {
            alpha: 2.0,
            epsilon: 0.0,
            dim,
            method: Method::ClosedForm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(invalid(format!("alpha must lie in (0, 2], got {}", self.alpha)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(invalid(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(1..=2).contains(&self.dim) {
            return Err(invalid(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        if self.method == Method::ClosedForm && !self.has_closed_form() {
            return Err(Error::UnsupportedClosedForm {
                alpha: self.alpha,
                epsilon: self.epsilon,
                dim: self.dim,
            });
        }
        Ok(())
    }

    /// Kernels used in the integral conditions need `ε < α/2`.
    pub fn validate_for_conditions(&self) -> Result<()> {
        self.validate()?;
        if self.epsilon >= 0.5 * self.alpha {
            return Err(invalid(format!(
                "condition checks need epsilon < alpha/2, got epsilon = {} with alpha = {}",
                self.epsilon, self.alpha
            )));
        }
        Ok(())
    }

    pub fn has_closed_form(&self) -> bool {
        self.epsilon == 0.0 && (self.alpha == 2.0 || (self.alpha == 1.0 && self.dim == 1))
    }

    /// Fourier multiplier `|ξ|^ε e^{-t|ξ|^α}`.
    pub fn multiplier(&self, t: f64, xi: f64) -> f64 {
        let decay = (-t * xi.powf(self.alpha)).exp();
        if self.epsilon == 0.0 {
            decay
        } else if xi == 0.0 {
            0.0
        } else {
            xi.powf(self.epsilon) * decay
        }
    }

    /// Kernel scale `t^{1/α}`.
    pub fn scale(&self, t: f64) -> f64 {
        t.powf(1.0 / self.alpha)
    }
}

/// Periodic lattice `[-L, L)^d` with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralGrid {
    pub length: f64,
    pub points_per_axis: usize,
    #[serde(default = "default_tolerance")]
    pub aliasing_tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_ALIASING_TOLERANCE
}

impl SpectralGrid {
    pub fn new(length: f64, points_per_axis: usize) -> Result<Self> {
        Self::with_tolerance(length, points_per_axis, DEFAULT_ALIASING_TOLERANCE)
    }

    pub fn with_tolerance(length: f64, points_per_axis: usize, aliasing_tolerance: f64) -> Result<Self> {
        let grid = Self {
            length,
            points_per_axis,
            aliasing_tolerance,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid(format!("box half-width must be positive, got {}", self.length)));
        }
        if self.points_per_axis < 2 || !self.points_per_axis.is_multiple_of(2) {
            return Err(invalid(format!(
                "points per axis must be even and >= 2, got {}",
                self.points_per_axis
            )));
        }
        if !(self.aliasing_tolerance > 0.0 && self.aliasing_tolerance < 1.0) {
            return Err(invalid("aliasing tolerance must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Default box `L = 8 max(t_max^{1/α}, 1)` and the smallest power-of-two
    /// resolution meeting the guard at `t_min`, capped at `max_points`.
    /// If the cap binds, the tolerance is relaxed to the residual achieved.
    pub fn for_kernel(spec: &KernelSpec, t_min: f64, t_max: f64, max_points: usize) -> Result<Self> {
        if !(t_min > 0.0) {
            return Err(Error::NonPositiveTime(t_min));
        }
        let length = 8.0 * spec.scale(t_max).max(1.0);
        Self::fitted(spec, length, t_min, DEFAULT_ALIASING_TOLERANCE, max_points)
    }

    /// Smallest power-of-two grid on `[-length, length)` meeting `tolerance` at `t_min`.
    pub fn fitted(spec: &KernelSpec, length: f64, t_min: f64, tolerance: f64, max_points: usize) -> Result<Self> {
        let n = required_points(spec.alpha, length, t_min, tolerance).min(max_points.max(2));
        let mut grid = Self::with_tolerance(length, n, tolerance)?;
        let residual = grid.aliasing_residual(spec, t_min);
        if residual >= tolerance {
            grid.aliasing_tolerance = (residual * (1.0 + 1e-9)).min(0.999_999);
        }
        Ok(grid)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.length / self.points_per_axis as f64
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.length + j as f64 * self.spacing()
    }

    /// Signed wave number `ξ_k = πk/L` in FFT order.
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.points_per_axis;
        let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
        PI * signed / self.length
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.points_per_axis as f64 / (2.0 * self.length)
    }

    pub fn len(&self, dim: usize) -> usize {
        self.points_per_axis.pow(dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.points_per_axis == 0
    }

    pub fn aliasing_residual(&self, spec: &KernelSpec, t: f64) -> f64 {
        (-t * self.nyquist().powf(spec.alpha)).exp()
    }

    pub fn check_guard(&self, spec: &KernelSpec, t: f64) -> Result<()> {
        let residual = self.aliasing_residual(spec, t);
        if residual >= self.aliasing_tolerance {
            return Err(Error::AliasingViolation {
                time: t,
                residual,
                tolerance: self.aliasing_tolerance,
            });
        }
        Ok(())
    }

    /// Lattice index nearest to coordinate `x` (periodic).
    pub fn nearest_index(&self, x: f64) -> usize {
        let n = self.points_per_axis as i64;
        let j = ((x + self.length) / self.spacing()).round() as i64;
        j.rem_euclid(n) as usize
    }
}

/// Smallest power of two `n` with `exp(-t (πn/2L)^α) < tolerance`.
pub fn required_points(alpha: f64, length: f64, t: f64, tolerance: f64) -> usize {
    let xi = ((1.0 / tolerance).ln() / t).powf(1.0 / alpha);
    let n = (2.0 * length * xi / PI).ceil().max(2.0);
    if n > (1u64 << 40) as f64 {
        return 1 << 40;
    }
    let mut p = (n as usize).next_power_of_two();
    // strict inequality at the Nyquist mode
    if (-t * (PI * p as f64 / (2.0 * length)).powf(alpha)).exp() >= tolerance {
        p *= 2;
    }
    p
}

/// Values on the lattice of a [`SpectralGrid`], row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub grid: SpectralGrid,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl LatticeField {
    pub fn zeros(grid: SpectralGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; grid.len(dim)],
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: SpectralGrid, dim: usize, f: F) -> Self {
        let n = grid.points_per_axis;
        let mut x = vec![0.0; dim];
        let values = (0..grid.len(dim))
            .map(|idx| {
                fill_coords(&grid, dim, n, idx, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, dim, values }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        fill_coords(&self.grid, self.dim, self.grid.points_per_axis, idx, &mut x);
        x
    }

    /// `h^d Σ_j u_j`.
    pub fn integral(&self) -> f64 {
        self.grid.spacing().powi(self.dim as i32) * self.values.iter().sum::<f64>()
    }

    /// `h^d Σ_j |u_j| w(x_j)`.
    pub fn weighted_abs_integral<F: Fn(&[f64]) -> f64>(&self, weight: F) -> f64 {
        let mut x = vec![0.0; self.dim];
        let n = self.grid.points_per_axis;
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                fill_coords(&self.grid, self.dim, n, idx, &mut x);
                v.abs() * weight(&x)
            })
            .sum();
        self.grid.spacing().powi(self.dim as i32) * sum
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value at the lattice point nearest to `x`.
    pub fn at(&self, x: &[f64]) -> f64 {
        let n = self.grid.points_per_axis;
        let idx = x
            .iter()
            .fold(0usize, |acc, xi| acc * n + self.grid.nearest_index(*xi));
        self.values[idx]
    }

    /// CSV with columns `x0[,x1],value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        writeln!(out, "{},value", header.join(","))?;
        for (idx, v) in self.values.iter().enumerate() {
            let x = self.coords(idx);
            let cols: Vec<String> = x.iter().map(|c| format!("{c:.12e}")).collect();
            writeln!(out, "{},{v:.16e}", cols.join(","))?;
        }
        Ok(())
    }
}

fn fill_coords(grid: &SpectralGrid, dim: usize, n: usize, idx: usize, x: &mut [f64]) {
    let mut rem = idx;
    for axis in (0..dim).rev() {
        x[axis] = grid.coordinate(rem % n);
        rem /= n;
    }
}

thread_local! {
    static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
}

/// Cached FFT plans and per-mode data for a grid in dimension `d`.
#[derive(Clone)]
pub struct SpectralPlan {
    pub grid: SpectralGrid,
    pub dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `|ξ|` per mode.
    xi_norm: Vec<f64>,
    /// `(-1)^{Σk}` per mode.
    parity: Vec<f64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("grid", &self.grid)
            .field("dim", &self.dim)
            .finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: SpectralGrid, dim: usize) -> Self {
        let n = grid.points_per_axis;
        let (forward, inverse) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        });
        let total = grid.len(dim);
        let mut xi_norm = Vec::with_capacity(total);
        let mut parity = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut sq = 0.0;
            let mut ksum = 0;
            for _ in 0..dim {
                let k = rem % n;
                rem /= n;
                let xi = grid.frequency(k);
                sq += xi * xi;
                ksum += k;
            }
            xi_norm.push(sq.sqrt());
            parity.push(if ksum % 2 == 0 { 1.0 } else { -1.0 });
        }
        Self {
            grid,
            dim,
            forward,
            inverse,
            xi_norm,
            parity,
        }
    }

    pub fn len(&self) -> usize {
        self.xi_norm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi_norm.is_empty()
    }

    pub fn xi_norm(&self) -> &[f64] {
        &self.xi_norm
    }

    /// Unnormalized d-dimensional forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalized d-dimensional inverse transform in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points_per_axis;
        assert_eq!(data.len(), self.len(), "buffer does not match the plan");
        fft.process(data);
        if self.dim == 2 {
            transpose_square(data, n);
            fft.process(data);
            transpose_square(data, n);
        }
    }

    /// Multiplier `m(ξ_k)` for every mode.
    pub fn multiplier(&self, spec: &KernelSpec, t: f64) -> Vec<f64> {
        self.xi_norm.iter().map(|&xi| spec.multiplier(t, xi)).collect()
    }

    /// Lattice samples of the inverse Fourier transform of a radial multiplier.
    pub fn synthesize(&self, multiplier: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = multiplier
            .iter()
            .zip(&self.parity)
            .map(|(m, s)| Complex64::new(m * s, 0.0))
            .collect();
        self.inverse(&mut buf);
        let scale = (0.5 / self.grid.length).powi(self.dim as i32);
        let mut out: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();
        symmetrize(&mut out, self.grid.points_per_axis, self.dim, EVEN);
        out
    }

    /// Two real radial syntheses with a single complex transform.
    pub fn synthesize_pair(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = a
            .iter()
            .zip(b)
            .zip(&self.parity)
            .map(|((x, y), s)| Complex64::new(x * s, y * s))
            .collect();
        self.inverse(&mut buf);
        let scale = (0.5 / self.grid.length).powi(self.dim as i32);
        let mut re: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();
        let mut im: Vec<f64> = buf.iter().map(|c| c.im * scale).collect();
        let n = self.grid.points_per_axis;
        symmetrize(&mut re, n, self.dim, EVEN);
        symmetrize(&mut im, n, self.dim, EVEN);
        (re, im)
    }

    /// Spectral kernel at time `t` with the guard enforced.
    pub fn kernel(&self, spec: &KernelSpec, t: f64) -> Result<Vec<f64>> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        self.grid.check_guard(spec, t)?;
        Ok(self.synthesize(&self.multiplier(spec, t)))
    }

    /// Gradient components of the ε = 0 kernel, one vector per axis.
    pub fn gradient(&self, spec: &KernelSpec, t: f64) -> Result<Vec<Vec<f64>>> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        self.grid.check_guard(spec, t)?;
        let n = self.grid.points_per_axis;
        let base = KernelSpec { epsilon: 0.0, ..*spec };
        let scale = (0.5 / self.grid.length).powi(self.dim as i32);
        // i m(ξ) (ξ_1 + i ξ_2) synthesizes ∂_1 p + i ∂_2 p.
        let mut buf: Vec<Complex64> = (0..self.len())
            .map(|idx| {
                let m = base.multiplier(t, self.xi_norm[idx]) * self.parity[idx];
                let mut rem = idx;
                let mut xi = [0.0; 2];
                for axis in (0..self.dim).rev() {
                    let k = rem % n;
                    rem /= n;
                    xi[axis] = if k == n / 2 { 0.0 } else { self.grid.frequency(k) };
                }
                let xi2 = if self.dim == 2 { xi[1] } else { 0.0 };
                Complex64::new(0.0, m) * Complex64::new(xi[0], xi2)
            })
            .collect();
        self.inverse(&mut buf);
        let mut gx: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();
        symmetrize(&mut gx, n, self.dim, [-1.0, 1.0]);
        let mut out = vec![gx];
        if self.dim == 2 {
            let mut gy: Vec<f64> = buf.iter().map(|c| c.im * scale).collect();
            symmetrize(&mut gy, n, self.dim, [1.0, -1.0]);
            out.push(gy);
        }
        Ok(out)
    }

    /// Spectral convolution `h^d Σ_l p(x_j - x_l) g(x_l)` given the kernel multiplier
    /// and the forward transform of `g`.
    pub fn apply_multiplier(&self, multiplier: &[f64], g_hat: &[Complex64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = multiplier.iter().zip(g_hat).map(|(m, g)| g * *m).collect();
        self.inverse(&mut buf);
        let norm = 1.0 / self.len() as f64;
        buf.iter().map(|c| c.re * norm).collect()
    }

    /// Forward transform of real lattice data.
    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

const EVEN: [f64; 2] = [1.0, 1.0];

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Averages each value with its mirror `x → -x`, one axis at a time.
/// `signs[a] = -1` marks data odd in axis `a`.
fn symmetrize(values: &mut [f64], n: usize, dim: usize, signs: [f64; 2]) {
    let mirror = |j: usize| (n - j) % n;
    match dim {
        1 => {
            for j in 0..=n / 2 {
                let m = mirror(j);
                let avg = 0.5 * (values[j] + signs[0] * values[m]);
                values[j] = avg;
                values[m] = signs[0] * avg;
            }
        }
        _ => {
            for i in 0..=n / 2 {
                let mi = mirror(i);
                for j in 0..n {
                    let a = i * n + j;
                    let b = mi * n + j;
                    let avg = 0.5 * (values[a] + signs[0] * values[b]);
                    values[a] = avg;
                    values[b] = signs[0] * avg;
                }
            }
            for i in 0..n {
                for j in 0..=n / 2 {
                    let a = i * n + j;
                    let b = i * n + mirror(j);
                    let avg = 0.5 * (values[a] + signs[1] * values[b]);
                    values[a] = avg;
                    values[b] = signs[1] * avg;
                }
            }
        }
    }
}

/// Free-space Gaussian kernel `(4πt)^{-d/2} e^{-|x|²/4t}`.
pub fn gaussian_density(t: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * PI * t).powf(-0.5 * x.len() as f64) * (-r2 / (4.0 * t)).exp()
}

/// Free-space Cauchy kernel `t / (π (t² + x²))`.
pub fn cauchy_density(t: f64, x: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

/// Gaussian kernel on the circle of length `2L` (image sum).
pub fn periodic_gaussian_1d(t: f64, x: f64, length: f64) -> f64 {
    let period = 2.0 * length;
    let reach = ((4.0 * t * 60.0).sqrt() / period).ceil() as i64 + 1;
    let norm = (4.0 * PI * t).sqrt();
    (-reach..=reach)
        .map(|m| {
            let y = x + period * m as f64;
            (-y * y / (4.0 * t)).exp()
        })
        .sum::<f64>()
        / norm
}

/// Cauchy kernel on the circle of length `2L` (wrapped Cauchy law).
pub fn periodic_cauchy(t: f64, x: f64, length: f64) -> f64 {
    let q = (-PI * t / length).exp();
    (1.0 - q * q) / (2.0 * length * (1.0 - 2.0 * q * (PI * x / length).cos() + q * q))
}

/// Kernel `p(t, ·)` (with `|ξ|^ε` applied) sampled on the lattice.
pub fn eval_kernel(spec: &KernelSpec, grid: &SpectralGrid, t: f64) -> Result<LatticeField> {
    spec.validate()?;
    grid.validate()?;
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    match spec.method {
        Method::ClosedForm => {
            let length = grid.length;
            let field = if spec.alpha == 2.0 {
                LatticeField::from_fn(*grid, spec.dim, |x| {
                    x.iter().map(|xi| periodic_gaussian_1d(t, *xi, length)).product()
                })
            } else {
                LatticeField::from_fn(*grid, spec.dim, |x| periodic_cauchy(t, x[0], length))
            };
            Ok(field)
        }
        Method::Spectral => {
            let plan = SpectralPlan::new(*grid, spec.dim);
            let values = plan.kernel(spec, t)?;
            Ok(LatticeField {
                grid: *grid,
                dim: spec.dim,
                values,
            })
        }
    }
}

/// Lattice convolution `h^d Σ_l a(x_l) b(x_j - x_l)` of two fields on the same grid.
pub fn convolve_lattice(a: &LatticeField, b: &LatticeField) -> Result<LatticeField> {
    if a.grid != b.grid || a.dim != b.dim {
        return Err(Error::GridMismatch("convolution operands live on different lattices".into()));
    }
    let plan = SpectralPlan::new(a.grid, a.dim);
    let fa = plan.forward_real(&a.values);
    let mut buf = plan.forward_real(&b.values);
    for (x, y) in buf.iter_mut().zip(&fa) {
        *x *= y;
    }
    plan.inverse(&mut buf);
    let n = a.grid.points_per_axis;
    let h = a.grid.spacing().powi(a.dim as i32);
    let norm = h / a.values.len() as f64;
    // lattice offset -L on both factors shifts the circular result by n/2 per axis
    let shift = |j: usize| (j + n / 2) % n;
    let values = (0..a.values.len())
        .map(|idx| {
            let src = if a.dim == 1 {
                shift(idx)
            } else {
                shift(idx / n) * n + shift(idx % n)
            };
            buf[src].re * norm
        })
        .collect();
    Ok(LatticeField {
        grid: a.grid,
        dim: a.dim,
        values,
    })
}

/// `min(t/r^{d+α}, t^{-d/α})`.
pub fn sharp_bound(alpha: f64, dim: usize, t: f64, r: f64) -> f64 {
    let d = dim as f64;
    (t / r.powf(d + alpha)).min(t.powf(-d / alpha))
}

/// `r min(t/r^{d+2+α}, t^{-(d+2)/α})`.
pub fn sharp_gradient_bound(alpha: f64, dim: usize, t: f64, r: f64) -> f64 {
    let d = dim as f64;
    r * (t / r.powf(d + 2.0 + alpha)).min(t.powf(-(d + 2.0) / alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub dim: usize,
    pub t: f64,
    pub c_tolerance: f64,
    /// Half-width of the checked central region.
    pub region: f64,
    pub points_checked: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Ratios of the kernel (`ε = 0`) or its gradient norm (`ε = 1`) to the two-sided
/// sharp bound over the central half of the box.
pub fn check_sharp_bounds(spec: &KernelSpec, grid: &SpectralGrid, t: f64, c_tolerance: f64) -> Result<BoundReport> {
    if spec.epsilon != 0.0 && spec.epsilon != 1.0 {
        return Err(Error::UnsupportedOrder(format!(
            "pointwise bounds are stated for epsilon in {{0, 1}}, got {}",
            spec.epsilon
        )));
    }
    if spec.alpha >= 2.0 {
        return Err(Error::UnsupportedOrder(
            "the Gaussian kernel has no polynomial tail branch".into(),
        ));
    }
    if !(c_tolerance > 1.0) {
        return Err(invalid("c_tolerance must exceed 1"));
    }
    let base = KernelSpec {
        epsilon: 0.0,
        method: Method::Spectral,
        ..*spec
    };
    base.validate()?;
    grid.validate()?;
    let plan = SpectralPlan::new(*grid, spec.dim);
    let values: Vec<f64> = if spec.epsilon == 0.0 {
        plan.kernel(&base, t)?
    } else {
        let parts = plan.gradient(&base, t)?;
        (0..plan.len())
            .map(|i| parts.iter().map(|g| g[i] * g[i]).sum::<f64>().sqrt())
            .collect()
    };
    let region = 0.5 * grid.length;
    let field = LatticeField {
        grid: *grid,
        dim: spec.dim,
        values,
    };
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    let mut points = 0usize;
    for (idx, v) in field.values.iter().enumerate() {
        let x = field.coords(idx);
        if x.iter().any(|c| c.abs() > region) {
            continue;
        }
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r == 0.0 || v.abs() < TAIL_FLOOR {
            continue;
        }
        let bound = if spec.epsilon == 0.0 {
            sharp_bound(spec.alpha, spec.dim, t, r)
        } else {
            sharp_gradient_bound(spec.alpha, spec.dim, t, r)
        };
        let ratio = v.abs() / bound;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        points += 1;
    }
    let pass = points > 0 && min_ratio >= 1.0 / c_tolerance && max_ratio <= c_tolerance;
    Ok(BoundReport {
        alpha: spec.alpha,
        epsilon: spec.epsilon,
        dim: spec.dim,
        t,
        c_tolerance,
        region,
        points_checked: points,
        min_ratio,
        max_ratio,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_mass_and_peak() {
        let spec = KernelSpec::spectral(2.0, 0.0, 1).unwrap();
        let grid = SpectralGrid::for_kernel(&spec, 0.1, 0.1, 1 << 16).unwrap();
        let p = eval_kernel(&spec, &grid, 0.1).unwrap();
        assert!((p.integral() - 1.0).abs() < 1e-6);
        let peak = p.at(&[0.0]);
        assert!((peak - (4.0 * PI * 0.1f64).powf(-0.5)).abs() < 1e-10);
        assert!((peak - 0.8921).abs() < 1e-4);
    }

    #[test]
    fn closed_form_rejected_outside_validity() {
        let err = KernelSpec::new(1.5, 0.0, 1, Method::ClosedForm).unwrap_err();
        assert!(matches!(err, Error::UnsupportedClosedForm { .. }));
        let err = KernelSpec::new(1.0, 0.0, 2, Method::ClosedForm).unwrap_err();
        assert!(matches!(err, Error::UnsupportedClosedForm { .. }));
    }

    #[test]
    fn non_positive_time_and_guard() {
        let spec = KernelSpec::spectral(1.0, 0.0, 1).unwrap();
        let grid = SpectralGrid::new(8.0, 64).unwrap();
        assert!(matches!(eval_kernel(&spec, &grid, 0.0), Err(Error::NonPositiveTime(_))));
        assert!(matches!(
            eval_kernel(&spec, &grid, 0.01),
            Err(Error::AliasingViolation { .. })
        ));
    }

    #[test]
    fn crossover_of_bound_branches() {
        let (alpha, t) = (1.5, 1.0f64);
        let r = t.powf(1.0 / alpha);
        let tail = t / r.powf(1.0 + alpha);
        let peak = t.powf(-1.0 / alpha);
        assert!((tail - peak).abs() < 1e-15);
    }

    #[test]
    fn gaussian_bound_check_unsupported() {
        let spec = KernelSpec::spectral(2.0, 0.0, 1).unwrap();
        let grid = SpectralGrid::new(8.0, 256).unwrap();
        assert!(matches!(
            check_sharp_bounds(&spec, &grid, 1.0, 10.0),
            Err(Error::UnsupportedOrder(_))
        ));
        let spec = KernelSpec::spectral(1.0, 0.5, 1).unwrap();
        assert!(matches!(
            check_sharp_bounds(&spec, &grid, 1.0, 10.0),
            Err(Error::UnsupportedOrder(_))
        ));
    }

    #[test]
    fn two_dimensional_transform_round_trip() {
        let grid = SpectralGrid::new(4.0, 16).unwrap();
        let plan = SpectralPlan::new(grid, 2);
        let data: Vec<Complex64> = (0..256).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut buf = data.clone();
        plan.forward(&mut buf);
        plan.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a / 256.0 - b).norm() < 1e-12);
        }
    }
}
