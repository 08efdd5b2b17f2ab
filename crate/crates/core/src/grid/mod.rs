//! Uniform periodic sampling of the cube `[-L, L)^3`, complex fields on it,
//! and the discrete Fourier transform used throughout the crate.
//!
//! The forward transform approximates `f̂(ξ) = ∫ e^{-ix·ξ} f(x) dx`: it is the
//! unnormalized DFT multiplied by `spacing^3` and by the phase `(-1)^m` that
//! accounts for the lattice starting at `-L`. Spectral samples are stored in
//! FFT index order; [`Grid::wavenumber`] maps an index to its centered
//! frequency `m·π/L`.

pub mod fft;
pub mod io;

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(n_per_axis: usize, half_width: f64) -> Result<Self> {
        if n_per_axis < 8 || !n_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "samples per axis must be a power of two >= 8, got {n_per_axis}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        Ok(Self { n: n_per_axis, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn dual_spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn dual_cell_volume(&self) -> f64 {
        self.dual_spacing().powi(3)
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Centered integer frequency for FFT index `i`, in `[-n/2, n/2)`.
    pub fn frequency_index(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        self.frequency_index(i) as f64 * self.dual_spacing()
    }

    /// Wavevector for a flat FFT-order index.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.wavenumber(i), self.wavenumber(j), self.wavenumber(k)]
    }

    /// Wavenumber used for first derivatives: the Nyquist mode is dropped so
    /// that derivatives of real fields stay real.
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.n; 3]
    }
}

/// Weight exponent for `‖⟨x⟩^δ u‖_{L²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub delta: f64,
}

impl WeightSpec {
    pub fn new(delta: f64) -> Self {
        Self { delta }
    }

    /// Weight admissible for the CGO remainder estimates, `-1 < δ < 0`.
    pub fn cgo(delta: f64) -> Result<Self> {
        if delta > -1.0 && delta < 0.0 {
            Ok(Self { delta })
        } else {
            Err(Error::InvalidParameter(format!("CGO weight must satisfy -1 < delta < 0, got {delta}")))
        }
    }

    pub fn at(&self, x: [f64; 3]) -> f64 {
        japanese(x).powf(self.delta)
    }
}

/// `⟨x⟩ = (1 + |x|²)^{1/2}`.
pub fn japanese(x: [f64; 3]) -> f64 {
    (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, data: vec![ZERO; grid.len()] }
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        Self { grid, data: vec![value; grid.len()] }
    }

    pub fn from_vec(grid: Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a grid of {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, data }
    }

    pub fn from_real_fn(grid: Grid, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    /// Pointwise map with access to the sample position.
    pub fn map_with_point(&self, f: impl Fn([f64; 3], Complex64) -> Complex64) -> Self {
        let g = self.grid;
        Self { grid: g, data: self.data.iter().enumerate().map(|(i, &z)| f(g.point(i), z)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: Complex64, other: &Self) -> Result<()> {
        self.check_grid(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    /// Discrete `L²` norm, `(Σ |f|² h³)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sesquilinear pairing `(f|g) = Σ f ḡ h³`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_grid(other)?;
        let s: Complex64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn integral(&self) -> Complex64 {
        self.data.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest `|f|` over the outermost lattice shell, relative to the peak.
    pub fn boundary_leakage(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let n = self.grid.n;
        let mut edge: f64 = 0.0;
        for (idx, z) in self.data.iter().enumerate() {
            let [i, j, k] = self.grid.unravel(idx);
            if i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1 {
                edge = edge.max(z.norm());
            }
        }
        edge / peak
    }

    /// Trilinear interpolation at an arbitrary point inside the box.
    pub fn interpolate(&self, x: [f64; 3]) -> Result<Complex64> {
        let g = &self.grid;
        let h = g.spacing();
        let n = g.n;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let s = (x[a] + g.half_width) / h;
            if !(s >= 0.0 && s <= (n - 1) as f64) {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                return Err(Error::OutsideBox { radius: r });
            }
            let i = (s.floor() as usize).min(n - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut acc = ZERO;
        for di in 0..2 {
            let wi = if di == 0 { 1.0 - frac[0] } else { frac[0] };
            for dj in 0..2 {
                let wj = if dj == 0 { 1.0 - frac[1] } else { frac[1] };
                for dk in 0..2 {
                    let wk = if dk == 0 { 1.0 - frac[2] } else { frac[2] };
                    acc += self.data[g.index(base[0] + di, base[1] + dj, base[2] + dk)] * (wi * wj * wk);
                }
            }
        }
        Ok(acc)
    }
}

impl ScalarField {
    /// Tensor cubic Lagrange interpolation; the stencil is shifted inward
    /// near the faces so only interior samples are used.
    pub fn interpolate_cubic(&self, x: [f64; 3]) -> Result<Complex64> {
        let g = &self.grid;
        let h = g.spacing();
        let n = g.n;
        let mut base = [0usize; 3];
        let mut wts = [[0.0; 4]; 3];
        for a in 0..3 {
            let s = (x[a] + g.half_width) / h;
            if !(s >= 0.0 && s <= (n - 1) as f64) {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                return Err(Error::OutsideBox { radius: r });
            }
            let i0 = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
            let t = s - i0 as f64;
            base[a] = i0;
            // nodes at t = 0, 1, 2, 3
            wts[a] = [
                -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
                t * (t - 2.0) * (t - 3.0) / 2.0,
                -t * (t - 1.0) * (t - 3.0) / 2.0,
                t * (t - 1.0) * (t - 2.0) / 6.0,
            ];
        }
        let mut acc = ZERO;
        for p in 0..4 {
            for q in 0..4 {
                let w = wts[0][p] * wts[1][q];
                let row = g.index(base[0] + p, base[1] + q, base[2]);
                for r in 0..4 {
                    acc += self.data[row + r] * (w * wts[2][r]);
                }
            }
        }
        Ok(acc)
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b).expect("grid mismatch in field addition")
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b).expect("grid mismatch in field subtraction")
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b).expect("grid mismatch in field product")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn new(components: [ScalarField; 3]) -> Result<Self> {
        let g = components[0].grid;
        if components.iter().any(|c| c.grid != g) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { components: std::array::from_fn(|_| ScalarField::zeros(grid)) }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [Complex64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            for a in 0..3 {
                out.components[a].data[idx] = v[a];
            }
        }
        out
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        Self::from_fn(grid, |x| f(x).map(|v| Complex64::new(v, 0.0)))
    }

    pub fn grid(&self) -> &Grid {
        &self.components[0].grid
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.components[a]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField; 3] {
        &mut self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { components: std::array::from_fn(|a| self.components[a].scale(s)) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let c: Result<Vec<ScalarField>> =
            (0..3).map(|a| self.components[a].zip_map(&other.components[a], |x, y| x + y)).collect();
        let c = c?;
        Ok(Self { components: [c[0].clone(), c[1].clone(), c[2].clone()] })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Pointwise bilinear contraction `c · F` with a constant complex vector.
    pub fn dot_const(&self, c: [Complex64; 3]) -> ScalarField {
        let g = *self.grid();
        let mut out = ScalarField::zeros(g);
        for a in 0..3 {
            if c[a] != ZERO {
                out.axpy(c[a], &self.components[a]).expect("shared grid");
            }
        }
        out
    }

    /// Pointwise bilinear `F · G` (no conjugation).
    pub fn dot(&self, other: &Self) -> Result<ScalarField> {
        let mut out = ScalarField::zeros(*self.grid());
        for a in 0..3 {
            let p = self.components[a].zip_map(&other.components[a], |x, y| x * y)?;
            out.axpy(Complex64::new(1.0, 0.0), &p)?;
        }
        Ok(out)
    }

    pub fn norm_l2(&self) -> f64 {
        self.components.iter().map(|c| c.norm_l2().powi(2)).sum::<f64>().sqrt()
    }

    /// Sup over the lattice of the Euclidean length `|F(x)|`.
    pub fn max_abs(&self) -> f64 {
        let n = self.grid().len();
        (0..n)
            .map(|i| self.components.iter().map(|c| c.data[i].norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.components.iter().flat_map(|c| c.data.iter()).map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn integral(&self) -> [Complex64; 3] {
        std::array::from_fn(|a| self.components[a].integral())
    }
}

/// Forward transform approximating `∫ e^{-ix·ξ} f(x) dx` on the dual lattice.
pub fn fft(f: &ScalarField) -> ScalarField {
    let g = f.grid;
    let mut data = f.data.clone();
    fft::fft3(&mut data, g.dims(), false);
    let h3 = g.cell_volume();
    for (idx, z) in data.iter_mut().enumerate() {
        let [i, j, k] = g.unravel(idx);
        let sign = if (i + j + k) % 2 == 0 { 1.0 } else { -1.0 };
        *z *= sign * h3;
    }
    ScalarField { grid: g, data }
}

/// Inverse of [`fft`]: `f(x) = (2L)^{-3} Σ f̂(k) e^{ik·x}`.
pub fn ifft(spectrum: &ScalarField) -> ScalarField {
    let g = spectrum.grid;
    let mut data = spectrum.data.clone();
    let vol = (2.0 * g.half_width).powi(3);
    for (idx, z) in data.iter_mut().enumerate() {
        let [i, j, k] = g.unravel(idx);
        let sign = if (i + j + k) % 2 == 0 { 1.0 } else { -1.0 };
        *z *= sign / vol;
    }
    fft::fft3(&mut data, g.dims(), true);
    ScalarField { grid: g, data }
}

/// Applies the Fourier multiplier `symbol(k)` to `f` (periodic lattice).
pub fn apply_multiplier(f: &ScalarField, symbol: impl Fn([f64; 3]) -> Complex64) -> ScalarField {
    let g = f.grid;
    let mut data = f.data.clone();
    fft::fft3(&mut data, g.dims(), false);
    let inv_n = 1.0 / g.len() as f64;
    for (idx, z) in data.iter_mut().enumerate() {
        *z *= symbol(g.wavevector(idx)) * inv_n;
    }
    fft::fft3(&mut data, g.dims(), true);
    ScalarField { grid: g, data }
}

/// Spectral partial derivative `∂_axis f`.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    let g = f.grid;
    let mut data = f.data.clone();
    fft::fft3(&mut data, g.dims(), false);
    let inv_n = 1.0 / g.len() as f64;
    for (idx, z) in data.iter_mut().enumerate() {
        let k = g.derivative_wavenumber(g.unravel(idx)[axis]);
        *z *= Complex64::new(0.0, k * inv_n);
    }
    fft::fft3(&mut data, g.dims(), true);
    ScalarField { grid: g, data }
}

/// Spectral gradient, sharing one forward transform across components.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = f.grid;
    let mut spec = f.data.clone();
    fft::fft3(&mut spec, g.dims(), false);
    let inv_n = 1.0 / g.len() as f64;
    let comps = std::array::from_fn(|axis| {
        let mut d: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(idx, &z)| z * Complex64::new(0.0, g.derivative_wavenumber(g.unravel(idx)[axis]) * inv_n))
            .collect();
        fft::fft3(&mut d, g.dims(), true);
        ScalarField { grid: g, data: d }
    });
    VectorField { components: comps }
}

pub fn divergence(a: &VectorField) -> ScalarField {
    let g = *a.grid();
    let mut acc = vec![ZERO; g.len()];
    for axis in 0..3 {
        let mut d = a.components[axis].data.clone();
        fft::fft3(&mut d, g.dims(), false);
        for (idx, z) in d.iter().enumerate() {
            acc[idx] += z * Complex64::new(0.0, g.derivative_wavenumber(g.unravel(idx)[axis]));
        }
    }
    let inv_n = 1.0 / g.len() as f64;
    acc.iter_mut().for_each(|z| *z *= inv_n);
    fft::fft3(&mut acc, g.dims(), true);
    ScalarField { grid: g, data: acc }
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    apply_multiplier(f, |k| Complex64::new(-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]), 0.0))
}

/// `‖⟨x⟩^δ f‖_{L²}` with the discrete measure `h³`.
pub fn weighted_norm(f: &ScalarField, w: WeightSpec) -> f64 {
    let g = f.grid;
    let s: f64 = f
        .data
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let wt = w.at(g.point(i));
            z.norm_sqr() * wt * wt
        })
        .sum();
    (s * g.cell_volume()).sqrt()
}

/// Weighted norm of a vector field, `(Σ_a ‖⟨x⟩^δ F_a‖²)^{1/2}`.
pub fn weighted_norm_vec(f: &VectorField, w: WeightSpec) -> f64 {
    f.components.iter().map(|c| weighted_norm(c, w).powi(2)).sum::<f64>().sqrt()
}

/// `sup |⟨x⟩^r f(x)|`.
pub fn weighted_sup(f: &ScalarField, r: f64) -> f64 {
    let g = f.grid;
    f.data.iter().enumerate().map(|(i, z)| z.norm() * japanese(g.point(i)).powf(r)).fold(0.0, f64::max)
}

/// Fourier transform `∫ e^{-ix·ξ} f(x) dx` at an arbitrary (off-lattice)
/// frequency by direct lattice quadrature, using separable phase factors.
pub fn fourier_at(f: &ScalarField, xi: [f64; 3]) -> Complex64 {
    let g = f.grid;
    let n = g.n;
    let phase = |a: usize| -> Vec<Complex64> {
        (0..n).map(|i| Complex64::from_polar(1.0, -xi[a] * g.coord(i))).collect()
    };
    let (p0, p1, p2) = (phase(0), phase(1), phase(2));
    let mut total = ZERO;
    for i in 0..n {
        let mut plane = ZERO;
        for j in 0..n {
            let row = &f.data[(i * n + j) * n..(i * n + j + 1) * n];
            let line: Complex64 = row.iter().zip(&p2).map(|(a, b)| a * b).sum();
            plane += line * p1[j];
        }
        total += plane * p0[i];
    }
    total * g.cell_volume()
}
