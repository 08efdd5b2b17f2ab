//! Direct scattering at a fixed energy `λ > 0`.
//!
//! The outgoing resolvent is convolution with `e^{iκ|x|}/(4π|x|)`, `κ = √λ`,
//! truncated at the box diagonal so that its Fourier transform is smooth.
//! Kernel samples are produced once on a 3x padded lattice and the
//! convolution itself runs on a 2x padded lattice.

use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::{fft::fft3, fourier_at, gradient, Grid, ScalarField, VectorField};
use crate::krylov::{gmres, GmresOptions};
use crate::quadrature::sphere_rule;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// The constant in front of the outgoing spherical wave in three dimensions.
pub const C_LAMBDA: f64 = 1.0 / (4.0 * PI);

/// Product quadrature on the energy sphere `|ξ| = √λ`, stored as unit
/// directions with weights for `dS` on the unit sphere.
#[derive(Debug, Clone, Serialize)]
pub struct SphereGrid {
    lambda: f64,
    n_polar: usize,
    n_azimuth: usize,
    directions: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(lambda: f64, n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("energy must be positive, got {lambda}")));
        }
        if n_polar == 0 || n_azimuth < 2 || n_azimuth % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "sphere grid needs n_polar >= 1 and an even n_azimuth >= 2, got {n_polar}x{n_azimuth}"
            )));
        }
        let (directions, weights) = sphere_rule(n_polar, n_azimuth);
        Ok(SphereGrid { lambda, n_polar, n_azimuth, directions, weights })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn wavenumber(&self) -> f64 {
        self.lambda.sqrt()
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.n_polar, self.n_azimuth)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `√λ θ_q`.
    pub fn point(&self, q: usize) -> [f64; 3] {
        let k = self.wavenumber();
        self.directions[q].map(|c| c * k)
    }

    /// Index of `−θ_q`.
    pub fn antipode(&self, q: usize) -> usize {
        let (i, j) = (q / self.n_azimuth, q % self.n_azimuth);
        (self.n_polar - 1 - i) * self.n_azimuth + (j + self.n_azimuth / 2) % self.n_azimuth
    }

    /// Node weights for the measure `dS_λ / 2√λ` (`dS_λ = λ dS`).
    pub fn measure(&self) -> Vec<f64> {
        let s = 0.5 * self.wavenumber();
        self.weights.iter().map(|w| w * s).collect()
    }

    /// `(f|g)` in `L²(S²)` by quadrature.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(f.iter().zip(g)).map(|(w, (a, b))| a * b.conj() * *w).sum()
    }

    pub fn norm(&self, f: &[Complex64]) -> f64 {
        self.inner(f, f).re.max(0.0).sqrt()
    }
}

/// Fourier transform of the kernel truncated to `|x| ≤ r`, as a function of `|k|`.
pub fn truncated_kernel_hat(k: f64, kappa: f64, r: f64) -> Complex64 {
    let e = Complex64::from_polar(1.0, kappa * r);
    let num = |k: f64| -> Complex64 {
        let sinc_r = if k * r < 1e-8 { r } else { (k * r).sin() / k };
        Complex64::new(1.0, 0.0) - e * (Complex64::new((k * r).cos(), 0.0) - I * kappa * sinc_r)
    };
    if (k - kappa).abs() < 1e-6 * kappa {
        // removable singularity at |k| = κ: l'Hôpital in k
        let dnum = e * (Complex64::new(r * (kappa * r).sin(), 0.0)
            + I * kappa * (r * (kappa * r).cos() / kappa - (kappa * r).sin() / (kappa * kappa)));
        return dnum / (2.0 * kappa);
    }
    num(k) / (k * k - kappa * kappa)
}

/// Convolution with the outgoing kernel, set up for one grid and energy.
#[derive(Debug, Clone)]
pub struct OutgoingResolvent {
    grid: Grid,
    lambda: f64,
    radius: f64,
    spectrum: Vec<Complex64>,
}

impl OutgoingResolvent {
    pub fn new(grid: Grid, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("energy must be positive, got {lambda}")));
        }
        let n = grid.n();
        let h = grid.spacing();
        let kappa = lambda.sqrt();
        let radius = 2.0 * grid.half_width() * 3f64.sqrt();

        let m = 3 * n;
        let period = m as f64 * h;
        let freq = |i: usize| -> f64 {
            let f = if i < m / 2 { i as f64 } else { i as f64 - m as f64 };
            2.0 * PI * f / period
        };
        let mut big = vec![ZERO; m * m * m];
        big.par_chunks_mut(m * m).enumerate().for_each(|(i, slab)| {
            let k0 = freq(i);
            for j in 0..m {
                let k1 = freq(j);
                for l in 0..m {
                    let k2 = freq(l);
                    slab[j * m + l] = truncated_kernel_hat((k0 * k0 + k1 * k1 + k2 * k2).sqrt(), kappa, radius);
                }
            }
        });
        fft3(&mut big, [m, m, m], true);
        let inv_vol = 1.0 / period.powi(3);

        let p = 2 * n;
        let mut kern = vec![ZERO; p * p * p];
        let wrap = |d: i64, len: usize| d.rem_euclid(len as i64) as usize;
        for d0 in -(n as i64)..n as i64 {
            for d1 in -(n as i64)..n as i64 {
                for d2 in -(n as i64)..n as i64 {
                    let src = (wrap(d0, m) * m + wrap(d1, m)) * m + wrap(d2, m);
                    let dst = (wrap(d0, p) * p + wrap(d1, p)) * p + wrap(d2, p);
                    kern[dst] = big[src] * inv_vol;
                }
            }
        }
        drop(big);
        fft3(&mut kern, [p, p, p], false);
        let scale = grid.cell_volume() / (p * p * p) as f64;
        kern.iter_mut().for_each(|z| *z *= scale);
        Ok(OutgoingResolvent { grid, lambda, radius, spectrum: kern })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn truncation_radius(&self) -> f64 {
        self.radius
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n();
        let p = 2 * n;
        let mut buf = vec![ZERO; p * p * p];
        let src = f.data();
        for i in 0..n {
            for j in 0..n {
                let o = (i * p + j) * p;
                buf[o..o + n].copy_from_slice(&src[(i * n + j) * n..(i * n + j + 1) * n]);
            }
        }
        fft3(&mut buf, [p, p, p], false);
        buf.iter_mut().zip(&self.spectrum).for_each(|(a, b)| *a *= b);
        fft3(&mut buf, [p, p, p], true);
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                let o = (i * p + j) * p;
                out.extend_from_slice(&buf[o..o + n]);
            }
        }
        ScalarField::from_vec(self.grid, out)
    }
}

/// Eighth-order central Laplacian, evaluated away from the faces.
fn fd_laplacian(u: &ScalarField, margin: usize) -> Vec<(usize, Complex64)> {
    const C: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
    let g = *u.grid();
    let n = g.n();
    let h2 = g.spacing().powi(2);
    let d = u.data();
    let mut out = Vec::new();
    for i in margin..n - margin {
        for j in margin..n - margin {
            for k in margin..n - margin {
                let c = g.index(i, j, k);
                let mut acc = d[c] * (3.0 * C[0]);
                for s in 1..5 {
                    acc += (d[g.index(i + s, j, k)]
                        + d[g.index(i - s, j, k)]
                        + d[g.index(i, j + s, k)]
                        + d[g.index(i, j - s, k)]
                        + d[g.index(i, j, k + s)]
                        + d[g.index(i, j, k - s)])
                        * C[s];
                }
                out.push((c, acc / h2));
            }
        }
    }
    out
}

/// `‖(−Δ−λ)u − f‖₂ / ‖f‖₂` over the points at least `margin` cells from the faces.
pub fn helmholtz_residual(u: &ScalarField, f: &ScalarField, lambda: f64, margin: usize) -> f64 {
    let margin = margin.max(4);
    let (mut num, mut den) = (0.0, 0.0);
    for (c, lap) in fd_laplacian(u, margin) {
        num += (-lap - u.data()[c] * lambda - f.data()[c]).norm_sqr();
        den += f.data()[c].norm_sqr();
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// One-shot `R₀(λ+i0)f` with its Helmholtz residual.
pub fn apply_r0_out(f: &ScalarField, lambda: f64) -> Result<(ScalarField, f64)> {
    let r0 = OutgoingResolvent::new(*f.grid(), lambda)?;
    let u = r0.apply(f)?;
    let res = helmholtz_residual(&u, f, lambda, 4);
    Ok((u, res))
}

/// Finite sum of plane waves `Σ c_q e^{i k_q·x}`.
#[derive(Debug, Clone)]
pub struct PlaneWaveSum {
    pub wavevectors: Vec<[f64; 3]>,
    pub amplitudes: Vec<Complex64>,
}

impl PlaneWaveSum {
    pub fn value(&self, x: [f64; 3]) -> Complex64 {
        self.wavevectors
            .iter()
            .zip(&self.amplitudes)
            .map(|(k, c)| c * Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]))
            .sum()
    }

    pub fn gradient_at(&self, x: [f64; 3]) -> [Complex64; 3] {
        let mut g = [ZERO; 3];
        for (k, c) in self.wavevectors.iter().zip(&self.amplitudes) {
            let e = c * I * Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
            for a in 0..3 {
                g[a] += e * k[a];
            }
        }
        g
    }

    /// `‖(|k_q|² − λ) c_q‖₁ / ‖c_q‖₁`: the Helmholtz defect of the sum,
    /// evaluated on its Fourier representation.
    pub fn helmholtz_defect(&self, lambda: f64) -> f64 {
        let total: f64 = self.amplitudes.iter().map(|c| c.norm()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let bad: f64 = self
            .wavevectors
            .iter()
            .zip(&self.amplitudes)
            .map(|(k, c)| ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) - lambda).abs() * c.norm())
            .sum();
        bad / total
    }

    /// Samples on the grid using separable phase factors.
    pub fn sample(&self, grid: Grid) -> ScalarField {
        self.sample_weighted(grid, |_| Complex64::new(1.0, 0.0))
    }

    fn sample_weighted(&self, grid: Grid, factor: impl Fn(usize) -> Complex64 + Sync) -> ScalarField {
        let n = grid.n();
        let xs: Vec<f64> = (0..n).map(|i| grid.coord(i)).collect();
        let mut data = vec![ZERO; n * n * n];
        data.par_chunks_mut(n * n).enumerate().for_each(|(i, slab)| {
            for (q, (k, c)) in self.wavevectors.iter().zip(&self.amplitudes).enumerate() {
                if *c == ZERO {
                    continue;
                }
                let c = c * factor(q) * Complex64::from_polar(1.0, k[0] * xs[i]);
                let p1: Vec<Complex64> = xs.iter().map(|&y| Complex64::from_polar(1.0, k[1] * y)).collect();
                let p2: Vec<Complex64> = xs.iter().map(|&z| Complex64::from_polar(1.0, k[2] * z)).collect();
                for j in 0..n {
                    let cj = c * p1[j];
                    let row = &mut slab[j * n..(j + 1) * n];
                    row.iter_mut().zip(&p2).for_each(|(r, e)| *r += cj * e);
                }
            }
        });
        ScalarField::from_vec(grid, data).expect("sized by construction")
    }

    pub fn sample_gradient(&self, grid: Grid) -> VectorField {
        let comps = std::array::from_fn(|a| self.sample_weighted(grid, |q| I * self.wavevectors[q][a]));
        VectorField::new(comps).expect("same grid")
    }
}

/// Plane-wave expansion of `P₀(λ)g` from the quadrature rule.
pub fn herglotz_waves(g: &[Complex64], sphere: &SphereGrid) -> Result<PlaneWaveSum> {
    if g.len() != sphere.len() {
        return Err(Error::DimensionMismatch(format!("expected {} density samples, got {}", sphere.len(), g.len())));
    }
    let k = sphere.wavenumber();
    let pref = I / (4.0 * PI * PI) * (0.5 * k);
    Ok(PlaneWaveSum {
        wavevectors: (0..sphere.len()).map(|q| sphere.point(q)).collect(),
        amplitudes: g.iter().zip(sphere.weights()).map(|(gq, w)| pref * *w * gq).collect(),
    })
}

/// `P₀(λ)g(x) = i(2π)^{-2} ∫ e^{ix·ξ} g(ξ) dS_λ(ξ)/2√λ` sampled on `grid`.
pub fn herglotz(grid: Grid, g: &[Complex64], sphere: &SphereGrid) -> Result<ScalarField> {
    Ok(herglotz_waves(g, sphere)?.sample(grid))
}

/// Smooth radial step: 1 for `r ≤ r0`, 0 for `r ≥ r1`.
pub fn radial_window(grid: Grid, r0: f64, r1: f64) -> Vec<f64> {
    let psi = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    (0..grid.len())
        .map(|idx| {
            let x = grid.point(idx);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let t = ((r1 - r) / (r1 - r0)).clamp(0.0, 1.0);
            let (a, b) = (psi(t), psi(1.0 - t));
            if a + b == 0.0 {
                0.0
            } else {
                a / (a + b)
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub u: ScalarField,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Far-field data of a solution: `u ∼ c_λ r^{-1}(e^{i√λr} g₊ + e^{-i√λr} g₋)`.
#[derive(Debug, Clone, Serialize)]
pub struct FarFieldData {
    pub sphere: SphereGrid,
    pub outgoing: Vec<Complex64>,
    pub incoming: Vec<Complex64>,
    pub c_lambda: f64,
}

impl FarFieldData {
    /// `Σ_λ g − g`.
    pub fn scattered(&self, g: &[Complex64]) -> Vec<Complex64> {
        self.outgoing.iter().zip(g).map(|(a, b)| a - b).collect()
    }
}

/// Rectangular index box outside of which the coefficients vanish to
/// round-off; far-field quadratures are restricted to it.
#[derive(Debug, Clone, Copy)]
struct SupportBox {
    lo: [usize; 3],
    hi: [usize; 3],
}

impl SupportBox {
    fn of(vtilde: &ScalarField, a: Option<&VectorField>) -> Self {
        let g = *vtilde.grid();
        let n = g.n();
        let mut mag: Vec<f64> = vtilde.data().iter().map(|z| z.norm()).collect();
        if let Some(a) = a {
            for c in a.components() {
                for (i, z) in c.data().iter().enumerate() {
                    mag[i] = mag[i].max(z.norm());
                }
            }
        }
        let top = mag.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 {
            return SupportBox { lo: [0; 3], hi: [0; 3] };
        }
        let cut = top * 1e-14;
        let mut lo = [n; 3];
        let mut hi = [0; 3];
        for (idx, m) in mag.iter().enumerate() {
            if *m > cut {
                let p = g.unravel(idx);
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a] + 1);
                }
            }
        }
        SupportBox { lo, hi }
    }

    fn fourier_at(&self, f: &ScalarField, xi: [f64; 3]) -> Complex64 {
        let g = *f.grid();
        let phase = |a: usize| -> Vec<Complex64> {
            (self.lo[a]..self.hi[a]).map(|i| Complex64::from_polar(1.0, -xi[a] * g.coord(i))).collect()
        };
        let (p0, p1, p2) = (phase(0), phase(1), phase(2));
        let d = f.data();
        let mut total = ZERO;
        for (a, i) in (self.lo[0]..self.hi[0]).enumerate() {
            let mut plane = ZERO;
            for (b, j) in (self.lo[1]..self.hi[1]).enumerate() {
                let o = g.index(i, j, 0);
                let row = &d[o + self.lo[2]..o + self.hi[2]];
                let line: Complex64 = row.iter().zip(&p2).map(|(x, y)| x * y).sum();
                plane += line * p1[b];
            }
            total += plane * p0[a];
        }
        total * g.cell_volume()
    }
}

/// Copies the centered `m³` block of a field on an `n³` lattice.
fn restrict(f: &ScalarField, sub: Grid) -> ScalarField {
    let g = *f.grid();
    let (n, m) = (g.n(), sub.n());
    let off = (n - m) / 2;
    let mut out = Vec::with_capacity(m * m * m);
    for i in 0..m {
        for j in 0..m {
            let o = g.index(i + off, j + off, off);
            out.extend_from_slice(&f.data()[o..o + m]);
        }
    }
    ScalarField::from_vec(sub, out).expect("sized by construction")
}

fn extend(f: &ScalarField, full: Grid) -> ScalarField {
    let (n, m) = (full.n(), f.grid().n());
    let off = (n - m) / 2;
    let mut out = ScalarField::zeros(full);
    for i in 0..m {
        for j in 0..m {
            let o = full.index(i + off, j + off, off);
            out.data_mut()[o..o + m].copy_from_slice(&f.data()[(i * m + j) * m..(i * m + j + 1) * m]);
        }
    }
    out
}

/// Coefficients and resolvent on one computational box.
#[derive(Debug, Clone)]
struct Domain {
    vtilde: ScalarField,
    a: Option<VectorField>,
    window: Vec<f64>,
    support: SupportBox,
    resolvent: OutgoingResolvent,
}

impl Domain {
    fn new(vtilde: ScalarField, a: Option<VectorField>, lambda: f64) -> Result<Self> {
        let grid = *vtilde.grid();
        let l = grid.half_width();
        let window = if a.is_some() { radial_window(grid, 0.6 * l, 0.92 * l) } else { vec![] };
        let support = SupportBox::of(&vtilde, a.as_ref());
        let resolvent = OutgoingResolvent::new(grid, lambda)?;
        Ok(Domain { vtilde, a, window, support, resolvent })
    }

    fn grid(&self) -> Grid {
        *self.vtilde.grid()
    }

    fn apply_v(&self, u: &ScalarField) -> Result<ScalarField> {
        let mut out = u.zip_map(&self.vtilde, |a, b| a * b)?;
        if let Some(a) = &self.a {
            let mut wu = u.clone();
            wu.data_mut().iter_mut().zip(&self.window).for_each(|(z, w)| *z *= w);
            let grad = gradient(&wu);
            let od = out.data_mut();
            for j in 0..3 {
                let gj = grad.component(j).data();
                let aj = a.component(j).data();
                for i in 0..od.len() {
                    // 2 A_j (−i ∂_j u)
                    od[i] += aj[i] * gj[i] * Complex64::new(0.0, -2.0);
                }
            }
        }
        Ok(out)
    }

    fn apply_operator(&self, u: &ScalarField) -> Result<ScalarField> {
        let vu = self.apply_v(u)?;
        let mut out = self.resolvent.apply(&vu)?;
        out.data_mut().iter_mut().zip(u.data()).for_each(|(o, x)| *o += x);
        Ok(out)
    }

    fn solve(&self, incident: &ScalarField, opts: GmresOptions) -> Result<ScatteringSolution> {
        let grid = self.grid();
        let out = gmres(
            |x| {
                let f = ScalarField::from_vec(grid, x.to_vec())?;
                Ok(self.apply_operator(&f)?.into_vec())
            },
            incident.data(),
            opts,
        )?;
        Ok(ScatteringSolution {
            u: ScalarField::from_vec(grid, out.x)?,
            iterations: out.iterations,
            residual: out.residual,
            history: out.history,
        })
    }

    fn transform(&self, u: &ScalarField, sphere: &SphereGrid) -> Result<Vec<Complex64>> {
        let f = self.apply_v(u)?;
        Ok((0..sphere.len()).into_par_iter().map(|q| self.support.fourier_at(&f, sphere.point(q))).collect())
    }
}

/// Lippmann–Schwinger problem `(I + R₀(λ+i0)V(x,D))u = u_in` for one
/// coefficient set and energy.
///
/// Without a magnetic part the system only couples values on the support
/// of `Ṽ`, so it is solved on the smallest centered sub-box holding that
/// support and the full field is recovered as `u_in − R₀Ṽu`.
#[derive(Debug, Clone)]
pub struct ScatteringProblem<'a> {
    coeffs: &'a CoefficientSet,
    full: Domain,
    active: Option<Domain>,
    pub options: GmresOptions,
}

impl<'a> ScatteringProblem<'a> {
    pub fn new(coeffs: &'a CoefficientSet, lambda: f64) -> Result<Self> {
        let grid = *coeffs.grid();
        let magnetic = coeffs.is_magnetic();
        let full = Domain::new(coeffs.vtilde().clone(), magnetic.then(|| coeffs.a().clone()), lambda)?;
        if let Some(a) = &full.a {
            let amax = a.max_abs();
            let outside = a
                .components()
                .iter()
                .flat_map(|c| c.data().iter().enumerate())
                .filter(|(i, _)| full.window[*i] < 1.0)
                .map(|(_, z)| z.norm())
                .fold(0.0, f64::max);
            if outside > 1e-8 * amax {
                log::warn!("magnetic potential reaches the gradient window taper ({:.2e} of its maximum)", outside / amax);
            }
        }
        let mut active = None;
        if !magnetic && !coeffs.is_zero() {
            let n = grid.n();
            let sb = full.support;
            let mut m = 8;
            while m < n {
                let off = (n - m) / 2;
                if (0..3).all(|a| sb.lo[a] >= off && sb.hi[a] <= off + m) {
                    let sub = Grid::new(m, m as f64 * grid.spacing() / 2.0)?;
                    active = Some(Domain::new(restrict(coeffs.vtilde(), sub), None, lambda)?);
                    break;
                }
                m *= 2;
            }
        }
        Ok(ScatteringProblem { coeffs, full, active, options: GmresOptions { tol: 1e-8, restart: 30, max_iter: 300 } })
    }

    /// Disables the sub-box reduction.
    pub fn full_grid_only(mut self) -> Self {
        self.active = None;
        self
    }

    pub fn lambda(&self) -> f64 {
        self.full.resolvent.lambda()
    }

    /// Outgoing resolvent on the full grid.
    pub fn resolvent(&self) -> &OutgoingResolvent {
        &self.full.resolvent
    }

    /// Edge length (points per axis) of the box the linear system lives on.
    pub fn active_points(&self) -> usize {
        self.active.as_ref().unwrap_or(&self.full).grid().n()
    }

    /// `V(x,D)u = 2A·Du + Ṽu`, with `Du` taken spectrally on the windowed field.
    pub fn apply_v(&self, u: &ScalarField) -> Result<ScalarField> {
        self.full.apply_v(u)
    }

    /// `u + R₀V(x,D)u` on the full grid.
    pub fn apply_operator(&self, u: &ScalarField) -> Result<ScalarField> {
        self.full.apply_operator(u)
    }

    pub fn solve(&self, incident: &ScalarField) -> Result<ScatteringSolution> {
        if self.coeffs.is_zero() {
            return Ok(ScatteringSolution { u: incident.clone(), iterations: 0, residual: 0.0, history: vec![] });
        }
        match &self.active {
            None => self.full.solve(incident, self.options),
            Some(d) => {
                let mut sol = d.solve(&restrict(incident, d.grid()), self.options)?;
                let vu = extend(&d.apply_v(&sol.u)?, *incident.grid());
                let mut u = self.full.resolvent.apply(&vu)?;
                u.data_mut().iter_mut().zip(incident.data()).for_each(|(z, w)| *z = w - *z);
                sol.u = u;
                Ok(sol)
            }
        }
    }

    /// `(V(x,D)u)^(√λθ_q)` at every node.
    pub fn scattering_transform(&self, u: &ScalarField, sphere: &SphereGrid) -> Result<Vec<Complex64>> {
        self.full.transform(u, sphere)
    }

    /// Column of `Σ_λ − I` (unsymmetrized) for the plane wave `amp·e^{iκθ·x}`,
    /// solved on the active box only.
    fn plane_wave_response(&self, k: [f64; 3], amp: Complex64, sphere: &SphereGrid) -> Result<(Vec<Complex64>, usize)> {
        let d = self.active.as_ref().unwrap_or(&self.full);
        let wave = PlaneWaveSum { wavevectors: vec![k], amplitudes: vec![amp] };
        let sol = d.solve(&wave.sample(d.grid()), self.options)?;
        Ok((d.transform(&sol.u, sphere)?, sol.iterations))
    }

    pub fn far_field(&self, u: &ScalarField, g: &[Complex64], sphere: &SphereGrid) -> Result<FarFieldData> {
        if g.len() != sphere.len() {
            return Err(Error::DimensionMismatch(format!("expected {} density samples, got {}", sphere.len(), g.len())));
        }
        let fhat = if self.coeffs.is_zero() { vec![ZERO; g.len()] } else { self.scattering_transform(u, sphere)? };
        Ok(FarFieldData {
            sphere: sphere.clone(),
            outgoing: g.iter().zip(&fhat).map(|(a, b)| a - b).collect(),
            incoming: (0..sphere.len()).map(|q| -g[sphere.antipode(q)]).collect(),
            c_lambda: C_LAMBDA,
        })
    }
}

/// Solves with incident wave `P₀(λ)g`.
pub fn solve_scattering(
    coeffs: &CoefficientSet,
    lambda: f64,
    g: &[Complex64],
    sphere: &SphereGrid,
) -> Result<ScatteringSolution> {
    let problem = ScatteringProblem::new(coeffs, lambda)?;
    problem.solve(&herglotz(*coeffs.grid(), g, sphere)?)
}

/// Solves and extracts `Σ_λ g` in one go.
pub fn far_field(coeffs: &CoefficientSet, lambda: f64, g: &[Complex64], sphere: &SphereGrid) -> Result<FarFieldData> {
    let problem = ScatteringProblem::new(coeffs, lambda)?;
    let sol = problem.solve(&herglotz(*coeffs.grid(), g, sphere)?)?;
    problem.far_field(&sol.u, g, sphere)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringMatrixSamples {
    pub sphere: SphereGrid,
    /// Row-major `S[q][q′]`, symmetrized by `√m_q` so that the quadrature
    /// space carries the plain Euclidean inner product.
    pub matrix: Vec<Vec<Complex64>>,
    pub unitarity_defect: f64,
    pub max_iterations: usize,
}

impl ScatteringMatrixSamples {
    pub fn distance_to_identity(&self) -> f64 {
        let n = self.matrix.len();
        let m = DMatrix::from_fn(n, n, |i, j| self.matrix[i][j] - if i == j { Complex64::new(1.0, 0.0) } else { ZERO });
        spectral_norm(&m)
    }

    /// `max |S[q][q′] − S[−q′][−q]|` relative to `‖S − I‖₂`.
    pub fn reciprocity_defect(&self) -> f64 {
        let n = self.matrix.len();
        let mut worst: f64 = 0.0;
        for q in 0..n {
            for p in 0..n {
                let d = self.matrix[q][p] - self.matrix[self.sphere.antipode(p)][self.sphere.antipode(q)];
                worst = worst.max(d.norm());
            }
        }
        let scale = self.distance_to_identity();
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// `‖S*S − I‖₂` from the singular values of `S`.
pub fn unitarity_defect(matrix: &[Vec<Complex64>]) -> f64 {
    let n = matrix.len();
    let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
    m.singular_values().iter().map(|s| (s * s - 1.0).abs()).fold(0.0, f64::max)
}

/// Samples `Σ_λ` column by column from node-delta densities `e_{q′}/m_{q′}`.
pub fn sigma_matrix(coeffs: &CoefficientSet, lambda: f64, sphere: &SphereGrid) -> Result<ScatteringMatrixSamples> {
    if (sphere.lambda() - lambda).abs() > 1e-12 * lambda {
        return Err(Error::InvalidParameter("sphere grid built for a different energy".into()));
    }
    let (np, na) = sphere.counts();
    if np < 6 || na < 12 {
        return Err(Error::InvalidParameter(format!("sphere grid needs at least 6x12 nodes, got {np}x{na}")));
    }
    let n = sphere.len();
    let m = sphere.measure();
    let problem = ScatteringProblem::new(coeffs, lambda)?;
    let columns: Vec<Result<(Vec<Complex64>, usize)>> = (0..n)
        .into_par_iter()
        .map(|p| {
            if coeffs.is_zero() {
                return Ok((vec![ZERO; n], 0));
            }
            // P₀ of the normalized delta is the plain wave (i/4π²) e^{iκθ·x}
            problem.plane_wave_response(sphere.point(p), I / (4.0 * PI * PI), sphere)
        })
        .collect();
    let mut matrix = vec![vec![ZERO; n]; n];
    let mut max_iterations = 0;
    for (p, col) in columns.into_iter().enumerate() {
        let (fhat, its) = col?;
        max_iterations = max_iterations.max(its);
        for q in 0..n {
            let delta = if q == p { Complex64::new(1.0, 0.0) } else { ZERO };
            matrix[q][p] = delta - fhat[q] * (m[q] * m[p]).sqrt();
        }
    }
    let unitarity_defect = unitarity_defect(&matrix);
    Ok(ScatteringMatrixSamples { sphere: sphere.clone(), matrix, unitarity_defect, max_iterations })
}

/// A solution of `(−Δ−λ)u = source` together with its far-field split.
#[derive(Debug, Clone)]
pub struct PairingWave {
    pub field: ScalarField,
    pub gradient: VectorField,
    pub source: ScalarField,
    pub outgoing: Vec<Complex64>,
    pub incoming: Vec<Complex64>,
    /// Exact representation when the wave is a finite plane-wave sum.
    pub exact: Option<PlaneWaveSum>,
}

impl PairingWave {
    fn at(&self, x: [f64; 3]) -> Result<(Complex64, [Complex64; 3])> {
        match &self.exact {
            Some(w) => Ok((w.value(x), w.gradient_at(x))),
            None => {
                let v = self.field.interpolate_cubic(x)?;
                let mut d = [ZERO; 3];
                for (a, da) in d.iter_mut().enumerate() {
                    *da = self.gradient.component(a).interpolate_cubic(x)?;
                }
                Ok((v, d))
            }
        }
    }
}

pub fn herglotz_pair_wave(grid: Grid, g: &[Complex64], sphere: &SphereGrid) -> Result<PairingWave> {
    let waves = herglotz_waves(g, sphere)?;
    Ok(PairingWave {
        field: waves.sample(grid),
        gradient: waves.sample_gradient(grid),
        source: ScalarField::zeros(grid),
        outgoing: g.to_vec(),
        incoming: (0..sphere.len()).map(|q| -g[sphere.antipode(q)]).collect(),
        exact: Some(waves),
    })
}

/// `u = R₀(λ+i0)f`; its gradient is `R₀(∇f)` and `g₊ = f̂(√λθ)`.
pub fn outgoing_pair_wave(resolvent: &OutgoingResolvent, f: &ScalarField, sphere: &SphereGrid) -> Result<PairingWave> {
    let field = resolvent.apply(f)?;
    let df = gradient(f);
    let comps: Vec<ScalarField> = df.components().iter().map(|c| resolvent.apply(c)).collect::<Result<_>>()?;
    let [c0, c1, c2]: [ScalarField; 3] = comps.try_into().map_err(|_| Error::GridMismatch)?;
    Ok(PairingWave {
        field,
        gradient: VectorField::new([c0, c1, c2])?,
        source: f.clone(),
        outgoing: (0..sphere.len()).map(|q| fourier_at(f, sphere.point(q))).collect(),
        incoming: vec![ZERO; sphere.len()],
        exact: None,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairingPoint {
    pub radius: f64,
    /// `(u|(H₀−λ)v) − ((H₀−λ)u|v)` over the ball.
    pub volume: Complex64,
    /// The same quantity as the flux through the sphere `|x| = R`.
    pub flux: Complex64,
    /// `2i√λ c_λ² [(g₊|h₊) − (g₋|h₋)]`.
    pub asymptotic: Complex64,
    /// `|flux − asymptotic|` over the natural scale of the pairing.
    pub residual: f64,
    pub volume_residual: f64,
}

/// Green-identity check at each radius. Inner products are linear in the
/// first slot.
pub fn boundary_pairing_check(
    u: &PairingWave,
    v: &PairingWave,
    sphere: &SphereGrid,
    radii: &[f64],
) -> Result<Vec<PairingPoint>> {
    let k = sphere.wavenumber();
    let c2 = C_LAMBDA * C_LAMBDA;
    let asymptotic = I * (2.0 * k * c2) * (sphere.inner(&u.outgoing, &v.outgoing) - sphere.inner(&u.incoming, &v.incoming));
    let scale = 2.0
        * k
        * c2
        * (sphere.norm(&u.outgoing) * sphere.norm(&v.outgoing) + sphere.norm(&u.incoming) * sphere.norm(&v.incoming));
    let grid = *u.field.grid();
    let (ud, vd, fu, fv) = (u.field.data(), v.field.data(), u.source.data(), v.source.data());
    radii
        .iter()
        .map(|&radius| {
            let mut volume = ZERO;
            for idx in 0..grid.len() {
                let x = grid.point(idx);
                if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < radius * radius {
                    volume += ud[idx] * fv[idx].conj() - fu[idx] * vd[idx].conj();
                }
            }
            volume *= grid.cell_volume();

            let np = ((k * radius).ceil() as usize + 16).max(24);
            let (dirs, wts) = sphere_rule(np, 2 * np);
            let mut flux = ZERO;
            for (d, w) in dirs.iter().zip(&wts) {
                let x = d.map(|c| c * radius);
                let (uu, du) = u.at(x)?;
                let (vv, dv) = v.at(x)?;
                let dru: Complex64 = (0..3).map(|a| du[a] * d[a]).sum();
                let drv: Complex64 = (0..3).map(|a| dv[a] * d[a]).sum();
                flux += (vv.conj() * dru - uu * drv.conj()) * *w;
            }
            flux *= radius * radius;
            let denom = if scale > 0.0 { scale } else { 1.0 };
            Ok(PairingPoint {
                radius,
                volume,
                flux,
                asymptotic,
                residual: (flux - asymptotic).norm() / denom,
                volume_residual: (volume - asymptotic).norm() / denom,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::laplacian;

    fn gaussian(grid: Grid, c: [f64; 3], w: f64) -> ScalarField {
        ScalarField::from_real_fn(grid, |x| {
            let r2 = (0..3).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>();
            (-r2 / (w * w)).exp()
        })
    }

    #[test]
    fn sphere_grid_weights_and_antipodes() {
        let s = SphereGrid::new(2.0, 6, 12).unwrap();
        assert!((s.weights().iter().sum::<f64>() - 4.0 * PI).abs() < 1e-10);
        for q in 0..s.len() {
            let d = s.directions()[q];
            let a = s.directions()[s.antipode(q)];
            assert!((d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - 1.0).abs() < 1e-14);
            assert!((0..3).all(|i| (d[i] + a[i]).abs() < 1e-12));
            assert_eq!(s.antipode(s.antipode(q)), q);
        }
        assert!(SphereGrid::new(0.0, 6, 12).is_err());
        assert!(SphereGrid::new(1.0, 6, 11).is_err());
    }

    #[test]
    fn kernel_transform_matches_radial_quadrature() {
        let (kappa, r) = (1.3, 9.0);
        let (x, w) = crate::quadrature::gauss_legendre_on(400, 0.0, r);
        for k in [0.0, 0.4, 1.3, 1.3 + 1e-9, 2.7, 6.0] {
            let direct: Complex64 = x
                .iter()
                .zip(&w)
                .map(|(t, wt)| {
                    let s = if k == 0.0 { *t } else { (k * t).sin() / k };
                    Complex64::from_polar(1.0, kappa * t) * s * *wt
                })
                .sum();
            let got = truncated_kernel_hat(k, kappa, r);
            assert!((got - direct).norm() < 1e-7 * (1.0 + direct.norm()), "k={k}: {got} vs {direct}");
        }
    }

    #[test]
    fn resolvent_inverts_helmholtz_on_decaying_fields() {
        let grid = Grid::new(32, 8.0).unwrap();
        let lambda = 1.0;
        let g = gaussian(grid, [0.5, -0.3, 0.2], 1.4);
        let lap = laplacian(&g);
        let f = lap.zip_map(&g, |l, v| -l - v * lambda).unwrap();
        let (u, res) = apply_r0_out(&f, lambda).unwrap();
        let err = u.zip_map(&g, |a, b| a - b).unwrap().norm_l2() / g.norm_l2();
        assert!(err < 1e-3, "relative error {err}");
        assert!(res < 1e-3, "helmholtz residual {res}");
        let zero = OutgoingResolvent::new(grid, lambda).unwrap().apply(&ScalarField::zeros(grid)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        assert!(OutgoingResolvent::new(grid, -1.0).is_err());
    }

    #[test]
    fn outgoing_far_field_has_spherical_wave_form() {
        let grid = Grid::new(64, 12.0).unwrap();
        let lambda = 1.0;
        let f = gaussian(grid, [0.0; 3], 0.8);
        let r0 = OutgoingResolvent::new(grid, lambda).unwrap();
        let u = r0.apply(&f).unwrap();
        let radius = 0.75 * grid.half_width();
        for d in [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [-0.48, 0.6, 0.64]] {
            let x = d.map(|c: f64| c * radius);
            let got = u.interpolate_cubic(x).unwrap();
            let fhat = fourier_at(&f, d.map(|c| c * lambda.sqrt()));
            let expect = fhat * Complex64::from_polar(C_LAMBDA / radius, lambda.sqrt() * radius);
            assert!((got - expect).norm() < 0.02 * expect.norm(), "{d:?}: {got} vs {expect}");
        }
    }

    #[test]
    fn herglotz_constant_density_is_spherical_average() {
        // ∫_{S²} e^{iκθ·x} dθ = 4π sin(κr)/(κr)
        let grid = Grid::new(16, 4.0).unwrap();
        let sphere = SphereGrid::new(1.0, 16, 32).unwrap();
        let g = vec![Complex64::new(1.0, 0.0); sphere.len()];
        let u = herglotz(grid, &g, &sphere).unwrap();
        let k = 1.0;
        let pref = I / (4.0 * PI * PI) * (0.5 * k);
        for idx in (0..grid.len()).step_by(37) {
            let x = grid.point(idx);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let avg = if r == 0.0 { 4.0 * PI } else { 4.0 * PI * (k * r).sin() / (k * r) };
            assert!((u.data()[idx] - pref * avg).norm() < 1e-10);
        }
        assert_eq!(herglotz(grid, &vec![ZERO; sphere.len()], &sphere).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn herglotz_waves_solve_helmholtz() {
        // degree-one harmonic z; the Laplacian is checked where the window is flat
        let grid = Grid::new(64, 12.0).unwrap();
        let sphere = SphereGrid::new(1.0, 10, 20).unwrap();
        let g: Vec<Complex64> = sphere.directions().iter().map(|d| Complex64::new(d[2], 0.0)).collect();
        let waves = herglotz_waves(&g, &sphere).unwrap();
        assert!(waves.helmholtz_defect(1.0) < 1e-8);
        let u = waves.sample(grid);
        let w = radial_window(grid, 0.2 * grid.half_width(), grid.half_width());
        let mut wu = u.clone();
        wu.data_mut().iter_mut().zip(&w).for_each(|(z, s)| *z *= s);
        let lap = laplacian(&wu);
        let mut worst: f64 = 0.0;
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() < 0.2 * grid.half_width() {
                worst = worst.max((-lap.data()[idx] - u.data()[idx]).norm());
            }
        }
        assert!(worst < 1e-4 * u.max_abs(), "{worst} vs {}", u.max_abs());
    }

    #[test]
    fn zero_coefficients_give_identity_scattering() {
        let grid = Grid::new(16, 6.0).unwrap();
        let coeffs = CoefficientSet::zero(grid, 1.0).unwrap();
        let sphere = SphereGrid::new(1.0, 6, 12).unwrap();
        let g: Vec<Complex64> = (0..sphere.len()).map(|q| Complex64::new(q as f64, 1.0)).collect();
        let ff = far_field(&coeffs, 1.0, &g, &sphere).unwrap();
        assert_eq!(ff.outgoing, g);
        assert_eq!(ff.c_lambda, 1.0 / (4.0 * PI));
        let s = sigma_matrix(&coeffs, 1.0, &sphere).unwrap();
        assert_eq!(s.distance_to_identity(), 0.0);
        assert!(s.unitarity_defect < 1e-12);
        assert!(sigma_matrix(&coeffs, 1.0, &SphereGrid::new(1.0, 4, 8).unwrap()).is_err());
    }
    fn weak_potential(grid: Grid, amp: f64) -> CoefficientSet {
        use crate::coeffs::{make_test_coefficients, Bump, GeneratorSpec};
        let spec = GeneratorSpec {
            magnetic: vec![],
            electric: vec![Bump::new(amp, [0.3, 0.0, -0.2], 0.9), Bump::new(0.5 * amp, [-0.5, 0.4, 0.3], 0.7)],
        };
        make_test_coefficients(grid, 1.0, &spec).unwrap()
    }

    fn rel(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn sub_box_solve_matches_full_grid_solve() {
        use crate::coeffs::{make_test_coefficients, Bump, GeneratorSpec};
        let grid = Grid::new(64, 8.0).unwrap();
        let spec = GeneratorSpec { magnetic: vec![], electric: vec![Bump::new(0.5, [0.1, 0.0, -0.1], 0.45)] };
        let coeffs = make_test_coefficients(grid, 1.0, &spec).unwrap();
        let sphere = SphereGrid::new(1.0, 6, 12).unwrap();
        let g: Vec<Complex64> = sphere.directions().iter().map(|d| Complex64::new(1.0 + d[2], d[0])).collect();
        let inc = herglotz(grid, &g, &sphere).unwrap();
        let reduced = ScatteringProblem::new(&coeffs, 1.0).unwrap();
        assert_eq!(reduced.active_points(), 32);
        let full = ScatteringProblem::new(&coeffs, 1.0).unwrap().full_grid_only();
        let a = reduced.solve(&inc).unwrap();
        let b = full.solve(&inc).unwrap();
        assert!(b.residual <= 1e-8);
        let err = (&a.u - &b.u).norm_l2() / b.u.norm_l2();
        assert!(err < 1e-7, "{err}");
        let r = full.apply_operator(&a.u).unwrap();
        assert!((&r - &inc).norm_l2() / inc.norm_l2() < 1e-7);
    }

    #[test]
    fn weak_potential_matches_born_terms() {
        let grid = Grid::new(32, 8.0).unwrap();
        let coeffs = weak_potential(grid, 1e-2);
        let sphere = SphereGrid::new(1.0, 6, 12).unwrap();
        let g: Vec<Complex64> = sphere.directions().iter().map(|d| Complex64::new(1.0 + d[2], d[0])).collect();
        let p = ScatteringProblem::new(&coeffs, 1.0).unwrap();
        let inc = herglotz(grid, &g, &sphere).unwrap();
        let sol = p.solve(&inc).unwrap();
        // independent Born term: plain products and the resolvent, no solver
        let vinc = inc.zip_map(coeffs.v(), |a, b| a * b).unwrap();
        let born = p.resolvent().apply(&vinc).unwrap();
        let err = (&(&sol.u - &inc) + &born).norm_l2() / born.norm_l2();
        assert!(err < 0.05, "near field {err}");
        let ff = p.far_field(&sol.u, &g, &sphere).unwrap();
        let born_far: Vec<Complex64> = (0..sphere.len()).map(|q| -fourier_at(&vinc, sphere.point(q))).collect();
        let e = rel(&ff.scattered(&g), &born_far);
        assert!(e < 0.05, "far field {e}");
        assert!(ff.incoming.iter().enumerate().all(|(q, z)| *z == -g[sphere.antipode(q)]));
    }

    #[test]
    fn gauge_transformed_coefficients_scatter_identically() {
        use crate::coeffs::{make_test_coefficients, Bump, GeneratorSpec, MagneticTerm};
        let grid = Grid::new(32, 8.0).unwrap();
        let spec = GeneratorSpec {
            magnetic: vec![MagneticTerm::Swirl { bump: Bump::new(0.3, [0.2, 0.1, 0.0], 0.8), axis: [0.0, 0.0, 1.0] }],
            electric: vec![Bump::new(0.2, [0.0, 0.3, 0.0], 0.9)],
        };
        let coeffs = make_test_coefficients(grid, 1.0, &spec).unwrap();
        let alpha = gaussian(grid, [0.4, 0.0, -0.2], 1.0).scale(Complex64::new(0.7, 0.0));
        let gauged = coeffs.gauge_transformed(&alpha).unwrap();
        let sphere = SphereGrid::new(1.0, 6, 12).unwrap();
        let g: Vec<Complex64> = sphere.directions().iter().map(|d| Complex64::new(1.0 + d[2], d[0])).collect();
        let a = far_field(&coeffs, 1.0, &g, &sphere).unwrap();
        let b = far_field(&gauged, 1.0, &g, &sphere).unwrap();
        let e = rel(&b.scattered(&g), &a.scattered(&g));
        assert!(e < 1e-2, "{e}");
    }

    #[test]
    fn scattering_matrix_is_unitary_and_reciprocal() {
        let grid = Grid::new(32, 8.0).unwrap();
        let coeffs = weak_potential(grid, 0.1);
        let sphere = SphereGrid::new(1.0, 6, 12).unwrap();
        let s = sigma_matrix(&coeffs, 1.0, &sphere).unwrap();
        assert!(s.distance_to_identity() > 1e-3);
        assert!(s.unitarity_defect < 1e-2, "{}", s.unitarity_defect);
        assert!(s.reciprocity_defect() < 1e-2, "{}", s.reciprocity_defect());
    }

    #[test]
    fn green_identity_for_free_and_outgoing_pairs() {
        let grid = Grid::new(32, 8.0).unwrap();
        let sphere = SphereGrid::new(1.0, 10, 20).unwrap();
        let g1: Vec<Complex64> = sphere.directions().iter().map(|d| Complex64::new(d[2], 0.0)).collect();
        let g2: Vec<Complex64> = sphere.directions().iter().map(|d| Complex64::new(d[0] * d[1], d[0])).collect();
        let u = herglotz_pair_wave(grid, &g1, &sphere).unwrap();
        let v = herglotz_pair_wave(grid, &g2, &sphere).unwrap();
        for p in boundary_pairing_check(&u, &v, &sphere, &[3.0, 5.6]).unwrap() {
            assert!(p.asymptotic.norm() < 1e-12 && p.residual < 1e-8, "{p:?}");
        }
        let r0 = OutgoingResolvent::new(grid, 1.0).unwrap();
        let f = gaussian(grid, [0.3, 0.0, -0.2], 0.9);
        let w = outgoing_pair_wave(&r0, &f, &sphere).unwrap();
        let pts = boundary_pairing_check(&w, &v, &sphere, &[1.0, 2.0, 5.6]).unwrap();
        assert!(pts[0].residual > pts[1].residual && pts[1].residual > pts[2].residual);
        assert!(pts[2].residual < 0.02, "{:?}", pts[2]);
        assert!(pts[2].volume_residual < 1e-6);
    }
}
