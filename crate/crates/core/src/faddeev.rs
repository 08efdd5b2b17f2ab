//! Complex frequencies `ρ ∈ ℂ³` with `ρ·ρ = λ` and the Faddeev operator
//! `G_ρ`, the Fourier multiplier `1/(ξ·ξ + 2ρ·ξ)` inverting
//! `P_ρ = −Δ + 2ρ·D`.
//!
//! The symbol vanishes on a real codimension-two set. To stay off it the
//! dual lattice is shifted by half a dual spacing along `Im ρ`: fields are
//! demodulated by `e^{−iω·x}`, `ω = (π/2L)·ν₂`, before the periodic FFT and
//! modulated back afterwards.

use crate::error::{Error, Result};
use crate::grid::{fft::fft3, Grid, ScalarField};
use num_complex::Complex64;
use serde::Serialize;

const FRAME_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexFrequency {
    pub rho: [Complex64; 3],
    pub h: f64,
    pub nu1: [f64; 3],
    pub nu2: [f64; 3],
    pub lambda: f64,
}

impl ComplexFrequency {
    /// Wraps an arbitrary `ρ` with `ρ·ρ = λ` and `Im ρ ≠ 0`, deriving
    /// `h = 1/|Re ρ|`, `ν₁ = Re ρ/|Re ρ|`, `ν₂ = Im ρ/|Im ρ|`.
    pub fn from_vector(rho: [Complex64; 3], lambda: f64) -> Result<Self> {
        let q = bilinear(rho, rho);
        if (q - lambda).norm() > 1e-10 * lambda.abs().max(norm_c(rho).powi(2)) {
            return Err(Error::InvalidParameter(format!("rho.rho = {q} differs from lambda = {lambda}")));
        }
        let re = rho.map(|z| z.re);
        let im = rho.map(|z| z.im);
        let (nr, ni) = (norm(re), norm(im));
        if ni == 0.0 || nr == 0.0 {
            return Err(Error::InvalidParameter("rho must have nonzero real and imaginary parts".into()));
        }
        Ok(ComplexFrequency { rho, h: 1.0 / nr, nu1: re.map(|c| c / nr), nu2: im.map(|c| c / ni), lambda })
    }

    /// `|ρ| = (Σ |ρ_j|²)^{1/2}`.
    pub fn modulus(&self) -> f64 {
        norm_c(self.rho)
    }

    pub fn dot_rho(&self) -> Complex64 {
        bilinear(self.rho, self.rho)
    }

    /// `ρ·x` for real `x`.
    pub fn phase(&self, x: [f64; 3]) -> Complex64 {
        self.rho[0] * x[0] + self.rho[1] * x[1] + self.rho[2] * x[2]
    }
}

/// `ρ = h⁻¹(ν₁ + i(1 − h²λ)^{1/2} ν₂)`.
pub fn make_rho(h: f64, lambda: f64, nu1: [f64; 3], nu2: [f64; 3]) -> Result<ComplexFrequency> {
    check_frame(nu1, nu2)?;
    if !(h > 0.0) || !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("need h > 0 and lambda > 0, got h = {h}, lambda = {lambda}")));
    }
    let hl = h * h * lambda;
    if hl >= 1.0 {
        return Err(Error::DegenerateFrequency(hl));
    }
    let s = (1.0 - hl).sqrt();
    let rho = std::array::from_fn(|j| Complex64::new(nu1[j], s * nu2[j]) / h);
    Ok(ComplexFrequency { rho, h, nu1, nu2, lambda })
}

pub fn check_frame(a: [f64; 3], b: [f64; 3]) -> Result<()> {
    if (norm(a) - 1.0).abs() > FRAME_TOL || (norm(b) - 1.0).abs() > FRAME_TOL || dot(a, b).abs() > FRAME_TOL {
        return Err(Error::FrameNotOrthonormal);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplierDiagnostics {
    pub min_symbol_modulus: f64,
    pub regularization_applied: bool,
    /// Lattice shift `ω` applied to the dual lattice.
    pub offset: [f64; 3],
}

/// Precomputed `G_ρ` on one grid.
#[derive(Debug, Clone)]
pub struct FaddeevMultiplier {
    grid: Grid,
    rho: ComplexFrequency,
    offset: [f64; 3],
    /// `1/(ξ·ξ + 2ρ·ξ)` over the shifted lattice, scaled by `1/N`, FFT order.
    inverse_symbol: Vec<Complex64>,
    /// `e^{iω·x}` at the lattice points.
    modulation: Vec<Complex64>,
    diagnostics: MultiplierDiagnostics,
}

impl FaddeevMultiplier {
    pub fn new(grid: Grid, rho: ComplexFrequency) -> Result<Self> {
        let dk = grid.dual_spacing();
        let offset = rho.nu2.map(|c| 0.5 * dk * c);
        let mut min_symbol = f64::INFINITY;
        let inv_n = 1.0 / grid.len() as f64;
        let mut inverse_symbol = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let xi = shifted(grid.wavevector(idx), offset);
            let s = symbol(xi, &rho);
            min_symbol = min_symbol.min(s.norm());
            inverse_symbol.push(inv_n / s);
        }
        if !(min_symbol > 1e-6 * rho.modulus()) {
            return Err(Error::CharacteristicVariety { min_symbol });
        }
        let modulation =
            (0..grid.len()).map(|i| Complex64::from_polar(1.0, dot(offset, grid.point(i)))).collect();
        let diagnostics = MultiplierDiagnostics { min_symbol_modulus: min_symbol, regularization_applied: false, offset };
        Ok(FaddeevMultiplier { grid, rho, offset, inverse_symbol, modulation, diagnostics })
    }

    pub fn diagnostics(&self) -> MultiplierDiagnostics {
        self.diagnostics
    }

    pub fn rho(&self) -> &ComplexFrequency {
        &self.rho
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn demodulated_spectrum(&self, f: &ScalarField) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = f.data().iter().zip(&self.modulation).map(|(a, m)| a * m.conj()).collect();
        fft3(&mut d, self.grid.dims(), false);
        d
    }

    fn back(&self, mut d: Vec<Complex64>) -> ScalarField {
        fft3(&mut d, self.grid.dims(), true);
        d.iter_mut().zip(&self.modulation).for_each(|(a, m)| *a *= m);
        ScalarField::from_vec(self.grid, d).expect("length preserved")
    }

    /// `u = G_ρ f`.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let mut d = self.demodulated_spectrum(f);
        d.iter_mut().zip(&self.inverse_symbol).for_each(|(a, s)| *a *= s);
        Ok(self.back(d))
    }

    /// `u = G_ρ f` together with `D_j u = −i∂_j u`, all from one forward transform.
    pub fn apply_with_derivatives(&self, f: &ScalarField) -> Result<(ScalarField, [ScalarField; 3])> {
        self.check(f)?;
        let mut d = self.demodulated_spectrum(f);
        d.iter_mut().zip(&self.inverse_symbol).for_each(|(a, s)| *a *= s);
        let ders = std::array::from_fn(|j| {
            let e: Vec<Complex64> = d
                .iter()
                .enumerate()
                .map(|(idx, a)| a * (self.grid.wavenumber(self.grid.unravel(idx)[j]) + self.offset[j]))
                .collect();
            self.back(e)
        });
        Ok((self.back(d), ders))
    }

    /// The discrete `P_ρ = −Δ + 2ρ·D` on the same shifted lattice.
    pub fn apply_p(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check(u)?;
        let mut d = self.demodulated_spectrum(u);
        let inv_n = 1.0 / self.grid.len() as f64;
        for (idx, a) in d.iter_mut().enumerate() {
            *a *= symbol(shifted(self.grid.wavevector(idx), self.offset), &self.rho) * inv_n;
        }
        Ok(self.back(d))
    }

    /// `D_j u` on the shifted lattice.
    pub fn derivatives(&self, u: &ScalarField) -> Result<[ScalarField; 3]> {
        self.check(u)?;
        let d = self.demodulated_spectrum(u);
        let inv_n = 1.0 / self.grid.len() as f64;
        Ok(std::array::from_fn(|j| {
            let e: Vec<Complex64> = d
                .iter()
                .enumerate()
                .map(|(idx, a)| a * (self.grid.wavenumber(self.grid.unravel(idx)[j]) + self.offset[j]) * inv_n)
                .collect();
            self.back(e)
        }))
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// `G_ρ f` with diagnostics.
pub fn apply_g_rho(f: &ScalarField, rho: &ComplexFrequency) -> Result<(ScalarField, MultiplierDiagnostics)> {
    let m = FaddeevMultiplier::new(*f.grid(), *rho)?;
    Ok((m.apply(f)?, m.diagnostics()))
}

fn symbol(xi: [f64; 3], rho: &ComplexFrequency) -> Complex64 {
    let xx = dot(xi, xi);
    Complex64::new(xx, 0.0) + 2.0 * (rho.rho[0] * xi[0] + rho.rho[1] * xi[1] + rho.rho[2] * xi[2])
}

fn shifted(k: [f64; 3], w: [f64; 3]) -> [f64; 3] {
    [k[0] + w[0], k[1] + w[1], k[2] + w[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn norm_c(a: [Complex64; 3]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn bilinear(a: [Complex64; 3], b: [Complex64; 3]) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
