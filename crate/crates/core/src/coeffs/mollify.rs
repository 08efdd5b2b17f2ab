use crate::error::{Error, Result};
use crate::grid::{fft::fft3, Grid, ScalarField, VectorField};
use crate::quadrature::gauss_legendre_on;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

pub const DEFAULT_SIGMA0: f64 = 0.25;

/// Semiclassical mollification scale `δ = h^{σ₀}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierParams {
    sigma0: f64,
    h: f64,
}

impl MollifierParams {
    pub fn new(sigma0: f64, h: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0 < 1.0 / 3.0) {
            return Err(Error::InvalidParameter(format!("sigma0 must lie in (0, 1/3), got {sigma0}")));
        }
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidParameter(format!("h must lie in (0, 1], got {h}")));
        }
        Ok(MollifierParams { sigma0, h })
    }

    pub fn with_default_sigma(h: f64) -> Result<Self> {
        Self::new(DEFAULT_SIGMA0, h)
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn delta(&self) -> f64 {
        self.h.powf(self.sigma0)
    }
}

fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

struct Radial {
    r: Vec<f64>,
    w: Vec<f64>,
    mass: f64,
}

fn radial() -> &'static Radial {
    static RULE: OnceLock<Radial> = OnceLock::new();
    RULE.get_or_init(|| {
        let (r, w) = gauss_legendre_on(128, 0.0, 1.0);
        let mass = 4.0 * PI * r.iter().zip(&w).map(|(r, w)| w * r * r * bump(*r)).sum::<f64>();
        Radial { r, w, mass }
    })
}

/// Unit-mass bump `χ(x) = c·exp(-1/(1-|x|²))` supported in the unit ball.
pub fn chi(x: [f64; 3]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    bump(r) / radial().mass
}

/// Fourier transform of [`chi`] at `|ξ| = s`.
pub fn chi_hat(s: f64) -> f64 {
    let q = radial();
    let sum: f64 = q
        .r
        .iter()
        .zip(&q.w)
        .map(|(&r, &w)| {
            let sr = s * r;
            let sinc = if sr.abs() < 1e-8 { 1.0 - sr * sr / 6.0 } else { sr.sin() / sr };
            w * r * r * bump(r) * sinc
        })
        .sum();
    4.0 * PI * sum / q.mass
}

/// Multiplies the spectrum of `f` by `χ̂(δ|k|)`; radial values are cached per
/// integer `|m|²` of the dual lattice.
fn convolve(f: &ScalarField, delta: f64) -> ScalarField {
    let g = *f.grid();
    let mut data = f.data().to_vec();
    fft3(&mut data, g.dims(), false);
    let mut cache: HashMap<i64, f64> = HashMap::new();
    let inv_n = 1.0 / g.len() as f64;
    for (idx, z) in data.iter_mut().enumerate() {
        let [i, j, k] = g.unravel(idx);
        let m2 = [i, j, k].iter().map(|&t| g.frequency_index(t).pow(2)).sum::<i64>();
        let m = *cache.entry(m2).or_insert_with(|| chi_hat(delta * g.dual_spacing() * (m2 as f64).sqrt()));
        *z *= m * inv_n;
    }
    fft3(&mut data, g.dims(), true);
    ScalarField::from_vec(g, data).expect("length preserved")
}

/// Splits `A = A♯ + A♭` with `A♯ = A ∗ χ_δ`, `χ_δ(x) = δ^{-3} χ(x/δ)`.
pub fn mollify(a: &VectorField, p: MollifierParams) -> Result<(VectorField, VectorField)> {
    let g: Grid = *a.grid();
    let delta = p.delta();
    if delta < g.spacing() {
        return Err(Error::MollifierUnderResolved { delta, spacing: g.spacing() });
    }
    let sharp = VectorField::new(std::array::from_fn(|j| {
        let c = convolve(&a.components()[j], delta);
        let real = a.components()[j].data().iter().all(|z| z.im == 0.0);
        if real {
            c.map(|z| Complex64::new(z.re, 0.0))
        } else {
            c
        }
    }))?;
    let flat = a.sub(&sharp)?;
    Ok((sharp, flat))
}
