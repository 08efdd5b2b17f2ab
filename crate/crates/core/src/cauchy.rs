//! Solutions of `(γ₁ + iγ₂)·∇φ = f` by the planar Cauchy transform
//!
//! ```text
//! φ(x) = (1/2π) ∫ f(x − y₁γ₁ − y₂γ₂) / (y₁ + i y₂) dy₁ dy₂
//! ```
//!
//! evaluated slice by slice. The kernel is truncated at a radius covering the
//! box diagonal; the truncated kernel has the closed-form transform
//! `(1 − J₀(|k|R)) / (i(k₁ + i k₂))`, so the convolution is exact for the
//! trigonometric interpolant of `f` once the slice is zero padded threefold.

use crate::error::{Error, Result};
use crate::grid::{fft::fft2, ScalarField, VectorField};
use num_complex::Complex64;
use std::f64::consts::PI;

const PAD: usize = 3;
const ORTHO_TOL: f64 = 1e-12;

/// Orthonormal pair `(γ₁, γ₂)` spanning the plane of integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransversePlane {
    gamma1: [f64; 3],
    gamma2: [f64; 3],
}

impl TransversePlane {
    pub fn new(gamma1: [f64; 3], gamma2: [f64; 3]) -> Result<Self> {
        let n1 = dot(gamma1, gamma1).sqrt();
        let n2 = dot(gamma2, gamma2).sqrt();
        if (n1 - 1.0).abs() > ORTHO_TOL || (n2 - 1.0).abs() > ORTHO_TOL || dot(gamma1, gamma2).abs() > ORTHO_TOL {
            return Err(Error::FrameNotOrthonormal);
        }
        Ok(TransversePlane { gamma1, gamma2 })
    }

    pub fn gamma1(&self) -> [f64; 3] {
        self.gamma1
    }

    pub fn gamma2(&self) -> [f64; 3] {
        self.gamma2
    }

    /// `(axis, sign)` of each vector when both are signed coordinate axes.
    pub fn axes(&self) -> Option<[(usize, f64); 2]> {
        let one = |v: [f64; 3]| {
            let i = (0..3).find(|&i| v[i].abs() > 0.5)?;
            let rest_zero = (0..3).all(|j| j == i || v[j] == 0.0);
            (rest_zero && (v[i].abs() - 1.0).abs() <= ORTHO_TOL).then_some((i, v[i].signum()))
        };
        Some([one(self.gamma1)?, one(self.gamma2)?])
    }

    /// Axis normal to the plane.
    pub fn normal_axis(&self) -> Option<usize> {
        let [(a, _), (b, _)] = self.axes()?;
        Some(3 - a - b)
    }

    /// `(γ₁ + iγ₂)` as a complex 3-vector.
    pub fn complex_direction(&self) -> [Complex64; 3] {
        std::array::from_fn(|j| Complex64::new(self.gamma1[j], self.gamma2[j]))
    }
}

/// A solution `φ` of the ∂̄-type equation together with its measured residual.
#[derive(Debug, Clone)]
pub struct PhaseFunction {
    pub phi: ScalarField,
    pub plane: TransversePlane,
    pub source: String,
    /// Relative residual of the defining equation on the interior lattice
    /// (eighth-order differences).
    pub residual: f64,
    /// Relative residual with spectral derivatives on the padded lattice.
    pub spectral_residual: f64,
}

/// Cauchy transform of `f` over the planes parallel to `plane`.
pub fn cauchy_transform(f: &ScalarField, plane: TransversePlane) -> Result<PhaseFunction> {
    let (phi, spectral_residual) = solve_planes(f, plane)?;
    let residual = residual_fd(&phi, f, plane)?;
    Ok(PhaseFunction { phi, plane, source: "field".into(), residual, spectral_residual })
}

fn solve_planes(f: &ScalarField, plane: TransversePlane) -> Result<(ScalarField, f64)> {
    let [(a, sa), (b, sb)] = plane.axes().ok_or(Error::PlaneNotAxisAligned)?;
    let c = 3 - a - b;
    let g = *f.grid();
    let n = g.n();
    let m = PAD * n;
    let h = g.spacing();
    let radius = 2.0 * 2f64.sqrt() * g.half_width();
    let dk = 2.0 * PI / (m as f64 * h);
    let freq = |i: usize| {
        let i = i as i64;
        let m = m as i64;
        (if i < m / 2 { i } else { i - m }) as f64 * dk
    };

    // kernel symbol on the padded dual lattice, rows along axis a, and the
    // symbol of (γ₁ + iγ₂)·∇ used for the residual
    let mut kernel = vec![Complex64::new(0.0, 0.0); m * m];
    let mut dbar = vec![Complex64::new(0.0, 0.0); m * m];
    for p in 0..m {
        let ka = freq(p);
        for q in 0..m {
            let kb = freq(q);
            let k = (ka * ka + kb * kb).sqrt();
            if k == 0.0 {
                continue;
            }
            let sym = Complex64::new(0.0, 1.0) * Complex64::new(sa * ka, sb * kb);
            let norm = 1.0 / (m * m) as f64;
            kernel[p * m + q] = (1.0 - libm::j0(k * radius)) * norm / sym;
            dbar[p * m + q] = sym;
        }
    }

    let mut out = ScalarField::zeros(g);
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
    let mut deriv = vec![Complex64::new(0.0, 0.0); m * m];
    let (mut num, mut den) = (0.0, 0.0);
    let idx = |ia: usize, ib: usize, ic: usize| {
        let mut t = [0usize; 3];
        t[a] = ia;
        t[b] = ib;
        t[c] = ic;
        g.index(t[0], t[1], t[2])
    };
    for ic in 0..n {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let mut any = false;
        for ia in 0..n {
            for ib in 0..n {
                let v = f.data()[idx(ia, ib, ic)];
                any |= v != Complex64::new(0.0, 0.0);
                buf[ia * m + ib] = v;
            }
        }
        if !any {
            continue;
        }
        fft2(&mut buf, [m, m], false);
        buf.iter_mut().zip(&kernel).for_each(|(z, k)| *z *= k);
        deriv.iter_mut().zip(buf.iter().zip(&dbar)).for_each(|(d, (z, s))| *d = z * s);
        fft2(&mut buf, [m, m], true);
        fft2(&mut deriv, [m, m], true);
        let data = out.data_mut();
        for ia in 0..n {
            for ib in 0..n {
                let i = idx(ia, ib, ic);
                data[i] = buf[ia * m + ib];
                let rhs = f.data()[i];
                num += (deriv[ia * m + ib] - rhs).norm_sqr();
                den += rhs.norm_sqr();
            }
        }
    }
    let residual = if den == 0.0 { 0.0 } else { (num / den).sqrt() };
    Ok((out, residual))
}

/// `−(γ₁ + iγ₂)·A`.
fn phase_source(a: &VectorField, plane: &TransversePlane) -> ScalarField {
    a.dot_const(plane.complex_direction()).scale(Complex64::new(-1.0, 0.0))
}

/// `φ` with `(ν₁ + iν₂)·∇φ = −(ν₁ + iν₂)·A`.
pub fn phase_phi(a: &VectorField, nu1: [f64; 3], nu2: [f64; 3]) -> Result<PhaseFunction> {
    let plane = TransversePlane::new(nu1, nu2)?;
    let f = phase_source(a, &plane);
    let mut p = cauchy_transform(&f, plane)?;
    p.source = "-(nu1 + i nu2).A".into();
    Ok(p)
}

/// `Φ` with `(μ + iν)·∇Φ = −(μ + iν)·(A − A′)`.
pub fn phase_big_phi(a: &VectorField, a_prime: &VectorField, mu: [f64; 3], nu: [f64; 3]) -> Result<PhaseFunction> {
    let plane = TransversePlane::new(mu, nu)?;
    let f = phase_source(&a.sub(a_prime)?, &plane);
    let mut p = cauchy_transform(&f, plane)?;
    p.source = "-(mu + i nu).(A - A')".into();
    Ok(p)
}

/// `‖(γ₁ + iγ₂)·∇φ − f‖ / ‖f‖` with eighth-order central differences,
/// evaluated away from the four outermost lattice layers.
pub fn residual_fd(phi: &ScalarField, f: &ScalarField, plane: TransversePlane) -> Result<f64> {
    phi.check_grid(f)?;
    let g = *phi.grid();
    let n = g.n();
    let h = g.spacing();
    let dir = plane.complex_direction();
    let d = phi.data();
    let (mut num, mut den) = (0.0, 0.0);
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    for i in 4..n - 4 {
        for j in 4..n - 4 {
            for k in 4..n - 4 {
                let mut lhs = Complex64::new(0.0, 0.0);
                for (axis, coef) in dir.iter().enumerate() {
                    if coef.norm() == 0.0 {
                        continue;
                    }
                    let at = |s: isize| {
                        let mut t = [i as isize, j as isize, k as isize];
                        t[axis] += s;
                        d[g.index(t[0] as usize, t[1] as usize, t[2] as usize)]
                    };
                    let deriv = (1..=4).map(|s| (at(s as isize) - at(-(s as isize))) * C[s - 1]).sum::<Complex64>() / h;
                    lhs += coef * deriv;
                }
                let rhs = f.data()[g.index(i, j, k)];
                num += (lhs - rhs).norm_sqr();
                den += rhs.norm_sqr();
            }
        }
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Whether `v` is a signed coordinate axis.
pub fn is_axis_aligned(v: [f64; 3]) -> bool {
    let nz = v.iter().filter(|c| **c != 0.0).count();
    nz == 1 && v.iter().any(|c| (c.abs() - 1.0).abs() <= ORTHO_TOL)
}
