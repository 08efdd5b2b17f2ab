//! Recovery of `(dA)^` and `V̂` on the frequency shell from the pairing of
//! CGO solutions for two coefficient sets.
//!
//! Transforms here use `F(ξ) = ∫ e^{ix·ξ} f(x) dx`, the convention in which
//! the pairing produces them; with it `(dA)^_{jk} = −i(ξ_j F[A_k] − ξ_k F[A_j])`.

use crate::cauchy::phase_big_phi;
use crate::cgo::{first_order, solve_cgo, CgoOptions, CgoSolution};
use crate::coeffs::{curl, CoefficientSet};
use crate::error::{Error, Result};
use crate::faddeev::ComplexFrequency;
use crate::grid::{fourier_at, ScalarField, VectorField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);
const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Open interval `(2√λ, 2√(λ + γ₀²/4))` of admissible `|ξ|`.
pub fn shell_bounds(lambda: f64, gamma0: f64) -> (f64, f64) {
    (2.0 * lambda.sqrt(), 2.0 * (lambda + gamma0 * gamma0 / 4.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconFrame {
    pub xi: [f64; 3],
    pub mu: [f64; 3],
    pub nu: [f64; 3],
    pub lambda: f64,
    pub gamma0: f64,
}

impl ReconFrame {
    /// `√(|ξ|²/4 − λ)`, the lower end of admissible `t` (zero inside the
    /// energy sphere's double).
    pub fn threshold(&self) -> f64 {
        (dot(self.xi, self.xi) / 4.0 - self.lambda).max(0.0).sqrt()
    }

    /// Same `ξ` with the roles of `μ` and `ν` exchanged.
    pub fn swapped(&self) -> Self {
        ReconFrame { mu: self.nu, nu: self.mu, ..*self }
    }

    /// In-plane rotation `(μ, ν) → (cos θ μ + sin θ ν, −sin θ μ + cos θ ν)`.
    pub fn rotated(&self, theta: f64) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        let clean = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
        let mu = std::array::from_fn(|j| clean(c * self.mu[j] + s * self.nu[j]));
        let nu = std::array::from_fn(|j| clean(-s * self.mu[j] + c * self.nu[j]));
        ReconFrame { mu, nu, ..*self }
    }

    fn check(&self) -> Result<()> {
        let ok = (norm(self.mu) - 1.0).abs() < 1e-10
            && (norm(self.nu) - 1.0).abs() < 1e-10
            && dot(self.mu, self.nu).abs() < 1e-10
            && dot(self.mu, self.xi).abs() < 1e-10 * norm(self.xi)
            && dot(self.nu, self.xi).abs() < 1e-10 * norm(self.xi);
        if ok {
            Ok(())
        } else {
            Err(Error::FrameNotOrthonormal)
        }
    }
}

/// Frame for `ξ` with `μ, ν` completing `ξ/|ξ|` to a right-handed basis.
/// `μ` comes from the coordinate axis least aligned with `ξ` (lowest index
/// on ties), so axis-aligned `ξ` gives axis-aligned `μ, ν`.
pub fn make_frame(xi: [f64; 3], lambda: f64, gamma0: f64) -> Result<ReconFrame> {
    if !(lambda > 0.0) || !(gamma0 > 0.0) {
        return Err(Error::InvalidParameter(format!("need lambda > 0 and gamma0 > 0, got {lambda}, {gamma0}")));
    }
    let n = norm(xi);
    let (lower, upper) = shell_bounds(lambda, gamma0);
    if !(n > lower && n < upper) {
        return Err(Error::OffShell { norm: n, lower, upper });
    }
    let unit = xi.map(|c| c / n);
    let mut axis = 0;
    for a in 1..3 {
        if unit[a].abs() < unit[axis].abs() {
            axis = a;
        }
    }
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let p = dot(e, unit);
    let m = std::array::from_fn(|j| e[j] - p * unit[j]);
    let mn = norm(m);
    let mu = m.map(|c| c / mn);
    let nu = cross(unit, mu);
    Ok(ReconFrame { xi, mu, nu, lambda, gamma0 })
}

/// `ρ(t) = ξ/2 + s μ + i t ν`, `ρ′(t) = −ξ/2 + s μ − i t ν`, `s = (t² + λ − |ξ|²/4)^{1/2}`.
pub fn rho_pair(t: f64, frame: &ReconFrame) -> Result<(ComplexFrequency, ComplexFrequency)> {
    frame.check()?;
    let threshold = frame.threshold();
    if !(t > threshold) || t <= 0.0 {
        return Err(Error::BelowThreshold { t, threshold });
    }
    let s = (t * t + frame.lambda - dot(frame.xi, frame.xi) / 4.0).sqrt();
    let rho = std::array::from_fn(|j| Complex64::new(frame.xi[j] / 2.0 + s * frame.mu[j], t * frame.nu[j]));
    let rho_p = std::array::from_fn(|j| Complex64::new(-frame.xi[j] / 2.0 + s * frame.mu[j], -t * frame.nu[j]));
    Ok((ComplexFrequency::from_vector(rho, frame.lambda)?, ComplexFrequency::from_vector(rho_p, frame.lambda)?))
}

fn plane_wave(field: &ScalarField, xi: [f64; 3]) -> Vec<Complex64> {
    let g = *field.grid();
    (0..g.len())
        .map(|idx| {
            let x = g.point(idx);
            Complex64::from_polar(1.0, dot(x, xi))
        })
        .collect()
}

/// `((2A·(D+ρ) + Ṽ)(1+v) | e^{−ix·ξ}(1+v′)) − (e^{ix·ξ}(1+v) | (2A′·(D+ρ′) + Ṽ′)(1+v′))`
/// from two converged CGO solutions.
pub fn pairing_from_solutions(
    frame: &ReconFrame,
    a: &CoefficientSet,
    sol: &CgoSolution,
    b: &CoefficientSet,
    sol_p: &CgoSolution,
) -> Result<Complex64> {
    let one_v = sol.v.map(|z| z + ONE);
    let one_vp = sol_p.v.map(|z| z + ONE);
    let left = first_order(a, &sol.rho, &one_v, &sol.dv);
    let right = first_order(b, &sol_p.rho, &one_vp, &sol_p.dv);
    let e = plane_wave(&one_v, frame.xi);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..e.len() {
        acc += e[i] * (left.data()[i] * one_vp.data()[i].conj() - one_v.data()[i] * right.data()[i].conj());
    }
    Ok(acc * one_v.grid().cell_volume())
}

/// `I(t)` for coefficient sets `a` (unprimed) and `b` (primed).
pub fn pairing_i(t: f64, frame: &ReconFrame, a: &CoefficientSet, b: &CoefficientSet, opts: &CgoOptions) -> Result<Complex64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let (rho, rho_p) = rho_pair(t, frame)?;
    let o = CgoOptions { split: false, ..*opts };
    let sol = solve_cgo(a, &rho, &o)?;
    let sol_p = solve_cgo(b, &rho_p, &o)?;
    pairing_from_solutions(frame, a, &sol, b, &sol_p)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingCurve {
    pub t_values: Vec<f64>,
    pub i_values: Vec<Complex64>,
    pub i_over_t: Vec<Complex64>,
    /// `t` values dropped because a CGO solve did not converge.
    pub skipped: Vec<f64>,
}

pub fn pairing_curve(
    t_values: &[f64],
    frame: &ReconFrame,
    a: &CoefficientSet,
    b: &CoefficientSet,
    opts: &CgoOptions,
) -> Result<PairingCurve> {
    if t_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("t values must be strictly increasing".into()));
    }
    let mut curve = PairingCurve { t_values: vec![], i_values: vec![], i_over_t: vec![], skipped: vec![] };
    for &t in t_values {
        match pairing_i(t, frame, a, b, opts) {
            Ok(v) => {
                curve.t_values.push(t);
                curve.i_values.push(v);
                curve.i_over_t.push(v / t);
            }
            Err(Error::NonConvergence { .. }) => {
                log::warn!("CGO solve did not converge at t = {t}; skipped");
                curve.skipped.push(t);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}

/// First-order Richardson extrapolation in `1/t` from the last two samples;
/// the residual is the change relative to the extrapolation one step earlier.
pub fn richardson(t: &[f64], f: &[Complex64]) -> Result<(Complex64, f64)> {
    let n = t.len();
    if n != f.len() || n == 0 {
        return Err(Error::InvalidParameter("need matching, nonempty samples".into()));
    }
    if n == 1 {
        return Ok((f[0], f64::NAN));
    }
    let ex = |i: usize| (f[i + 1] * t[i + 1] - f[i] * t[i]) / (t[i + 1] - t[i]);
    let last = ex(n - 2);
    let residual = if n >= 3 { (last - ex(n - 3)).norm() } else { f64::NAN };
    Ok((last, residual))
}

/// `∫ e^{ix·ξ} f dx` by lattice quadrature.
fn ft(f: &ScalarField, xi: [f64; 3]) -> Complex64 {
    fourier_at(f, xi.map(|c| -c))
}

/// `∫ e^{ix·ξ} e^{iΦ} (μ + iν)·(A − A′) dx`.
pub fn nft(a: &VectorField, a_prime: &VectorField, frame: &ReconFrame) -> Result<Complex64> {
    frame.check()?;
    let phi = phase_big_phi(a, a_prime, frame.mu, frame.nu)?.phi;
    let dir: [Complex64; 3] = std::array::from_fn(|j| Complex64::new(frame.mu[j], frame.nu[j]));
    let diff = a.sub(a_prime)?.dot_const(dir);
    let integrand = diff.zip_map(&phi, |d, p| d * (I * p).exp())?;
    Ok(ft(&integrand, frame.xi))
}

/// The linear counterpart `∫ e^{ix·ξ} (μ + iν)·(A − A′) dx`.
pub fn linear_transform(a: &VectorField, a_prime: &VectorField, frame: &ReconFrame) -> Result<Complex64> {
    let dir: [Complex64; 3] = std::array::from_fn(|j| Complex64::new(frame.mu[j], frame.nu[j]));
    Ok(ft(&a.sub(a_prime)?.dot_const(dir), frame.xi))
}

#[derive(Debug, Clone)]
pub struct ReconOptions {
    pub t_values: Vec<f64>,
    pub cgo: CgoOptions,
}

impl Default for ReconOptions {
    fn default() -> Self {
        ReconOptions { t_values: vec![8.0, 16.0, 32.0], cgo: CgoOptions { split: false, ..CgoOptions::default() } }
    }
}

/// `n_magnitudes` evenly spaced interior radii times the six signed axes.
pub fn default_shell(lambda: f64, gamma0: f64, n_magnitudes: usize) -> Vec<[f64; 3]> {
    let (lo, hi) = shell_bounds(lambda, gamma0);
    let mut out = Vec::new();
    for i in 0..n_magnitudes {
        let r = lo + (i as f64 + 1.0) * (hi - lo) / (n_magnitudes as f64 + 1.0);
        for a in 0..3 {
            for s in [1.0, -1.0] {
                let mut xi = [0.0; 3];
                xi[a] = s * r;
                out.push(xi);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ShellRow {
    pub xi: [f64; 3],
    /// `"12"`, `"13"`, `"23"` for `dA`, `"V"` for the potential.
    pub component: String,
    pub recovered: Complex64,
    pub reference: Complex64,
    /// Relative error of the whole sample (all components at this `ξ`).
    pub rel_err: f64,
    pub extrapolation_residual: f64,
    pub skipped_t: Vec<f64>,
}

/// Limit of `I(t)/(2t)` for one orientation.
fn magnetic_measurement(
    frame: &ReconFrame,
    a: &CoefficientSet,
    b: &CoefficientSet,
    opts: &ReconOptions,
) -> Result<(Complex64, f64, Vec<f64>)> {
    let curve = pairing_curve(&opts.t_values, frame, a, b, &opts.cgo)?;
    if curve.t_values.is_empty() {
        return Err(Error::NonConvergence { iterations: 0, residual: f64::NAN, history: vec![] });
    }
    let (lim, res) = richardson(&curve.t_values, &curve.i_over_t)?;
    Ok((lim / 2.0, res / 2.0, curve.skipped))
}

/// `(dA)^` of `coeffs` relative to `reference_set` (typically zero
/// coefficients) at each shell sample, with the curl-based reference.
#[allow(non_snake_case)]
pub fn recover_dA(
    coeffs: &CoefficientSet,
    reference_set: &CoefficientSet,
    lambda: f64,
    gamma0: f64,
    shell: &[[f64; 3]],
    opts: &ReconOptions,
) -> Result<Vec<ShellRow>> {
    let diff = coeffs.a().sub(reference_set.a())?;
    let curls = curl(&diff);
    let per_sample: Vec<Result<Vec<ShellRow>>> = shell
        .par_iter()
        .map(|&xi| {
            let frame = make_frame(xi, lambda, gamma0)?;
            let (m1, r1, s1) = magnetic_measurement(&frame, coeffs, reference_set, opts)?;
            let (m2, r2, s2) = magnetic_measurement(&frame.swapped(), coeffs, reference_set, opts)?;
            let f_mu = (m1 - I * m2) / 2.0;
            let f_nu = (m2 - I * m1) / 2.0;
            let f: [Complex64; 3] = std::array::from_fn(|j| f_mu * frame.mu[j] + f_nu * frame.nu[j]);
            let rec: Vec<Complex64> = PAIRS.iter().map(|&(j, k)| -I * (f[k] * xi[j] - f[j] * xi[k])).collect();
            let refs: Vec<Complex64> = curls.iter().map(|c| ft(c, xi)).collect();
            let num: f64 = rec.iter().zip(&refs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let den: f64 = refs.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
            let rel = if den > 0.0 { num / den } else { num };
            let mut skipped = s1;
            skipped.extend(s2);
            Ok(PAIRS
                .iter()
                .enumerate()
                .map(|(c, &(j, k))| ShellRow {
                    xi,
                    component: format!("{}{}", j + 1, k + 1),
                    recovered: rec[c],
                    reference: refs[c],
                    rel_err: rel,
                    extrapolation_residual: r1.max(r2),
                    skipped_t: skipped.clone(),
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_sample {
        rows.extend(r?);
    }
    Ok(rows)
}

/// `F[V − V′]` on the shell for two sets sharing the same `A`.
#[allow(non_snake_case)]
pub fn recover_V(
    a: &CoefficientSet,
    b: &CoefficientSet,
    lambda: f64,
    gamma0: f64,
    shell: &[[f64; 3]],
    opts: &ReconOptions,
) -> Result<Vec<ShellRow>> {
    let mismatch = a.a().sub(b.a())?.max_abs();
    if mismatch > 1e-12 * a.a().max_abs().max(1.0) {
        return Err(Error::GaugeMismatch(mismatch));
    }
    let dv = a.v() - b.v();
    let rows: Vec<Result<ShellRow>> = shell
        .par_iter()
        .map(|&xi| {
            let frame = make_frame(xi, lambda, gamma0)?;
            let curve = pairing_curve(&opts.t_values, &frame, a, b, &opts.cgo)?;
            if curve.t_values.is_empty() {
                return Err(Error::NonConvergence { iterations: 0, residual: f64::NAN, history: vec![] });
            }
            let (lim, res) = richardson(&curve.t_values, &curve.i_values)?;
            let reference = ft(&dv, xi);
            let rel = if reference.norm() > 0.0 { (lim - reference).norm() / reference.norm() } else { lim.norm() };
            Ok(ShellRow {
                xi,
                component: "V".into(),
                recovered: lim,
                reference,
                rel_err: rel,
                extrapolation_residual: res,
                skipped_t: curve.skipped,
            })
        })
        .collect();
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{make_test_coefficients, Bump, GeneratorSpec, MagneticTerm};
    use crate::grid::Grid;

    #[test]
    fn shell_arithmetic() {
        let (lo, hi) = shell_bounds(1.0, 2.0);
        assert_eq!(lo, 2.0);
        assert!((hi - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        let f = make_frame([2.5, 0.0, 0.0], 1.0, 2.0).unwrap();
        assert_eq!(f.mu, [0.0, 1.0, 0.0]);
        assert_eq!(f.nu, [0.0, 0.0, 1.0]);
        assert!(matches!(make_frame([2.0, 0.0, 0.0], 1.0, 2.0), Err(Error::OffShell { .. })));
        assert!(matches!(make_frame([2.0 * 2f64.sqrt(), 0.0, 0.0], 1.0, 2.0), Err(Error::OffShell { .. })));
        assert!(make_frame([0.0; 3], 1.0, 2.0).is_err());
    }

    #[test]
    fn frames_are_orthonormal_and_deterministic() {
        for xi in [[0.0, -2.4, 0.0], [1.5, 1.2, -1.0], [0.0, 0.0, 2.7]] {
            let f = make_frame(xi, 1.0, 2.0).unwrap();
            f.check().unwrap();
            assert_eq!(f, make_frame(xi, 1.0, 2.0).unwrap());
            let c = cross(f.mu, f.nu);
            let u = xi.map(|x| x / norm(xi));
            assert!((0..3).all(|j| (c[j] - u[j]).abs() < 1e-12));
        }
    }

    #[test]
    fn rho_pair_identities() {
        let f = make_frame([2.5, 0.0, 0.0], 1.0, 2.0).unwrap();
        let (r, rp) = rho_pair(2.0, &f).unwrap();
        assert!((r.dot_rho() - 1.0).norm() < 1e-12);
        assert!((rp.dot_rho() - 1.0).norm() < 1e-12);
        for j in 0..3 {
            assert!((r.rho[j].re - rp.rho[j].re - f.xi[j]).abs() < 1e-14);
            // ρ − conj(ρ′) = ξ, so e^{iρ·x} conj(e^{iρ′·x}) = e^{ix·ξ}
            assert!((r.rho[j] - rp.rho[j].conj() - f.xi[j]).norm() < 1e-14);
        }
        let th = f.threshold();
        assert!(matches!(rho_pair(th, &f), Err(Error::BelowThreshold { .. })));
    }

    #[test]
    fn richardson_removes_first_order_term() {
        let t = [8.0, 16.0, 32.0];
        let f: Vec<Complex64> = t.iter().map(|t| Complex64::new(3.0 + 2.0 / t, -1.0 + 0.5 / t)).collect();
        let (l, r) = richardson(&t, &f).unwrap();
        assert!((l - Complex64::new(3.0, -1.0)).norm() < 1e-14);
        assert!(r < 1e-14);
    }

    fn grid() -> Grid {
        Grid::new(32, 8.0).unwrap()
    }

    fn magnetic() -> CoefficientSet {
        let spec = GeneratorSpec {
            magnetic: vec![MagneticTerm::Swirl { bump: Bump::new(0.3, [0.2, 0.0, -0.1], 1.0), axis: [0.0, 0.0, 1.0] }],
            electric: vec![],
        };
        make_test_coefficients(grid(), 2.0, &spec).unwrap()
    }

    #[test]
    fn equal_coefficients_pair_to_zero() {
        let spec = GeneratorSpec {
            magnetic: vec![MagneticTerm::Swirl { bump: Bump::new(0.3, [0.2, 0.0, -0.1], 1.0), axis: [0.0, 0.0, 1.0] }],
            electric: vec![Bump::new(0.4, [0.0, 0.2, 0.0], 1.1)],
        };
        let c = make_test_coefficients(grid(), 2.0, &spec).unwrap();
        let f = make_frame([0.0, 2.4, 0.0], 1.0, 2.0).unwrap();
        let opts = CgoOptions { split: false, ..CgoOptions::default() };
        let scale = linear_transform(c.a(), &VectorField::zeros(grid()), &f).unwrap().norm() * 8.0;
        let v = pairing_i(8.0, &f, &c, &c, &opts).unwrap();
        assert!(v.norm() < 1e-6 * scale, "{v} vs {scale}");
        let z = CoefficientSet::zero(grid(), 2.0).unwrap();
        assert_eq!(pairing_i(8.0, &f, &z, &z, &opts).unwrap().norm(), 0.0);
    }

    #[test]
    fn nonlinear_transform_reduces_to_linear_one() {
        let c = magnetic();
        let zero = VectorField::zeros(grid());
        let f = make_frame([2.4, 0.0, 0.0], 1.0, 2.0).unwrap();
        let n = nft(c.a(), &zero, &f).unwrap();
        let l = linear_transform(c.a(), &zero, &f).unwrap();
        assert!((n - l).norm() < 1e-2 * l.norm(), "{n} vs {l}");
        assert_eq!(nft(c.a(), c.a(), &f).unwrap().norm(), 0.0);
    }

    #[test]
    fn recover_v_rejects_different_magnetic_potentials() {
        let z = CoefficientSet::zero(grid(), 2.0).unwrap();
        let err = recover_V(&magnetic(), &z, 1.0, 2.0, &[[2.4, 0.0, 0.0]], &ReconOptions::default()).unwrap_err();
        assert!(err.to_string().contains("gauge-reduce first"));
    }
}
