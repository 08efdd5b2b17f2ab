//! Complex geometrical optics solutions `u_ρ = e^{iρ·x}(1 + v_ρ)` of
//! `(H − λ)u = 0`.
//!
//! With `K_ρ = (2A·(D + ρ) + Ṽ) G_ρ` the remainder is
//! `v_ρ = G_ρ (I + K_ρ)^{-1} (−2A·ρ − Ṽ)`; the inverse is applied by
//! restarted GMRES. The amplitude `a_ρ = e^{iχ_ρ φ♯}` is built from the
//! phase of the mollified potential and `r_ρ = 1 − a_ρ + v_ρ`.

use crate::cauchy::phase_phi;
use crate::coeffs::{mollify, CoefficientSet, MollifierParams, DEFAULT_SIGMA0};
use crate::error::{Error, Result};
use crate::faddeev::{ComplexFrequency, FaddeevMultiplier, MultiplierDiagnostics};
use crate::grid::{gradient, weighted_norm, Grid, ScalarField, VectorField, WeightSpec};
use crate::krylov::{gmres, GmresOptions};
use num_complex::Complex64;
use serde::Serialize;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy)]
pub struct CgoOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub sigma0: f64,
    /// Exponent in the cutoff `χ_ρ(x) = χ(h^θ x / R₀)`.
    pub theta: f64,
    /// Weight exponent used for reported norms.
    pub weight: f64,
    /// Base cutoff radius `R₀`; defaults to `0.75 L`.
    pub cutoff_radius: Option<f64>,
    /// Whether to build `a_ρ` and `r_ρ` (needs an axis-aligned `(ν₁, ν₂)`).
    pub split: bool,
    /// Plane for the phase `φ♯`; defaults to `(ν₁, ν₂)` of `ρ`.
    pub phase_plane: Option<([f64; 3], [f64; 3])>,
}

impl Default for CgoOptions {
    fn default() -> Self {
        CgoOptions {
            tol: 1e-8,
            max_iter: 300,
            restart: 50,
            sigma0: DEFAULT_SIGMA0,
            theta: 0.1,
            weight: -0.6,
            cutoff_radius: None,
            split: true,
            phase_plane: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CgoNorms {
    pub delta: f64,
    pub v: f64,
    pub r: Option<f64>,
    /// `h ‖∇r‖_{L²_δ}`.
    pub h_grad_r: Option<f64>,
}

/// `a_ρ`, `r_ρ` and the phase they were built from.
#[derive(Debug, Clone)]
pub struct AsymptoticSplit {
    pub a: ScalarField,
    pub r: ScalarField,
    pub phi_sharp: ScalarField,
    pub cutoff: ScalarField,
}

#[derive(Debug, Clone)]
pub struct CgoSolution {
    pub rho: ComplexFrequency,
    pub v: ScalarField,
    /// `D_j v` on the Faddeev lattice.
    pub dv: [ScalarField; 3],
    pub split: Option<AsymptoticSplit>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
    pub norms: CgoNorms,
    pub diagnostics: MultiplierDiagnostics,
}

/// `(2A·(D + ρ) + Ṽ) u` given `u` and `D u`.
pub(crate) fn first_order(coeffs: &CoefficientSet, rho: &ComplexFrequency, u: &ScalarField, du: &[ScalarField; 3]) -> ScalarField {
    let a = coeffs.a().components();
    let vt = coeffs.vtilde().data();
    let data = (0..u.data().len())
        .map(|i| {
            let mut s = vt[i] * u.data()[i];
            for j in 0..3 {
                s += 2.0 * a[j].data()[i] * (du[j].data()[i] + rho.rho[j] * u.data()[i]);
            }
            s
        })
        .collect();
    ScalarField::from_vec(*u.grid(), data).expect("length preserved")
}

/// `K_ρ w` with a prepared multiplier.
pub fn apply_k_with(w: &ScalarField, coeffs: &CoefficientSet, g: &FaddeevMultiplier) -> Result<ScalarField> {
    if coeffs.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let (u, du) = g.apply_with_derivatives(w)?;
    Ok(first_order(coeffs, g.rho(), &u, &du))
}

/// `K_ρ w = (2A·(D + ρ) + Ṽ) G_ρ w`.
pub fn apply_k_rho(w: &ScalarField, coeffs: &CoefficientSet, rho: &ComplexFrequency) -> Result<ScalarField> {
    let g = FaddeevMultiplier::new(*w.grid(), *rho)?;
    apply_k_with(w, coeffs, &g)
}

/// `−2A·ρ − Ṽ`.
pub fn cgo_source(coeffs: &CoefficientSet, rho: &ComplexFrequency) -> ScalarField {
    let mut s = coeffs.a().dot_const(rho.rho).scale(Complex64::new(-2.0, 0.0));
    s.axpy(-ONE, coeffs.vtilde()).expect("shared grid");
    s
}

/// `e^{−iρ·x}(H − λ) e^{iρ·x}(1 + v) = P_ρ v + (2A·(D + ρ) + Ṽ)(1 + v)`,
/// evaluated from `v` alone with the lattice `P_ρ`.
pub fn conjugated_residual(v: &ScalarField, coeffs: &CoefficientSet, g: &FaddeevMultiplier) -> Result<ScalarField> {
    let pv = g.apply_p(v)?;
    let dv = g.derivatives(v)?;
    let one_plus_v = v.map(|z| z + ONE);
    let mut out = first_order(coeffs, g.rho(), &one_plus_v, &dv);
    out.axpy(ONE, &pv)?;
    Ok(out)
}

/// Cutoff profile `e · exp(−1/(1 − |y|²))`, equal to 1 at the origin.
fn cutoff_profile(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

pub fn cutoff(grid: Grid, h: f64, theta: f64, base_radius: f64) -> ScalarField {
    let s = h.powf(theta) / base_radius;
    ScalarField::from_real_fn(grid, |x| cutoff_profile(s * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()))
}

pub fn solve_cgo(coeffs: &CoefficientSet, rho: &ComplexFrequency, opts: &CgoOptions) -> Result<CgoSolution> {
    let grid = *coeffs.grid();
    let g = FaddeevMultiplier::new(grid, *rho)?;
    let rhs = cgo_source(coeffs, rho);
    let gm = GmresOptions { tol: opts.tol, restart: opts.restart, max_iter: opts.max_iter };
    let out = gmres(
        |x| {
            let w = ScalarField::from_vec(grid, x.to_vec())?;
            let mut kw = apply_k_with(&w, coeffs, &g)?;
            kw.axpy(ONE, &w)?;
            Ok(kw.into_vec())
        },
        rhs.data(),
        gm,
    )?;
    let w = ScalarField::from_vec(grid, out.x)?;
    let (v, dv) = g.apply_with_derivatives(&w)?;
    let wt = WeightSpec::new(opts.weight);

    let split = if opts.split { Some(asymptotic_split(coeffs, rho, &v, opts)?) } else { None };
    let norms = CgoNorms {
        delta: opts.weight,
        v: weighted_norm(&v, wt),
        r: split.as_ref().map(|s| weighted_norm(&s.r, wt)),
        h_grad_r: split.as_ref().map(|s| {
            // ∇r = −∇a + i D v
            let ga = gradient(&s.a);
            let comps: [ScalarField; 3] = std::array::from_fn(|j| {
                let mut c = dv[j].scale(Complex64::new(0.0, 1.0));
                c.axpy(-ONE, ga.component(j)).expect("shared grid");
                c
            });
            let sq: f64 = comps.iter().map(|c| weighted_norm(c, wt).powi(2)).sum();
            rho.h * sq.sqrt()
        }),
    };
    Ok(CgoSolution {
        rho: *rho,
        v,
        dv,
        split,
        iterations: out.iterations,
        residual: out.residual,
        history: out.history,
        norms,
        diagnostics: g.diagnostics(),
    })
}

fn asymptotic_split(
    coeffs: &CoefficientSet,
    rho: &ComplexFrequency,
    v: &ScalarField,
    opts: &CgoOptions,
) -> Result<AsymptoticSplit> {
    let grid = *coeffs.grid();
    let (p1, p2) = opts.phase_plane.unwrap_or((rho.nu1, rho.nu2));
    let phi_sharp = if coeffs.is_magnetic() {
        let h = rho.h.min(1.0);
        let (sharp, _) = mollify(coeffs.a(), MollifierParams::new(opts.sigma0, h)?)?;
        phase_phi(&sharp, p1, p2)?.phi
    } else {
        ScalarField::zeros(grid)
    };
    let base = opts.cutoff_radius.unwrap_or(0.75 * grid.half_width());
    let chi = cutoff(grid, rho.h, opts.theta, base);
    let a = phi_sharp.zip_map(&chi, |p, c| (Complex64::new(0.0, 1.0) * c * p).exp())?;
    let r = a.zip_map(v, |a, v| ONE - a + v)?;
    Ok(AsymptoticSplit { a, r, phi_sharp, cutoff: chi })
}

/// The plain phase `e^{iφ}` of the unmollified potential.
pub fn limiting_amplitude(a: &VectorField, nu1: [f64; 3], nu2: [f64; 3]) -> Result<ScalarField> {
    Ok(phase_phi(a, nu1, nu2)?.phi.map(|p| (Complex64::new(0.0, 1.0) * p).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{make_test_coefficients, Bump, GeneratorSpec, MagneticTerm};
    use crate::faddeev::make_rho;

    const E1: [f64; 3] = [1.0, 0.0, 0.0];
    const E2: [f64; 3] = [0.0, 1.0, 0.0];

    fn grid() -> Grid {
        Grid::new(32, 8.0).unwrap()
    }

    fn generic() -> GeneratorSpec {
        GeneratorSpec {
            magnetic: vec![
                MagneticTerm::Swirl { bump: Bump::new(0.3, [0.2, 0.0, -0.1], 1.0), axis: [0.0, 0.0, 1.0] },
                MagneticTerm::Directed { bump: Bump::new(0.2, [0.0, 0.3, 0.0], 0.9), direction: [0.0, 1.0, 0.5] },
            ],
            electric: vec![Bump::new(0.5, [0.0; 3], 1.0)],
        }
    }

    #[test]
    fn zero_coefficients_give_trivial_solution() {
        let c = CoefficientSet::zero(grid(), 1.0).unwrap();
        let rho = make_rho(0.25, 1.0, E1, E2).unwrap();
        let s = solve_cgo(&c, &rho, &CgoOptions::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(s.v.max_abs(), 0.0);
        let sp = s.split.unwrap();
        assert!(sp.a.data().iter().all(|z| *z == ONE));
        assert_eq!(sp.r.max_abs(), 0.0);
        let w = ScalarField::from_real_fn(grid(), |x| x[0]);
        assert_eq!(apply_k_rho(&w, &c, &rho).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn k_rho_matches_composition_of_standalone_operators() {
        let g = grid();
        let c = make_test_coefficients(g, 1.0, &generic()).unwrap();
        let rho = make_rho(0.2, 1.0, E1, E2).unwrap();
        let w = ScalarField::from_fn(g, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 3.0).exp(), 0.3 * x[1].sin() * (-(x[2] * x[2])).exp()));
        let k = apply_k_rho(&w, &c, &rho).unwrap();
        // separate path: G_ρ, then derivatives of u from its own transform
        let m = FaddeevMultiplier::new(g, rho).unwrap();
        let u = m.apply(&w).unwrap();
        let du = m.derivatives(&u).unwrap();
        let mut expect = c.vtilde() * &u;
        for j in 0..3 {
            let mut t = du[j].clone();
            t.axpy(rho.rho[j], &u).unwrap();
            expect.axpy(Complex64::new(2.0, 0.0), &(c.a().component(j) * &t)).unwrap();
        }
        assert!((&k - &expect).max_abs() <= 1e-12 * expect.max_abs());
        assert_eq!(apply_k_rho(&ScalarField::zeros(g), &c, &rho).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn converged_solution_satisfies_conjugated_equation() {
        let g = grid();
        let c = make_test_coefficients(g, 1.0, &generic()).unwrap();
        let rho = make_rho(0.125, 1.0, E1, E2).unwrap();
        let s = solve_cgo(&c, &rho, &CgoOptions::default()).unwrap();
        assert!(s.residual <= 1e-8);
        let m = FaddeevMultiplier::new(g, rho).unwrap();
        let res = conjugated_residual(&s.v, &c, &m).unwrap();
        let scale = cgo_source(&c, &rho).norm_l2();
        assert!(res.norm_l2() <= 10.0 * 1e-8 * scale, "{}", res.norm_l2() / scale);
        let sp = s.split.as_ref().unwrap();
        let r = sp.a.zip_map(&s.v, |a, v| ONE - a + v).unwrap();
        assert_eq!(r, sp.r);
    }

    #[test]
    fn electric_only_matches_second_order_neumann_series() {
        let g = grid();
        let spec = GeneratorSpec { magnetic: vec![], electric: vec![Bump::new(0.05, [0.0; 3], 1.0)] };
        let c = make_test_coefficients(g, 1.0, &spec).unwrap();
        // |ρ| = 16
        let h = (2.0f64 / 257.0).sqrt();
        let rho = make_rho(h, 1.0, E1, E2).unwrap();
        let s = solve_cgo(&c, &rho, &CgoOptions::default()).unwrap();
        let m = FaddeevMultiplier::new(g, rho).unwrap();
        let minus_v = c.v().scale(-ONE);
        let born = m.apply(&minus_v).unwrap();
        let mut second = born.clone();
        second.axpy(-ONE, &m.apply(&apply_k_with(&minus_v, &c, &m).unwrap()).unwrap()).unwrap();
        let wt = WeightSpec::new(-0.6);
        let rel = weighted_norm(&(&s.v - &born), wt) / weighted_norm(&born, wt);
        assert!(rel < 0.05, "{rel}");
        let rel2 = weighted_norm(&(&s.v - &second), wt) / weighted_norm(&born, wt);
        assert!(rel2 < rel);
    }
}
