//! Coefficient pairs `(A, V)` of the magnetic Schrödinger operator
//! `H = Σ (D_j + A_j)² + V`, the derived first-order form
//! `Ṽ = A² + D·A + V`, mollification and gauge primitives.

mod gauge;
mod mollify;

pub use gauge::{gauge_primitive, GaugeFunction};
pub use mollify::{chi, chi_hat, mollify, MollifierParams, DEFAULT_SIGMA0};

use crate::error::{Error, Result};
use crate::grid::{divergence, japanese, partial, Grid, ScalarField, VectorField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Leakage (relative to peak) above which a coefficient set is flagged.
pub const LEAKAGE_THRESHOLD: f64 = 1e-8;

/// Gaussian envelope `amplitude · exp(-|x - center|² / (2 width²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
}

impl Bump {
    pub fn new(amplitude: f64, center: [f64; 3], width: f64) -> Self {
        Bump { amplitude, center, width }
    }

    fn offset(&self, x: [f64; 3]) -> [f64; 3] {
        [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]]
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let d = self.offset(x);
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let d = self.offset(x);
        let g = self.value(x) / (self.width * self.width);
        [-d[0] * g, -d[1] * g, -d[2] * g]
    }

    pub fn laplacian(&self, x: [f64; 3]) -> f64 {
        let d = self.offset(x);
        let w2 = self.width * self.width;
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        self.value(x) * (r2 / (w2 * w2) - 3.0 / w2)
    }

    fn validate(&self) -> Result<()> {
        let finite = self.amplitude.is_finite() && self.center.iter().all(|c| c.is_finite());
        if !finite || !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad bump parameters {self:?}")));
        }
        Ok(())
    }

    /// `C` with `|g(x)| ≤ C e^{-γ₀⟨x⟩}`.
    fn value_bound(&self, gamma0: f64) -> f64 {
        let c = norm3(self.center);
        self.amplitude.abs() * (gamma0 * (1.0 + c) + 0.5 * gamma0 * gamma0 * self.width * self.width).exp()
    }

    /// `C` with `|∇g(x)| ≤ C e^{-γ₀⟨x⟩}`.
    fn gradient_bound(&self, gamma0: f64) -> f64 {
        // |∇g| = |a| r/w² e^{-r²/2w²} and γ₀⟨x⟩ ≤ γ₀(1 + |c| + r)
        let w = self.width;
        let w2 = w * w;
        let r = 0.5 * (gamma0 * w2 + (gamma0 * gamma0 * w2 * w2 + 4.0 * w2).sqrt());
        let peak = r / w2 * (-r * r / (2.0 * w2) + gamma0 * r).exp();
        self.amplitude.abs() * peak * (gamma0 * (1.0 + norm3(self.center))).exp()
    }
}

/// One contribution to the magnetic potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MagneticTerm {
    /// `∇g × axis`: divergence free, nonzero curl.
    Swirl {
        #[serde(flatten)]
        bump: Bump,
        axis: [f64; 3],
    },
    /// `∇g`: pure gauge.
    Gradient {
        #[serde(flatten)]
        bump: Bump,
    },
    /// `g · direction`: neither divergence nor curl free.
    Directed {
        #[serde(flatten)]
        bump: Bump,
        direction: [f64; 3],
    },
}

impl MagneticTerm {
    pub fn bump(&self) -> &Bump {
        match self {
            MagneticTerm::Swirl { bump, .. } | MagneticTerm::Gradient { bump } | MagneticTerm::Directed { bump, .. } => bump,
        }
    }

    pub fn value(&self, x: [f64; 3]) -> [f64; 3] {
        match *self {
            MagneticTerm::Swirl { bump, axis } => cross(bump.gradient(x), axis),
            MagneticTerm::Gradient { bump } => bump.gradient(x),
            MagneticTerm::Directed { bump, direction } => {
                let g = bump.value(x);
                [g * direction[0], g * direction[1], g * direction[2]]
            }
        }
    }

    fn bound(&self, gamma0: f64) -> f64 {
        match self {
            MagneticTerm::Swirl { bump, axis } => bump.gradient_bound(gamma0) * norm3(*axis),
            MagneticTerm::Gradient { bump } => bump.gradient_bound(gamma0),
            MagneticTerm::Directed { bump, direction } => bump.value_bound(gamma0) * norm3(*direction),
        }
    }
}

/// Parameters of a synthetic coefficient pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(default)]
    pub magnetic: Vec<MagneticTerm>,
    #[serde(default)]
    pub electric: Vec<Bump>,
}

impl GeneratorSpec {
    pub fn magnetic_potential(&self, x: [f64; 3]) -> [f64; 3] {
        let mut a = [0.0; 3];
        for t in &self.magnetic {
            let v = t.value(x);
            (0..3).for_each(|i| a[i] += v[i]);
        }
        a
    }

    pub fn electric_potential(&self, x: [f64; 3]) -> f64 {
        self.electric.iter().map(|b| b.value(x)).sum()
    }

    /// Declared constant `C` in `|A|, |V| ≤ C e^{-γ₀⟨x⟩}`.
    pub fn decay_constant(&self, gamma0: f64) -> f64 {
        let a: f64 = self.magnetic.iter().map(|t| t.bound(gamma0)).sum();
        let v: f64 = self.electric.iter().map(|b| b.value_bound(gamma0)).sum();
        a.max(v)
    }

    fn validate(&self) -> Result<()> {
        for t in &self.magnetic {
            t.bump().validate()?;
            let extra = match t {
                MagneticTerm::Swirl { axis, .. } => Some(axis),
                MagneticTerm::Directed { direction, .. } => Some(direction),
                MagneticTerm::Gradient { .. } => None,
            };
            if extra.is_some_and(|v| v.iter().any(|c| !c.is_finite())) {
                return Err(Error::InvalidParameter("non-finite direction".into()));
            }
        }
        self.electric.iter().try_for_each(Bump::validate)
    }
}

/// Magnetic potential `A`, electric potential `V`, decay rate `γ₀` and the
/// assembled `Ṽ`.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    a: VectorField,
    v: ScalarField,
    vtilde: ScalarField,
    gamma0: f64,
    decay_constant: Option<f64>,
    leakage: f64,
}

impl CoefficientSet {
    /// Builds a set from sampled potentials; imaginary parts must vanish
    /// (roundoff below `1e-12` of the peak is cleared).
    pub fn new(a: VectorField, v: ScalarField, gamma0: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma0 must be positive, got {gamma0}")));
        }
        if a.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        let [a0, a1, a2] = a.into_components();
        let a = VectorField::new([real_part(a0)?, real_part(a1)?, real_part(a2)?])?;
        let v = real_part(v)?;
        let vtilde = assemble_vtilde(&a, &v)?;
        let leakage = a.components().iter().chain(std::iter::once(&v)).map(|f| f.boundary_leakage()).fold(0.0, f64::max);
        if leakage > LEAKAGE_THRESHOLD {
            log::warn!("coefficient boundary leakage {leakage:e} exceeds {LEAKAGE_THRESHOLD:e}; enlarge the box");
        }
        Ok(CoefficientSet { a, v, vtilde, gamma0, decay_constant: None, leakage })
    }

    pub fn zero(grid: Grid, gamma0: f64) -> Result<Self> {
        Self::new(VectorField::zeros(grid), ScalarField::zeros(grid), gamma0)
    }

    pub fn a(&self) -> &VectorField {
        &self.a
    }

    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    pub fn vtilde(&self) -> &ScalarField {
        &self.vtilde
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn grid(&self) -> &Grid {
        self.v.grid()
    }

    pub fn decay_constant(&self) -> Option<f64> {
        self.decay_constant
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    /// Set when the potentials do not decay below `1e-8` of their peak at the box boundary.
    pub fn leakage_warning(&self) -> bool {
        self.leakage > LEAKAGE_THRESHOLD
    }

    pub fn is_zero(&self) -> bool {
        self.a.max_abs() == 0.0 && self.v.max_abs() == 0.0
    }

    pub fn is_magnetic(&self) -> bool {
        self.a.max_abs() > 0.0
    }

    /// `(εA, εV)`.
    pub fn scaled(&self, eps: f64) -> Result<Self> {
        let s = Complex64::new(eps, 0.0);
        let mut out = Self::new(self.a.scale(s), self.v.scale(s), self.gamma0)?;
        out.decay_constant = self.decay_constant.map(|c| c * eps.abs());
        Ok(out)
    }

    /// Same `V` with `A` replaced by `A + ∇α` (spectral gradient of the real part of `α`).
    pub fn gauge_transformed(&self, alpha: &ScalarField) -> Result<Self> {
        alpha.check_grid(&self.v)?;
        let re = alpha.map(|z| Complex64::new(z.re, 0.0));
        let comps: [ScalarField; 3] = std::array::from_fn(|j| {
            let d = partial(&re, j).map(|z| Complex64::new(z.re, 0.0));
            &self.a.components()[j] + &d
        });
        Self::new(VectorField::new(comps)?, self.v.clone(), self.gamma0)
    }

    /// Same `A` with `V` replaced.
    pub fn with_v(&self, v: ScalarField) -> Result<Self> {
        Self::new(self.a.clone(), v, self.gamma0)
    }

    /// Checks `|A(x)|, |V(x)| ≤ C e^{-γ₀⟨x⟩}` on every lattice point for the
    /// declared constant; returns the largest ratio `|·| e^{γ₀⟨x⟩} / C`.
    pub fn check_decay(&self) -> Option<f64> {
        let c = self.decay_constant?;
        let g = *self.grid();
        let mut worst: f64 = 0.0;
        for idx in 0..g.len() {
            let w = (self.gamma0 * japanese(g.point(idx))).exp();
            let a = (0..3).map(|j| self.a.components()[j].data()[idx].norm_sqr()).sum::<f64>().sqrt();
            let v = self.v.data()[idx].norm();
            if c > 0.0 {
                worst = worst.max(a.max(v) * w / c);
            } else if a.max(v) > 0.0 {
                return Some(f64::INFINITY);
            }
        }
        Some(worst)
    }
}

fn real_part(f: ScalarField) -> Result<ScalarField> {
    let peak = f.max_abs();
    let imag = f.data().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-12 * peak.max(f64::MIN_POSITIVE) && imag > 0.0 {
        return Err(Error::InvalidParameter(format!("coefficient has imaginary part {imag:e}")));
    }
    Ok(f.map(|z| Complex64::new(z.re, 0.0)))
}

/// Samples the generator on `grid`.
pub fn make_test_coefficients(grid: Grid, gamma0: f64, spec: &GeneratorSpec) -> Result<CoefficientSet> {
    spec.validate()?;
    let a = VectorField::from_real_fn(grid, |x| spec.magnetic_potential(x));
    let v = ScalarField::from_real_fn(grid, |x| spec.electric_potential(x));
    let mut set = CoefficientSet::new(a, v, gamma0)?;
    set.decay_constant = Some(spec.decay_constant(gamma0));
    Ok(set)
}

/// `Ṽ = Σ A_j² − i ∇·A + V` with a spectral divergence.
pub fn assemble_vtilde(a: &VectorField, v: &ScalarField) -> Result<ScalarField> {
    if a.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let mut out = a.dot(a)?;
    out.axpy(-I, &divergence(a))?;
    out.axpy(Complex64::new(1.0, 0.0), v)?;
    Ok(out)
}

/// Independent components of `dA`: `∂_j A_k − ∂_k A_j` for
/// `(j, k) = (1,2), (1,3), (2,3)`.
pub fn curl(a: &VectorField) -> [ScalarField; 3] {
    let c = a.components();
    let d = |j: usize, k: usize| &partial(&c[k], j) - &partial(&c[j], k);
    [d(0, 1), d(0, 2), d(1, 2)]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gradient, laplacian};

    fn grid() -> Grid {
        Grid::new(64, 8.0).unwrap()
    }

    fn swirl() -> MagneticTerm {
        MagneticTerm::Swirl { bump: Bump::new(0.8, [0.3, -0.2, 0.1], 1.0), axis: [0.0, 0.0, 1.0] }
    }

    #[test]
    fn zero_amplitudes_give_zero_coefficients() {
        let spec = GeneratorSpec {
            magnetic: vec![MagneticTerm::Gradient { bump: Bump::new(0.0, [0.0; 3], 1.0) }],
            electric: vec![Bump::new(0.0, [0.0; 3], 1.0)],
        };
        let c = make_test_coefficients(grid(), 1.0, &spec).unwrap();
        assert!(c.is_zero());
        assert_eq!(c.vtilde().max_abs(), 0.0);
    }

    #[test]
    fn electric_only_vtilde_is_v() {
        let spec = GeneratorSpec { magnetic: vec![], electric: vec![Bump::new(1.5, [1.0, 0.0, 0.0], 1.0)] };
        let c = make_test_coefficients(grid(), 1.0, &spec).unwrap();
        assert_eq!(c.vtilde(), c.v());
    }

    #[test]
    fn divergence_free_swirl_has_no_first_order_term() {
        let spec = GeneratorSpec { magnetic: vec![swirl()], electric: vec![Bump::new(0.5, [0.0; 3], 1.2)] };
        let c = make_test_coefficients(grid(), 1.0, &spec).unwrap();
        let expect = &c.a().dot(c.a()).unwrap() + c.v();
        assert!((c.vtilde() - &expect).max_abs() < 1e-8);
        assert!(c.a().max_abs() > 0.1);
    }

    #[test]
    fn gradient_potential_matches_closed_form_laplacian() {
        let g = grid();
        let bump = Bump::new(1.0, [0.5, 0.0, -0.5], 1.0);
        let spec = GeneratorSpec { magnetic: vec![MagneticTerm::Gradient { bump }], electric: vec![] };
        let c = make_test_coefficients(g, 1.0, &spec).unwrap();
        let expect = ScalarField::from_fn(g, |x| {
            let a = bump.gradient(x);
            Complex64::new(a[0] * a[0] + a[1] * a[1] + a[2] * a[2], -bump.laplacian(x))
        });
        assert!((c.vtilde() - &expect).max_abs() < 1e-8);
    }

    #[test]
    fn windowed_constant_matches_finite_differences() {
        // A = c · w(x) with a wide bump window; D·A checked against a
        // fourth-order central difference of the sampled window.
        let g = Grid::new(64, 8.0).unwrap();
        let dir = [0.3, -0.5, 0.2];
        let bump = Bump::new(1.0, [0.0; 3], 1.6);
        let a = VectorField::from_real_fn(g, |x| {
            let w = bump.value(x);
            [dir[0] * w, dir[1] * w, dir[2] * w]
        });
        let vt = assemble_vtilde(&a, &ScalarField::zeros(g)).unwrap();
        let h = g.spacing();
        let n = g.n();
        let w = ScalarField::from_real_fn(g, |x| bump.value(x));
        let at = |i: isize, j: isize, k: isize| {
            let m = |t: isize| t.rem_euclid(n as isize) as usize;
            w.data()[g.index(m(i), m(j), m(k))].re
        };
        let mut worst: f64 = 0.0;
        for idx in 0..g.len() {
            let [i, j, k] = g.unravel(idx).map(|t| t as isize);
            let d4 = |e: [isize; 3]| {
                let f = |s: isize| at(i + s * e[0], j + s * e[1], k + s * e[2]);
                (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * h)
            };
            let div = dir[0] * d4([1, 0, 0]) + dir[1] * d4([0, 1, 0]) + dir[2] * d4([0, 0, 1]);
            let wv = at(i, j, k);
            let sq = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]) * wv * wv;
            worst = worst.max((vt.data()[idx] - Complex64::new(sq, -div)).norm());
        }
        // fourth-order truncation error at h = 0.25 on a width-1.6 window
        assert!(worst < 2e-4, "{worst}");
    }

    #[test]
    fn vtilde_polarization() {
        let g = Grid::new(16, 6.0).unwrap();
        let field = |s: f64| {
            VectorField::from_real_fn(g, move |x| {
                let e = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 3.0).exp();
                [s * e, (s * x[0]).sin() * e, x[2] * e]
            })
        };
        let (a, b) = (field(0.7), field(-1.3));
        let v1 = ScalarField::from_real_fn(g, |x| (-x[0] * x[0]).exp());
        let v2 = ScalarField::from_real_fn(g, |x| (-x[1] * x[1] - 0.5).exp());
        let z = ScalarField::zeros(g);
        let q = |a: &VectorField, v: &ScalarField| assemble_vtilde(a, v).unwrap();
        // additivity in V
        let lhs = q(&a, &(&v1 + &v2));
        let rhs = &(&q(&a, &v1) + &q(&VectorField::zeros(g), &v2)) - &z;
        assert!((&lhs - &rhs).max_abs() < 1e-12);
        // Q(a+b) - Q(a) - Q(b) + Q(0) = 2 a·b
        let sum = a.add(&b).unwrap();
        let mixed = &(&(&q(&sum, &z) - &q(&a, &z)) - &q(&b, &z)) + &q(&VectorField::zeros(g), &z);
        let two_ab = a.dot(&b).unwrap().scale(Complex64::new(2.0, 0.0));
        assert!((&mixed - &two_ab).max_abs() < 1e-12);
    }

    #[test]
    fn curl_examples() {
        let g = Grid::new(64, 12.0).unwrap();
        let s = ScalarField::from_real_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2]) / 2.0).exp());
        for c in curl(&gradient(&s)) {
            assert!(c.max_abs() < 1e-10);
        }
        for c in curl(&VectorField::zeros(g)) {
            assert_eq!(c.max_abs(), 0.0);
        }
        // rotation field in a wide window: (1,2)-component = 2 near the origin
        let win = Bump::new(1.0, [0.0; 3], 1.5);
        let a = VectorField::from_real_fn(g, |x| {
            let w = win.value(x);
            [-x[1] * w, x[0] * w, 0.0]
        });
        let [c12, c13, c23] = curl(&a);
        let g_w = |x: [f64; 3]| win.gradient(x);
        let expect = ScalarField::from_real_fn(g, |x| {
            let d = g_w(x);
            2.0 * win.value(x) + x[0] * d[0] + x[1] * d[1]
        });
        assert!((&c12 - &expect).max_abs() < 1e-8);
        let centre = c12.data()[g.index(32, 32, 32)];
        assert!((centre.re - 2.0).abs() < 1e-8);
        assert!(c13.max_abs() < 0.6 && c23.max_abs() < 0.6);
        assert!(c12.data().iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn curl_of_gradient_vanishes_for_generated_gauge() {
        let g = grid();
        let spec = GeneratorSpec {
            magnetic: vec![MagneticTerm::Gradient { bump: Bump::new(2.0, [0.4, 0.1, -0.3], 0.9) }],
            electric: vec![],
        };
        let c = make_test_coefficients(g, 1.0, &spec).unwrap();
        for comp in curl(c.a()) {
            assert!(comp.max_abs() < 1e-10);
        }
        let lap = laplacian(&ScalarField::from_real_fn(g, |x| Bump::new(2.0, [0.4, 0.1, -0.3], 0.9).value(x)));
        assert!((&c.vtilde().map(|z| Complex64::new(0.0, z.im)) - &lap.scale(-I)).max_abs() < 1e-8);
    }

    #[test]
    fn declared_decay_bound_holds() {
        let spec = GeneratorSpec {
            magnetic: vec![
                swirl(),
                MagneticTerm::Directed { bump: Bump::new(-0.4, [1.0, 1.0, 0.0], 0.9), direction: [1.0, 2.0, 0.0] },
                MagneticTerm::Gradient { bump: Bump::new(1.0, [0.0; 3], 1.5) },
            ],
            electric: vec![Bump::new(3.0, [-1.0, 0.0, 2.0], 1.0)],
        };
        for gamma0 in [0.5, 1.0, 2.0] {
            let c = make_test_coefficients(grid(), gamma0, &spec).unwrap();
            let ratio = c.check_decay().unwrap();
            assert!(ratio <= 1.0, "gamma0={gamma0} ratio={ratio}");
        }
    }

    #[test]
    fn leakage_flag() {
        let tight = GeneratorSpec { magnetic: vec![], electric: vec![Bump::new(1.0, [0.0; 3], 0.8)] };
        assert!(!make_test_coefficients(grid(), 1.0, &tight).unwrap().leakage_warning());
        let wide = GeneratorSpec { magnetic: vec![], electric: vec![Bump::new(1.0, [0.0; 3], 3.0)] };
        assert!(make_test_coefficients(grid(), 1.0, &wide).unwrap().leakage_warning());
    }

    #[test]
    fn rejects_complex_samples_and_bad_gamma() {
        let g = Grid::new(8, 2.0).unwrap();
        let v = ScalarField::constant(g, Complex64::new(1.0, 0.5));
        assert!(CoefficientSet::new(VectorField::zeros(g), v, 1.0).is_err());
        assert!(CoefficientSet::zero(g, 0.0).is_err());
    }

    #[test]
    fn generator_spec_json_round_trip() {
        let spec = GeneratorSpec { magnetic: vec![swirl()], electric: vec![Bump::new(1.0, [0.0; 3], 1.0)] };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"kind\":\"swirl\""));
        let back: GeneratorSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }
}
