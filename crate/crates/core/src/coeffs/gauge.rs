use super::curl;
use crate::error::{Error, Result};
use crate::grid::{fft::fft3, Grid, ScalarField, VectorField};
use crate::quadrature::{gauss_legendre_on, sphere_rule};
use num_complex::Complex64;

/// Sup-norm bound on `dA` accepted as curl free.
pub const CURL_TOLERANCE: f64 = 1e-6;
const RAY_NODES: usize = 32;
const REFINE: usize = 2;

/// `α` with `∇α = A`, normalized to zero mean over the sphere `|x| = radius`.
#[derive(Debug, Clone)]
pub struct GaugeFunction {
    pub alpha: ScalarField,
    /// Constant subtracted from the raw line integral.
    pub offset: f64,
    pub radius: f64,
}

/// Real samples of a field refined by spectral zero padding, stored on a
/// periodic lattice of `factor·n` points per axis.
struct Refined {
    n: usize,
    half_width: f64,
    spacing: f64,
    comps: [Vec<f64>; 3],
}

fn refine(f: &ScalarField, factor: usize) -> Vec<f64> {
    let g = f.grid();
    let n = g.n();
    let m = n * factor;
    let mut spec = f.data().to_vec();
    fft3(&mut spec, g.dims(), false);
    let mut big = vec![Complex64::new(0.0, 0.0); m * m * m];
    let map = |i: usize| -> Option<usize> {
        let k = g.frequency_index(i);
        if k == -(n as i64) / 2 {
            None
        } else {
            Some(k.rem_euclid(m as i64) as usize)
        }
    };
    for (idx, z) in spec.iter().enumerate() {
        let [i, j, k] = g.unravel(idx);
        if let (Some(a), Some(b), Some(c)) = (map(i), map(j), map(k)) {
            big[(a * m + b) * m + c] = *z;
        }
    }
    fft3(&mut big, [m, m, m], true);
    let s = 1.0 / g.len() as f64;
    big.iter().map(|z| z.re * s).collect()
}

impl Refined {
    fn new(a: &VectorField) -> Self {
        let g = a.grid();
        let comps = std::array::from_fn(|j| refine(&a.components()[j], REFINE));
        Refined { n: g.n() * REFINE, half_width: g.half_width(), spacing: g.spacing() / REFINE as f64, comps }
    }

    /// `A(x)` by tensor cubic Lagrange interpolation (periodic stencil).
    fn value(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let n = self.n as isize;
        let mut idx = [[0usize; 4]; 3];
        let mut wts = [[0.0; 4]; 3];
        for a in 0..3 {
            if x[a] < -self.half_width || x[a] > self.half_width {
                return Err(Error::OutsideBox { radius: (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() });
            }
            let s = (x[a] + self.half_width) / self.spacing;
            let i0 = s.floor();
            let t = s - i0;
            let i0 = i0 as isize;
            for (q, off) in (-1..=2).enumerate() {
                idx[a][q] = (i0 + off).rem_euclid(n) as usize;
            }
            wts[a] = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
        }
        let nn = self.n;
        let mut acc = [0.0; 3];
        for p in 0..4 {
            for q in 0..4 {
                let wpq = wts[0][p] * wts[1][q];
                let row = (idx[0][p] * nn + idx[1][q]) * nn;
                for r in 0..4 {
                    let w = wpq * wts[2][r];
                    let o = row + idx[2][r];
                    acc[0] += w * self.comps[0][o];
                    acc[1] += w * self.comps[1][o];
                    acc[2] += w * self.comps[2][o];
                }
            }
        }
        Ok(acc)
    }

    /// `∫₀¹ x·A(tx) dt`.
    fn line_integral(&self, x: [f64; 3], nodes: &[f64], weights: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for (t, w) in nodes.iter().zip(weights) {
            let a = self.value([t * x[0], t * x[1], t * x[2]])?;
            s += w * (x[0] * a[0] + x[1] * a[1] + x[2] * a[2]);
        }
        Ok(s)
    }
}

/// Gauge primitive of a curl-free real potential by radial line integrals.
///
/// The potential is first refined twofold by spectral interpolation and then
/// evaluated along each ray with tricubic Lagrange interpolation.
pub fn gauge_primitive(a: &VectorField) -> Result<GaugeFunction> {
    let max_curl = curl(a).iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    if max_curl > CURL_TOLERANCE {
        return Err(Error::NotCurlFree { max_curl });
    }
    let g: Grid = *a.grid();
    let refined = Refined::new(a);
    let (nodes, weights) = gauss_legendre_on(RAY_NODES, 0.0, 1.0);

    let mut raw = Vec::with_capacity(g.len());
    for idx in 0..g.len() {
        raw.push(refined.line_integral(g.point(idx), &nodes, &weights)?);
    }

    let radius = g.half_width() - g.spacing();
    let (dirs, w) = sphere_rule(16, 32);
    let mut mean = 0.0;
    for (d, wq) in dirs.iter().zip(&w) {
        mean += wq * refined.line_integral([radius * d[0], radius * d[1], radius * d[2]], &nodes, &weights)?;
    }
    mean /= 4.0 * std::f64::consts::PI;

    let data = raw.into_iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    Ok(GaugeFunction { alpha: ScalarField::from_vec(g, data)?, offset: mean, radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::Bump;
    use crate::grid::gradient;

    #[test]
    fn zero_potential() {
        let g = Grid::new(16, 4.0).unwrap();
        let gf = gauge_primitive(&VectorField::zeros(g)).unwrap();
        assert_eq!(gf.alpha.max_abs(), 0.0);
    }

    #[test]
    fn refinement_reproduces_samples() {
        let g = Grid::new(32, 8.0).unwrap();
        let b = Bump::new(1.0, [0.3, 0.0, 0.0], 1.0);
        let f = ScalarField::from_real_fn(g, |x| b.value(x));
        let fine = refine(&f, 2);
        let m = 64;
        for idx in (0..g.len()).step_by(37) {
            let [i, j, k] = g.unravel(idx);
            let v = fine[((2 * i) * m + 2 * j) * m + 2 * k];
            assert!((v - f.data()[idx].re).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_gradient_recovers_gaussian() {
        let g = Grid::new(64, 4.0).unwrap();
        let b = Bump::new(1.0, [0.0; 3], std::f64::consts::FRAC_1_SQRT_2);
        let a = VectorField::from_real_fn(g, |x| b.gradient(x));
        let gf = gauge_primitive(&a).unwrap();
        // e^{-|x|²} is constant on the normalization sphere
        let avg = (-gf.radius * gf.radius).exp();
        let err = gf
            .alpha
            .data()
            .iter()
            .enumerate()
            .map(|(i, z)| (z.re - (b.value(g.point(i)) - avg)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn gradient_of_primitive_matches_potential() {
        let g = Grid::new(64, 12.0).unwrap();
        let b = Bump::new(1.5, [0.5, -0.3, 0.2], 1.6);
        let a = VectorField::from_real_fn(g, |x| b.gradient(x));
        let gf = gauge_primitive(&a).unwrap();
        let rel = gradient(&gf.alpha).sub(&a).unwrap().norm_l2() / a.norm_l2();
        assert!(rel < 1e-3, "{rel}");
    }

    #[test]
    fn rejects_rotational_potential() {
        let g = Grid::new(16, 4.0).unwrap();
        let b = Bump::new(1.0, [0.0; 3], 1.0);
        let a = VectorField::from_real_fn(g, |x| {
            let w = b.value(x);
            [-0.05 * x[1] * w, 0.05 * x[0] * w, 0.0]
        });
        let err = gauge_primitive(&a).unwrap_err();
        assert!(err.to_string().starts_with("not curl-free"), "{err}");
    }
}
