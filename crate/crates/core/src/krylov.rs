//! Restarted GMRES for matrix-free operators on complex vectors.

use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { tol: 1e-8, restart: 50, max_iter: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual `‖b − Ax‖ / ‖b‖` recomputed from the final iterate.
    pub residual: f64,
    /// Relative residual estimate after every inner iteration.
    pub history: Vec<f64>,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // Σ conj(a) b
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `A x = b` from the zero initial guess.
pub fn gmres<F>(mut apply: F, b: &[Complex64], opts: GmresOptions) -> Result<GmresOutcome>
where
    F: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome { x, iterations: 0, residual: 0.0, history: vec![] });
    }
    let m = opts.restart.max(1);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut r = b.to_vec();

    loop {
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok(GmresOutcome { x, iterations, residual: rel, history });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence { iterations, residual: rel, history });
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hess: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<(Complex64, Complex64)> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut k_done = 0;
        for k in 0..m {
            let mut w = apply(&basis[k])?;
            let mut col = vec![Complex64::new(0.0, 0.0); k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hik = dotc(v, &w);
                col[i] = hik;
                w.iter_mut().zip(v).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let hnext = norm(&w);
            col[k + 1] = Complex64::new(hnext, 0.0);
            for (i, (c, s)) in cs.iter().enumerate() {
                let t = c.conj() * col[i] + s.conj() * col[i + 1];
                col[i + 1] = -s * col[i] + c * col[i + 1];
                col[i] = t;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let d = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if d == 0.0 { (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)) } else { (a / d, bb / d) };
            col[k] = Complex64::new(d, 0.0);
            col[k + 1] = Complex64::new(0.0, 0.0);
            let gk = g[k];
            g[k] = c.conj() * gk;
            g.push(-s * gk);
            cs.push((c, s));
            hess.push(col);
            iterations += 1;
            k_done = k + 1;
            let est = g[k + 1].norm() / bnorm;
            history.push(est);
            if est <= opts.tol || hnext <= 1e-14 * bnorm || iterations >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|z| z / hnext).collect());
        }
        // back substitution on the triangularized Hessenberg matrix
        let mut y = vec![Complex64::new(0.0, 0.0); k_done];
        for i in (0..k_done).rev() {
            let mut s = g[i];
            for j in i + 1..k_done {
                s -= hess[j][i] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[j]).for_each(|(xi, vi)| *xi += yj * vi);
        }
        let ax = apply(&x)?;
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(a: &[Vec<Complex64>], x: &[Complex64]) -> Vec<Complex64> {
        a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn solves_random_well_conditioned_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let mut a: Vec<Vec<Complex64>> = (0..n)
            .map(|_| (0..n).map(|_| Complex64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1))).collect())
            .collect();
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += Complex64::new(2.0, 0.5);
        }
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let out = gmres(|x| Ok(dense(&a, x)), &b, GmresOptions { tol: 1e-12, restart: 8, max_iter: 200 }).unwrap();
        let r = dense(&a, &out.x);
        let err: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt() / norm(&b);
        assert!(err < 1e-11);
        assert!(out.residual <= 1e-12);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) || out.history.len() > 8);
    }

    #[test]
    fn zero_rhs_takes_no_iterations() {
        let out = gmres(|x| Ok(x.to_vec()), &[Complex64::new(0.0, 0.0); 5], GmresOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn reports_non_convergence_with_history() {
        // rotation by 90 degrees: GMRES(1) stagnates
        let op = |x: &[Complex64]| Ok(vec![-x[1], x[0]]);
        let b = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        match gmres(op, &b, GmresOptions { tol: 1e-10, restart: 1, max_iter: 10 }) {
            Err(Error::NonConvergence { history, .. }) => assert!(!history.is_empty()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
