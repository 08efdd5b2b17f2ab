//! Unnormalized multi-dimensional complex FFTs over row-major buffers.
//!
//! Plans are cached process-wide behind a mutex; the cached `Arc<dyn Fft>`
//! handles are `Send + Sync`, so transforms on distinct buffers may run on
//! any thread.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, direction: FftDirection) -> Plan {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let key = (len, direction == FftDirection::Inverse);
    if let Some(p) = guard.1.get(&key) {
        return p.clone();
    }
    let p = guard.0.plan_fft(len, direction);
    guard.1.insert(key, p.clone());
    p
}

fn direction(inverse: bool) -> FftDirection {
    if inverse {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    }
}

/// Transforms every contiguous row of length `len` in `data`.
fn rows(data: &mut [Complex64], len: usize, inverse: bool) {
    let p = plan(len, direction(inverse));
    let mut scratch = vec![Complex64::new(0.0, 0.0); p.get_inplace_scratch_len()];
    p.process_with_scratch(data, &mut scratch);
}

/// In-place 2D FFT of a `dims[0] x dims[1]` row-major array (no scaling).
pub fn fft2(data: &mut [Complex64], dims: [usize; 2], inverse: bool) {
    let [n0, n1] = dims;
    assert_eq!(data.len(), n0 * n1);
    rows(data, n1, inverse);
    let mut t = vec![Complex64::new(0.0, 0.0); n0 * n1];
    transpose(data, &mut t, n0, n1);
    rows(&mut t, n0, inverse);
    transpose(&t, data, n1, n0);
}

/// In-place 3D FFT of a row-major array with the last axis fastest (no scaling).
pub fn fft3(data: &mut [Complex64], dims: [usize; 3], inverse: bool) {
    let [n0, n1, n2] = dims;
    assert_eq!(data.len(), n0 * n1 * n2);
    rows(data, n2, inverse);

    let slab = n1 * n2;
    let mut t = vec![Complex64::new(0.0, 0.0); slab.max(n0 * n2)];
    for s in data.chunks_mut(slab) {
        transpose(s, &mut t[..slab], n1, n2);
        rows(&mut t[..slab], n1, inverse);
        transpose(&t[..slab], s, n2, n1);
    }

    // axis 0: gather (i0, i2) planes for every i1 with i0 contiguous
    let plane = n0 * n2;
    let p0 = plan(n0, direction(inverse));
    let mut scratch = vec![Complex64::new(0.0, 0.0); p0.get_inplace_scratch_len()];
    for i1 in 0..n1 {
        let buf = &mut t[..plane];
        for i0 in 0..n0 {
            let base = (i0 * n1 + i1) * n2;
            for i2 in 0..n2 {
                buf[i2 * n0 + i0] = data[base + i2];
            }
        }
        p0.process_with_scratch(buf, &mut scratch);
        for i0 in 0..n0 {
            let base = (i0 * n1 + i1) * n2;
            for i2 in 0..n2 {
                data[base + i2] = buf[i2 * n0 + i0];
            }
        }
    }
}

/// Writes the transpose of the `rows x cols` matrix `src` into `dst`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    for rb in (0..rows).step_by(B) {
        for cb in (0..cols).step_by(B) {
            for r in rb..(rb + B).min(rows) {
                for c in cb..(cb + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft3(data: &[Complex64], dims: [usize; 3]) -> Vec<Complex64> {
        let [a, b, c] = dims;
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        for k0 in 0..a {
            for k1 in 0..b {
                for k2 in 0..c {
                    let mut s = Complex64::new(0.0, 0.0);
                    for j0 in 0..a {
                        for j1 in 0..b {
                            for j2 in 0..c {
                                let ph = -2.0
                                    * std::f64::consts::PI
                                    * ((k0 * j0) as f64 / a as f64
                                        + (k1 * j1) as f64 / b as f64
                                        + (k2 * j2) as f64 / c as f64);
                                s += data[(j0 * b + j1) * c + j2] * Complex64::from_polar(1.0, ph);
                            }
                        }
                    }
                    out[(k0 * b + k1) * c + k2] = s;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft_on_anisotropic_box() {
        let dims = [4, 6, 5];
        let data: Vec<Complex64> = (0..120)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let expect = naive_dft3(&data, dims);
        let mut got = data.clone();
        fft3(&mut got, dims, false);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).norm() < 1e-10);
        }
        fft3(&mut got, dims, true);
        for (g, d) in got.iter().zip(&data) {
            assert!((g / 120.0 - d).norm() < 1e-12);
        }
    }

    #[test]
    fn fft2_round_trip() {
        let data: Vec<Complex64> = (0..48).map(|i| Complex64::new(i as f64, -(i as f64).sqrt())).collect();
        let mut got = data.clone();
        fft2(&mut got, [6, 8], false);
        fft2(&mut got, [6, 8], true);
        for (g, d) in got.iter().zip(&data) {
            assert!((g / 48.0 - d).norm() < 1e-12);
        }
    }
}
