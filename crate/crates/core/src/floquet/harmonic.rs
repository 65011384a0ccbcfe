//! Harmonic-balance equations and their real Jacobian.
//!
//! Unknown layout: real parts of `a`, imaginary parts of `a`, real parts of
//! `b`, imaginary parts of `b`, then `eps` and optionally `S/w`. Residual
//! rows follow the same order for the two complex equations.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Model constants entering the equations. `drive` is `S` itself so the
/// continuation can move it without revalidating parameters.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Coefficients {
    pub coupling: f64,
    pub drive: f64,
    pub frequency: f64,
    pub signed_chi: f64,
}

/// `R_d = sum_k conj(x_k) x_{k+d}` for `d = -2M..=2M`, stored at `d + 2M`.
pub(crate) fn autocorrelation(x: &[C]) -> Vec<C> {
    let n = x.len();
    let mut out = vec![ZERO; 2 * n - 1];
    for (k, xk) in x.iter().enumerate() {
        let ck = xk.conj();
        for (l, xl) in x.iter().enumerate() {
            // d = l - k, index d + (n - 1).
            out[l + n - 1 - k] += ck * xl;
        }
    }
    out
}

/// `C_s = sum_j x_j x_{s-j}` for `s = -2M..=2M`, stored at `s + 2M`.
pub(crate) fn self_convolution(x: &[C]) -> Vec<C> {
    let n = x.len();
    let mut out = vec![ZERO; 2 * n - 1];
    for (j, xj) in x.iter().enumerate() {
        for (l, xl) in x.iter().enumerate() {
            out[j + l] += xj * xl;
        }
    }
    out
}

/// Harmonics of `|x|^2 x`: `T_n = sum_j x_j R_{n-j}`.
pub(crate) fn cubic(x: &[C], auto: &[C]) -> Vec<C> {
    let n = x.len();
    let mut out = vec![ZERO; n];
    for (i, t) in out.iter_mut().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            // (n_i - n_j) + 2M = i - j + (n - 1).
            *t += xj * auto[i + n - 1 - j];
        }
    }
    out
}

fn neighbours(x: &[C], k: usize) -> C {
    let below = if k > 0 { x[k - 1] } else { ZERO };
    let above = if k + 1 < x.len() { x[k + 1] } else { ZERO };
    below + above
}

/// Complex residuals of the two mode equations.
pub(crate) fn equations(p: &Coefficients, a: &[C], b: &[C], eps: f64) -> (Vec<C>, Vec<C>) {
    let n = a.len();
    let m = (n / 2) as f64;
    let ta = cubic(a, &autocorrelation(a));
    let tb = cubic(b, &autocorrelation(b));
    let quarter = 0.25 * p.drive;
    let half = 0.5 * p.coupling;
    let mut r1 = Vec::with_capacity(n);
    let mut r2 = Vec::with_capacity(n);
    for k in 0..n {
        let detune = eps + (k as f64 - m) * p.frequency;
        r1.push(a[k] * detune - b[k] * half + neighbours(a, k) * quarter + ta[k] * p.signed_chi);
        r2.push(b[k] * detune - a[k] * half - neighbours(b, k) * quarter + tb[k] * p.signed_chi);
    }
    (r1, r2)
}

/// Writes `r = alpha x + beta conj(x)` as a 2x2 real block at rows
/// `(re_row, im_row)` and columns `(re_col, im_col)`.
#[inline]
fn put(j: &mut DMatrix<f64>, rows: (usize, usize), cols: (usize, usize), alpha: C, beta: C) {
    let plus = alpha + beta;
    let minus = alpha - beta;
    j[(rows.0, cols.0)] += plus.re;
    j[(rows.1, cols.0)] += plus.im;
    j[(rows.0, cols.1)] -= minus.im;
    j[(rows.1, cols.1)] += minus.re;
}

/// Full-space residual and Jacobian of the harmonic-balance system with a
/// normalization row and a phase row `Im <reference, x> = 0`.
///
/// The returned Jacobian has `4N + 1` columns, or `4N + 2` when
/// `with_ratio` adds the derivative with respect to `S/w`.
pub(crate) fn system(
    p: &Coefficients,
    a: &[C],
    b: &[C],
    eps: f64,
    reference: &[C],
    with_ratio: bool,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.len();
    let m = (n / 2) as f64;
    let rows = 4 * n + 2;
    let cols = 4 * n + 1 + usize::from(with_ratio);
    let mut f = DVector::zeros(rows);
    let mut j = DMatrix::zeros(rows, cols);

    let (r1, r2) = equations(p, a, b, eps);
    for k in 0..n {
        f[k] = r1[k].re;
        f[n + k] = r1[k].im;
        f[2 * n + k] = r2[k].re;
        f[3 * n + k] = r2[k].im;
    }
    let norm: f64 = a.iter().chain(b).map(|c| c.norm_sqr()).sum();
    f[4 * n] = norm - 1.0;
    let mut phase = ZERO;
    for (r, x) in reference.iter().zip(a.iter().chain(b)) {
        phase += r.conj() * x;
    }
    f[4 * n + 1] = phase.im;

    let g = p.signed_chi;
    let quarter = C::new(0.25 * p.drive, 0.0);
    let half = C::new(-0.5 * p.coupling, 0.0);
    for (x, block, sign) in [(a, 0, 1.0), (b, 2 * n, -1.0)] {
        let auto = autocorrelation(x);
        let conv = self_convolution(x);
        for row in 0..n {
            let rr = (block + row, block + n + row);
            let detune = eps + (row as f64 - m) * p.frequency;
            for col in 0..n {
                // Cubic term: 2 R_{n-m} dx_m + C_{n+m} conj(dx_m).
                let mut alpha = auto[row + n - 1 - col] * (2.0 * g);
                let beta = conv[row + col] * g;
                if col == row {
                    alpha += detune;
                }
                if col + 1 == row || row + 1 == col {
                    alpha += quarter * sign;
                }
                put(&mut j, rr, (block + col, block + n + col), alpha, beta);
            }
            // Coupling to the other mode.
            let other = 2 * n - block;
            put(&mut j, rr, (other + row, other + n + row), half, ZERO);
            // Quasienergy column.
            j[(rr.0, 4 * n)] = x[row].re;
            j[(rr.1, 4 * n)] = x[row].im;
            if with_ratio {
                let d = neighbours(x, row) * (0.25 * p.frequency * sign);
                j[(rr.0, 4 * n + 1)] = d.re;
                j[(rr.1, 4 * n + 1)] = d.im;
            }
        }
    }
    for (k, (x, r)) in a.iter().chain(b).zip(reference).enumerate() {
        let (re, im) = (k % n + (k / n) * 2 * n, k % n + (k / n) * 2 * n + n);
        j[(4 * n, re)] = 2.0 * x.re;
        j[(4 * n, im)] = 2.0 * x.im;
        j[(4 * n + 1, re)] = -r.im;
        j[(4 * n + 1, im)] = r.re;
    }
    (f, j)
}
