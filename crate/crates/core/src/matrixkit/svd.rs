//! Thin singular value decomposition by one-sided Jacobi rotations.
//!
//! Slower than bidiagonal QR but accurate on rank-deficient blocks, where
//! nalgebra's `SVD` has been observed to return left singular vectors that do
//! not reproduce the input to more than three digits.

use nalgebra::{DMatrix, DVector};

use super::Entry;

const MAX_SWEEPS: usize = 80;

/// `m = u · diag(s) · vᴴ` with `s` in decreasing order. `v` is always
/// square and unitary; columns of `u` belonging to zero singular values are
/// zero.
pub(crate) struct Svd<T: Entry> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub v: DMatrix<T>,
}

fn rotate<T: Entry>(m: &mut DMatrix<T>, p: usize, q: usize, phase: T, cs: f64, sn: f64) {
    let (cs, sn) = (T::lift_real(cs), T::lift_real(sn));
    for r in 0..m.nrows() {
        let a = m[(r, p)];
        let b = m[(r, q)] * phase.conjugate();
        m[(r, p)] = cs * a - sn * b;
        m[(r, q)] = sn * a + cs * b;
    }
}

pub(crate) fn jacobi_svd<T: Entry>(m: &DMatrix<T>) -> Svd<T> {
    let (rows, cols) = m.shape();
    if rows < cols {
        let t = jacobi_svd(&m.adjoint());
        let u = t.v.columns(0, rows).into_owned();
        return Svd { u, s: t.s, v: t.u };
    }
    let mut w = m.clone();
    let mut v = DMatrix::<T>::identity(cols, cols);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.modulus();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / T::lift_real(g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate(&mut w, p, q, phase, cs, sn);
                rotate(&mut v, p, q, phase, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut u = DMatrix::<T>::zeros(rows, cols);
    let mut v_sorted = DMatrix::<T>::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        if sigma > 0.0 {
            u.set_column(k, &(w.column(j) / T::lift_real(sigma)));
        }
        v_sorted.set_column(k, &v.column(j));
        s.push(sigma);
    }
    Svd { u, s, v: v_sorted }
}

impl<T: Entry> Svd<T> {
    /// Right singular vector of the smallest singular value.
    pub(crate) fn last_right(&self) -> (f64, DVector<T>) {
        let k = self.s.len() - 1;
        (self.s[k], self.v.column(k).into_owned())
    }
}
