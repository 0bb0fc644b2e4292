//! Dense matrix utilities shared by every other module.
//!
//! Real and complex matrices are plain `nalgebra` dynamic matrices. Eigenvalues
//! come from a balanced complex Schur reduction, ranks from singular values,
//! and controllable-subspace dimensions from an orthogonal staircase.

mod poly;
mod svd;

pub use poly::Polynomial;

use nalgebra::{ComplexField, DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative tolerance used for numerical rank decisions unless a caller overrides it.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Scalar types the toolkit accepts as matrix entries.
pub trait Entry: ComplexField<RealField = f64> + Copy {
    fn to_c64(self) -> Complex64;
    fn lift_real(x: f64) -> Self;
}

impl Entry for f64 {
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn lift_real(x: f64) -> Self {
        x
    }
}

impl Entry for Complex64 {
    fn to_c64(self) -> Complex64 {
        self
    }
    fn lift_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Kronecker product: block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron<T: Entry>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub(crate) fn ensure_square<T: Entry>(m: &DMatrix<T>) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

pub(crate) fn ensure_finite<T: Entry>(m: &DMatrix<T>, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.to_c64().is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Diagonal similarity scaling (powers of two) that equalises row and column
/// norms. Reduces the backward error of the subsequent Schur iteration for
/// badly scaled inputs such as companion matrices.
fn balance(m: &mut ComplexMatrix) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    let norm1 = |z: Complex64| z.re.abs() + z.im.abs();
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += norm1(m[(j, i)]);
                    r += norm1(m[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= inv;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// All eigenvalues of a square matrix, with multiplicity.
pub fn eigenvalues<T: Entry>(m: &DMatrix<T>) -> Result<Vec<Complex64>> {
    ensure_square(m)?;
    ensure_finite(m, "eigenvalue input")?;
    let n = m.nrows();
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![m[(0, 0)].to_c64()]),
        _ => {}
    }
    let mut c = m.map(|x| x.to_c64());
    balance(&mut c);
    if let Some(vals) = schur_eigenvalues(c.clone()) {
        return Ok(vals);
    }
    // Shifted QR can cycle forever on permutation-like matrices. A dense
    // orthogonal similarity breaks the cycle and moves eigenvalues by only
    // rounding error.
    for attempt in 0..SIMILARITY_RETRIES {
        let q = fixed_orthogonal(n, attempt);
        if let Some(vals) = schur_eigenvalues(q.adjoint() * &c * &q) {
            return Ok(vals);
        }
    }
    Err(Error::NoConvergence(n))
}

const SIMILARITY_RETRIES: u64 = 3;

fn schur_eigenvalues(c: ComplexMatrix) -> Option<Vec<Complex64>> {
    let n = c.nrows();
    let schur = Schur::try_new(c, f64::EPSILON, 1000 * n)?;
    Some(schur.eigenvalues()?.iter().copied().collect())
}

fn fixed_orthogonal(n: usize, attempt: u64) -> ComplexMatrix {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0_5c40 + attempt);
    let g = RealMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    to_complex(&g.qr().q())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa<T: Entry>(m: &DMatrix<T>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// True iff every eigenvalue has real part `< -margin`.
pub fn is_hurwitz<T: Entry>(m: &DMatrix<T>, margin: f64) -> Result<bool> {
    Ok(eigenvalues(m)?.iter().all(|z| z.re < -margin))
}

pub fn singular_values<T: Entry>(m: &DMatrix<T>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    svd::jacobi_svd(m).s
}

pub fn spectral_norm<T: Entry>(m: &DMatrix<T>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank<T: Entry>(m: &DMatrix<T>, tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > tol * top).count(),
        _ => 0,
    }
}

/// Smallest singular value of `m` and a unit vector `v` with `m v ≈ σ_min u`.
///
/// Requires `nrows >= ncols`.
pub(crate) fn smallest_right_singular(m: &ComplexMatrix) -> Result<(f64, DVector<Complex64>)> {
    let cols = m.ncols();
    if m.nrows() < cols {
        return Err(Error::mismatch("null vector", "rows >= cols", m.nrows()));
    }
    if cols == 0 {
        return Err(Error::mismatch("null vector", "at least one column", 0));
    }
    Ok(svd::jacobi_svd(m).last_right())
}

/// Rotate a complex vector so its largest entry is real and positive, and
/// scale it to unit 2-norm.
pub(crate) fn normalize_phase(v: &mut DVector<Complex64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

/// Dimension of the controllable subspace of `(a, b)`, i.e. the numerical
/// rank of `[b, a b, ..., a^{q-1} b]`, computed with an orthogonal staircase
/// so that powers of `a` are never formed.
pub fn krylov_rank(a: &RealMatrix, b: &RealMatrix, tol: f64) -> Result<usize> {
    ensure_square(a)?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::mismatch("krylov_rank", format!("{n} rows in B"), b.nrows()));
    }
    if n == 0 || b.ncols() == 0 {
        return Ok(0);
    }
    let a_norm = spectral_norm(a);
    let mut basis = RealMatrix::zeros(n, 0);
    let mut block = b.clone();
    let mut scale = spectral_norm(b);
    while basis.ncols() < n && scale > 0.0 {
        for _ in 0..2 {
            let proj = &basis * (basis.transpose() * &block);
            block -= proj;
        }
        let svd = svd::jacobi_svd(&block);
        let u = svd.u;
        let fresh: Vec<usize> = svd
            .s
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > tol * scale)
            .map(|(i, _)| i)
            .take(n - basis.ncols())
            .collect();
        if fresh.is_empty() {
            break;
        }
        let new_dirs = u.select_columns(fresh.iter());
        let k = basis.ncols();
        basis = basis.insert_columns(k, new_dirs.ncols(), 0.0);
        basis.columns_mut(k, new_dirs.ncols()).copy_from(&new_dirs);
        block = a * new_dirs;
        scale = a_norm;
    }
    Ok(basis.ncols())
}

/// Smallest achievable maximum distance over all one-to-one pairings of two
/// multisets of complex numbers (bottleneck matching). `None` when the sizes
/// differ.
pub fn matched_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let n = a.len();
    if n == 0 {
        return Some(0.0);
    }
    let dist: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).collect())
        .collect();
    let mut levels: Vec<f64> = dist.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(&dist, levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(levels[lo])
}

fn has_perfect_matching(dist: &[Vec<f64>], threshold: f64) -> bool {
    let n = dist.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];

    fn augment(
        i: usize,
        dist: &[Vec<f64>],
        threshold: f64,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..dist.len() {
            if dist[i][j] <= threshold && !seen[j] {
                seen[j] = true;
                let free = match owner[j] {
                    None => true,
                    Some(k) => augment(k, dist, threshold, seen, owner),
                };
                if free {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }

    (0..n).all(|i| {
        let mut seen = vec![false; n];
        augment(i, dist, threshold, &mut seen, &mut owner)
    })
}

/// Sort complex numbers by real part, then imaginary part.
pub fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
}
