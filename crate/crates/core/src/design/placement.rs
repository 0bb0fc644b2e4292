use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TargetSet;
use crate::analysis::{pbh_controllable, PbhOutcome};
use crate::error::{Error, Result};
use crate::matrixkit::{
    ensure_square, kron, singular_values, Polynomial, RealMatrix, DEFAULT_RANK_TOL,
};

/// Seed for the free parameter of multi-input placement.
pub const DEFAULT_PLACEMENT_SEED: u64 = 0x5eed_9a1e;

/// Number of free-parameter draws tried by multi-input placement; the one
/// with the best-conditioned eigenvector matrix wins.
const SYLVESTER_TRIALS: u64 = 16;

/// Real `K` with `σ(A - BK)` equal to `targets`.
pub fn place_poles(a: &RealMatrix, b: &RealMatrix, targets: &TargetSet) -> Result<RealMatrix> {
    place_poles_seeded(a, b, targets, DEFAULT_PLACEMENT_SEED)
}

pub fn place_poles_seeded(
    a: &RealMatrix,
    b: &RealMatrix,
    targets: &TargetSet,
    seed: u64,
) -> Result<RealMatrix> {
    ensure_square(a)?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::mismatch("pole placement B rows", n, b.nrows()));
    }
    if targets.len() != n {
        return Err(Error::mismatch("pole placement target count", n, targets.len()));
    }
    if let PbhOutcome::Fail(cert) = pbh_controllable(a, b, DEFAULT_RANK_TOL)? {
        return Err(Error::Uncontrollable(Box::new(cert)));
    }
    if b.ncols() == 1 {
        ackermann(a, b, targets)
    } else {
        sylvester(a, b, targets, seed)
    }
}

/// `L` with `σ(A - LC)` equal to `targets`, by duality.
pub fn observer_gain(a: &RealMatrix, c: &RealMatrix, targets: &TargetSet) -> Result<RealMatrix> {
    observer_gain_seeded(a, c, targets, DEFAULT_PLACEMENT_SEED)
}

pub fn observer_gain_seeded(
    a: &RealMatrix,
    c: &RealMatrix,
    targets: &TargetSet,
    seed: u64,
) -> Result<RealMatrix> {
    match place_poles_seeded(&a.transpose(), &c.transpose(), targets, seed) {
        Ok(k) => Ok(k.transpose()),
        Err(Error::Uncontrollable(cert)) => Err(Error::Unobservable(cert)),
        Err(e) => Err(e),
    }
}

/// `K = e_nᵀ 𝒞⁻¹ φ(A)` with `𝒞` the controllability matrix and `φ` the
/// desired characteristic polynomial.
fn ackermann(a: &RealMatrix, b: &RealMatrix, targets: &TargetSet) -> Result<RealMatrix> {
    let n = a.nrows();
    let phi = Polynomial::from_conjugate_roots(targets.as_slice(), 1e-9)?;
    let mut ctrb = RealMatrix::zeros(n, n);
    let mut col = b.column(0).into_owned();
    for k in 0..n {
        ctrb.set_column(k, &col);
        col = a * col;
    }
    let mut e_n = nalgebra::DVector::zeros(n);
    e_n[n - 1] = 1.0;
    let w = ctrb
        .transpose()
        .lu()
        .solve(&e_n)
        .ok_or(Error::Singular("controllability matrix"))?;
    let mut phi_a = RealMatrix::zeros(n, n);
    for &c in phi.coeffs() {
        phi_a = &phi_a * a;
        for i in 0..n {
            phi_a[(i, i)] += c;
        }
    }
    Ok(RealMatrix::from_row_slice(1, n, (w.transpose() * phi_a).as_slice()))
}

/// Parametric placement: solve `A X - X Λ = B G` for a random `G`, then
/// `K = G X⁻¹` gives `A - BK = X Λ X⁻¹`.
fn sylvester(a: &RealMatrix, b: &RealMatrix, targets: &TargetSet, seed: u64) -> Result<RealMatrix> {
    let n = a.nrows();
    let m = b.ncols();
    let lambda = targets.real_block_diagonal();
    let eye = RealMatrix::identity(n, n);
    let op = kron(&eye, a) - kron(&lambda.transpose(), &eye);
    let lu = op.lu();

    let mut best: Option<(f64, RealMatrix)> = None;
    for trial in 0..SYLVESTER_TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial));
        let g = RealMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let rhs = b * &g;
        let Some(vec_x) = lu.solve(&nalgebra::DVector::from_column_slice(rhs.as_slice())) else {
            break;
        };
        let x = RealMatrix::from_column_slice(n, n, vec_x.as_slice());
        let s = singular_values(&x);
        let cond = s[0] / s[n - 1];
        if !cond.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|(c, _)| cond < *c) {
            let Some(kt) = x.transpose().lu().solve(&g.transpose()) else {
                continue;
            };
            best = Some((cond, kt.transpose()));
        }
    }
    best.map(|(_, k)| k).ok_or(Error::Singular(
        "parametric placement (a target coincides with an open-loop eigenvalue)",
    ))
}
