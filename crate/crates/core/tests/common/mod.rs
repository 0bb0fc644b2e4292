//! Seeded generators and independent reference computations shared by the
//! integration suites.
#![allow(dead_code)]

use gfv_core::agents::AgentModel;
use gfv_core::matrixkit::RealMatrix;
use gfv_core::network::NetworkStructure;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> RealMatrix {
    RealMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Generic Gaussian agent; minimal with probability one.
pub fn random_agent(rng: &mut ChaCha8Rng, n: usize, m: usize) -> AgentModel {
    AgentModel::new(gaussian(rng, n, n), gaussian(rng, n, m), gaussian(rng, m, n)).unwrap()
}

/// `V D V⁻¹` with `V = I + 0.3 G` and `D` a real block diagonal carrying
/// random real eigenvalues and conjugate pairs.
pub fn diagonalizable(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> RealMatrix {
    let mut d = RealMatrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && rng.gen_bool(0.5) {
            let (a, b) = (scale * rng.gen_range(-1.0..1.0), scale * rng.gen_range(0.2..1.0));
            d[(i, i)] = a;
            d[(i + 1, i + 1)] = a;
            d[(i, i + 1)] = b;
            d[(i + 1, i)] = -b;
            i += 2;
        } else {
            d[(i, i)] = scale * rng.gen_range(-1.0..1.0);
            i += 1;
        }
    }
    let v = RealMatrix::identity(n, n) + gaussian(rng, n, n) * 0.3;
    let vi = v.clone().try_inverse().expect("perturbed identity is invertible");
    v * d * vi
}

pub fn random_structure(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64) -> NetworkStructure {
    NetworkStructure::new(diagonalizable(rng, n, scale), gaussian(rng, n, m), gaussian(rng, m, n)).unwrap()
}

/// Kronecker product by the defining index formula.
pub fn kron_oracle(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    let mut out = RealMatrix::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            for k in 0..b.nrows() {
                for l in 0..b.ncols() {
                    out[(i * b.nrows() + k, j * b.ncols() + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Characteristic polynomial `det(sI - M)` by Faddeev–LeVerrier, highest
/// degree first.
pub fn charpoly_oracle(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = m.nrows();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut coeffs = vec![c(1.0, 0.0)];
    let mut mk = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..=n {
        mk = m * &mk + &eye * coeffs[k - 1];
        let am = m * &mk;
        coeffs.push(-am.trace() / k as f64);
    }
    coeffs
}

/// Weierstrass (Durand–Kerner) roots of a polynomial, highest degree first.
pub fn roots_oracle(coeffs: &[Complex64]) -> Vec<Complex64> {
    let lead = coeffs[0];
    let p: Vec<Complex64> = coeffs.iter().map(|x| x / lead).collect();
    let n = p.len() - 1;
    let eval = |z: Complex64| p.iter().fold(c(0.0, 0.0), |acc, &k| acc * z + k);
    let radius = 1.0 + p[1..].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    for _ in 0..5000 {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let denom = (0..n).filter(|&j| j != i).fold(c(1.0, 0.0), |acc, j| acc * (z[i] - z[j]));
            let step = eval(z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    // Polish each root with Newton steps on the original polynomial.
    let deriv: Vec<Complex64> = p[..n].iter().enumerate().map(|(i, &k)| k * (n - i) as f64).collect();
    let eval_d = |x: Complex64| deriv.iter().fold(c(0.0, 0.0), |acc, &k| acc * x + k);
    for r in &mut z {
        for _ in 0..3 {
            let d = eval_d(*r);
            if d.norm() > 0.0 {
                *r -= eval(*r) / d;
            }
        }
    }
    z
}

/// Greedy nearest-neighbour pairing; an upper bound on the optimal
/// bottleneck distance.
pub fn greedy_match(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn complexify(m: &RealMatrix) -> DMatrix<Complex64> {
    m.map(|x| c(x, 0.0))
}

/// `A_h + λ B_h C_h` evaluated directly.
pub fn shifted_agent(agent: &AgentModel, lambda: Complex64) -> DMatrix<Complex64> {
    complexify(agent.a()) + complexify(&(agent.b() * agent.c())) * lambda
}

/// Eigenvalues through the characteristic polynomial oracle.
pub fn eig_oracle(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    roots_oracle(&charpoly_oracle(m))
}

/// Smallest singular value of `[A - λI, B]` over the eigenvalues `λ` of `A`:
/// how far the pair sits from failing the PBH test.
pub fn pbh_margin(a: &RealMatrix, b: &RealMatrix) -> f64 {
    let n = a.nrows();
    let m = b.ncols();
    gfv_core::matrixkit::eigenvalues(a)
        .unwrap()
        .iter()
        .map(|&lambda| {
            let mut pencil = DMatrix::<Complex64>::zeros(n, n + m);
            for i in 0..n {
                for j in 0..n {
                    pencil[(i, j)] = c(a[(i, j)], 0.0);
                }
                pencil[(i, i)] -= lambda;
                for j in 0..m {
                    pencil[(i, n + j)] = c(b[(i, j)], 0.0);
                }
            }
            pencil.singular_values().min()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Conjugate-closed targets in `[-4, -0.5] × [-4, 4]`, pairwise at least 0.5
/// apart.
pub fn separated_targets(r: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let mut t: Vec<Complex64> = Vec::new();
    let mut tries = 0;
    while t.len() < n {
        tries += 1;
        if tries % 1000 == 0 {
            t.clear();
        }
        let z = if n - t.len() >= 2 && r.gen_bool(0.5) {
            c(r.gen_range(-4.0..-0.5), r.gen_range(0.25..4.0))
        } else {
            c(r.gen_range(-4.0..-0.5), 0.0)
        };
        if t.iter().all(|w| (w - z).norm() >= 0.5 && (w - z.conj()).norm() >= 0.5) {
            t.push(z);
            if z.im != 0.0 {
                t.push(z.conj());
            }
        }
    }
    t
}

/// Standard-normal `(A, B)` with `N ≤ 10`, `M ≤ 3`, kept when
/// [`pbh_margin`] is at least 0.1.
pub fn robust_controllable_pair(r: &mut ChaCha8Rng) -> (RealMatrix, RealMatrix) {
    loop {
        let n = r.gen_range(1..=10usize);
        let m = r.gen_range(1..=3usize.min(n));
        let a = gaussian(r, n, n);
        let b = gaussian(r, n, m);
        if pbh_margin(&a, &b) >= 0.1 {
            return (a, b);
        }
    }
}

/// Stable-ish agent, small structure and gains, drawn until `verify_design`
/// accepts them at [`gfv_core::region::DESIGN_MARGIN`].
pub fn verified_instance(r: &mut ChaCha8Rng) -> (AgentModel, NetworkStructure, RealMatrix, RealMatrix) {
    use gfv_core::design::verify_design;
    loop {
        let (n, na) = (r.gen_range(1..=3), r.gen_range(1..=4));
        let shift = r.gen_range(0.5..2.0);
        let agent = AgentModel::new(
            gaussian(r, n, n) - RealMatrix::identity(n, n) * shift,
            gaussian(r, n, 1),
            gaussian(r, 1, n),
        )
        .unwrap();
        let s = NetworkStructure::new(gaussian(r, na, na) * 0.3, gaussian(r, na, 1), gaussian(r, 1, na)).unwrap();
        let k = gaussian(r, 1, na) * 0.3;
        let l = gaussian(r, na, 1) * 0.3;
        if verify_design(&agent, &s, &k, &l, gfv_core::region::DESIGN_MARGIN).unwrap().verified {
            return (agent, s, k, l);
        }
    }
}

/// `(T diag(A₁, A₂) T⁻¹, T [B₁; 0])`: the modes of `A₂` cannot be reached.
pub fn uncontrollable_pair(r: &mut ChaCha8Rng, n: usize, m: usize) -> (RealMatrix, RealMatrix) {
    let hidden = r.gen_range(1..n);
    let reach = n - hidden;
    let mut a = RealMatrix::zeros(n, n);
    a.view_mut((0, 0), (reach, reach)).copy_from(&gaussian(r, reach, reach));
    a.view_mut((reach, reach), (hidden, hidden)).copy_from(&gaussian(r, hidden, hidden));
    a.view_mut((0, reach), (reach, hidden)).copy_from(&gaussian(r, reach, hidden));
    let mut b = RealMatrix::zeros(n, m);
    b.view_mut((0, 0), (reach, m)).copy_from(&gaussian(r, reach, m));
    let t = RealMatrix::identity(n, n) + gaussian(r, n, n) * 0.2;
    let ti = t.clone().try_inverse().unwrap();
    (&t * a * &ti, t * b)
}

/// Gaussian agent shifted left by a random amount in `[0, 2)`.
pub fn stableish_agent(r: &mut ChaCha8Rng, n: usize, m: usize) -> AgentModel {
    let shift = r.gen_range(0.0..2.0);
    AgentModel::new(
        gaussian(r, n, n) - RealMatrix::identity(n, n) * shift,
        gaussian(r, n, m),
        gaussian(r, m, n),
    )
    .unwrap()
}
