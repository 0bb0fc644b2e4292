mod common;

use common::*;
use gfv_core::matrixkit::{eigenvalues, is_hurwitz, kron, Polynomial, RealMatrix};
use proptest::prelude::*;
use rand::Rng;

fn matrix(max: usize) -> impl Strategy<Value = RealMatrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(-5.0..5.0f64, r * c).prop_map(move |v| RealMatrix::from_vec(r, c, v))
    })
}

fn entries(r: usize, c: usize) -> impl Strategy<Value = RealMatrix> {
    prop::collection::vec(-5.0..5.0f64, r * c).prop_map(move |v| RealMatrix::from_vec(r, c, v))
}

proptest! {
    #[test]
    fn kron_matches_index_formula(a in matrix(4), b in matrix(4)) {
        prop_assert_eq!(kron(&a, &b), kron_oracle(&a, &b));
    }

    #[test]
    fn kron_is_bilinear(alpha in -3.0..3.0f64, a in matrix(4), b in matrix(4)) {
        let lhs = kron(&(&a * alpha), &b);
        let rhs = kron(&a, &b) * alpha;
        prop_assert!((lhs - &rhs).amax() <= 1e-12 * rhs.amax().max(1.0));
    }

    #[test]
    fn mixed_product(
        (a, b, c, d) in (1..4usize, 1..4usize, 1..4usize, 1..4usize, 1..4usize, 1..4usize)
            .prop_flat_map(|(p, q, r, s, t, u)| (entries(p, q), entries(s, t), entries(q, r), entries(t, u)))
    ) {
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!((lhs - &rhs).amax() <= 1e-11 * rhs.amax().max(1.0));
    }
}

#[test]
fn triangular_spectra_are_diagonals() {
    let mut r = rng(11);
    for trial in 0..200 {
        let n = 1 + trial % 8;
        let mut m = gaussian(&mut r, n, n);
        for i in 0..n {
            for j in 0..i {
                m[(i, j)] = 0.0;
            }
        }
        if trial % 2 == 1 {
            m = m.transpose();
        }
        let diag: Vec<_> = (0..n).map(|i| c(m[(i, i)], 0.0)).collect();
        let got = eigenvalues(&m).unwrap();
        assert!(greedy_match(&got, &diag) <= 1e-10, "trial {trial}: {got:?} vs {diag:?}");
    }
}

#[test]
fn roots_recover_separated_root_sets() {
    let mut r = rng(12);
    let mut done = 0;
    while done < 200 {
        let deg = r.gen_range(1..=8usize);
        let mut roots = Vec::new();
        while roots.len() < deg {
            let z = if deg - roots.len() >= 2 && r.gen_bool(0.5) {
                c(r.gen_range(-3.0..3.0), r.gen_range(0.3..3.0))
            } else {
                c(r.gen_range(-3.0..3.0), 0.0)
            };
            let fresh = roots.iter().all(|w: &num_complex::Complex64| (w - z).norm() > 0.3 && (w - z.conj()).norm() > 0.3);
            if fresh {
                roots.push(z);
                if z.im != 0.0 {
                    roots.push(z.conj());
                }
            }
        }
        let p = Polynomial::from_conjugate_roots(&roots, 1e-12).unwrap();
        let got = p.roots().unwrap();
        assert!(greedy_match(&got, &roots) <= 1e-8, "{roots:?} -> {got:?}");
        done += 1;
    }
}

#[test]
fn hurwitz_test_matches_reference_spectrum() {
    let mut r = rng(13);
    let mut checked = 0;
    for trial in 0..500 {
        let n = 1 + trial % 6;
        let m = gaussian(&mut r, n, n) - RealMatrix::identity(n, n) * r.gen_range(0.0..2.5);
        let top = eig_oracle(&complexify(&m)).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if top.abs() < 1e-8 {
            continue;
        }
        assert_eq!(is_hurwitz(&m, 0.0).unwrap(), top < 0.0, "trial {trial}");
        checked += 1;
    }
    assert!(checked >= 495);
}
