use std::ops::{Mul, Sub};

use num_complex::Complex64;

use super::{eigenvalues, Entry};
use crate::error::{Error, Result};

/// Univariate polynomial with coefficients stored highest degree first.
///
/// Leading zeros are stripped on construction, so the zero polynomial has an
/// empty coefficient vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T = f64> {
    coeffs: Vec<T>,
}

impl<T: Entry> Polynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        let first = coeffs
            .iter()
            .position(|c| c.to_c64() != Complex64::new(0.0, 0.0))
            .unwrap_or(coeffs.len());
        Self {
            coeffs: coeffs[first..].to_vec(),
        }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self {
            coeffs: vec![T::lift_real(1.0)],
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<T> {
        self.coeffs.first().copied()
    }

    /// Coefficient of `s^k`.
    pub fn coeff(&self, k: usize) -> T {
        match self.degree() {
            Some(d) if k <= d => self.coeffs[d - k],
            _ => T::lift_real(0.0),
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c.to_c64())
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    /// Divide through by the leading coefficient.
    pub fn monic(&self) -> Option<Self> {
        let lead = self.leading()?;
        Some(Self {
            coeffs: self.coeffs.iter().map(|&c| c / lead).collect(),
        })
    }

    pub fn to_complex(&self) -> Polynomial<Complex64> {
        Polynomial {
            coeffs: self.coeffs.iter().map(|c| c.to_c64()).collect(),
        }
    }

    /// All roots with multiplicity, as eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let deg = match self.degree() {
            None => return Err(Error::InvalidPolynomial("zero polynomial has no finite root set")),
            Some(0) => return Err(Error::InvalidPolynomial("constant polynomial has no roots")),
            Some(d) => d,
        };
        let lead = self.coeffs[0].to_c64();
        let mut comp = nalgebra::DMatrix::<Complex64>::zeros(deg, deg);
        for j in 0..deg {
            comp[(0, j)] = -self.coeffs[j + 1].to_c64() / lead;
        }
        for i in 1..deg {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        eigenvalues(&comp)
    }
}

impl Polynomial<Complex64> {
    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        roots.iter().fold(Self::one(), |acc, &r| {
            &acc * &Polynomial::new(vec![Complex64::new(1.0, 0.0), -r])
        })
    }
}

impl Polynomial<f64> {
    /// Monic real polynomial with the given roots. The roots must be closed
    /// under conjugation to within `tol` on the resulting imaginary parts.
    pub fn from_conjugate_roots(roots: &[Complex64], tol: f64) -> Result<Self> {
        let p = Polynomial::<Complex64>::from_roots(roots);
        let scale = p.coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if p.coeffs.iter().any(|c| c.im.abs() > tol * scale) {
            return Err(Error::NotConjugateClosed(format!("{roots:?}")));
        }
        Ok(Polynomial::new(p.coeffs.iter().map(|c| c.re).collect()))
    }
}

impl<T: Entry> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![T::lift_real(0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Entry> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn sub(self, rhs: Self) -> Polynomial<T> {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let out = (0..len)
            .rev()
            .map(|k| self.coeff(k) - rhs.coeff(k))
            .collect();
        Polynomial::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::matched_distance;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    fn real_roots(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn leading_zeros_are_trimmed() {
        assert_eq!(p(&[0.0, 0.0, 1.0, 2.0]).coeffs(), &[1.0, 2.0]);
        assert_eq!(p(&[0.0]).degree(), None);
        assert_eq!(p(&[3.0]).degree(), Some(0));
    }

    #[test]
    fn multiply_by_one_is_identity() {
        let q = p(&[1.0, -2.0, 3.5]);
        assert_eq!(&q * &Polynomial::one(), q);
    }

    #[test]
    fn pendulum_numerator_expansion() {
        // (0.5 s + 1)(1.9 s^2 - 0.002 s + 2.1), expanded by hand:
        // s^3: 0.5*1.9 = 0.95
        // s^2: 0.5*(-0.002) + 1.9 = 1.899
        // s^1: 0.5*2.1 + (-0.002) = 1.048
        // s^0: 2.1
        let got = &p(&[0.5, 1.0]) * &p(&[1.9, -0.002, 2.1]);
        let want = [0.95, 1.899, 1.048, 2.1];
        assert_eq!(got.degree(), Some(3));
        for (g, w) in got.coeffs().iter().zip(want) {
            assert!((g - w).abs() < 1e-15, "{g} vs {w}");
        }
    }

    #[test]
    fn pendulum_denominator_expansion() {
        let got = [p(&[1.0, 0.0]), p(&[1.0, -2.0]), p(&[1.0, 1.0]), p(&[1.0, 5.0])]
            .iter()
            .fold(Polynomial::one(), |acc, f| &acc * f);
        assert_eq!(got.coeffs(), &[1.0, 4.0, -7.0, -10.0, 0.0]);
    }

    #[test]
    fn roots_of_small_polynomials() {
        let r = p(&[1.0, 1.0]).roots().unwrap();
        assert!(matched_distance(&r, &real_roots(&[-1.0])).unwrap() < 1e-15);
        let r = p(&[1.0, 0.0, 1.0]).roots().unwrap();
        let want = [Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
        assert!(matched_distance(&r, &want).unwrap() < 1e-14);
        let r = p(&[1.0, 4.0, -7.0, -10.0, 0.0]).roots().unwrap();
        assert!(matched_distance(&r, &real_roots(&[0.0, 2.0, -1.0, -5.0])).unwrap() < 1e-12);
    }

    #[test]
    fn roots_reject_degenerate_polynomials() {
        assert!(Polynomial::<f64>::zero().roots().is_err());
        assert!(p(&[4.0]).roots().is_err());
    }

    #[test]
    fn subtraction_aligns_degrees() {
        let d = &p(&[1.0, 3.0, 2.0]) - &p(&[1.0, 1.0]);
        assert_eq!(d.coeffs(), &[1.0, 2.0, 1.0]);
        let z = &p(&[1.0, 1.0]) - &p(&[1.0, 1.0]);
        assert!(z.is_zero());
    }

    #[test]
    fn conjugate_roots_give_real_coefficients() {
        let roots = [Complex64::new(-1.0, 2.0), Complex64::new(-1.0, -2.0)];
        let q = Polynomial::from_conjugate_roots(&roots, 1e-12).unwrap();
        assert_eq!(q.coeffs(), &[1.0, 2.0, 5.0]);
        assert!(Polynomial::from_conjugate_roots(&roots[..1], 1e-12).is_err());
    }
}
