//! Single-agent models: state-space triples, SISO transfer functions and
//! their controllable canonical realization, and minimality checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrixkit::{
    ensure_finite, ensure_square, krylov_rank, numerical_rank, to_complex, ComplexMatrix,
    Polynomial, RealMatrix,
};

/// One agent `x' = A_h x + B_h u, y = C_h x` with `n` states and `m` channels.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentModel {
    a: RealMatrix,
    b: RealMatrix,
    c: RealMatrix,
}

impl AgentModel {
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix) -> Result<Self> {
        ensure_square(&a)?;
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("agent must have at least one state".into()));
        }
        if b.nrows() != n {
            return Err(Error::mismatch("agent B_h rows", n, b.nrows()));
        }
        let m = b.ncols();
        if m == 0 {
            return Err(Error::InvalidInput("agent must have at least one input".into()));
        }
        if c.shape() != (m, n) {
            return Err(Error::mismatch(
                "agent C_h shape",
                format!("{m}x{n}"),
                format!("{}x{}", c.nrows(), c.ncols()),
            ));
        }
        ensure_finite(&a, "A_h")?;
        ensure_finite(&b, "B_h")?;
        ensure_finite(&c, "C_h")?;
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }

    pub fn b(&self) -> &RealMatrix {
        &self.b
    }

    pub fn c(&self) -> &RealMatrix {
        &self.c
    }

    /// State dimension `n`.
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    /// Channel width `m` (inputs = outputs).
    pub fn channels(&self) -> usize {
        self.b.ncols()
    }

    /// The coupling term `B_h C_h`.
    pub fn coupling(&self) -> RealMatrix {
        &self.b * &self.c
    }

    /// Dual agent `(A_hᵀ, C_hᵀ, B_hᵀ)`; observability of the original is
    /// controllability of the dual.
    pub fn dual(&self) -> Self {
        Self {
            a: self.a.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
        }
    }

    /// `H(s) = C_h (s I - A_h)^{-1} B_h`.
    pub fn transfer_at(&self, s: Complex64) -> Result<ComplexMatrix> {
        let n = self.states();
        let resolvent = ComplexMatrix::identity(n, n) * s - to_complex(&self.a);
        let solved = resolvent
            .lu()
            .solve(&to_complex(&self.b))
            .ok_or(Error::Singular("sI - A_h"))?;
        Ok(to_complex(&self.c) * solved)
    }
}

/// Strictly proper SISO transfer function `n(s)/d(s)` with monic `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalTf {
    num: Polynomial,
    den: Polynomial,
}

impl RationalTf {
    /// Normalizes so the denominator is monic.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        let lead = den
            .leading()
            .ok_or(Error::InvalidPolynomial("zero denominator"))?;
        if !lead.is_finite()
            || den.coeffs().iter().chain(num.coeffs()).any(|c| !c.is_finite())
        {
            return Err(Error::NonFinite("transfer function coefficients"));
        }
        let den_deg = den.degree().unwrap_or(0);
        if let Some(num_deg) = num.degree() {
            if num_deg >= den_deg {
                return Err(Error::NotStrictlyProper {
                    num: num_deg,
                    den: den_deg,
                });
            }
        }
        if den_deg == 0 {
            return Err(Error::NotStrictlyProper { num: 0, den: 0 });
        }
        Ok(Self {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.degree().unwrap_or(0)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval(s) / self.den.eval(s)
    }

    /// Denominator roots that nearly coincide with a numerator root
    /// (relative distance ≤ `tol`). Empty for coprime pairs.
    pub fn near_cancellations(&self, tol: f64) -> Result<Vec<Complex64>> {
        if self.num.degree().unwrap_or(0) == 0 {
            return Ok(Vec::new());
        }
        let zeros = self.num.roots()?;
        let poles = self.den.roots()?;
        Ok(poles
            .into_iter()
            .filter(|p| {
                zeros
                    .iter()
                    .any(|z| (p - z).norm() <= tol * p.norm().max(1.0))
            })
            .collect())
    }
}

/// Controllable canonical realization of a strictly proper SISO transfer
/// function: companion `A_h` with the negated denominator coefficients in the
/// last row, `B_h = e_n`, and `C_h` holding the numerator coefficients in
/// ascending powers.
pub fn realize_siso(tf: &RationalTf) -> AgentModel {
    let n = tf.order();
    let mut a = RealMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -tf.den.coeff(j);
    }
    let mut b = RealMatrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    let c = RealMatrix::from_fn(1, n, |_, j| tf.num.coeff(j));
    AgentModel { a, b, c }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinimalityReport {
    pub controllable: bool,
    pub observable: bool,
    pub rank_bh: usize,
    pub rank_ch: usize,
}

impl MinimalityReport {
    pub fn minimal(&self) -> bool {
        self.controllable && self.observable
    }
}

pub fn minimality(agent: &AgentModel, tol: f64) -> Result<MinimalityReport> {
    let n = agent.states();
    let controllable = krylov_rank(agent.a(), agent.b(), tol)? == n;
    let observable = krylov_rank(&agent.a().transpose(), &agent.c().transpose(), tol)? == n;
    Ok(MinimalityReport {
        controllable,
        observable,
        rank_bh: numerical_rank(agent.b(), tol),
        rank_ch: numerical_rank(agent.c(), tol),
    })
}

/// `A_h + λ B_h C_h`; its eigenvalues are the roots of `p(λ, ·)`.
pub fn closed_agent_matrix(agent: &AgentModel, lambda: Complex64) -> ComplexMatrix {
    let coupling: DMatrix<Complex64> = to_complex(&agent.coupling());
    to_complex(agent.a()) + coupling * lambda
}
