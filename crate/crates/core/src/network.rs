//! Interconnection structures and the Kronecker-lifted network system.

use crate::agents::AgentModel;
use crate::error::{Error, Result};
use crate::matrixkit::{ensure_finite, ensure_square, kron, RealMatrix};

/// Interconnection `(A, B, C)`: `A` is `N×N`, `B` is `N×M`, `C` is `M×N`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkStructure {
    a: RealMatrix,
    b: RealMatrix,
    c: RealMatrix,
}

impl NetworkStructure {
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix) -> Result<Self> {
        ensure_square(&a)?;
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("network needs at least one agent".into()));
        }
        if b.nrows() != n {
            return Err(Error::mismatch("structure B rows", n, b.nrows()));
        }
        let m = b.ncols();
        if m == 0 {
            return Err(Error::InvalidInput("network needs at least one channel".into()));
        }
        if c.shape() != (m, n) {
            return Err(Error::mismatch(
                "structure C shape",
                format!("{m}x{n}"),
                format!("{}x{}", c.nrows(), c.ncols()),
            ));
        }
        ensure_finite(&a, "A")?;
        ensure_finite(&b, "B")?;
        ensure_finite(&c, "C")?;
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

    /// Number of agents `N`.
    pub fn agents(&self) -> usize {
        self.a.nrows()
    }

    /// Number of external channels `M`.
    pub fn channels(&self) -> usize {
        self.b.ncols()
    }

    /// `(Aᵀ, Cᵀ, Bᵀ)`.
    pub fn dual(&self) -> Self {
        Self {
            a: self.a.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
        }
    }
}

/// `k` times the single-cycle permutation in which agent `i` listens to agent
/// `i - 1` (agent 0 listens to agent `N - 1`). The spectrum is `k` times the
/// `N`-th roots of unity.
pub fn cyclic_interconnection(n: usize, k: f64) -> Result<RealMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("cyclic network needs N >= 2, got {n}")));
    }
    let mut a = RealMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, (i + n - 1) % n)] = k;
    }
    Ok(a)
}

/// Graph Laplacian of the undirected path `0 - 1 - ... - (N-1)`.
pub fn path_laplacian(n: usize) -> Result<RealMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("path graph needs N >= 2, got {n}")));
    }
    let mut l = RealMatrix::zeros(n, n);
    for i in 0..n - 1 {
        l[(i, i + 1)] = -1.0;
        l[(i + 1, i)] = -1.0;
        l[(i, i)] += 1.0;
        l[(i + 1, i + 1)] += 1.0;
    }
    Ok(l)
}

/// Graph Laplacian of the complete graph on `N` vertices.
pub fn complete_laplacian(n: usize) -> Result<RealMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("complete graph needs N >= 2, got {n}")));
    }
    Ok(RealMatrix::from_fn(n, n, |i, j| {
        if i == j {
            (n - 1) as f64
        } else {
            -1.0
        }
    }))
}

/// Aggregate system `x' = 𝒜 x + ℬ u, y = 𝒞 x` with
/// `𝒜 = I_N ⊗ A_h + A ⊗ (B_h C_h)`, `ℬ = B ⊗ B_h`, `𝒞 = C ⊗ C_h`.
#[derive(Clone, Debug)]
pub struct LiftedSystem {
    a: RealMatrix,
    b: RealMatrix,
    c: RealMatrix,
    agent: AgentModel,
    structure: NetworkStructure,
}

impl LiftedSystem {
    pub fn assemble(agent: &AgentModel, structure: &NetworkStructure) -> Self {
        let n_agents = structure.agents();
        let a = kron(&RealMatrix::identity(n_agents, n_agents), agent.a())
            + kron(structure.a(), &agent.coupling());
        let b = kron(structure.b(), agent.b());
        let c = kron(structure.c(), agent.c());
        Self {
            a,
            b,
            c,
            agent: agent.clone(),
            structure: structure.clone(),
        }
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

    pub fn agent(&self) -> &AgentModel {
        &self.agent
    }

    pub fn structure(&self) -> &NetworkStructure {
        &self.structure
    }

    /// Lifted state dimension `N n`.
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    /// Lifted input/output width `M m`.
    pub fn channels(&self) -> usize {
        self.b.ncols()
    }
}

/// Distributive gains `K` (`M×N`), `L` (`N×M`) and their lifted forms
/// `𝒦 = K ⊗ C_h`, `ℒ = L ⊗ B_h`.
#[derive(Clone, Debug)]
pub struct LiftedGains {
    k: RealMatrix,
    l: RealMatrix,
    lifted_k: RealMatrix,
    lifted_l: RealMatrix,
}

impl LiftedGains {
    pub fn k(&self) -> &RealMatrix {
        &self.k
    }

    pub fn l(&self) -> &RealMatrix {
        &self.l
    }

    pub fn lifted_k(&self) -> &RealMatrix {
        &self.lifted_k
    }

    pub fn lifted_l(&self) -> &RealMatrix {
        &self.lifted_l
    }
}

pub fn lift_gains(k: &RealMatrix, l: &RealMatrix, agent: &AgentModel) -> Result<LiftedGains> {
    let (m, n) = k.shape();
    if l.shape() != (n, m) {
        return Err(Error::mismatch(
            "observer gain L shape",
            format!("{n}x{m}"),
            format!("{}x{}", l.nrows(), l.ncols()),
        ));
    }
    ensure_finite(k, "K")?;
    ensure_finite(l, "L")?;
    Ok(LiftedGains {
        lifted_k: kron(k, agent.c()),
        lifted_l: kron(l, agent.b()),
        k: k.clone(),
        l: l.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{realize_siso, RationalTf};
    use crate::matrixkit::{eigenvalues, matched_distance};
    use nalgebra::dmatrix;
    use num_complex::Complex64;

    fn unit(n: usize, i: usize) -> RealMatrix {
        let mut e = RealMatrix::zeros(n, 1);
        e[(i, 0)] = 1.0;
        e
    }

    #[test]
    fn cyclic_spectra() {
        let ev = eigenvalues(&cyclic_interconnection(4, 10.0).unwrap()).unwrap();
        let want = [
            Complex64::new(10.0, 0.0),
            Complex64::new(0.0, 10.0),
            Complex64::new(-10.0, 0.0),
            Complex64::new(0.0, -10.0),
        ];
        assert!(matched_distance(&ev, &want).unwrap() < 1e-12);

        let ev = eigenvalues(&cyclic_interconnection(2, 1.0).unwrap()).unwrap();
        let want = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert!(matched_distance(&ev, &want).unwrap() < 1e-14);

        let ev = eigenvalues(&cyclic_interconnection(3, 2.0).unwrap()).unwrap();
        let want: Vec<Complex64> = (0..3)
            .map(|j| Complex64::from_polar(2.0, 2.0 * std::f64::consts::PI * j as f64 / 3.0))
            .collect();
        assert!(matched_distance(&ev, &want).unwrap() < 1e-12);

        assert!(cyclic_interconnection(1, 1.0).is_err());
    }

    #[test]
    fn cyclic_pattern_matches_four_agent_layout() {
        let a = cyclic_interconnection(4, 1.0).unwrap();
        let want = dmatrix![
            0.0, 0.0, 0.0, 1.0;
            1.0, 0.0, 0.0, 0.0;
            0.0, 1.0, 0.0, 0.0;
            0.0, 0.0, 1.0, 0.0
        ];
        assert_eq!(a, want);
    }

    #[test]
    fn laplacians_have_zero_row_sums() {
        for l in [path_laplacian(5).unwrap(), complete_laplacian(4).unwrap()] {
            for r in 0..l.nrows() {
                assert_eq!(l.row(r).sum(), 0.0);
            }
        }
    }

    #[test]
    fn scalar_assembly() {
        let agent = AgentModel::new(dmatrix![0.0], dmatrix![1.0], dmatrix![1.0]).unwrap();
        let s = NetworkStructure::new(dmatrix![-3.5], dmatrix![1.0], dmatrix![1.0]).unwrap();
        let lifted = LiftedSystem::assemble(&agent, &s);
        assert_eq!(lifted.a(), &dmatrix![-3.5]);
        assert_eq!(lifted.b(), &dmatrix![1.0]);
        assert_eq!(lifted.c(), &dmatrix![1.0]);
    }

    #[test]
    fn pendulum_assembly_shapes_and_selectors() {
        let tf = RationalTf::from_coeffs(&[0.95, 1.899, 1.048, 2.1], &[1.0, 4.0, -7.0, -10.0, 0.0])
            .unwrap();
        let agent = realize_siso(&tf);
        let s = NetworkStructure::new(
            cyclic_interconnection(4, 10.0).unwrap(),
            unit(4, 0),
            unit(4, 2).transpose(),
        )
        .unwrap();
        let lifted = LiftedSystem::assemble(&agent, &s);
        assert_eq!(lifted.a().shape(), (16, 16));
        assert_eq!(lifted.b().shape(), (16, 1));
        assert_eq!(lifted.c().shape(), (1, 16));
        assert_eq!(lifted.b().rows(0, 4), agent.b().rows(0, 4));
        assert!(lifted.b().rows(4, 12).iter().all(|&x| x == 0.0));
        assert_eq!(lifted.c().columns(8, 4), agent.c().columns(0, 4));
        assert_eq!(lifted.c().columns(0, 8).iter().filter(|&&x| x != 0.0).count(), 0);
    }

    #[test]
    fn blockwise_formula_for_mimo_pair() {
        let agent = AgentModel::new(
            dmatrix![0.5, -1.0, 0.0; 2.0, 0.1, 1.0; -0.3, 0.0, -1.2],
            dmatrix![1.0, 0.0; 0.5, -1.0; 0.0, 2.0],
            dmatrix![0.2, 1.0, 0.0; -1.0, 0.0, 0.7],
        )
        .unwrap();
        let s = NetworkStructure::new(
            dmatrix![0.3, -1.1; 2.0, 0.4],
            dmatrix![1.0; -1.0],
            dmatrix![0.5, 2.0],
        )
        .unwrap();
        let lifted = LiftedSystem::assemble(&agent, &s);
        let bc = agent.coupling();
        for i in 0..2 {
            for j in 0..2 {
                let block = lifted.a().view((3 * i, 3 * j), (3, 3)).into_owned();
                let delta = if i == j { 1.0 } else { 0.0 };
                let want = agent.a() * delta + &bc * s.a()[(i, j)];
                assert_eq!(block, want);
            }
        }
    }

    #[test]
    fn lifted_gains_cases() {
        let agent = AgentModel::new(dmatrix![0.0], dmatrix![1.0], dmatrix![3.0]).unwrap();
        let g = lift_gains(&dmatrix![2.0], &dmatrix![0.0], &agent).unwrap();
        assert_eq!(g.lifted_k(), &dmatrix![6.0]);
        assert_eq!(g.lifted_l(), &dmatrix![0.0]);

        let tf = RationalTf::from_coeffs(&[0.95, 1.899, 1.048, 2.1], &[1.0, 4.0, -7.0, -10.0, 0.0])
            .unwrap();
        let pend = realize_siso(&tf);
        let k = dmatrix![1.0, -2.0, 3.0, 0.5];
        let l = dmatrix![0.0; 1.0; 0.0; -1.0];
        let g = lift_gains(&k, &l, &pend).unwrap();
        assert_eq!(g.lifted_k().shape(), (1, 16));
        for j in 0..4 {
            let block = g.lifted_k().columns(4 * j, 4).into_owned();
            assert_eq!(block, pend.c() * k[(0, j)]);
        }
        assert!(lift_gains(&k, &k, &pend).is_err());
    }
}
