mod common;

use common::*;
use gfv_core::agents::AgentModel;
use gfv_core::matrixkit::{eigenvalues, RealMatrix};
use gfv_core::network::{cyclic_interconnection, lift_gains, LiftedSystem, NetworkStructure};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn integer_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> RealMatrix {
    RealMatrix::from_fn(rows, cols, |_, _| r.gen_range(-4..=4) as f64)
}

fn lifted_closed_loops(
    agent: &AgentModel,
    s: &NetworkStructure,
    k: &RealMatrix,
    l: &RealMatrix,
) -> [(RealMatrix, RealMatrix); 2] {
    let lifted = LiftedSystem::assemble(agent, s);
    let g = lift_gains(k, l, agent).unwrap();
    let n = s.agents();
    let coupling = agent.b() * agent.c();
    let base = kron_oracle(&RealMatrix::identity(n, n), agent.a());
    [
        (
            lifted.a() - lifted.b() * g.lifted_k(),
            &base + kron_oracle(&(s.a() - s.b() * k), &coupling),
        ),
        (
            lifted.a() - g.lifted_l() * lifted.c(),
            &base + kron_oracle(&(s.a() - l * s.c()), &coupling),
        ),
    ]
}

#[test]
fn closed_loop_identities_hold_exactly_on_integer_data() {
    let mut r = rng(31);
    for trial in 0..200 {
        let (n, m) = (r.gen_range(1..=4), r.gen_range(1..=2));
        let (na, ms) = (r.gen_range(1..=5), r.gen_range(1..=3));
        let agent = AgentModel::new(integer_matrix(&mut r, n, n), integer_matrix(&mut r, n, m), integer_matrix(&mut r, m, n)).unwrap();
        let s = NetworkStructure::new(integer_matrix(&mut r, na, na), integer_matrix(&mut r, na, ms), integer_matrix(&mut r, ms, na)).unwrap();
        let k = integer_matrix(&mut r, ms, na);
        let l = integer_matrix(&mut r, na, ms);
        for (got, want) in lifted_closed_loops(&agent, &s, &k, &l) {
            assert_eq!(got, want, "trial {trial}");
        }
    }
}

#[test]
fn closed_loop_identities_hold_to_rounding_on_real_data() {
    let mut r = rng(32);
    for trial in 0..200 {
        let (n, m) = (r.gen_range(1..=4), r.gen_range(1..=2));
        let (na, ms) = (r.gen_range(1..=5), r.gen_range(1..=3));
        let agent = random_agent(&mut r, n, m);
        let s = NetworkStructure::new(gaussian(&mut r, na, na), gaussian(&mut r, na, ms), gaussian(&mut r, ms, na)).unwrap();
        let k = gaussian(&mut r, ms, na);
        let l = gaussian(&mut r, na, ms);
        for (got, want) in lifted_closed_loops(&agent, &s, &k, &l) {
            assert!((&got - &want).amax() <= 1e-12 * want.amax().max(1.0), "trial {trial}");
        }
    }
}

#[test]
fn lifted_spectrum_is_union_of_shifted_agent_spectra() {
    let mut r = rng(33);
    for trial in 0..200 {
        let (n, m, na) = (r.gen_range(1..=4), r.gen_range(1..=2), r.gen_range(1..=5));
        let agent = random_agent(&mut r, n, m);
        let s = random_structure(&mut r, na, 1, 1.5);
        let lifted = LiftedSystem::assemble(&agent, &s);
        let got = eigenvalues(lifted.a()).unwrap();
        let want: Vec<_> = eig_oracle(&complexify(s.a()))
            .into_iter()
            .flat_map(|lambda| eig_oracle(&shifted_agent(&agent, lambda)))
            .collect();
        let d = greedy_match(&got, &want);
        assert!(d <= 1e-8, "trial {trial}: distance {d:e}");
    }
}

#[test]
fn lifted_blocks_follow_the_kronecker_layout() {
    let agent = AgentModel::new(
        nalgebra::dmatrix![0.0, 1.0; -2.0, -3.0],
        nalgebra::dmatrix![0.0; 1.0],
        nalgebra::dmatrix![1.0, 0.0],
    )
    .unwrap();
    let mut b = RealMatrix::zeros(4, 1);
    b[(0, 0)] = 1.0;
    let mut cm = RealMatrix::zeros(1, 4);
    cm[(0, 2)] = 1.0;
    let s = NetworkStructure::new(cyclic_interconnection(4, 10.0).unwrap(), b, cm).unwrap();
    let lifted = LiftedSystem::assemble(&agent, &s);
    assert_eq!(lifted.a().shape(), (8, 8));
    assert_eq!(lifted.b().shape(), (8, 1));
    assert_eq!(lifted.b()[(1, 0)], 1.0);
    assert_eq!(lifted.b().iter().filter(|&&x| x != 0.0).count(), 1);
    assert_eq!(lifted.c()[(0, 4)], 1.0);
    assert_eq!(lifted.c().iter().filter(|&&x| x != 0.0).count(), 1);
    // agent 2 hears agent 1 through B_h C_h scaled by 10
    assert_eq!(lifted.a()[(3, 0)], 10.0);
}
