mod common;

use common::*;
use gfv_core::analysis::{kalman_rank, necessity_battery, Verdict};
use gfv_core::design::auto_targets;
use gfv_core::matrixkit::{eigenvalues, DEFAULT_RANK_TOL};
use gfv_core::model_file::SystemFile;
use gfv_core::network::LiftedSystem;
use gfv_core::region::{in_region, sample_region, Bounds, DESIGN_MARGIN};
use num_complex::Complex64;

fn load(name: &str) -> SystemFile {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    SystemFile::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Roots of `den(s) - λ num(s)` by Durand–Kerner.
fn closed_poles(num: &[f64], den: &[f64], lambda: Complex64) -> Vec<Complex64> {
    let offset = den.len() - num.len();
    let coeffs: Vec<Complex64> = den
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let n = if i >= offset { num[i - offset] } else { 0.0 };
            c(d, 0.0) - lambda * n
        })
        .collect();
    roots_oracle(&coeffs)
}

const NUM: [f64; 4] = [0.95, 1.899, 1.048, 2.1];
const DEN: [f64; 5] = [1.0, 4.0, -7.0, -10.0, 0.0];

#[test]
fn pendulum_ring_lies_outside_the_region() {
    let f = load("pendulum.json");
    let sigma = eigenvalues(f.structure.a()).unwrap();
    let want = [c(10.0, 0.0), c(-10.0, 0.0), c(0.0, 10.0), c(0.0, -10.0)];
    assert!(greedy_match(&sigma, &want) < 1e-10);
    for &lambda in &sigma {
        assert!(!in_region(&f.agent, lambda, 0.0));
        let worst = closed_poles(&NUM, &DEN, lambda).iter().map(|z| z.re).fold(f64::MIN, f64::max);
        assert!(worst >= 0.0, "{lambda}: {worst}");
    }
    let lifted = LiftedSystem::assemble(&f.agent, &f.structure);
    assert_eq!(lifted.a().shape(), (16, 16));
    assert!(eigenvalues(lifted.a()).unwrap().iter().any(|z| z.re > 1e-6));
}

#[test]
fn pendulum_region_avoids_the_real_axis() {
    let f = load("pendulum.json");
    let bounds = f.bounds().unwrap().unwrap();
    let sample = sample_region(&f.agent, bounds, 300, 300, 0.0).unwrap();
    assert!(sample.inside_count() > 0);
    let row = sample.row_nearest_real_axis();
    assert!((0..300).all(|i| !sample.is_inside(i, row)));
    for re in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        let worst = closed_poles(&NUM, &DEN, c(re, 0.0)).iter().map(|z| z.re).fold(f64::MIN, f64::max);
        assert!(worst >= 0.0);
    }
}

#[test]
fn odd_pendulum_networks_have_no_real_target() {
    let f = load("pendulum.json");
    let sample = sample_region(&f.agent, Bounds::new(-3.0, 3.0, -15.0, 15.0).unwrap(), 120, 120, DESIGN_MARGIN).unwrap();
    assert!(auto_targets(&f.agent, &sample, 4, &[]).is_ok());
    assert!(matches!(auto_targets(&f.agent, &sample, 5, &[]), Err(gfv_core::Error::Infeasible(_))));
}

#[test]
fn two_agent_mimo_fixture() {
    let f = load("example5.json");
    let lifted = LiftedSystem::assemble(&f.agent, &f.structure);
    assert_eq!(kalman_rank(lifted.a(), lifted.b(), DEFAULT_RANK_TOL).unwrap(), 5);
    let report = necessity_battery(&f.agent, &f.structure, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(report.verdict, Verdict::NecessityPassedButLiftedFails);
}
