//! Controllability and observability diagnostics for structure and lifted
//! pairs: Kalman rank, PBH tests with certificates, the lifted witness built
//! from a structure obstruction, and the necessary-condition battery.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::agents::{closed_agent_matrix, minimality, AgentModel, MinimalityReport};
use crate::error::{Error, Result};
use crate::matrixkit::{
    eigenvalues, ensure_square, kron, krylov_rank, normalize_phase, numerical_rank,
    smallest_right_singular, sort_spectrum, spectral_norm, to_complex, ComplexMatrix, RealMatrix,
};
use crate::network::{LiftedSystem, NetworkStructure};
use crate::serde_complex;

/// `[b, a b, ..., a^{q-1} b]` with `q = rows(a)`.
pub fn controllability_matrix(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    ensure_square(a)?;
    let q = a.nrows();
    if b.nrows() != q {
        return Err(Error::mismatch("controllability matrix", format!("{q} rows in B"), b.nrows()));
    }
    let w = b.ncols();
    let mut out = RealMatrix::zeros(q, q * w);
    let mut block = b.clone();
    for k in 0..q {
        out.columns_mut(k * w, w).copy_from(&block);
        block = a * block;
    }
    Ok(out)
}

/// Dimension of the controllable subspace of `(a, b)`.
pub fn kalman_rank(a: &RealMatrix, b: &RealMatrix, tol: f64) -> Result<usize> {
    krylov_rank(a, b, tol)
}

/// Witness that `(A, B)` fails the PBH test: `vᵀ A = λ vᵀ` and `vᵀ B = 0`.
/// For observability failures the same vector is a right vector
/// `(A - λ I) w = 0`, `C w = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PbhCertificate {
    #[serde(serialize_with = "serde_complex::serialize")]
    pub eigenvalue: Complex64,
    #[serde(serialize_with = "serde_complex::vec::serialize")]
    pub vector: Vec<Complex64>,
    /// `‖vᵀ A - λ vᵀ‖`.
    pub eigen_residual: f64,
    /// `‖vᵀ B‖`.
    pub annihilation_residual: f64,
}

impl PbhCertificate {
    fn build(a: &RealMatrix, b: &RealMatrix, lambda: Complex64, mut v: DVector<Complex64>) -> Self {
        normalize_phase(&mut v);
        let at = to_complex(&a.transpose());
        let bt = to_complex(&b.transpose());
        let eigen_residual = (&at * &v - &v * lambda).norm();
        let annihilation_residual = (&bt * &v).norm();
        Self {
            eigenvalue: lambda,
            vector: v.iter().copied().collect(),
            eigen_residual,
            annihilation_residual,
        }
    }

    /// Smallest coprime integer vector proportional to the certificate, if
    /// one with denominators up to `max_denominator` exists.
    pub fn integer_form(&self, max_denominator: i64, tol: f64) -> Option<Vec<i64>> {
        if self.vector.iter().any(|z| z.im.abs() > tol) {
            return None;
        }
        let re: Vec<f64> = self.vector.iter().map(|z| z.re).collect();
        let smallest = re
            .iter()
            .map(|x| x.abs())
            .filter(|&x| x > tol)
            .fold(f64::INFINITY, f64::min);
        if !smallest.is_finite() {
            return None;
        }
        for d in 1..=max_denominator {
            let scaled: Vec<f64> = re.iter().map(|x| x / smallest * d as f64).collect();
            let fits = scaled
                .iter()
                .all(|x| (x - x.round()).abs() <= tol * x.abs().max(1.0));
            if fits {
                let ints: Vec<i64> = scaled.iter().map(|x| x.round() as i64).collect();
                let g = ints.iter().fold(0, |acc, &x| gcd(acc, x.abs()));
                return Some(ints.iter().map(|x| x / g.max(1)).collect());
            }
        }
        None
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for PbhCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "λ = {}, vector (", fmt_complex(self.eigenvalue))?;
        for (i, z) in self.vector.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", fmt_complex(*z))?;
        }
        write!(
            f,
            "), residuals {:.2e} / {:.2e}",
            self.eigen_residual, self.annihilation_residual
        )
    }
}

pub(crate) fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else if z.im > 0.0 {
        format!("{:.6}+{:.6}i", z.re, z.im)
    } else {
        format!("{:.6}-{:.6}i", z.re, -z.im)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PbhOutcome {
    Pass,
    Fail(PbhCertificate),
}

impl PbhOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, PbhOutcome::Pass)
    }

    pub fn certificate(&self) -> Option<&PbhCertificate> {
        match self {
            PbhOutcome::Pass => None,
            PbhOutcome::Fail(c) => Some(c),
        }
    }
}

/// Groups eigenvalues closer than `radius`; a defective eigenvalue comes back
/// from the Schur iteration as a small cloud whose mean is far more accurate
/// than any single member.
fn cluster(eigs: &[Complex64], radius: f64) -> Vec<Vec<Complex64>> {
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for &z in eigs {
        match groups
            .iter_mut()
            .find(|g| g.iter().any(|w| (w - z).norm() <= radius))
        {
            Some(g) => g.push(z),
            None => groups.push(vec![z]),
        }
    }
    groups
}

/// Smallest singular value of `[A - λI, B]` relative to its largest, plus the
/// associated left null vector.
fn pbh_probe(
    a: &RealMatrix,
    b: &RealMatrix,
    lambda: Complex64,
) -> Result<(f64, DVector<Complex64>)> {
    let n = a.nrows();
    let mut stacked = ComplexMatrix::zeros(n, n + b.ncols());
    stacked
        .columns_mut(0, n)
        .copy_from(&(to_complex(a) - ComplexMatrix::identity(n, n) * lambda));
    stacked.columns_mut(n, b.ncols()).copy_from(&to_complex(b));
    let top = spectral_norm(&stacked);
    let (sigma, v) = smallest_right_singular(&stacked.transpose())?;
    let ratio = if top > 0.0 { sigma / top } else { 0.0 };
    Ok((ratio, v))
}

/// Every PBH failure of `(a, b)`, one certificate per distinct eigenvalue.
pub fn pbh_failures(a: &RealMatrix, b: &RealMatrix, tol: f64) -> Result<Vec<PbhCertificate>> {
    ensure_square(a)?;
    if b.nrows() != a.nrows() {
        return Err(Error::mismatch("PBH test", format!("{} rows in B", a.nrows()), b.nrows()));
    }
    let eigs = eigenvalues(a)?;
    let radius = 1e-6 * spectral_norm(a).max(1.0);
    let mut out = Vec::new();
    for group in cluster(&eigs, radius) {
        let mean = group.iter().sum::<Complex64>() / group.len() as f64;
        let mut points = vec![mean];
        if group.len() > 1 {
            points.extend(group.iter().copied());
        }
        let mut worst: Option<(f64, Complex64, DVector<Complex64>)> = None;
        for lambda in points {
            let (ratio, v) = pbh_probe(a, b, lambda)?;
            if ratio <= tol && worst.as_ref().is_none_or(|w| ratio < w.0) {
                worst = Some((ratio, lambda, v));
            }
        }
        if let Some((_, lambda, v)) = worst {
            out.push(PbhCertificate::build(a, b, lambda, v));
        }
    }
    Ok(out)
}

pub fn pbh_controllable(a: &RealMatrix, b: &RealMatrix, tol: f64) -> Result<PbhOutcome> {
    Ok(match pbh_failures(a, b, tol)?.into_iter().next() {
        None => PbhOutcome::Pass,
        Some(c) => PbhOutcome::Fail(c),
    })
}

/// Dual of [`pbh_controllable`] on `(aᵀ, cᵀ)`.
pub fn pbh_observable(a: &RealMatrix, c: &RealMatrix, tol: f64) -> Result<PbhOutcome> {
    pbh_controllable(&a.transpose(), &c.transpose(), tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Controllability,
    Observability,
}

/// Lifted PBH witness `z = v ⊗ η` built from a structure witness `v` at `λ`
/// and an eigenvector `η` of `A_h + λ B_h C_h` at `μ`.
#[derive(Clone, Debug, Serialize)]
pub struct LiftedWitness {
    pub structure: PbhCertificate,
    #[serde(serialize_with = "serde_complex::serialize")]
    pub agent_eigenvalue: Complex64,
    #[serde(serialize_with = "serde_complex::vec::serialize")]
    pub agent_vector: Vec<Complex64>,
    /// Certificate for the lifted pair at eigenvalue `μ`.
    pub lifted: PbhCertificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub direction: Direction,
    pub structure_passes: bool,
    pub lifted_passes: bool,
    pub witness: Option<LiftedWitness>,
    pub note: String,
}

/// Checks whether the structure pair obstructs the lifted pair. When the
/// structure fails PBH, the lifted failure is certified constructively.
pub fn structure_obstruction(
    agent: &AgentModel,
    structure: &NetworkStructure,
    direction: Direction,
    tol: f64,
) -> Result<ObstructionReport> {
    let (agent, structure) = match direction {
        Direction::Controllability => (agent.clone(), structure.clone()),
        Direction::Observability => (agent.dual(), structure.dual()),
    };
    let lifted = LiftedSystem::assemble(&agent, &structure);
    let lifted_passes = pbh_controllable(lifted.a(), lifted.b(), tol)?.passed();
    let word = match direction {
        Direction::Controllability => "controllable",
        Direction::Observability => "observable",
    };

    let structure_outcome = pbh_controllable(structure.a(), structure.b(), tol)?;
    let Some(structure_cert) = structure_outcome.certificate().cloned() else {
        let note = if lifted_passes {
            "no structure obstruction".to_string()
        } else if agent.channels() > 1 {
            format!(
                "no structure obstruction, yet the lifted pair is not {word}: a purely MIMO \
                 mechanism (channel directions cancel inside B_h / C_h)"
            )
        } else {
            format!("no structure obstruction, yet the lifted pair is not {word} (agent-level cause)")
        };
        return Ok(ObstructionReport {
            direction,
            structure_passes: true,
            lifted_passes,
            witness: None,
            note,
        });
    };

    let witness = lift_witness(&agent, &lifted, structure_cert)?;
    let note = format!(
        "structure pair is not {word} at λ = {}; z = v ⊗ η certifies the lifted pair at μ = {}",
        fmt_complex(witness.structure.eigenvalue),
        fmt_complex(witness.agent_eigenvalue)
    );
    Ok(ObstructionReport {
        direction,
        structure_passes: false,
        lifted_passes,
        witness: Some(witness),
        note,
    })
}

fn lift_witness(
    agent: &AgentModel,
    lifted: &LiftedSystem,
    structure: PbhCertificate,
) -> Result<LiftedWitness> {
    let closed = closed_agent_matrix(agent, structure.eigenvalue);
    let mut modes = eigenvalues(&closed)?;
    sort_spectrum(&mut modes);
    let mu = *modes.last().expect("agent has at least one state");
    let n = agent.states();
    let shifted = (&closed - ComplexMatrix::identity(n, n) * mu).transpose();
    let (_, mut eta) = smallest_right_singular(&shifted)?;
    normalize_phase(&mut eta);
    let v = DVector::from_vec(structure.vector.clone());
    let z = kron(
        &ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice()),
        &ComplexMatrix::from_column_slice(eta.len(), 1, eta.as_slice()),
    );
    let z = DVector::from_column_slice(z.as_slice());
    let lifted_cert = {
        let at = to_complex(&lifted.a().transpose());
        let bt = to_complex(&lifted.b().transpose());
        PbhCertificate {
            eigenvalue: mu,
            eigen_residual: (&at * &z - &z * mu).norm(),
            annihilation_residual: (&bt * &z).norm(),
            vector: z.iter().copied().collect(),
        }
    };
    Ok(LiftedWitness {
        structure,
        agent_eigenvalue: mu,
        agent_vector: eta.iter().copied().collect(),
        lifted: lifted_cert,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentNecessaryPassed,
    NecessaryFailed,
    NecessityPassedButLiftedFails,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentNecessaryPassed => "consistent-necessary-passed",
            Verdict::NecessaryFailed => "necessary-failed",
            Verdict::NecessityPassedButLiftedFails => "necessity-passed-but-lifted-fails",
        })
    }
}

/// A structure mode `λ` that fails PBH, together with the roots of
/// `p(λ, ·)` (eigenvalues of `A_h + λ B_h C_h`).
#[derive(Clone, Debug, Serialize)]
pub struct ModeViolation {
    pub certificate: PbhCertificate,
    #[serde(serialize_with = "serde_complex::vec::serialize")]
    pub p_roots: Vec<Complex64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchReport {
    /// `rank(B) < N` (resp. `rank(C) < N`); the branch is skipped otherwise.
    pub evaluated: bool,
    pub structure_rank: usize,
    pub structure_passes: bool,
    pub violations: Vec<ModeViolation>,
    pub necessary_failed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NecessityReport {
    pub agent: MinimalityReport,
    pub agent_minimal: bool,
    pub rank_conditions: bool,
    pub structure_controllable: bool,
    pub structure_observable: bool,
    pub controllability: BranchReport,
    pub observability: BranchReport,
    pub lifted_dim: usize,
    pub lifted_controllability_rank: usize,
    pub lifted_observability_rank: usize,
    pub lifted_controllable: bool,
    pub lifted_observable: bool,
    /// Failed necessary conditions always come with a failing lifted pair.
    pub consistent: bool,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

const DETERMINANT_NOTE: &str = "the structure-mode condition is evaluated through p(λ,s) = det(sI - A_h - λB_hC_h), \
which agrees with det(D_h(s) - λN_h(s)) up to a nonzero constant for a minimal agent; \
p(λ,·) is monic of degree n and always has a root, so every uncontrollable (unobservable) \
structure mode is reported as a violation";

fn evaluate_branch(
    agent: &AgentModel,
    structure_a: &RealMatrix,
    structure_b: &RealMatrix,
    agent_condition_fails: bool,
    tol: f64,
) -> Result<BranchReport> {
    let n = structure_a.nrows();
    let structure_rank = numerical_rank(structure_b, tol);
    let failures = pbh_failures(structure_a, structure_b, tol)?;
    let structure_passes = failures.is_empty();
    if structure_rank >= n {
        return Ok(BranchReport {
            evaluated: false,
            structure_rank,
            structure_passes,
            violations: Vec::new(),
            necessary_failed: false,
        });
    }
    let mut violations = Vec::new();
    for cert in failures {
        let mut roots = eigenvalues(&closed_agent_matrix(agent, cert.eigenvalue))?;
        sort_spectrum(&mut roots);
        if !roots.is_empty() {
            violations.push(ModeViolation {
                certificate: cert,
                p_roots: roots,
            });
        }
    }
    let necessary_failed = agent_condition_fails || !violations.is_empty();
    Ok(BranchReport {
        evaluated: true,
        structure_rank,
        structure_passes,
        violations,
        necessary_failed,
    })
}

/// Runs the agent/structure necessary conditions for lifted controllability
/// and observability and compares them with the lifted Kalman ranks.
pub fn necessity_battery(
    agent: &AgentModel,
    structure: &NetworkStructure,
    tol: f64,
) -> Result<NecessityReport> {
    let agent_report = minimality(agent, tol)?;
    let m = agent.channels();
    let agent_minimal = agent_report.minimal();
    let rank_conditions = agent_report.rank_bh == m && agent_report.rank_ch == m;
    let agent_condition_fails = rank_conditions && !agent_minimal;

    let controllability =
        evaluate_branch(agent, structure.a(), structure.b(), agent_condition_fails, tol)?;
    let dual = agent.dual();
    let observability = evaluate_branch(
        &dual,
        &structure.a().transpose(),
        &structure.c().transpose(),
        agent_condition_fails,
        tol,
    )?;

    let lifted = LiftedSystem::assemble(agent, structure);
    let dim = lifted.states();
    let ctrl_rank = kalman_rank(lifted.a(), lifted.b(), tol)?;
    let obs_rank = kalman_rank(&lifted.a().transpose(), &lifted.c().transpose(), tol)?;
    let lifted_controllable = ctrl_rank == dim;
    let lifted_observable = obs_rank == dim;

    let ctrl_failed = controllability.evaluated && controllability.necessary_failed;
    let obs_failed = observability.evaluated && observability.necessary_failed;
    let consistent = (!ctrl_failed || !lifted_controllable) && (!obs_failed || !lifted_observable);
    let verdict = if ctrl_failed || obs_failed {
        Verdict::NecessaryFailed
    } else if !(lifted_controllable && lifted_observable) {
        Verdict::NecessityPassedButLiftedFails
    } else {
        Verdict::ConsistentNecessaryPassed
    };

    let mut notes = vec![DETERMINANT_NOTE.to_string()];
    if !rank_conditions {
        notes.push(format!(
            "rank(B_h) = {}, rank(C_h) = {} differ from m = {m}; agent minimality is reported but \
             not treated as a necessary condition",
            agent_report.rank_bh, agent_report.rank_ch
        ));
    }
    if !controllability.evaluated {
        notes.push("rank(B) = N: controllability branch skipped".into());
    }
    if !observability.evaluated {
        notes.push("rank(C) = N: observability branch skipped".into());
    }
    if !controllability.structure_passes || !observability.structure_passes {
        notes.push(
            "the structure pair itself fails PBH, so the lifted pair fails as well \
             (the network cannot be more controllable or observable than its structure)"
                .into(),
        );
    }
    if verdict == Verdict::NecessityPassedButLiftedFails && m > 1 {
        notes.push(
            "necessary conditions hold but the lifted pair fails: a purely MIMO mechanism \
             not visible to the structure PBH test"
                .into(),
        );
    }

    Ok(NecessityReport {
        agent: agent_report,
        agent_minimal,
        rank_conditions,
        structure_controllable: controllability.structure_passes,
        structure_observable: observability.structure_passes,
        controllability,
        observability,
        lifted_dim: dim,
        lifted_controllability_rank: ctrl_rank,
        lifted_observability_rank: obs_rank,
        lifted_controllable,
        lifted_observable,
        consistent,
        verdict,
        notes,
    })
}

impl fmt::Display for NecessityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yn = |b: bool| if b { "yes" } else { "no" };
        writeln!(f, "agent minimal:            {}", yn(self.agent_minimal))?;
        writeln!(
            f,
            "rank(B_h), rank(C_h):     {}, {} (full: {})",
            self.agent.rank_bh,
            self.agent.rank_ch,
            yn(self.rank_conditions)
        )?;
        writeln!(f, "structure controllable:   {}", yn(self.structure_controllable))?;
        writeln!(f, "structure observable:     {}", yn(self.structure_observable))?;
        for (name, branch) in [
            ("controllability", &self.controllability),
            ("observability", &self.observability),
        ] {
            if !branch.evaluated {
                writeln!(f, "{name} branch:   skipped (structure rank = N)")?;
                continue;
            }
            writeln!(
                f,
                "{name} branch:   {} ({} violating mode(s))",
                if branch.necessary_failed { "FAILED" } else { "passed" },
                branch.violations.len()
            )?;
            for v in &branch.violations {
                writeln!(f, "  mode {}", v.certificate)?;
            }
        }
        writeln!(
            f,
            "lifted controllability:   rank {} / {} ({})",
            self.lifted_controllability_rank,
            self.lifted_dim,
            yn(self.lifted_controllable)
        )?;
        writeln!(
            f,
            "lifted observability:     rank {} / {} ({})",
            self.lifted_observability_rank,
            self.lifted_dim,
            yn(self.lifted_observable)
        )?;
        writeln!(f, "verdict:                  {}", self.verdict)?;
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        Ok(())
    }
}
