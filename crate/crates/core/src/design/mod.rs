//! Distributive controller and observer design: target selection inside the
//! stability region, pole placement on the structure, the block upper
//! triangular closed loop, and its verification.

mod placement;
mod targets;

use num_complex::Complex64;
use serde::Serialize;

pub use placement::{
    observer_gain, observer_gain_seeded, place_poles, place_poles_seeded, DEFAULT_PLACEMENT_SEED,
};
pub use targets::{auto_targets, clearance, parse_targets, TargetSet};

use crate::agents::AgentModel;
use crate::error::{Error, Result};
use crate::matrixkit::{eigenvalues, kron, matched_distance, spectral_abscissa, RealMatrix};
use crate::network::NetworkStructure;
use crate::region::{report_for, sample_region, Bounds, SpectrumReport, DESIGN_MARGIN};

/// Margin for the final Hurwitz test on the full closed loop.
pub const VERIFY_MARGIN: f64 = 1e-9;

fn check_gains(structure: &NetworkStructure, k: &RealMatrix, l: &RealMatrix) -> Result<()> {
    let (n, m) = (structure.agents(), structure.channels());
    if k.shape() != (m, n) {
        return Err(Error::mismatch(
            "controller gain K shape",
            format!("{m}x{n}"),
            format!("{}x{}", k.nrows(), k.ncols()),
        ));
    }
    if l.shape() != (n, m) {
        return Err(Error::mismatch(
            "observer gain L shape",
            format!("{n}x{m}"),
            format!("{}x{}", l.nrows(), l.ncols()),
        ));
    }
    Ok(())
}

/// Closed loop of plant and observer-based feedback in `(x, x̃)` coordinates:
///
/// ```text
/// [ I⊗A_h + (A-BK)⊗B_hC_h   (BK)⊗B_hC_h          ]
/// [ 0                       I⊗A_h + (A-LC)⊗B_hC_h ]
/// ```
pub fn separation_matrix(
    agent: &AgentModel,
    structure: &NetworkStructure,
    k: &RealMatrix,
    l: &RealMatrix,
) -> Result<RealMatrix> {
    check_gains(structure, k, l)?;
    let n_agents = structure.agents();
    let dim = n_agents * agent.states();
    let coupling = agent.coupling();
    let base = kron(&RealMatrix::identity(n_agents, n_agents), agent.a());
    let bk = structure.b() * k;
    let lc = l * structure.c();
    let mut out = RealMatrix::zeros(2 * dim, 2 * dim);
    out.view_mut((0, 0), (dim, dim))
        .copy_from(&(&base + kron(&(structure.a() - &bk), &coupling)));
    out.view_mut((0, dim), (dim, dim))
        .copy_from(&kron(&bk, &coupling));
    out.view_mut((dim, dim), (dim, dim))
        .copy_from(&(&base + kron(&(structure.a() - &lc), &coupling)));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignResult {
    #[serde(rename = "K", serialize_with = "serialize_rows")]
    pub k: RealMatrix,
    #[serde(rename = "L", serialize_with = "serialize_rows")]
    pub l: RealMatrix,
    /// `σ(A - BK)` with per-eigenvalue region membership.
    pub controller: SpectrumReport,
    /// `σ(A - LC)` with per-eigenvalue region membership.
    pub observer: SpectrumReport,
    pub closed_loop_abscissa: f64,
    pub closed_loop_hurwitz: bool,
    pub verified: bool,
    /// Region membership of both structure spectra agrees with the Hurwitz
    /// test of the full closed loop (both evaluated without margin).
    pub consistent: bool,
    #[serde(skip)]
    pub closed_loop: RealMatrix,
}

pub(crate) fn serialize_rows<S: serde::Serializer>(
    m: &RealMatrix,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        let row: Vec<f64> = m.row(r).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// Checks a pair of distributive gains: both structure spectra inside the
/// region at `margin`, and the full closed loop Hurwitz at [`VERIFY_MARGIN`].
pub fn verify_design(
    agent: &AgentModel,
    structure: &NetworkStructure,
    k: &RealMatrix,
    l: &RealMatrix,
    margin: f64,
) -> Result<DesignResult> {
    check_gains(structure, k, l)?;
    let closed_loop = separation_matrix(agent, structure, k, l)?;
    let sigma_k = eigenvalues(&(structure.a() - structure.b() * k))?;
    let sigma_l = eigenvalues(&(structure.a() - l * structure.c()))?;
    let controller = report_for(agent, sigma_k, margin);
    let observer = report_for(agent, sigma_l, margin);
    let closed_loop_abscissa = spectral_abscissa(&closed_loop)?;
    let closed_loop_hurwitz = closed_loop_abscissa < -VERIFY_MARGIN;
    let verified = controller.all_inside && observer.all_inside && closed_loop_hurwitz;

    let loose_inside = report_for(agent, controller.eigenvalues.clone(), 0.0).all_inside
        && report_for(agent, observer.eigenvalues.clone(), 0.0).all_inside;
    let consistent = loose_inside == (closed_loop_abscissa < 0.0);
    Ok(DesignResult {
        k: k.clone(),
        l: l.clone(),
        controller,
        observer,
        closed_loop_abscissa,
        closed_loop_hurwitz,
        verified,
        consistent,
        closed_loop,
    })
}

/// Settings for the automatic design pipeline.
#[derive(Clone, Debug)]
pub struct DesignOptions {
    pub bounds: Bounds,
    pub re_steps: usize,
    pub im_steps: usize,
    pub margin: f64,
    pub controller_targets: Option<TargetSet>,
    pub observer_targets: Option<TargetSet>,
    pub seed: u64,
}

impl DesignOptions {
    pub fn new(bounds: Bounds, re_steps: usize, im_steps: usize) -> Self {
        Self {
            bounds,
            re_steps,
            im_steps,
            margin: DESIGN_MARGIN,
            controller_targets: None,
            observer_targets: None,
            seed: DEFAULT_PLACEMENT_SEED,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignOutcome {
    pub controller_targets: TargetSet,
    pub observer_targets: TargetSet,
    /// Largest matched distance between a placed spectrum and its targets.
    pub placement_error: f64,
    #[serde(flatten)]
    pub result: DesignResult,
}

/// Region sample, targets, `L` then `K`, and verification.
///
/// The observer takes the deepest targets; controller targets are chosen
/// away from them so the two diagonal blocks of the closed loop never share
/// an eigenvalue.
pub fn design_network(
    agent: &AgentModel,
    structure: &NetworkStructure,
    opts: &DesignOptions,
) -> Result<DesignOutcome> {
    let n = structure.agents();
    let needs_sample = opts.controller_targets.is_none() || opts.observer_targets.is_none();
    let sample = if needs_sample {
        Some(sample_region(agent, opts.bounds, opts.re_steps, opts.im_steps, opts.margin)?)
    } else {
        None
    };
    let pick = |avoid: &[Complex64]| {
        auto_targets(agent, sample.as_ref().expect("sampled"), n, avoid)
    };
    let observer_targets = match &opts.observer_targets {
        Some(t) => t.clone(),
        None => pick(opts.controller_targets.as_ref().map_or(&[][..], |t| t.as_slice()))?,
    };
    let controller_targets = match &opts.controller_targets {
        Some(t) => t.clone(),
        None => pick(observer_targets.as_slice())?,
    };

    let l = observer_gain_seeded(structure.a(), structure.c(), &observer_targets, opts.seed)?;
    let k = place_poles_seeded(structure.a(), structure.b(), &controller_targets, opts.seed)?;
    let result = verify_design(agent, structure, &k, &l, opts.margin)?;
    let placement_error = matched_distance(&result.controller.eigenvalues, controller_targets.as_slice())
        .expect("sizes agree")
        .max(
            matched_distance(&result.observer.eigenvalues, observer_targets.as_slice())
                .expect("sizes agree"),
        );
    Ok(DesignOutcome {
        controller_targets,
        observer_targets,
        placement_error,
        result,
    })
}
