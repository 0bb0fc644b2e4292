//! JSON model files (`"version": 1`): agent, interconnection, optional design
//! overrides and simulation settings. Also the design record written by the
//! design step and read back by the simulator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::agents::{realize_siso, AgentModel, RationalTf};
use crate::design::{DesignOutcome, TargetSet};
use crate::error::{Error, Result};
use crate::matrixkit::RealMatrix;
use crate::network::{complete_laplacian, cyclic_interconnection, path_laplacian, NetworkStructure};
use crate::region::Bounds;
use crate::sim::SimMode;

pub const FORMAT_VERSION: u32 = 1;

pub type Rows = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub version: u32,
    pub agent: AgentSpec,
    pub network: NetworkSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum AgentSpec {
    Tf {
        num: Vec<f64>,
        den: Vec<f64>,
    },
    Ss {
        #[serde(rename = "Ah")]
        ah: Rows,
        #[serde(rename = "Bh")]
        bh: Rows,
        #[serde(rename = "Ch")]
        ch: Rows,
    },
}

/// Exactly one of `A`, `cyclic`, `path`, `complete` gives the interconnection
/// matrix; `path` and `complete` scale the graph Laplacian by `k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cyclic: Option<TopologySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<TopologySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete: Option<TopologySpec>,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "C")]
    pub c: Rows,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller_targets: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observer_targets: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xhat0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SimMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

/// A validated model file.
#[derive(Clone, Debug)]
pub struct SystemFile {
    pub agent: AgentModel,
    /// Present when the agent was given as a transfer function.
    pub tf: Option<RationalTf>,
    pub structure: NetworkStructure,
    pub design: DesignSpec,
    pub sim: SimSpec,
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SystemSpec = serde_json::from_str(text).map_err(json_error)?;
        Self::from_spec(&spec).map_err(|e| locate(text, e))
    }

    pub fn from_spec(spec: &SystemSpec) -> Result<Self> {
        if spec.version != FORMAT_VERSION {
            return Err(Located::new(
                "version",
                Error::InvalidInput(format!(
                    "unsupported format version {} (expected {FORMAT_VERSION})",
                    spec.version
                )),
            )
            .into());
        }
        let (agent, tf) = build_agent(&spec.agent).map_err(|e| Located::new("agent", e))?;
        let structure = build_network(&spec.network).map_err(|e| Located::new("network", e))?;
        let design = spec.design.clone().unwrap_or_default();
        check_design(&design, structure.agents()).map_err(|e| Located::new("design", e))?;
        let sim = spec.sim.clone().unwrap_or_default();
        let dim = structure.agents() * agent.states();
        check_sim(&sim, dim).map_err(|e| Located::new("sim", e))?;
        Ok(Self {
            agent,
            tf,
            structure,
            design,
            sim,
        })
    }

    pub fn bounds(&self) -> Result<Option<Bounds>> {
        self.design
            .bounds
            .map(|[a, b, c, d]| Bounds::new(a, b, c, d))
            .transpose()
    }

    pub fn controller_targets(&self) -> Result<Option<TargetSet>> {
        self.design.controller_targets.as_deref().map(target_set).transpose()
    }

    pub fn observer_targets(&self) -> Result<Option<TargetSet>> {
        self.design.observer_targets.as_deref().map(target_set).transpose()
    }
}

/// An error tied to a top-level key of the model file.
struct Located {
    key: &'static str,
    error: Error,
}

impl Located {
    fn new(key: &'static str, error: Error) -> Self {
        Self { key, error }
    }
}

impl From<Located> for Error {
    fn from(l: Located) -> Self {
        Error::InvalidInput(format!("\u{0}{}\u{0}{}", l.key, l.error))
    }
}

/// Turns a keyed validation error into a parse error pointing at the line
/// where the key appears in the source text.
fn locate(text: &str, err: Error) -> Error {
    let Error::InvalidInput(msg) = &err else {
        return err;
    };
    let mut parts = msg.splitn(3, '\u{0}');
    let (Some(""), Some(key), Some(rest)) = (parts.next(), parts.next(), parts.next()) else {
        return err;
    };
    let needle = format!("\"{key}\"");
    let (line, column) = text
        .lines()
        .enumerate()
        .find_map(|(i, l)| l.find(&needle).map(|c| (i + 1, c + 1)))
        .unwrap_or((1, 1));
    Error::Parse {
        line,
        column,
        message: format!("in \"{key}\": {rest}"),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    let (line, column) = (e.line(), e.column());
    let full = e.to_string();
    let message = full
        .strip_suffix(&format!(" at line {line} column {column}"))
        .unwrap_or(&full)
        .to_owned();
    Error::Parse { line, column, message }
}

pub fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<RealMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::InvalidInput(format!("{what} must be a non-empty matrix")));
    }
    if let Some(bad) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::InvalidInput(format!(
            "{what} row {bad} has {} entries, expected {c}",
            rows[bad].len()
        )));
    }
    Ok(RealMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &RealMatrix) -> Rows {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn build_agent(spec: &AgentSpec) -> Result<(AgentModel, Option<RationalTf>)> {
    match spec {
        AgentSpec::Tf { num, den } => {
            let tf = RationalTf::from_coeffs(num, den)?;
            Ok((realize_siso(&tf), Some(tf)))
        }
        AgentSpec::Ss { ah, bh, ch } => Ok((
            AgentModel::new(
                rows_to_matrix(ah, "Ah")?,
                rows_to_matrix(bh, "Bh")?,
                rows_to_matrix(ch, "Ch")?,
            )?,
            None,
        )),
    }
}

fn build_network(spec: &NetworkSpec) -> Result<NetworkStructure> {
    let given = [
        spec.a.is_some(),
        spec.cyclic.is_some(),
        spec.path.is_some(),
        spec.complete.is_some(),
    ]
    .iter()
    .filter(|&&g| g)
    .count();
    if given != 1 {
        return Err(Error::InvalidInput(
            "exactly one of \"A\", \"cyclic\", \"path\", \"complete\" must be given".into(),
        ));
    }
    let a = if let Some(rows) = &spec.a {
        rows_to_matrix(rows, "A")?
    } else if let Some(t) = spec.cyclic {
        cyclic_interconnection(t.n, t.k)?
    } else if let Some(t) = spec.path {
        path_laplacian(t.n)? * t.k
    } else {
        let t = spec.complete.expect("one source given");
        complete_laplacian(t.n)? * t.k
    };
    NetworkStructure::new(a, rows_to_matrix(&spec.b, "B")?, rows_to_matrix(&spec.c, "C")?)
}

fn target_set(pairs: &[[f64; 2]]) -> Result<TargetSet> {
    TargetSet::new(pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
}

fn check_design(d: &DesignSpec, n_agents: usize) -> Result<()> {
    if let Some([a, b, c, e]) = d.bounds {
        Bounds::new(a, b, c, e)?;
    }
    if let Some([nx, ny]) = d.resolution {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidInput(format!(
                "resolution must be at least 2x2, got {nx}x{ny}"
            )));
        }
    }
    if let Some(m) = d.margin {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::InvalidInput(format!("margin must be >= 0, got {m}")));
        }
    }
    for (name, t) in [
        ("controller_targets", &d.controller_targets),
        ("observer_targets", &d.observer_targets),
    ] {
        if let Some(pairs) = t {
            let set = target_set(pairs)?;
            if set.len() != n_agents {
                return Err(Error::mismatch("target count", n_agents, format!("{} in {name}", set.len())));
            }
        }
    }
    Ok(())
}

fn check_sim(s: &SimSpec, dim: usize) -> Result<()> {
    for (name, v) in [("x0", &s.x0), ("xhat0", &s.xhat0)] {
        if let Some(v) = v {
            if v.len() != dim {
                return Err(Error::mismatch("initial condition length", dim, format!("{} in {name}", v.len())));
            }
        }
    }
    Ok(())
}

/// Gains read back from a design record.
#[derive(Clone, Debug, Deserialize)]
pub struct DesignRecord {
    pub version: u32,
    #[serde(rename = "K")]
    pub k: Rows,
    #[serde(rename = "L")]
    pub l: Rows,
    #[serde(default)]
    pub verified: bool,
}

impl DesignRecord {
    pub fn parse(text: &str) -> Result<Self> {
        let rec: DesignRecord = serde_json::from_str(text).map_err(json_error)?;
        if rec.version != FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported design record version {} (expected {FORMAT_VERSION})",
                rec.version
            )));
        }
        Ok(rec)
    }

    pub fn gains(&self) -> Result<(RealMatrix, RealMatrix)> {
        Ok((rows_to_matrix(&self.k, "K")?, rows_to_matrix(&self.l, "L")?))
    }
}

#[derive(Serialize)]
struct DesignRecordOut<'a> {
    version: u32,
    seed: u64,
    #[serde(flatten)]
    outcome: &'a DesignOutcome,
}

pub fn design_record_json(outcome: &DesignOutcome, seed: u64) -> String {
    let out = DesignRecordOut {
        version: FORMAT_VERSION,
        seed,
        outcome,
    };
    serde_json::to_string_pretty(&out).expect("design record serializes") + "\n"
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

/// The inverted-pendulum network: four PD-stabilized pendulums
/// `h(s) = (0.5s + 1)(1.9s² - 0.002s + 2.1) / (s(s - 2)(s + 1)(s + 5))` on a
/// cycle with gain `k`, actuated at agent 1 and measured at agent 3.
pub fn pendulum_spec(k: f64) -> SystemSpec {
    SystemSpec {
        version: FORMAT_VERSION,
        agent: AgentSpec::Tf {
            num: vec![0.95, 1.899, 1.048, 2.1],
            den: vec![1.0, 4.0, -7.0, -10.0, 0.0],
        },
        network: NetworkSpec {
            cyclic: Some(TopologySpec { n: 4, k }),
            b: vec![vec![1.0], vec![0.0], vec![0.0], vec![0.0]],
            c: vec![vec![0.0, 0.0, 1.0, 0.0]],
            ..NetworkSpec::default()
        },
        design: Some(DesignSpec {
            bounds: Some([-3.0, 3.0, -15.0, 15.0]),
            resolution: Some([300, 300]),
            ..DesignSpec::default()
        }),
        sim: None,
    }
}
