//! Batch front end for region plots, distributive design, necessity checks and
//! simulation of networked agents described in JSON model files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use gfv_core::analysis::necessity_battery;
use gfv_core::design::{design_network, parse_targets, DesignOptions, TargetSet, DEFAULT_PLACEMENT_SEED};
use gfv_core::export::{norms_svg, num, region_csv, region_svg, trajectory_csv, Overlay};
use gfv_core::matrixkit::{spectral_norm, RealMatrix, DEFAULT_RANK_TOL};
use gfv_core::model_file::{design_record_json, pendulum_spec, to_json, DesignRecord, SystemFile};
use gfv_core::network::{lift_gains, LiftedSystem};
use gfv_core::region::{sample_region, spectrum_in_region, Bounds, RegionSample, DESIGN_MARGIN};
use gfv_core::sim::{decay_estimate, seeded_state, simulate, SimConfig, SimMode, Signal, DEFAULT_DT};
use gfv_core::Error;

/// Environment variable holding the seed for randomized choices.
pub const SEED_ENV: &str = "GFV_SEED";

pub const DEFAULT_RESOLUTION: (usize, usize) = (200, 200);
pub const DEFAULT_T_FINAL: f64 = 20.0;
/// Horizon of the pendulum demo; its closed loop decays at roughly 0.01/s.
pub const DEMO_T_FINAL: f64 = 600.0;
/// Rows kept in a trajectory file unless `--record-every` says otherwise.
const TARGET_ROWS: usize = 10_000;

pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const UNVERIFIED: i32 = 4;
    pub const NEGATIVE: i32 = 5;
}

#[derive(Parser, Debug)]
#[command(name = "gfv", version, about = "Observer-based stabilization of homogeneous agent networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample the stability region and plot it with the spectrum of A.
    Region(RegionArgs),
    /// Pick targets, place K and L, verify the closed loop.
    Design(DesignArgs),
    /// Necessary conditions and lifted Kalman ranks.
    Check(CheckArgs),
    /// Simulate the lifted network under a stored design.
    Simulate(SimulateArgs),
    /// Build the inverted-pendulum network and run every step on it.
    DemoPendulum(DemoArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    /// Viewport as re_min,re_max,im_min,im_max.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    pub bounds: Option<Bounds>,
    /// Grid resolution NxM (real steps x imaginary steps).
    #[arg(long, value_parser = parse_resolution)]
    pub res: Option<(usize, usize)>,
    /// Hurwitz margin used for region membership.
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    /// System file.
    pub system: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output prefix; writes <prefix>.region.csv and <prefix>.region.svg.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// System file.
    pub system: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Controller targets, e.g. "1.3+9.3i; 1.3-9.3i".
    #[arg(long, allow_hyphen_values = true)]
    pub targets: Option<String>,
    /// Observer targets in the same format.
    #[arg(long, allow_hyphen_values = true)]
    pub observer_targets: Option<String>,
    /// Output prefix; writes <prefix>.design.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// System file.
    pub system: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SimArgs {
    /// open-loop, observer-only or output-feedback (default).
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<SimMode>,
    /// Integration step in seconds (default 1e-3).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Horizon in seconds (default 20, 600 for the demo).
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Keep every n-th integration step in the trajectory file.
    #[arg(long)]
    pub record_every: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// System file.
    pub system: PathBuf,
    /// Design record from `gfv design`; optional in open-loop mode.
    pub design: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Output prefix; writes <prefix>.trajectory.csv and <prefix>.norms.svg.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Interconnection gain of the cycle.
    #[arg(long, default_value_t = 10.0)]
    pub k: f64,
    #[command(flatten)]
    pub sim: SimArgs,
}

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    let [a, b, c, d] = v[..] else {
        return Err(format!("expected re_min,re_max,im_min,im_max, got {} values", v.len()));
    };
    Bounds::new(a, b, c, d).map_err(|e| e.to_string())
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got '{s}'"))?;
    let parse = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("'{p}': {e}"));
    let (n, m) = (parse(a)?, parse(b)?);
    if n < 2 || m < 2 {
        return Err(format!("resolution must be at least 2x2, got {n}x{m}"));
    }
    Ok((n, m))
}

fn parse_mode(s: &str) -> Result<SimMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: exit::INPUT,
            message: message.into(),
        }
    }

    fn from_core(context: &str, e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_)
            | Error::Uncontrollable(_)
            | Error::Unobservable(_)
            | Error::Singular(_)
            | Error::NoConvergence(_) => exit::INFEASIBLE,
            _ => exit::INPUT,
        };
        let message = match &e {
            Error::Parse { .. } => format!("{context}:{e}"),
            _ => format!("{context}: {e}"),
        };
        Self { code, message }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

type Outcome = Result<i32, Failure>;

/// Seed from [`SEED_ENV`], decimal or `0x` hex; the placement default otherwise.
pub fn seed_from_env() -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Err(_) => Ok(DEFAULT_PLACEMENT_SEED),
        Ok(raw) => {
            let s = raw.trim();
            let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
                Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
                None => s.replace('_', "").parse(),
            };
            parsed.map_err(|e| Failure::input(format!("{SEED_ENV}='{raw}': {e}")))
        }
    }
}

fn load_system(path: &Path) -> Result<SystemFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    SystemFile::parse(&text).map_err(|e| Failure::from_core(&path.display().to_string(), e))
}

fn load_design(path: &Path) -> Result<DesignRecord, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    DesignRecord::parse(&text).map_err(|e| Failure::from_core(&path.display().to_string(), e))
}

/// Writes every file or none: all contents are computed before this runs and
/// files written so far are removed if a later one fails.
fn write_all(files: &[(PathBuf, String)]) -> Result<(), Failure> {
    for (i, (path, body)) in files.iter().enumerate() {
        if let Err(e) = fs::write(path, body) {
            for (done, _) in &files[..i] {
                let _ = fs::remove_file(done);
            }
            return Err(Failure::input(format!("cannot write {}: {e}", path.display())));
        }
    }
    for (path, _) in files {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Square viewport around the origin wide enough for `σ(A)`.
fn default_bounds(a: &RealMatrix) -> Bounds {
    let r = (1.5 * spectral_norm(a)).max(2.0);
    Bounds::new(-r, r, -r, r).expect("finite symmetric viewport")
}

struct Grid {
    bounds: Bounds,
    res: (usize, usize),
    margin: f64,
}

fn resolve_grid(sys: &SystemFile, args: &GridArgs) -> Result<Grid, Failure> {
    let bounds = match args.bounds {
        Some(b) => b,
        None => sys
            .bounds()
            .map_err(|e| Failure::from_core("design.bounds", e))?
            .unwrap_or_else(|| default_bounds(sys.structure.a())),
    };
    let res = args
        .res
        .or(sys.design.resolution.map(|[a, b]| (a, b)))
        .unwrap_or(DEFAULT_RESOLUTION);
    let margin = args.margin.or(sys.design.margin).unwrap_or(DESIGN_MARGIN);
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Failure::input(format!("--margin must be >= 0, got {margin}")));
    }
    Ok(Grid { bounds, res, margin })
}

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Region(a) => cmd_region(&a),
        Command::Design(a) => cmd_design(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::DemoPendulum(a) => cmd_demo(&a),
    }
}

struct RegionProducts {
    sample: RegionSample,
    files: Vec<(PathBuf, String)>,
}

fn region_products(sys: &SystemFile, grid: &Grid, prefix: &Path) -> Result<RegionProducts, Failure> {
    let sample = sample_region(&sys.agent, grid.bounds, grid.res.0, grid.res.1, grid.margin)
        .map_err(|e| Failure::from_core("region", e))?;
    let report = spectrum_in_region(&sys.agent, sys.structure.a(), grid.margin)
        .map_err(|e| Failure::from_core("σ(A)", e))?;
    println!("inside points: {} / {}", sample.inside_count(), sample.inside.len());
    for (z, inside) in report.eigenvalues.iter().zip(&report.inside) {
        println!(
            "σ(A) {} {}i: {}",
            num(z.re),
            num(z.im),
            if *inside { "inside" } else { "outside" }
        );
    }
    println!("open-loop stable: {}", if report.all_inside { "yes" } else { "no" });
    let svg = region_svg(
        &sample,
        "stability region and σ(A)",
        &[Overlay {
            label: "σ(A)",
            color: "black",
            points: &report.eigenvalues,
        }],
    );
    Ok(RegionProducts {
        files: vec![
            (with_suffix(prefix, ".region.csv"), region_csv(&sample)),
            (with_suffix(prefix, ".region.svg"), svg),
        ],
        sample,
    })
}

fn cmd_region(args: &RegionArgs) -> Outcome {
    let sys = load_system(&args.system)?;
    let grid = resolve_grid(&sys, &args.grid)?;
    let products = region_products(&sys, &grid, &args.out)?;
    write_all(&products.files)?;
    Ok(exit::OK)
}

fn targets_arg(flag: &str, raw: Option<&str>, from_file: Option<TargetSet>) -> Result<Option<TargetSet>, Failure> {
    match raw {
        Some(s) => parse_targets(s)
            .map(Some)
            .map_err(|e| Failure::input(format!("{flag}: {e}"))),
        None => Ok(from_file),
    }
}

struct DesignProducts {
    verified: bool,
    record: DesignRecord,
    file: (PathBuf, String),
}

fn design_products(
    sys: &SystemFile,
    grid: &Grid,
    controller: Option<TargetSet>,
    observer: Option<TargetSet>,
    seed: u64,
    prefix: &Path,
) -> Result<DesignProducts, Failure> {
    let mut opts = DesignOptions::new(grid.bounds, grid.res.0, grid.res.1);
    opts.margin = grid.margin;
    opts.controller_targets = controller;
    opts.observer_targets = observer;
    opts.seed = seed;
    let outcome = design_network(&sys.agent, &sys.structure, &opts)
        .map_err(|e| Failure::from_core("design", e))?;
    let r = &outcome.result;
    let show = |name: &str, t: &TargetSet| {
        let parts: Vec<String> = t.as_slice().iter().map(|z| format!("{}{:+}i", z.re, z.im)).collect();
        println!("{name}: {}", parts.join("; "));
    };
    show("observer targets", &outcome.observer_targets);
    show("controller targets", &outcome.controller_targets);
    println!("placement error: {}", num(outcome.placement_error));
    println!("σ(A-BK) inside: {}", r.controller.all_inside);
    println!("σ(A-LC) inside: {}", r.observer.all_inside);
    println!("closed-loop abscissa: {}", num(r.closed_loop_abscissa));
    println!("verified: {}", r.verified);
    let json = design_record_json(&outcome, seed);
    let record = DesignRecord::parse(&json).expect("design record reads back");
    Ok(DesignProducts {
        verified: r.verified,
        record,
        file: (with_suffix(prefix, ".design.json"), json),
    })
}

fn cmd_design(args: &DesignArgs) -> Outcome {
    let sys = load_system(&args.system)?;
    let grid = resolve_grid(&sys, &args.grid)?;
    let seed = seed_from_env()?;
    let controller = targets_arg(
        "--targets",
        args.targets.as_deref(),
        sys.controller_targets().map_err(|e| Failure::from_core("design.controller_targets", e))?,
    )?;
    let observer = targets_arg(
        "--observer-targets",
        args.observer_targets.as_deref(),
        sys.observer_targets().map_err(|e| Failure::from_core("design.observer_targets", e))?,
    )?;
    let products = design_products(&sys, &grid, controller, observer, seed, &args.out)?;
    write_all(std::slice::from_ref(&products.file))?;
    Ok(if products.verified { exit::OK } else { exit::UNVERIFIED })
}

fn check_report(sys: &SystemFile) -> Result<(bool, String), Failure> {
    let report = necessity_battery(&sys.agent, &sys.structure, DEFAULT_RANK_TOL)
        .map_err(|e| Failure::from_core("check", e))?;
    print!("{report}");
    Ok((report.lifted_controllable && report.lifted_observable, to_json(&report)))
}

fn cmd_check(args: &CheckArgs) -> Outcome {
    let sys = load_system(&args.system)?;
    let (ok, json) = check_report(&sys)?;
    if let Some(path) = &args.json {
        write_all(&[(path.clone(), json)])?;
    }
    Ok(if ok { exit::OK } else { exit::NEGATIVE })
}

fn sim_products(
    sys: &SystemFile,
    record: Option<&DesignRecord>,
    args: &SimArgs,
    seed: u64,
    default_t_final: f64,
    prefix: &Path,
) -> Result<Vec<(PathBuf, String)>, Failure> {
    let mode = args.mode.or(sys.sim.mode).unwrap_or(SimMode::OutputFeedback);
    let (n, m) = (sys.structure.agents(), sys.structure.channels());
    let (k, l) = match record {
        Some(r) => r.gains().map_err(|e| Failure::from_core("design record", e))?,
        None if mode == SimMode::OpenLoop => (RealMatrix::zeros(m, n), RealMatrix::zeros(n, m)),
        None => return Err(Failure::input(format!("mode {} needs a design record", mode_name(mode)))),
    };
    if k.shape() != (m, n) || l.shape() != (n, m) {
        return Err(Failure::input(format!(
            "design record gains are K {}x{}, L {}x{}; the system needs K {m}x{n}, L {n}x{m}",
            k.nrows(),
            k.ncols(),
            l.nrows(),
            l.ncols()
        )));
    }
    let lifted = LiftedSystem::assemble(&sys.agent, &sys.structure);
    let gains = lift_gains(&k, &l, &sys.agent).map_err(|e| Failure::from_core("gains", e))?;
    let dim = lifted.states();
    let x0 = match &sys.sim.x0 {
        Some(v) => DVector::from_vec(v.clone()),
        None => seeded_state(dim, seed),
    };
    let mut cfg = SimConfig::new(x0, args.t_final.or(sys.sim.t_final).unwrap_or(default_t_final), mode);
    cfg.dt = args.dt.or(sys.sim.dt).unwrap_or(DEFAULT_DT);
    if let Some(v) = &sys.sim.xhat0 {
        cfg.xhat0 = DVector::from_vec(v.clone());
    }
    cfg.record_every = match args.record_every.or(sys.sim.record_every) {
        Some(r) => r,
        None => {
            let steps = (cfg.t_final / cfg.dt).round().max(1.0) as usize;
            steps.div_ceil(TARGET_ROWS)
        }
    };
    let traj = simulate(&lifted, &gains, &cfg).map_err(|e| Failure::from_core("simulate", e))?;

    println!("mode: {}", mode_name(mode));
    println!("samples: {}", traj.len());
    if traj.diverged {
        println!("diverged: true (a state exceeded {:e})", gfv_core::sim::DIVERGENCE_LIMIT);
    } else {
        println!("diverged: false");
    }
    let last = traj.len() - 1;
    println!("final |x|: {}", num(traj.states[last].norm()));
    println!("final |x - xhat|: {}", num(traj.errors[last].norm()));
    for (name, signal) in [("state", Signal::State), ("error", Signal::Error)] {
        match decay_estimate(&traj, signal) {
            Ok(r) => println!("{name} decay rate: {}", num(r)),
            Err(e) => println!("{name} decay rate: undefined ({e})"),
        }
    }
    let title = format!("norms, {}", mode_name(mode));
    Ok(vec![
        (with_suffix(prefix, ".trajectory.csv"), trajectory_csv(&traj)),
        (with_suffix(prefix, ".norms.svg"), norms_svg(&traj, &title)),
    ])
}

fn mode_name(mode: SimMode) -> &'static str {
    match mode {
        SimMode::OpenLoop => "open-loop",
        SimMode::ObserverOnly => "observer-only",
        SimMode::OutputFeedback => "output-feedback",
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let sys = load_system(&args.system)?;
    let record = args.design.as_deref().map(load_design).transpose()?;
    let seed = seed_from_env()?;
    let files = sim_products(&sys, record.as_ref(), &args.sim, seed, DEFAULT_T_FINAL, &args.out)?;
    write_all(&files)?;
    Ok(exit::OK)
}

fn cmd_demo(args: &DemoArgs) -> Outcome {
    if !(args.k.is_finite()) {
        return Err(Failure::input(format!("--k must be finite, got {}", args.k)));
    }
    let seed = seed_from_env()?;
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", args.out.display())))?;
    let spec = pendulum_spec(args.k);
    let system_json = to_json(&spec);
    let sys = SystemFile::from_spec(&spec).map_err(|e| Failure::from_core("pendulum", e))?;
    let system_path = args.out.join("pendulum.json");
    write_all(&[(system_path, system_json)])?;
    let prefix = args.out.join("pendulum");

    println!("== region");
    let grid = resolve_grid(&sys, &GridArgs::default())?;
    let region = region_products(&sys, &grid, &prefix)?;
    write_all(&region.files)?;
    drop(region.sample);

    println!("== check");
    let (check_ok, _) = check_report(&sys)?;
    if !check_ok {
        return Ok(exit::NEGATIVE);
    }

    println!("== design");
    let design = design_products(&sys, &grid, None, None, seed, &prefix)?;
    write_all(std::slice::from_ref(&design.file))?;
    if !design.verified {
        return Ok(exit::UNVERIFIED);
    }

    println!("== simulate");
    let files = sim_products(&sys, Some(&design.record), &args.sim, seed, DEMO_T_FINAL, &prefix)?;
    write_all(&files)?;
    Ok(exit::OK)
}
