//! Fixed-step simulation of the lifted plant, the distributive observer and
//! observer-based feedback, plus an exponential decay-rate estimate.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixkit::RealMatrix;
use crate::network::{LiftedGains, LiftedSystem};

/// Any state magnitude above this aborts the run and flags divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    /// `u = 0`; the observer is not run and `x̂` stays at its initial value.
    OpenLoop,
    /// `u = 0`; the observer tracks the free plant.
    ObserverOnly,
    /// `u = -𝒦 x̂`.
    OutputFeedback,
}

impl std::str::FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open-loop" => Ok(SimMode::OpenLoop),
            "observer-only" => Ok(SimMode::ObserverOnly),
            "output-feedback" => Ok(SimMode::OutputFeedback),
            other => Err(Error::InvalidInput(format!(
                "unknown mode '{other}' (expected open-loop, observer-only or output-feedback)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub t_final: f64,
    pub dt: f64,
    pub x0: DVector<f64>,
    pub xhat0: DVector<f64>,
    pub mode: SimMode,
    /// Keep every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
}

impl SimConfig {
    /// Cold observer start: `x̂(0) = 0`.
    pub fn new(x0: DVector<f64>, t_final: f64, mode: SimMode) -> Self {
        let n = x0.len();
        Self {
            t_final,
            dt: DEFAULT_DT,
            xhat0: DVector::zeros(n),
            x0,
            mode,
            record_every: 1,
        }
    }

    fn validate(&self, dim: usize) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "t_final must be at least dt, got t_final = {}, dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be at least 1".into()));
        }
        if self.x0.len() != dim {
            return Err(Error::mismatch("initial state length", dim, self.x0.len()));
        }
        if self.xhat0.len() != dim {
            return Err(Error::mismatch("initial estimate length", dim, self.xhat0.len()));
        }
        if self.x0.iter().chain(self.xhat0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial conditions"));
        }
        Ok((self.t_final / self.dt).round() as usize)
    }
}

/// Recorded samples. Row `k` of every field belongs to `times[k]`.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub estimates: Vec<DVector<f64>>,
    pub errors: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    /// The run stopped early because a state exceeded [`DIVERGENCE_LIMIT`].
    pub diverged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_norms(&self) -> Vec<f64> {
        self.states.iter().map(|v| v.norm()).collect()
    }

    pub fn error_norms(&self) -> Vec<f64> {
        self.errors.iter().map(|v| v.norm()).collect()
    }
}

struct Dynamics<'a> {
    a: &'a RealMatrix,
    b: &'a RealMatrix,
    c: &'a RealMatrix,
    k: &'a RealMatrix,
    l: &'a RealMatrix,
    mode: SimMode,
}

impl Dynamics<'_> {
    fn input(&self, xhat: &DVector<f64>) -> DVector<f64> {
        match self.mode {
            SimMode::OutputFeedback => -(self.k * xhat),
            _ => DVector::zeros(self.k.nrows()),
        }
    }

    fn rhs(&self, x: &DVector<f64>, xhat: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let u = self.input(xhat);
        let bu = self.b * &u;
        let dx = self.a * x + &bu;
        let dxhat = match self.mode {
            SimMode::OpenLoop => DVector::zeros(xhat.len()),
            _ => self.a * xhat + bu + self.l * (self.c * (x - xhat)),
        };
        (dx, dxhat)
    }
}

/// Classical four-stage Runge–Kutta integration of the plant and observer.
/// The feedback `u = -𝒦 x̂` is re-evaluated at every stage.
pub fn simulate(lifted: &LiftedSystem, gains: &LiftedGains, cfg: &SimConfig) -> Result<Trajectory> {
    let dim = lifted.states();
    let width = lifted.channels();
    if gains.lifted_k().shape() != (width, dim) {
        return Err(Error::mismatch(
            "lifted controller gain shape",
            format!("{width}x{dim}"),
            format!("{}x{}", gains.lifted_k().nrows(), gains.lifted_k().ncols()),
        ));
    }
    if gains.lifted_l().shape() != (dim, lifted.c().nrows()) {
        return Err(Error::mismatch(
            "lifted observer gain shape",
            format!("{dim}x{}", lifted.c().nrows()),
            format!("{}x{}", gains.lifted_l().nrows(), gains.lifted_l().ncols()),
        ));
    }
    let steps = cfg.validate(dim)?;
    let f = Dynamics {
        a: lifted.a(),
        b: lifted.b(),
        c: lifted.c(),
        k: gains.lifted_k(),
        l: gains.lifted_l(),
        mode: cfg.mode,
    };

    let mut traj = Trajectory::default();
    let record = |traj: &mut Trajectory, t: f64, x: &DVector<f64>, xhat: &DVector<f64>| {
        traj.times.push(t);
        traj.errors.push(x - xhat);
        traj.inputs.push(f.input(xhat));
        traj.states.push(x.clone());
        traj.estimates.push(xhat.clone());
    };

    let h = cfg.dt;
    let mut x = cfg.x0.clone();
    let mut xhat = cfg.xhat0.clone();
    record(&mut traj, 0.0, &x, &xhat);
    for step in 1..=steps {
        let (k1x, k1e) = f.rhs(&x, &xhat);
        let (k2x, k2e) = f.rhs(&(&x + &k1x * (h / 2.0)), &(&xhat + &k1e * (h / 2.0)));
        let (k3x, k3e) = f.rhs(&(&x + &k2x * (h / 2.0)), &(&xhat + &k2e * (h / 2.0)));
        let (k4x, k4e) = f.rhs(&(&x + &k3x * h), &(&xhat + &k3e * h));
        let next_x = &x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        let next_xhat = &xhat + (k1e + k2e * 2.0 + k3e * 2.0 + k4e) * (h / 6.0);

        let blown = next_x
            .iter()
            .chain(next_xhat.iter())
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT);
        if blown {
            traj.diverged = true;
            if *traj.times.last().expect("initial sample") != (step - 1) as f64 * h {
                record(&mut traj, (step - 1) as f64 * h, &x, &xhat);
            }
            break;
        }
        x = next_x;
        xhat = next_xhat;
        if step % cfg.record_every == 0 || step == steps {
            record(&mut traj, step as f64 * h, &x, &xhat);
        }
    }
    Ok(traj)
}

/// Initial condition with entries uniform in `[-1, 1]`, reproducible from `seed`.
pub fn seeded_state(dim: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..=1.0))
}

/// Autonomous linear flow `z' = M z` with the same integrator, recording every
/// step. Used to compare the estimation error against its own dynamics.
pub fn simulate_autonomous(m: &RealMatrix, z0: &DVector<f64>, dt: f64, steps: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut z = z0.clone();
    out.push(z.clone());
    for _ in 0..steps {
        let k1 = m * &z;
        let k2 = m * (&z + &k1 * (dt / 2.0));
        let k3 = m * (&z + &k2 * (dt / 2.0));
        let k4 = m * (&z + &k3 * dt);
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push(z.clone());
    }
    out
}

/// Exponential rate (per second) of a sampled norm history.
///
/// The signal is replaced by its forward running maximum over a window of a
/// tenth of the trailing half, which flattens oscillations into an envelope;
/// the rate is the least-squares slope of the envelope's logarithm over the
/// trailing half of the record.
pub fn decay_rate(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::mismatch("decay estimate", times.len(), values.len()));
    }
    if times.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "decay estimate needs at least 10 samples, got {}",
            times.len()
        )));
    }
    let start = times.len() / 2;
    let t0 = times[start];
    let t_end = *times.last().expect("non-empty");
    let window = (t_end - t0) / 10.0;

    let mut fit_t = Vec::new();
    let mut fit_y = Vec::new();
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut hi = start;
    for lo in start..times.len() {
        if times[lo] + window > t_end {
            break;
        }
        while hi < times.len() && times[hi] <= times[lo] + window {
            while deque.back().is_some_and(|&b| values[b] <= values[hi]) {
                deque.pop_back();
            }
            deque.push_back(hi);
            hi += 1;
        }
        while deque.front().is_some_and(|&f| f < lo) {
            deque.pop_front();
        }
        let peak = values[*deque.front().expect("window holds its own start")];
        if !(peak > 0.0 && peak.is_finite()) {
            return Err(Error::UndefinedRate("norm vanishes on the fitted window"));
        }
        fit_t.push(times[lo]);
        fit_y.push(peak.ln());
    }
    if fit_t.len() < 2 {
        return Err(Error::UndefinedRate("fitted window holds fewer than two samples"));
    }
    let n = fit_t.len() as f64;
    let mean_t = fit_t.iter().sum::<f64>() / n;
    let mean_y = fit_y.iter().sum::<f64>() / n;
    let sxy: f64 = fit_t.iter().zip(&fit_y).map(|(t, y)| (t - mean_t) * (y - mean_y)).sum();
    let sxx: f64 = fit_t.iter().map(|t| (t - mean_t).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Which recorded signal [`decay_estimate`] summarizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signal {
    State,
    Error,
}

pub fn decay_estimate(traj: &Trajectory, signal: Signal) -> Result<f64> {
    let norms = match signal {
        Signal::State => traj.state_norms(),
        Signal::Error => traj.error_norms(),
    };
    decay_rate(&traj.times, &norms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentModel;
    use crate::network::{lift_gains, NetworkStructure};
    use nalgebra::{dmatrix, dvector};

    fn scalar(a: f64) -> LiftedSystem {
        let agent = AgentModel::new(dmatrix![0.0], dmatrix![1.0], dmatrix![1.0]).unwrap();
        let s = NetworkStructure::new(dmatrix![a], dmatrix![1.0], dmatrix![1.0]).unwrap();
        LiftedSystem::assemble(&agent, &s)
    }

    fn gains(k: f64, l: f64, lifted: &LiftedSystem) -> LiftedGains {
        lift_gains(&dmatrix![k], &dmatrix![l], lifted.agent()).unwrap()
    }

    #[test]
    fn zero_start_stays_zero() {
        let lifted = scalar(1.0);
        let cfg = SimConfig::new(dvector![0.0], 2.0, SimMode::OutputFeedback);
        let traj = simulate(&lifted, &gains(3.0, 3.0, &lifted), &cfg).unwrap();
        assert_eq!(traj.len(), 2001);
        assert!(traj.states.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn scalar_decay_matches_exponential() {
        let lifted = scalar(-1.0);
        let cfg = SimConfig::new(dvector![1.0], 1.0, SimMode::OpenLoop);
        let traj = simulate(&lifted, &gains(0.0, 0.0, &lifted), &cfg).unwrap();
        let last = traj.states.last().unwrap()[0];
        assert!((last - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(traj.errors.last().unwrap()[0], last);
    }

    #[test]
    fn divergence_is_flagged() {
        let lifted = scalar(50.0);
        let cfg = SimConfig::new(dvector![1.0], 10.0, SimMode::OpenLoop);
        let traj = simulate(&lifted, &gains(0.0, 0.0, &lifted), &cfg).unwrap();
        assert!(traj.diverged);
        assert!(*traj.times.last().unwrap() < 1.0);
        assert!(traj.states.iter().all(|v| v[0].abs() <= DIVERGENCE_LIMIT));
    }

    #[test]
    fn recording_stride_keeps_final_step() {
        let lifted = scalar(-1.0);
        let mut cfg = SimConfig::new(dvector![1.0], 1.0, SimMode::OpenLoop);
        cfg.record_every = 300;
        let traj = simulate(&lifted, &gains(0.0, 0.0, &lifted), &cfg).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert!((traj.times[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configs() {
        let lifted = scalar(-1.0);
        let g = gains(0.0, 0.0, &lifted);
        let mut cfg = SimConfig::new(dvector![1.0, 2.0], 1.0, SimMode::OpenLoop);
        assert!(simulate(&lifted, &g, &cfg).is_err());
        cfg = SimConfig::new(dvector![1.0], 1e-4, SimMode::OpenLoop);
        assert!(simulate(&lifted, &g, &cfg).is_err());
        cfg.t_final = 1.0;
        cfg.dt = 0.0;
        assert!(simulate(&lifted, &g, &cfg).is_err());
    }

    #[test]
    fn modes_parse() {
        assert_eq!("output-feedback".parse::<SimMode>().unwrap(), SimMode::OutputFeedback);
        assert!("closed".parse::<SimMode>().is_err());
    }

    #[test]
    fn decay_rate_of_exact_exponential() {
        let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        assert!((decay_rate(&t, &y).unwrap() + 1.0).abs() < 1e-3);
    }

    #[test]
    fn decay_rate_rejects_zero_signal() {
        let t: Vec<f64> = (0..20).map(|k| k as f64).collect();
        assert!(matches!(decay_rate(&t, &[0.0; 20]), Err(Error::UndefinedRate(_))));
        assert!(decay_rate(&t[..5], &[1.0; 5]).is_err());
    }
}
