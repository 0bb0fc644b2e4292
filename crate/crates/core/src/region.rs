//! The stability region `Λ_s`: pointwise membership, grid sampling, and
//! membership of whole spectra.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::agents::{closed_agent_matrix, AgentModel};
use crate::error::{Error, Result};
use crate::matrixkit::{eigenvalues, ensure_square, spectral_abscissa, RealMatrix};
use crate::serde_complex;

/// Margin used when a design must sit strictly inside the region.
pub const DESIGN_MARGIN: f64 = 1e-6;

/// `λ ∈ Λ_s` with all closed-agent eigenvalues left of `-margin`.
///
/// A failed eigenvalue computation counts as "not inside".
pub fn in_region(agent: &AgentModel, lambda: Complex64, margin: f64) -> bool {
    abscissa_at(agent, lambda).is_some_and(|a| a < -margin)
}

/// Spectral abscissa of `A_h + λ B_h C_h`.
pub fn abscissa_at(agent: &AgentModel, lambda: Complex64) -> Option<f64> {
    spectral_abscissa(&closed_agent_matrix(agent, lambda)).ok()
}

/// Rectangle `[re_min, re_max] × [im_min, im_max]` in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bounds {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Bounds {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let all_finite = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite());
        if !all_finite || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidInput(format!(
                "bounds must be finite and ordered, got re [{re_min}, {re_max}], im [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }
}

/// Membership of every point of a `re_steps × im_steps` grid, endpoints
/// included. Points are stored row by row, one row per imaginary value.
#[derive(Clone, Debug, Serialize)]
pub struct RegionSample {
    pub bounds: Bounds,
    pub re_steps: usize,
    pub im_steps: usize,
    pub margin: f64,
    pub inside: Vec<bool>,
    /// Spectral abscissa of `A_h + λ B_h C_h` per point (`NaN` if the
    /// eigenvalue iteration failed).
    #[serde(skip)]
    pub abscissa: Vec<f64>,
}

impl RegionSample {
    pub fn re_at(&self, i: usize) -> f64 {
        lerp(self.bounds.re_min, self.bounds.re_max, i, self.re_steps)
    }

    pub fn im_at(&self, j: usize) -> f64 {
        lerp(self.bounds.im_min, self.bounds.im_max, j, self.im_steps)
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re_at(i), self.im_at(j))
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.re_steps + i
    }

    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.inside[self.index(i, j)]
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Row index whose imaginary coordinate is closest to zero.
    pub fn row_nearest_real_axis(&self) -> usize {
        (0..self.im_steps)
            .min_by(|&a, &b| self.im_at(a).abs().total_cmp(&self.im_at(b).abs()))
            .expect("at least two rows")
    }

    /// Grid points in row-major order with their membership.
    pub fn points(&self) -> impl Iterator<Item = (Complex64, bool)> + '_ {
        (0..self.im_steps).flat_map(move |j| {
            (0..self.re_steps).map(move |i| (self.point(i, j), self.is_inside(i, j)))
        })
    }
}

fn lerp(lo: f64, hi: f64, k: usize, steps: usize) -> f64 {
    if k + 1 == steps {
        hi
    } else {
        lo + (hi - lo) * k as f64 / (steps - 1) as f64
    }
}

pub fn sample_region(
    agent: &AgentModel,
    bounds: Bounds,
    re_steps: usize,
    im_steps: usize,
    margin: f64,
) -> Result<RegionSample> {
    if re_steps < 2 || im_steps < 2 {
        return Err(Error::InvalidInput(format!(
            "grid resolution must be at least 2x2, got {re_steps}x{im_steps}"
        )));
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::InvalidInput(format!("margin must be finite and >= 0, got {margin}")));
    }
    let mut sample = RegionSample {
        bounds,
        re_steps,
        im_steps,
        margin,
        inside: Vec::new(),
        abscissa: Vec::new(),
    };
    let abscissa: Vec<f64> = (0..re_steps * im_steps)
        .into_par_iter()
        .map(|k| {
            let z = sample.point(k % re_steps, k / re_steps);
            abscissa_at(agent, z).unwrap_or(f64::NAN)
        })
        .collect();
    sample.inside = abscissa.iter().map(|&a| a < -margin).collect();
    sample.abscissa = abscissa;
    Ok(sample)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    #[serde(serialize_with = "serde_complex::vec::serialize")]
    pub eigenvalues: Vec<Complex64>,
    pub inside: Vec<bool>,
    pub all_inside: bool,
}

pub fn spectrum_in_region(
    agent: &AgentModel,
    m: &RealMatrix,
    margin: f64,
) -> Result<SpectrumReport> {
    ensure_square(m)?;
    let eigenvalues = eigenvalues(m)?;
    Ok(report_for(agent, eigenvalues, margin))
}

pub(crate) fn report_for(agent: &AgentModel, eigenvalues: Vec<Complex64>, margin: f64) -> SpectrumReport {
    let inside: Vec<bool> = eigenvalues
        .iter()
        .map(|&z| in_region(agent, z, margin))
        .collect();
    SpectrumReport {
        all_inside: inside.iter().all(|&b| b),
        eigenvalues,
        inside,
    }
}
