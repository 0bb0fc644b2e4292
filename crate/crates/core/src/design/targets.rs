use num_complex::Complex64;
use serde::Serialize;

use crate::agents::AgentModel;
use crate::error::{Error, Result};
use crate::region::{in_region, RegionSample};
use crate::serde_complex;

/// Relative tolerance for matching a target with its conjugate partner.
const CONJ_TOL: f64 = 1e-9;

/// A conjugate-closed multiset of desired closed-loop eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TargetSet {
    #[serde(serialize_with = "serde_complex::vec::serialize")]
    targets: Vec<Complex64>,
}

impl TargetSet {
    pub fn new(mut targets: Vec<Complex64>) -> Result<Self> {
        if targets.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("targets must be finite".into()));
        }
        let scale = targets.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let tol = CONJ_TOL * scale;
        let mut used = vec![false; targets.len()];
        for i in 0..targets.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let z = targets[i];
            if z.im.abs() <= tol {
                targets[i] = Complex64::new(z.re, 0.0);
                continue;
            }
            let partner = (0..targets.len())
                .filter(|&j| !used[j])
                .filter(|&j| (targets[j] - z.conj()).norm() <= tol)
                .min_by(|&a, &b| {
                    (targets[a] - z.conj())
                        .norm()
                        .total_cmp(&(targets[b] - z.conj()).norm())
                });
            match partner {
                Some(j) => {
                    used[j] = true;
                    targets[j] = z.conj();
                }
                None => return Err(Error::NotConjugateClosed(format_targets(&targets))),
            }
        }
        Ok(Self { targets })
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Real Jordan form: `a` for real targets, `[[a, b], [-b, a]]` for each
    /// pair `a ± bi`.
    pub(crate) fn real_block_diagonal(&self) -> crate::matrixkit::RealMatrix {
        let n = self.targets.len();
        let mut out = crate::matrixkit::RealMatrix::zeros(n, n);
        let mut i = 0;
        for z in self.canonical_order() {
            if z.im == 0.0 {
                out[(i, i)] = z.re;
                i += 1;
            } else if z.im > 0.0 {
                out[(i, i)] = z.re;
                out[(i + 1, i + 1)] = z.re;
                out[(i, i + 1)] = z.im;
                out[(i + 1, i)] = -z.im;
                i += 2;
            }
        }
        out
    }

    /// Real targets, then upper-half-plane members of each pair (their
    /// partners are implied).
    fn canonical_order(&self) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = self.targets.iter().copied().filter(|z| z.im >= 0.0).collect();
        v.sort_by_key(|a| a.im > 0.0);
        v
    }
}

pub(crate) fn format_targets(v: &[Complex64]) -> String {
    v.iter()
        .map(|&z| crate::analysis::fmt_complex(z))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Distance from each grid point to the nearest sampled point outside the
/// region, capped by the distance to the edge of the sampled window (nothing
/// is known beyond it). Outside points score zero.
pub fn clearance(sample: &RegionSample) -> Vec<f64> {
    let (nx, ny) = (sample.re_steps, sample.im_steps);
    let hx = (sample.bounds.re_max - sample.bounds.re_min) / (nx - 1) as f64;
    let hy = (sample.bounds.im_max - sample.bounds.im_min) / (ny - 1) as f64;

    let mut d2: Vec<f64> = sample
        .inside
        .iter()
        .map(|&b| if b { f64::INFINITY } else { 0.0 })
        .collect();
    let mut line = Vec::new();
    for i in 0..nx {
        line.clear();
        line.extend((0..ny).map(|j| d2[j * nx + i]));
        let out = squared_distance_1d(&line, hy);
        for j in 0..ny {
            d2[j * nx + i] = out[j];
        }
    }
    for j in 0..ny {
        let row = &mut d2[j * nx..(j + 1) * nx];
        let out = squared_distance_1d(row, hx);
        row.copy_from_slice(&out);
    }

    (0..nx * ny)
        .map(|k| {
            let z = sample.point(k % nx, k / nx);
            let b = &sample.bounds;
            let edge = (z.re - b.re_min)
                .min(b.re_max - z.re)
                .min(z.im - b.im_min)
                .min(b.im_max - z.im)
                .max(0.0);
            d2[k].sqrt().min(edge)
        })
        .collect()
}

/// Lower envelope of parabolas `f[q] + (h (p - q))^2` (Felzenszwalb and
/// Huttenlocher), evaluated at every `p`.
fn squared_distance_1d(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let sites: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if sites.is_empty() {
        return vec![f64::INFINITY; n];
    }
    let pos = |q: usize| q as f64 * h;
    let meet = |a: usize, b: usize| {
        ((f[b] + pos(b) * pos(b)) - (f[a] + pos(a) * pos(a))) / (2.0 * (pos(b) - pos(a)))
    };
    let mut hull: Vec<usize> = Vec::with_capacity(sites.len());
    let mut starts: Vec<f64> = Vec::with_capacity(sites.len());
    for &q in &sites {
        while let Some(&top) = hull.last() {
            let s = meet(top, q);
            if s <= *starts.last().expect("parallel to hull") {
                hull.pop();
                starts.pop();
            } else {
                break;
            }
        }
        let s = match hull.last() {
            Some(&top) => meet(top, q),
            None => f64::NEG_INFINITY,
        };
        hull.push(q);
        starts.push(s);
    }
    let mut out = vec![0.0; n];
    let mut k = 0;
    for (p, slot) in out.iter_mut().enumerate() {
        let x = pos(p);
        while k + 1 < hull.len() && starts[k + 1] < x {
            k += 1;
        }
        let q = hull[k];
        *slot = f[q] + (x - pos(q)).powi(2);
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    point: Complex64,
    score: f64,
    order: usize,
}

/// Picks `n` conjugate-closed targets inside the sampled region, deepest
/// first by [`clearance`].
///
/// Real targets come from the grid row nearest the real axis (when the window
/// spans it), projected onto the axis and rechecked at the sample's margin. Candidates closer to an already
/// chosen target than that target's clearance are skipped, as are candidates
/// whose own clearance disc contains a point of `avoid`; if this leaves too
/// few targets, the spacing requirement is halved until it vanishes.
pub fn auto_targets(
    agent: &AgentModel,
    sample: &RegionSample,
    n: usize,
    avoid: &[Complex64],
) -> Result<TargetSet> {
    if n == 0 {
        return TargetSet::new(Vec::new());
    }
    if sample.inside_count() == 0 {
        return Err(Error::Infeasible(
            "the stability region has no sampled point inside the viewport".into(),
        ));
    }
    let score = clearance(sample);
    let axis_row = (sample.bounds.im_min <= 0.0 && sample.bounds.im_max >= 0.0)
        .then(|| sample.row_nearest_real_axis());
    let mut candidates = Vec::new();
    for j in 0..sample.im_steps {
        for i in 0..sample.re_steps {
            let k = sample.index(i, j);
            if !sample.inside[k] {
                continue;
            }
            let z = sample.point(i, j);
            if Some(j) == axis_row {
                let real = Complex64::new(z.re, 0.0);
                if in_region(agent, real, sample.margin) {
                    candidates.push(Candidate {
                        point: real,
                        score: score[k],
                        order: k,
                    });
                }
            } else if z.im > 0.0 {
                candidates.push(Candidate {
                    point: z,
                    score: score[k],
                    order: k,
                });
            }
        }
    }
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.order.cmp(&b.order)));

    let has_real = candidates.iter().any(|c| c.point.im == 0.0);
    if n % 2 == 1 && !has_real {
        return Err(Error::Infeasible(format!(
            "{n} targets requested but the region has no sampled point on the real axis, \
             so an odd conjugate-closed set cannot be formed"
        )));
    }

    let mut spacing = 1.0;
    loop {
        for max_real in [n, n % 2] {
            if let Some(t) = greedy(&candidates, n, avoid, spacing, max_real) {
                return TargetSet::new(t);
            }
        }
        if spacing == 0.0 {
            return Err(Error::Infeasible(format!(
                "the sampled region holds fewer than {n} usable target points"
            )));
        }
        spacing = if spacing < 1e-3 { 0.0 } else { spacing / 2.0 };
    }
}

fn greedy(
    candidates: &[Candidate],
    n: usize,
    avoid: &[Complex64],
    spacing: f64,
    max_real: usize,
) -> Option<Vec<Complex64>> {
    let mut chosen: Vec<(Complex64, f64)> = Vec::new();
    let mut out = Vec::with_capacity(n);
    let mut reals = 0;
    for c in candidates {
        let slots = n - out.len();
        if slots == 0 {
            break;
        }
        let width = if c.point.im == 0.0 { 1 } else { 2 };
        if width > slots || (width == 1 && reals == max_real) {
            continue;
        }
        let crowded = chosen.iter().any(|&(s, r)| {
            let d = (c.point - s).norm().min((c.point - s.conj()).norm());
            d < spacing * r || d == 0.0
        });
        let blocked = avoid.iter().any(|&a| {
            let d = (c.point - a).norm().min((c.point - a.conj()).norm());
            d < spacing * c.score || d == 0.0
        });
        if crowded || blocked {
            continue;
        }
        chosen.push((c.point, c.score));
        out.push(c.point);
        if width == 1 {
            reals += 1;
        } else {
            out.push(c.point.conj());
        }
    }
    (out.len() == n).then_some(out)
}

/// Parses `"a±bi; c; ..."` target lists. A complex entry written with `±`
/// contributes both members of the pair.
pub fn parse_targets(text: &str) -> Result<TargetSet> {
    let mut out = Vec::new();
    for raw in text.split(';') {
        let item: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        if item.is_empty() {
            continue;
        }
        let bad = || Error::InvalidInput(format!("cannot parse target '{}'", raw.trim()));
        if let Some((re, im)) = item.split_once('±') {
            let im = im.strip_suffix(['i', 'j']).ok_or_else(bad)?;
            let re: f64 = re.parse().map_err(|_| bad())?;
            let im: f64 = if im.is_empty() { 1.0 } else { im.parse().map_err(|_| bad())? };
            out.push(Complex64::new(re, im.abs()));
            out.push(Complex64::new(re, -im.abs()));
            continue;
        }
        out.push(parse_complex(&item).ok_or_else(bad)?);
    }
    TargetSet::new(out)
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return s.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k)
        .last();
    let (re, im) = match split {
        Some(k) => (body[..k].parse().ok()?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse().ok()?,
    };
    Some(Complex64::new(re, im))
}
