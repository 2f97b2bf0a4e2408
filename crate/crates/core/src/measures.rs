//! The nonlocality measure `η(t)` and analytics of its time curve.
//!
//! `η_traj` is `|∂v1/∂x2|` at a trajectory point; `η` is its Born-rule
//! average. All fields of this state family are linear in the positions, so
//! the integrand is position-free and the average is exact.

use rayon::prelude::*;

use crate::closed_form::{eta_common, eta_distinct, eta_sch};
use crate::error::{Error, Result, Side};
use crate::gaussian_engine::{drift_diffusion, initial_moments, moments_at, propagate, velocity_coeffs};
use crate::params::{Model, Scenario};
use crate::search::{bisect, golden_max};
use crate::trajectories::{integrate, sample_initial, velocity_field, VelocityField};

/// Locating tolerance in `t` for peaks and half-maximum crossings.
pub const LOCATE_TOL: f64 = 1e-8;
/// Revivals must stand out by this fraction of the global peak.
pub const DEFAULT_REVIVAL_PROMINENCE: f64 = 0.02;
/// Step used to carry a trajectory to the probe time in [`eta_traj`].
pub const TRAJ_DT: f64 = 1e-2;

/// `η` from the closed form of the model's scenario.
pub fn eta_closed_form(model: &Model, t: f64) -> Result<f64> {
    if model.is_closed() {
        return Ok(eta_sch(t, model.mu()));
    }
    match model.scenario {
        Scenario::Unitary => Ok(eta_sch(t, model.mu())),
        Scenario::CommonBath => eta_common(t, &model.params),
        Scenario::DistinctBaths => eta_distinct(t, &model.params),
    }
}

/// `η` from the Gaussian moment engine.
pub fn eta_engine(model: &Model, t: f64) -> Result<f64> {
    Ok(velocity_coeffs(&moments_at(model, t)?)?.coupling().abs())
}

fn eta_on_field(field: &dyn VelocityField, t: f64, x10: f64, x20: f64) -> Result<f64> {
    let tr = integrate(field, x10, x20, t, TRAJ_DT)?;
    let (x1, x2) = *tr.points.last().expect("trajectory has its initial point");
    Ok(field.coupling(x1, x2, t)?.abs())
}

/// `|∂v1/∂x2|` at `X(t; x10, x20)`.
pub fn eta_traj(model: &Model, t: f64, x10: f64, x20: f64) -> Result<f64> {
    let field = velocity_field(model, t, TRAJ_DT)?;
    eta_on_field(field.as_ref(), t, x10, x20)
}

/// Monte Carlo average of [`eta_traj`] over Born-rule initial points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn eta_ensemble(model: &Model, t: f64, n: usize, seed: u64) -> Result<EnsembleEstimate> {
    if n < 2 {
        return Err(Error::Parameter(format!("ensemble size must be >= 2, got {n}")));
    }
    let ens = sample_initial(model.mu(), n, seed)?;
    let field = velocity_field(model, t, TRAJ_DT)?;
    let values: Vec<f64> = ens
        .pairs
        .par_iter()
        .map(|&(a, b)| eta_on_field(field.as_ref(), t, a, b))
        .collect::<Result<_>>()?;
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(EnsembleEstimate { mean, stderr: (var / nf).sqrt(), n })
}

/// What a curve's values are evaluated from between grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSource {
    ClosedForm(Model),
    Engine(Model),
    /// Linear interpolation of the stored samples.
    Samples,
}

/// `η` sampled on an ascending time grid, with the callable it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub source: EtaSource,
}

fn uniform_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    crate::trajectories::time_grid(t_end, dt)
}

impl EtaCurve {
    pub fn closed_form(model: &Model, t_end: f64, dt: f64) -> Result<Self> {
        let times = uniform_grid(t_end, dt)?;
        let values = times.par_iter().map(|&t| eta_closed_form(model, t)).collect::<Result<_>>()?;
        Ok(Self { times, values, source: EtaSource::ClosedForm(*model) })
    }

    /// Chains the moment propagation along the grid.
    pub fn engine(model: &Model, t_end: f64, dt: f64) -> Result<Self> {
        let times = uniform_grid(t_end, dt)?;
        let dd = drift_diffusion(model);
        let mut m = initial_moments(model.mu())?;
        let mut values = Vec::with_capacity(times.len());
        for &t in &times {
            if t > m.t {
                m = propagate(&m, &dd, t - m.t)?;
                m.t = t;
            }
            values.push(velocity_coeffs(&m)?.coupling().abs());
        }
        Ok(Self { times, values, source: EtaSource::Engine(*model) })
    }

    pub fn from_samples(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::Parameter("curve needs equally many times and values, at least one".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("curve times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter("curve values must be finite and >= 0".into()));
        }
        Ok(Self { times, values, source: EtaSource::Samples })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn model(&self) -> Option<Model> {
        match self.source {
            EtaSource::ClosedForm(m) | EtaSource::Engine(m) => Some(m),
            EtaSource::Samples => None,
        }
    }

    /// The underlying callable at any `t` inside the grid.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self.source {
            EtaSource::ClosedForm(m) => eta_closed_form(&m, t),
            EtaSource::Engine(m) => eta_engine(&m, t),
            EtaSource::Samples => Ok(self.interpolate(t)),
        }
    }

    fn interpolate(&self, t: f64) -> f64 {
        let (ts, vs) = (&self.times, &self.values);
        if t <= ts[0] {
            return vs[0];
        }
        let k = ts.partition_point(|&s| s <= t);
        if k >= ts.len() {
            return vs[vs.len() - 1];
        }
        let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
        vs[k - 1] + w * (vs[k] - vs[k - 1])
    }

    fn argmax(&self) -> usize {
        // first index of the maximum, so plateaus resolve to their start
        self.values
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > self.values[best] { i } else { best })
    }

    pub fn analyze(&self, prominence: f64) -> Result<CurveAnalytics> {
        Ok(CurveAnalytics {
            peak: find_peak(self)?,
            fwhm: fwhm(self)?,
            revivals: find_revivals(self, prominence)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub t: f64,
    pub value: f64,
}

fn refine_max(curve: &EtaCurve, i: usize) -> Result<Peak> {
    let (a, b) = (curve.times[i - 1], curve.times[i + 1]);
    let (t, value) = golden_max(|t| curve.eval(t), a, b, LOCATE_TOL)?;
    // the grid point wins if the callable is flat or kinked there
    if value >= curve.values[i] {
        Ok(Peak { t, value })
    } else {
        Ok(Peak { t: curve.times[i], value: curve.values[i] })
    }
}

/// Global maximum, refined by golden section on the underlying callable.
pub fn find_peak(curve: &EtaCurve) -> Result<Peak> {
    if curve.len() < 3 {
        return Err(Error::NoPeak(format!("curve has {} points, need at least 3", curve.len())));
    }
    let i = curve.argmax();
    if i == 0 || i + 1 == curve.len() || curve.values[i] <= 0.0 {
        return Err(Error::NoPeak(format!(
            "maximum {:e} sits at the window boundary t = {}",
            curve.values[i], curve.times[i]
        )));
    }
    refine_max(curve, i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fwhm {
    pub peak: Peak,
    pub t_left: f64,
    pub t_right: f64,
    pub width: f64,
}

/// Full width at half maximum of the global peak.
pub fn fwhm(curve: &EtaCurve) -> Result<Fwhm> {
    let peak = find_peak(curve)?;
    let half = 0.5 * peak.value;
    let i = curve.argmax();
    let below = |k: &usize| curve.values[*k] < half;
    let left = (0..i).rev().find(below).ok_or(Error::Window { side: Side::Left, t_end: curve.t_end() })?;
    let right = (i + 1..curve.len()).find(below).ok_or(Error::Window { side: Side::Right, t_end: curve.t_end() })?;
    let f = |t: f64| Ok(curve.eval(t)? - half);
    let t_left = bisect(f, curve.times[left], curve.times[left + 1], LOCATE_TOL)?;
    let t_right = bisect(f, curve.times[right - 1], curve.times[right], LOCATE_TOL)?;
    Ok(Fwhm { peak, t_left, t_right, width: t_right - t_left })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Revival {
    pub t: f64,
    pub value: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RevivalReport {
    pub revivals: Vec<Revival>,
}

impl RevivalReport {
    pub fn len(&self) -> usize {
        self.revivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.revivals.is_empty()
    }
}

/// Topographic prominence of the grid maximum at `i`.
fn prominence(values: &[f64], i: usize) -> f64 {
    let h = values[i];
    let side_base = |range: &mut dyn Iterator<Item = usize>| {
        let mut base = h;
        for k in range {
            if values[k] > h {
                break;
            }
            base = base.min(values[k]);
        }
        base
    };
    let left = side_base(&mut (0..i).rev());
    let right = side_base(&mut (i + 1..values.len()));
    h - left.max(right)
}

/// Local maxima after the global peak whose prominence exceeds
/// `threshold × peak value`.
pub fn find_revivals(curve: &EtaCurve, threshold: f64) -> Result<RevivalReport> {
    let first = match find_peak(curve) {
        Ok(_) => curve.argmax(),
        Err(Error::NoPeak(_)) => return Ok(RevivalReport::default()),
        Err(e) => return Err(e),
    };
    let v = &curve.values;
    let cut = threshold * v[first];
    let mut revivals = Vec::new();
    for i in first + 1..v.len().saturating_sub(1) {
        if !(v[i] > v[i - 1] && v[i] >= v[i + 1]) {
            continue;
        }
        let p = prominence(v, i);
        if p > cut {
            let peak = refine_max(curve, i)?;
            revivals.push(Revival { t: peak.t, value: peak.value, prominence: p + (peak.value - v[i]) });
        }
    }
    Ok(RevivalReport { revivals })
}

/// How far a curve keeps falling after its global peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    /// Last grid time of the uninterrupted descent from the peak.
    pub monotone_until: f64,
    /// First grid time at which the curve drops to `zero_tol` or below, if any.
    pub first_zero: Option<f64>,
}

pub fn decay_report(curve: &EtaCurve, zero_tol: f64) -> Result<DecayReport> {
    find_peak(curve)?;
    let i = curve.argmax();
    let v = &curve.values;
    let mut end = i;
    while end + 1 < v.len() && v[end + 1] <= v[end] {
        end += 1;
    }
    let first_zero = (i..v.len()).find(|&k| v[k] <= zero_tol).map(|k| curve.times[k]);
    Ok(DecayReport { monotone_until: curve.times[end], first_zero })
}

/// Peak, width and revivals of one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveAnalytics {
    pub peak: Peak,
    pub fwhm: Fwhm,
    pub revivals: RevivalReport,
}
