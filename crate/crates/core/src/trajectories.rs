//! Bohmian trajectories: integration of the guidance equation, Born-rule
//! sampling of initial conditions and the dynamical consistency checks.

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::closed_form::{
    coupling_common, coupling_sch, distinct_mu1_rate, f_qm_sch, v_common, v_sch, ForcePair, VelocityPair,
};
use crate::error::{Error, Result};
use crate::gaussian_engine::{
    drift_diffusion, initial_moments, kernel_from_moments, moments_at, propagate, velocity_coeffs, VelocityCoeffs,
};
use crate::params::{ConfigPoint, Model, Scenario};

/// Step of the central difference used when a field has no analytic coupling.
pub const COUPLING_STEP: f64 = 1e-5;
/// Agreement required between a run and its half-step rerun in validation mode.
pub const VALIDATION_TOL: f64 = 1e-8;
/// Minimum configuration-space separation of distinct trajectories.
pub const NON_CROSSING_THRESHOLD: f64 = 1e-9;

/// A velocity field `(x1, x2, t) -> (v1, v2)`.
pub trait VelocityField: Sync {
    fn model(&self) -> Model;

    fn velocity(&self, x1: f64, x2: f64, t: f64) -> Result<VelocityPair>;

    /// `∂v1/∂x2` at a point.
    fn coupling(&self, x1: f64, x2: f64, t: f64) -> Result<f64> {
        let h = COUPLING_STEP;
        let up = self.velocity(x1, x2 + h, t)?.v1;
        let down = self.velocity(x1, x2 - h, t)?.v1;
        Ok((up - down) / (2.0 * h))
    }
}

/// Quantum force `-∇Q` on the diagonal.
pub trait ForceField: Sync {
    fn force(&self, x1: f64, x2: f64, t: f64) -> Result<ForcePair>;
}

/// Closed-form unitary field.
#[derive(Debug, Clone, Copy)]
pub struct SchField {
    mu: f64,
}

impl SchField {
    pub fn new(mu: f64) -> Result<Self> {
        Model::unitary(mu)?;
        Ok(Self { mu })
    }
}

impl VelocityField for SchField {
    fn model(&self) -> Model {
        Model::unitary(self.mu).expect("validated in constructor")
    }

    fn velocity(&self, x1: f64, x2: f64, t: f64) -> Result<VelocityPair> {
        Ok(v_sch(ConfigPoint::new(x1, x2, t), self.mu))
    }

    fn coupling(&self, _x1: f64, _x2: f64, t: f64) -> Result<f64> {
        Ok(coupling_sch(t, self.mu))
    }
}

impl ForceField for SchField {
    fn force(&self, x1: f64, x2: f64, t: f64) -> Result<ForcePair> {
        Ok(f_qm_sch(ConfigPoint::new(x1, x2, t), self.mu))
    }
}

/// Closed-form common-bath field.
#[derive(Debug, Clone, Copy)]
pub struct CommonField {
    model: Model,
}

impl CommonField {
    pub fn new(model: Model) -> Result<Self> {
        if model.scenario != Scenario::CommonBath || model.is_closed() {
            return Err(Error::Domain("CommonField needs a dissipative common-bath model".into()));
        }
        Ok(Self { model })
    }
}

impl VelocityField for CommonField {
    fn model(&self) -> Model {
        self.model
    }

    fn velocity(&self, x1: f64, x2: f64, t: f64) -> Result<VelocityPair> {
        v_common(ConfigPoint::new(x1, x2, t), &self.model.params)
    }

    fn coupling(&self, _x1: f64, _x2: f64, t: f64) -> Result<f64> {
        coupling_common(t, &self.model.params)
    }
}

/// Closed-form distinct-bath field of the unsqueezed state.
#[derive(Debug, Clone, Copy)]
pub struct DistinctMu1Field {
    model: Model,
}

impl DistinctMu1Field {
    pub fn new(model: Model) -> Result<Self> {
        if model.scenario != Scenario::DistinctBaths || model.is_closed() || model.mu() != 1.0 {
            return Err(Error::Domain("DistinctMu1Field needs a dissipative distinct-bath model with mu = 1".into()));
        }
        Ok(Self { model })
    }
}

impl VelocityField for DistinctMu1Field {
    fn model(&self) -> Model {
        self.model
    }

    fn velocity(&self, x1: f64, x2: f64, t: f64) -> Result<VelocityPair> {
        let k = distinct_mu1_rate(t, &self.model.params)?;
        Ok(VelocityPair { v1: k * x1, v2: k * x2 })
    }

    fn coupling(&self, _x1: f64, _x2: f64, _t: f64) -> Result<f64> {
        Ok(0.0)
    }
}

#[derive(Debug, Clone)]
struct EngineTable {
    step: f64,
    velocity: Vec<Matrix2<f64>>,
    force: Vec<Matrix2<f64>>,
}

/// Field and force reconstructed from the Gaussian moment engine.
///
/// A tabulated field holds the linear coefficients on the grid `k·step`;
/// requests off the grid fall back to a fresh propagation from `t = 0`.
#[derive(Debug, Clone)]
pub struct EngineField {
    model: Model,
    table: Option<EngineTable>,
}

impl EngineField {
    pub fn new(model: Model) -> Self {
        Self { model, table: None }
    }

    /// Tabulates on the half-step grid an RK4 run with step `dt` visits.
    pub fn tabulated(model: Model, t_end: f64, dt: f64) -> Result<Self> {
        check_grid(t_end, dt)?;
        let step = dt / 2.0;
        let n = (t_end / step).ceil() as usize + 1;
        let dd = drift_diffusion(&model);
        let mut m = initial_moments(model.mu())?;
        let mut velocity = Vec::with_capacity(n + 1);
        let mut force = Vec::with_capacity(n + 1);
        for k in 0..=n {
            if k > 0 {
                let next_t = k as f64 * step;
                m = propagate(&m, &dd, next_t - m.t)?;
                m.t = next_t;
            }
            velocity.push(velocity_coeffs(&m)?.0);
            force.push(kernel_from_moments(&m)?.force_coeffs());
        }
        Ok(Self { model, table: Some(EngineTable { step, velocity, force }) })
    }

    fn lookup(&self, t: f64) -> Option<(Matrix2<f64>, Matrix2<f64>)> {
        let table = self.table.as_ref()?;
        let k = (t / table.step).round();
        if k < 0.0 || (t - k * table.step).abs() > 1e-9 * table.step {
            return None;
        }
        let k = k as usize;
        Some((*table.velocity.get(k)?, *table.force.get(k)?))
    }

    /// Velocity coefficients `V` with `(v1, v2) = V · (x1, x2)`.
    pub fn velocity_coeffs(&self, t: f64) -> Result<VelocityCoeffs> {
        match self.lookup(t) {
            Some((v, _)) => Ok(VelocityCoeffs(v)),
            None => velocity_coeffs(&moments_at(&self.model, t)?),
        }
    }

    pub fn force_coeffs(&self, t: f64) -> Result<Matrix2<f64>> {
        match self.lookup(t) {
            Some((_, f)) => Ok(f),
            None => Ok(kernel_from_moments(&moments_at(&self.model, t)?)?.force_coeffs()),
        }
    }
}

impl VelocityField for EngineField {
    fn model(&self) -> Model {
        self.model
    }

    fn velocity(&self, x1: f64, x2: f64, t: f64) -> Result<VelocityPair> {
        Ok(self.velocity_coeffs(t)?.apply(x1, x2))
    }

    fn coupling(&self, _x1: f64, _x2: f64, t: f64) -> Result<f64> {
        Ok(self.velocity_coeffs(t)?.coupling())
    }
}

impl ForceField for EngineField {
    fn force(&self, x1: f64, x2: f64, t: f64) -> Result<ForcePair> {
        let f = self.force_coeffs(t)?;
        Ok(ForcePair { f1: f[(0, 0)] * x1 + f[(0, 1)] * x2, f2: f[(1, 0)] * x1 + f[(1, 1)] * x2 })
    }
}

/// Picks the closed form when one exists and the engine otherwise. The
/// engine is tabulated for an RK4 run on `[0, t_end]` with step `dt`.
pub fn velocity_field(model: &Model, t_end: f64, dt: f64) -> Result<Box<dyn VelocityField>> {
    if model.is_closed() {
        return Ok(Box::new(SchField::new(model.mu())?));
    }
    Ok(match model.scenario {
        Scenario::Unitary => Box::new(SchField::new(model.mu())?),
        Scenario::CommonBath => Box::new(CommonField::new(*model)?),
        Scenario::DistinctBaths if model.mu() == 1.0 => Box::new(DistinctMu1Field::new(*model)?),
        Scenario::DistinctBaths => Box::new(EngineField::tabulated(*model, t_end, dt)?),
    })
}

/// The exact quantum force of a model: closed form when unitary, engine otherwise.
pub fn force_field(model: &Model, t_end: f64, dt: f64) -> Result<Box<dyn ForceField>> {
    if model.is_closed() {
        return Ok(Box::new(SchField::new(model.mu())?));
    }
    Ok(Box::new(EngineField::tabulated(*model, t_end, dt)?))
}

/// One integral curve of the guidance equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub velocities: Vec<VelocityPair>,
    pub x10: f64,
    pub x20: f64,
    pub model: Model,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_grid(t_end: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Parameter(format!("t_end must be >= 0, got {t_end}")));
    }
    Ok(())
}

/// Time grid `0, dt, 2dt, …` ending exactly at `t_end`; the last step is
/// shortened when `t_end` is not a multiple of `dt`.
pub fn time_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    check_grid(t_end, dt)?;
    let n = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    times.push(t_end);
    Ok(times)
}

/// Fixed-step classical RK4 from `(x10, x20)` at `t = 0` to `t_end`.
pub fn integrate(field: &dyn VelocityField, x10: f64, x20: f64, t_end: f64, dt: f64) -> Result<Trajectory> {
    let times = time_grid(t_end, dt)?;
    let mut points = Vec::with_capacity(times.len());
    let mut velocities = Vec::with_capacity(times.len());
    let (mut x1, mut x2) = (x10, x20);
    points.push((x1, x2));
    velocities.push(field.velocity(x1, x2, 0.0)?);
    for w in times.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let k1 = *velocities.last().expect("seeded above");
        let k2 = field.velocity(x1 + 0.5 * h * k1.v1, x2 + 0.5 * h * k1.v2, t + 0.5 * h)?;
        let k3 = field.velocity(x1 + 0.5 * h * k2.v1, x2 + 0.5 * h * k2.v2, t + 0.5 * h)?;
        let k4 = field.velocity(x1 + h * k3.v1, x2 + h * k3.v2, w[1])?;
        x1 += h / 6.0 * (k1.v1 + 2.0 * k2.v1 + 2.0 * k3.v1 + k4.v1);
        x2 += h / 6.0 * (k1.v2 + 2.0 * k2.v2 + 2.0 * k3.v2 + k4.v2);
        points.push((x1, x2));
        velocities.push(field.velocity(x1, x2, w[1])?);
    }
    Ok(Trajectory { times, points, velocities, x10, x20, model: field.model() })
}

/// [`integrate`], rerun with `dt/2`; fails unless the two runs agree to
/// [`VALIDATION_TOL`] at every shared grid time.
pub fn integrate_validated(
    field: &dyn VelocityField,
    x10: f64,
    x20: f64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    let coarse = integrate(field, x10, x20, t_end, dt)?;
    let fine = integrate(field, x10, x20, t_end, dt / 2.0)?;
    let mut worst = 0.0f64;
    for (k, (&t, p)) in coarse.times.iter().zip(&coarse.points).enumerate() {
        // the fine grid hits every coarse time at index 2k, except a shortened final step
        let j = if k + 1 == coarse.len() { fine.len() - 1 } else { 2 * k };
        debug_assert!((fine.times[j] - t).abs() <= 1e-12 * t.max(1.0));
        let q = fine.points[j];
        worst = worst.max((p.0 - q.0).abs()).max((p.1 - q.1).abs());
    }
    if worst >= VALIDATION_TOL {
        return Err(Error::Numerical(format!(
            "step-halving check failed: runs with dt = {dt} and dt/2 differ by {worst:e}"
        )));
    }
    Ok(coarse)
}

/// Integrates many initial points in parallel; output order follows input order.
pub fn integrate_many(
    field: &dyn VelocityField,
    initial: &[(f64, f64)],
    t_end: f64,
    dt: f64,
) -> Result<Vec<Trajectory>> {
    initial.par_iter().map(|&(a, b)| integrate(field, a, b, t_end, dt)).collect()
}

/// Born-rule initial positions.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialEnsemble {
    pub pairs: Vec<(f64, f64)>,
    pub seed: u64,
    pub mu: f64,
}

/// Draws `n` pairs from `|Ψ0|²` using ChaCha8 seeded with `seed` and the
/// exact Cholesky factor of the initial position covariance.
pub fn sample_initial(mu: f64, n: usize, seed: u64) -> Result<InitialEnsemble> {
    if n == 0 {
        return Err(Error::Parameter("ensemble size must be >= 1".into()));
    }
    let cov = initial_moments(mu)?.position_cov();
    let a = cov[(0, 0)].sqrt();
    let b = cov[(1, 0)] / a;
    let c = (cov[(1, 1)] - b * b).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..n)
        .map(|_| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            (a * z1, b * z1 + c * z2)
        })
        .collect();
    Ok(InitialEnsemble { pairs, seed, mu })
}

/// Residual of the Newtonian-like equation of motion along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResidual {
    /// `(t, r1, r2)` at interior grid times.
    pub series: Vec<(f64, f64, f64)>,
    pub max_abs: f64,
}

/// Compares `dv/dt` (central differences along the trajectory) with
/// `F_qm - 2γ v_i`, plus `-2γ v_j` for a common bath.
pub fn newton_residual(traj: &Trajectory, force: &dyn ForceField) -> Result<NewtonResidual> {
    let g = traj.model.params.gamma();
    let common = traj.model.scenario == Scenario::CommonBath;
    let mut series = Vec::with_capacity(traj.len().saturating_sub(2));
    let mut max_abs = 0.0f64;
    for k in 1..traj.len().saturating_sub(1) {
        let span = traj.times[k + 1] - traj.times[k - 1];
        let (prev, next, v) = (traj.velocities[k - 1], traj.velocities[k + 1], traj.velocities[k]);
        let a1 = (next.v1 - prev.v1) / span;
        let a2 = (next.v2 - prev.v2) / span;
        let (x1, x2) = traj.points[k];
        let f = force.force(x1, x2, traj.times[k])?;
        let mut rhs1 = f.f1 - 2.0 * g * v.v1;
        let mut rhs2 = f.f2 - 2.0 * g * v.v2;
        if common {
            rhs1 -= 2.0 * g * v.v2;
            rhs2 -= 2.0 * g * v.v1;
        }
        let (r1, r2) = (a1 - rhs1, a2 - rhs2);
        max_abs = max_abs.max(r1.abs()).max(r2.abs());
        series.push((traj.times[k], r1, r2));
    }
    Ok(NewtonResidual { series, max_abs })
}

/// A pair of distinct trajectories closer than the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub first: usize,
    pub second: usize,
    pub t: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonCrossingReport {
    pub violations: Vec<Crossing>,
    /// Smallest separation seen between distinct trajectories.
    pub min_distance: f64,
}

impl NonCrossingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that distinct trajectories never meet in `(X1, X2)` configuration
/// space. Coincidence of a single coordinate is not a crossing.
pub fn non_crossing_check(trajs: &[Trajectory]) -> Result<NonCrossingReport> {
    if let Some(first) = trajs.first() {
        if trajs.iter().any(|t| t.times != first.times) {
            return Err(Error::Parameter("non-crossing check needs a shared time grid".into()));
        }
    }
    let mut violations = Vec::new();
    let mut min_distance = f64::INFINITY;
    for i in 0..trajs.len() {
        for j in i + 1..trajs.len() {
            let (a, b) = (&trajs[i], &trajs[j]);
            if a.x10 == b.x10 && a.x20 == b.x20 {
                continue;
            }
            let mut closest = (f64::INFINITY, 0.0);
            for (k, (p, q)) in a.points.iter().zip(&b.points).enumerate() {
                let d = (p.0 - q.0).hypot(p.1 - q.1);
                if d < closest.0 {
                    closest = (d, a.times[k]);
                }
            }
            min_distance = min_distance.min(closest.0);
            if closest.0 <= NON_CROSSING_THRESHOLD {
                violations.push(Crossing { first: i, second: j, t: closest.1, distance: closest.0 });
            }
        }
    }
    Ok(NonCrossingReport { violations, min_distance })
}
