//! Exact Gaussian solution of the two-particle Caldeira-Leggett equation.
//!
//! The squeezed initial state is Gaussian and the master equation is
//! quadratic, so the Wigner function stays Gaussian. Its mean and covariance
//! over `(x1, p1, x2, p2)` obey the linear Lyapunov equation
//!
//! ```text
//! Σ' = F Σ + Σ Fᵀ + 2 𝔇
//! ```
//!
//! where, with `m = ħ = 1`, the friction term `-γ(x-y)(∂x-∂y)` becomes the
//! momentum drift `-2γ p`, the decoherence term `-D(x-y)²` becomes momentum
//! diffusion `D`, and the common-bath cross terms add `-2γ p_j` to the drift
//! of `p_i` and a cross diffusion `D` between `p1` and `p2`.
//!
//! From the moments we rebuild the position-space density matrix
//! `ρ(x1, y1; x2, y2)` and read off Bohmian velocities and quantum forces.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;

use crate::closed_form::{ForcePair, VelocityPair};
use crate::error::{Error, Result};
use crate::params::{Model, Scenario};

/// Phase-space index of each coordinate in [`WignerMoments`].
pub const X1: usize = 0;
pub const P1: usize = 1;
pub const X2: usize = 2;
pub const P2: usize = 3;

const POS: [usize; 2] = [X1, X2];
const MOM: [usize; 2] = [P1, P2];

/// Relative convergence target of the step-halving moment integration.
pub const PROPAGATE_TOL: f64 = 1e-10;
/// Largest RK4 step tried first.
const MAX_STEP: f64 = 0.05;
const MAX_STEPS: usize = 1 << 22;
/// Largest accepted condition number of the position covariance.
pub const MAX_CONDITION: f64 = 1e12;

/// First and second moments of the Wigner function, ordered `(x1, p1, x2, p2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerMoments {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
    pub t: f64,
}

fn block(m: &Matrix4<f64>, rows: [usize; 2], cols: [usize; 2]) -> Matrix2<f64> {
    Matrix2::from_fn(|i, j| m[(rows[i], cols[j])])
}

impl WignerMoments {
    /// `Σ_xx`: covariance of `(x1, x2)`.
    pub fn position_cov(&self) -> Matrix2<f64> {
        block(&self.cov, POS, POS)
    }

    /// `Σ_px`: entry `(i, j)` is `Cov(p_i, x_j)`.
    pub fn momentum_position_cov(&self) -> Matrix2<f64> {
        block(&self.cov, MOM, POS)
    }

    pub fn momentum_cov(&self) -> Matrix2<f64> {
        block(&self.cov, MOM, MOM)
    }

    /// `1 / sqrt(det(2Σ))`; equals 1 for a pure state.
    pub fn purity(&self) -> f64 {
        1.0 / (2.0 * self.cov).determinant().sqrt()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cov.cholesky().is_some()
    }

    fn position_block_is_pd(&self) -> bool {
        self.position_cov().cholesky().is_some()
    }
}

/// Moments of the squeezed state
/// `Ψ0 ∝ exp[-μ(x1+x2)²/4 - (x1-x2)²/(4μ)]`.
pub fn initial_moments(mu: f64) -> Result<WignerMoments> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::Parameter(format!("mu must lie in (0, 1], got {mu}")));
    }
    let var = (1.0 / mu + mu) / 4.0;
    let cross = (1.0 / mu - mu) / 4.0;
    let mut cov = Matrix4::zeros();
    cov[(X1, X1)] = var;
    cov[(X2, X2)] = var;
    cov[(P1, P1)] = var;
    cov[(P2, P2)] = var;
    cov[(X1, X2)] = cross;
    cov[(X2, X1)] = cross;
    cov[(P1, P2)] = -cross;
    cov[(P2, P1)] = -cross;
    Ok(WignerMoments { mean: Vector4::zeros(), cov, t: 0.0 })
}

/// Drift matrix `F` and momentum diffusion `𝔇` of the moment equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftDiffusion {
    pub drift: Matrix4<f64>,
    pub diffusion: Matrix4<f64>,
}

pub fn drift_diffusion(model: &Model) -> DriftDiffusion {
    let g = model.params.gamma();
    let d = model.params.diffusion();
    let mut drift = Matrix4::zeros();
    let mut diffusion = Matrix4::zeros();
    drift[(X1, P1)] = 1.0;
    drift[(X2, P2)] = 1.0;
    match model.scenario {
        Scenario::Unitary => {}
        Scenario::DistinctBaths => {
            drift[(P1, P1)] = -2.0 * g;
            drift[(P2, P2)] = -2.0 * g;
            diffusion[(P1, P1)] = d;
            diffusion[(P2, P2)] = d;
        }
        Scenario::CommonBath => {
            for i in MOM {
                for j in MOM {
                    drift[(i, j)] = -2.0 * g;
                    diffusion[(i, j)] = d;
                }
            }
        }
    }
    DriftDiffusion { drift, diffusion }
}

fn rk4_run(m0: &WignerMoments, dd: &DriftDiffusion, duration: f64, steps: usize) -> (Vector4<f64>, Matrix4<f64>) {
    let h = duration / steps as f64;
    let f = &dd.drift;
    let ft = f.transpose();
    let noise = 2.0 * dd.diffusion;
    let rhs = |s: &Matrix4<f64>| f * s + s * ft + noise;
    let mut mean = m0.mean;
    let mut cov = m0.cov;
    for _ in 0..steps {
        let k1 = rhs(&cov);
        let k2 = rhs(&(cov + k1 * (h / 2.0)));
        let k3 = rhs(&(cov + k2 * (h / 2.0)));
        let k4 = rhs(&(cov + k3 * h));
        cov += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);

        let j1 = f * mean;
        let j2 = f * (mean + j1 * (h / 2.0));
        let j3 = f * (mean + j2 * (h / 2.0));
        let j4 = f * (mean + j3 * h);
        mean += (j1 + 2.0 * j2 + 2.0 * j3 + j4) * (h / 6.0);
    }
    (mean, 0.5 * (cov + cov.transpose()))
}

/// Advances `m0` by `duration` with fixed-step RK4, halving the step until two
/// successive results agree to [`PROPAGATE_TOL`] relative to the largest entry.
pub fn propagate(m0: &WignerMoments, dd: &DriftDiffusion, duration: f64) -> Result<WignerMoments> {
    if !(duration >= 0.0) {
        return Err(Error::Parameter(format!("propagation time must be >= 0, got {duration}")));
    }
    if duration == 0.0 {
        return Ok(*m0);
    }
    let mut steps = ((duration / MAX_STEP).ceil() as usize).max(1);
    let mut prev = rk4_run(m0, dd, duration, steps);
    loop {
        steps *= 2;
        if steps > MAX_STEPS {
            return Err(Error::Numerical(format!(
                "moment integration did not converge over t = {duration}"
            )));
        }
        let next = rk4_run(m0, dd, duration, steps);
        let scale = next.1.amax().max(next.0.amax()).max(1.0);
        let diff = (next.1 - prev.1).amax().max((next.0 - prev.0).amax());
        if diff < PROPAGATE_TOL * scale {
            let out = WignerMoments { mean: next.0, cov: next.1, t: m0.t + duration };
            if !out.position_block_is_pd() {
                return Err(Error::Numerical(format!(
                    "position covariance lost positive definiteness at t = {}",
                    out.t
                )));
            }
            return Ok(out);
        }
        prev = next;
    }
}

/// Moments at time `t` for a model, starting from the squeezed state.
pub fn moments_at(model: &Model, t: f64) -> Result<WignerMoments> {
    let m0 = initial_moments(model.mu())?;
    propagate(&m0, &drift_diffusion(model), t)
}

/// Linear velocity field `(v1, v2) = V · (x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityCoeffs(pub Matrix2<f64>);

impl VelocityCoeffs {
    pub fn apply(&self, x1: f64, x2: f64) -> VelocityPair {
        let v = self.0 * Vector2::new(x1, x2);
        VelocityPair { v1: v[0], v2: v[1] }
    }

    /// `∂v1/∂x2`.
    pub fn coupling(&self) -> f64 {
        self.0[(0, 1)]
    }
}

fn condition_number(m: &Matrix2<f64>) -> f64 {
    let eig = m.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Bohmian velocity as the conditional momentum mean given the positions,
/// `V = Σ_px Σ_xx⁻¹` (the family has zero means).
pub fn velocity_coeffs(m: &WignerMoments) -> Result<VelocityCoeffs> {
    let sxx = m.position_cov();
    let cond = condition_number(&sxx);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Numerical(format!(
            "position covariance condition number {cond:e} exceeds {MAX_CONDITION:e} at t = {}",
            m.t
        )));
    }
    let inv = sxx
        .try_inverse()
        .ok_or_else(|| Error::Numerical(format!("singular position covariance at t = {}", m.t)))?;
    Ok(VelocityCoeffs(m.momentum_position_cov() * inv))
}

/// Which particle a force or velocity component refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Particle {
    One,
    Two,
}

/// Position-space density matrix `ρ(z) = exp(-½ zᵀ M z + c)` with
/// `z = (x1, y1, x2, y2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    pub quad: Matrix4<Complex64>,
    pub log_norm: Complex64,
}

/// `z` index of `x_n` and `y_n`.
const ZX: [usize; 2] = [0, 2];
const ZY: [usize; 2] = [1, 3];

impl GaussianKernel {
    pub fn log_eval(&self, z: [f64; 4]) -> Complex64 {
        let zv = Vector4::from(z).map(|v| Complex64::new(v, 0.0));
        let q = (zv.transpose() * self.quad * zv)[(0, 0)];
        -0.5 * q + self.log_norm
    }

    /// `ρ(x1, y1; x2, y2)`.
    pub fn eval(&self, z: [f64; 4]) -> Complex64 {
        self.log_eval(z).exp()
    }

    /// `A = |ρ|`.
    pub fn amplitude(&self, z: [f64; 4]) -> f64 {
        self.log_eval(z).re.exp()
    }

    /// `S = arg ρ` (ħ = 1), unwrapped: the quadratic phase itself.
    pub fn phase(&self, z: [f64; 4]) -> f64 {
        self.log_eval(z).im
    }

    /// Probability density on the diagonal `y_n = x_n`.
    pub fn density(&self, x1: f64, x2: f64) -> f64 {
        self.eval([x1, x1, x2, x2]).re
    }

    /// `Tr ρ`, evaluated from the diagonal restriction of the quadratic form.
    pub fn trace(&self) -> f64 {
        let d = Matrix2::from_fn(|i, j| {
            let (a, b) = (ZX[i], ZX[j]);
            (self.quad[(a, b)] + self.quad[(a, ZY[j])] + self.quad[(ZY[i], b)] + self.quad[(ZY[i], ZY[j])]).re
        });
        self.log_norm.re.exp() * 2.0 * std::f64::consts::PI / d.determinant().sqrt()
    }

    fn amplitude_form(&self) -> Matrix4<f64> {
        self.quad.map(|c| c.re)
    }

    /// `Q = -½ Σ_n (∂²_{x_n} - ∂²_{y_n}) A / A` at an arbitrary point.
    pub fn quantum_potential(&self, z: [f64; 4]) -> f64 {
        let b = self.amplitude_form();
        let bz = b * Vector4::from(z);
        let mut q = 0.0;
        for n in 0..2 {
            let (x, y) = (ZX[n], ZY[n]);
            q += (bz[x] * bz[x] - b[(x, x)]) - (bz[y] * bz[y] - b[(y, y)]);
        }
        -0.5 * q
    }

    /// Matrix `Φ` with `(F1, F2) = Φ · (x1, x2)` on the diagonal.
    pub fn force_coeffs(&self) -> Matrix2<f64> {
        let b = self.amplitude_form();
        // -∂_{x_k} Q = Σ_n [(Bz)_{x_n} B_{x_n, x_k} - (Bz)_{y_n} B_{y_n, x_k}], z on the diagonal
        Matrix2::from_fn(|k, j| {
            let xk = ZX[k];
            (0..2)
                .map(|n| {
                    let (x, y) = (ZX[n], ZY[n]);
                    let dbx = b[(x, ZX[j])] + b[(x, ZY[j])];
                    let dby = b[(y, ZX[j])] + b[(y, ZY[j])];
                    dbx * b[(x, xk)] - dby * b[(y, xk)]
                })
                .sum()
        })
    }

    pub fn forces(&self, x1: f64, x2: f64) -> ForcePair {
        let f = self.force_coeffs() * Vector2::new(x1, x2);
        ForcePair { f1: f[0], f2: f[1] }
    }
}

/// Builds the density-matrix kernel from Gaussian Wigner moments via
/// `ρ(R + r/2, R - r/2) = ∫ W(R, p) e^{i p·r} dp`.
pub fn kernel_from_moments(m: &WignerMoments) -> Result<GaussianKernel> {
    let sxx = m.position_cov();
    let inv = sxx
        .try_inverse()
        .filter(|_| sxx.cholesky().is_some())
        .ok_or_else(|| Error::Numerical(format!("position covariance not positive definite at t = {}", m.t)))?;
    if m.mean.amax() != 0.0 {
        // the family never acquires a mean; shifted kernels are not represented
        return Err(Error::Domain("kernel reconstruction assumes zero-mean moments".into()));
    }
    let k = m.momentum_position_cov() * inv;
    let cond = m.momentum_cov() - k * m.momentum_position_cov().transpose();
    // R = P z, r = Q z
    let mut p = nalgebra::Matrix2x4::zeros();
    let mut q = nalgebra::Matrix2x4::zeros();
    for n in 0..2 {
        p[(n, ZX[n])] = 0.5;
        p[(n, ZY[n])] = 0.5;
        q[(n, ZX[n])] = 1.0;
        q[(n, ZY[n])] = -1.0;
    }
    let re = p.transpose() * inv * p + q.transpose() * cond * q;
    let im = -(q.transpose() * k * p + p.transpose() * k.transpose() * q);
    let quad = Matrix4::from_fn(|i, j| Complex64::new(re[(i, j)], im[(i, j)]));
    let log_norm = Complex64::new(-(2.0 * std::f64::consts::PI * sxx.determinant().sqrt()).ln(), 0.0);
    Ok(GaussianKernel { quad, log_norm })
}

/// `-∂Q/∂x_i` on the diagonal `y_n = x_n`.
pub fn quantum_force(k: &GaussianKernel, particle: Particle, x1: f64, x2: f64) -> f64 {
    let f = k.forces(x1, x2);
    match particle {
        Particle::One => f.f1,
        Particle::Two => f.f2,
    }
}
