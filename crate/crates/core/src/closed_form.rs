//! Analytic velocity fields, trajectories, quantum potential and forces, and
//! the nonlocality measure for the squeezed two-particle Gaussian state.
//!
//! Dissipative expressions carry growing exponentials `e^{4γt}`, `e^{8γt}`.
//! They are evaluated with the dominant exponential divided out of numerator
//! and denominator, so only decaying factors `e^{-2γt}`, `e^{-4γt}`, ... appear.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{ConfigPoint, PhysParams};

/// Denominators smaller than this in magnitude are reported, not divided by.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityPair {
    pub v1: f64,
    pub v2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForcePair {
    pub f1: f64,
    pub f2: f64,
}

fn checked_div(num: f64, den: f64, what: &str) -> Result<f64> {
    if !(den.abs() >= UNDERFLOW_THRESHOLD) {
        return Err(Error::Numerical(format!("{what}: denominator {den:e} underflows")));
    }
    Ok(num / den)
}

fn require_dissipative(params: &PhysParams, what: &str) -> Result<()> {
    if params.gamma() > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} needs gamma > 0; use the Schrödinger expression")))
    }
}

// ---------------------------------------------------------------------------
// Unitary evolution
// ---------------------------------------------------------------------------

/// Time-evolved two-particle wavefunction under free Schrödinger evolution.
pub fn psi_sch(p: ConfigPoint, mu: f64) -> Complex64 {
    let ConfigPoint { x1, x2, t } = p;
    let i = Complex64::i();
    let pre_den = PI * (mu + i * (mu * mu + 1.0) * t - mu * t * t);
    let prefactor = (Complex64::new(mu, 0.0) / pre_den).sqrt();
    let s = x1 + x2;
    let d = x1 - x2;
    let num = 2.0 * i * mu * t * (x1 * x1 + x2 * x2) + mu * mu * s * s + d * d;
    let den = 4.0 * (t - i * mu) * (mu * t - i);
    prefactor * (num / den).exp()
}

fn v1_sch(x1: f64, x2: f64, t: f64, mu: f64) -> f64 {
    let mu2 = mu * mu;
    t * (2.0 * mu2 * t * t * x1 + mu2 * mu2 * (x1 + x2) + x1 - x2)
        / (2.0 * (t * t + mu2) * (mu2 * t * t + 1.0))
}

pub fn v_sch(p: ConfigPoint, mu: f64) -> VelocityPair {
    VelocityPair { v1: v1_sch(p.x1, p.x2, p.t, mu), v2: v1_sch(p.x2, p.x1, p.t, mu) }
}

fn x1_sch(t: f64, a: f64, b: f64, mu: f64) -> f64 {
    ((t * t + mu * mu).sqrt() * (a - b) + mu * (mu * mu * t * t + 1.0).sqrt() * (a + b)) / (2.0 * mu)
}

/// Closed-form Bohmian trajectory `(X1, X2)` from initial positions `(x10, x20)`.
pub fn traj_sch(t: f64, x10: f64, x20: f64, mu: f64) -> (f64, f64) {
    if t == 0.0 {
        return (x10, x20);
    }
    (x1_sch(t, x10, x20, mu), x1_sch(t, x20, x10, mu))
}

fn v1_sch_along(t: f64, a: f64, b: f64, mu: f64) -> f64 {
    t / (2.0 * mu)
        * ((a - b) / (t * t + mu * mu).sqrt() + mu.powi(3) * (a + b) / (1.0 + mu * mu * t * t).sqrt())
}

/// Velocities along the trajectory labelled by its initial positions.
pub fn v_sch_along(t: f64, x10: f64, x20: f64, mu: f64) -> VelocityPair {
    VelocityPair { v1: v1_sch_along(t, x10, x20, mu), v2: v1_sch_along(t, x20, x10, mu) }
}

/// Quantum potential of the pure evolved state.
pub fn q_sch(p: ConfigPoint, mu: f64) -> f64 {
    let ConfigPoint { x1, x2, t } = p;
    let mu2 = mu * mu;
    let a = mu2 * t * t + 1.0;
    let b = mu2 + t * t;
    let s = x1 + x2;
    let d = x1 - x2;
    0.25 * (2.0 * mu * (1.0 / a + 1.0 / b) - mu2 * (s * s / (a * a) + d * d / (b * b)))
}

fn f1_sch(x1: f64, x2: f64, t: f64, mu: f64) -> f64 {
    let mu2 = mu * mu;
    let a = mu2 * t * t + 1.0;
    let b = mu2 + t * t;
    0.5 * mu2 * ((x1 - x2) / (b * b) + (x1 + x2) / (a * a))
}

pub fn f_qm_sch(p: ConfigPoint, mu: f64) -> ForcePair {
    ForcePair { f1: f1_sch(p.x1, p.x2, p.t, mu), f2: f1_sch(p.x2, p.x1, p.t, mu) }
}

fn f1_sch_along(t: f64, a: f64, b: f64, mu: f64) -> f64 {
    0.5 * mu
        * ((a - b) / (t * t + mu * mu).powf(1.5) + mu * (a + b) / (1.0 + mu * mu * t * t).powf(1.5))
}

pub fn f_qm_sch_along(t: f64, x10: f64, x20: f64, mu: f64) -> ForcePair {
    ForcePair { f1: f1_sch_along(t, x10, x20, mu), f2: f1_sch_along(t, x20, x10, mu) }
}

/// `∂v1/∂x2` of the Schrödinger velocity field (position independent).
pub fn coupling_sch(t: f64, mu: f64) -> f64 {
    let mu2 = mu * mu;
    t * (mu2 * mu2 - 1.0) / (2.0 * (t * t + mu2) * (mu2 * t * t + 1.0))
}

pub fn eta_sch(t: f64, mu: f64) -> f64 {
    let mu2 = mu * mu;
    (1.0 - mu2 * mu2) * t / (2.0 * (1.0 + mu2 * t * t) * (t * t + mu2))
}

/// Location and height of the maximum of [`eta_sch`].
pub fn eta_sch_peak(mu: f64) -> Result<(f64, f64)> {
    if mu == 1.0 {
        return Err(Error::Degenerate("eta_sch vanishes identically at mu = 1".into()));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Parameter(format!("mu must lie in (0, 1), got {mu}")));
    }
    let mu4 = mu.powi(4);
    let r = (mu4 * mu4 + 14.0 * mu4 + 1.0).sqrt();
    let k = -mu4 + r - 1.0;
    let t_max = (k / (6.0 * mu * mu)).sqrt();
    let eta_max = -3.0 * 6f64.sqrt() * mu * (mu4 - 1.0) * k.sqrt()
        / ((-mu4 + r + 5.0) * (5.0 * mu4 + r - 1.0));
    Ok((t_max, eta_max))
}

// ---------------------------------------------------------------------------
// Common bath
// ---------------------------------------------------------------------------
//
// The published common-bath expressions are written in e^{4γt} and e^{8γt}.
// After dividing by e^{8γt} and expanding e^{-4γt} = 1 - e, the O(γ) parts of
// numerator and denominator cancel exactly; what remains is evaluated here so
// the Schrödinger limit γ → 0 keeps full precision. The tests compare against
// a verbatim transcription.

/// `x - (1 - e^{-x})`, accurate for small `x`.
fn expm1_residual(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // Σ_{n≥2} (-x)^n / n!
        let mut term = x * x / 2.0;
        let mut sum = 0.0;
        for n in 3..30 {
            sum += term;
            term *= -x / n as f64;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        x + (-x).exp_m1()
    }
}

/// Denominator bracket shared by the common-bath velocity and η, over e^{8γt}.
fn common_bracket(t: f64, g: f64, d: f64, mu: f64) -> f64 {
    let e = -(-4.0 * g * t).exp_m1();
    16.0 * g.powi(3) + 2.0 * d * mu * expm1_residual(4.0 * g * t) + mu * (g * mu - d) * e * e
}

fn v1_common(x1: f64, x2: f64, t: f64, params: &PhysParams) -> Result<f64> {
    let (g, d, mu) = (params.gamma(), params.diffusion(), params.mu());
    let e = -(-4.0 * g * t).exp_m1();
    let r = expm1_residual(4.0 * g * t);
    let s = x1 + x2;
    let dd = x1 - x2;
    let w = t * t + mu * mu;
    let f = 16.0 * g.powi(3) * t * dd
        + 2.0 * d * mu * t * dd * r
        + 4.0 * g * g * mu * mu * e * w * s
        + mu * (d - g * mu) * e * e * (4.0 * g * w * s - t * dd);
    let den = 2.0 * w * common_bracket(t, g, d, mu);
    checked_div(f, den, "common-bath velocity")
}

/// Velocity field with both particles coupled to one bath.
pub fn v_common(p: ConfigPoint, params: &PhysParams) -> Result<VelocityPair> {
    require_dissipative(params, "v_common")?;
    Ok(VelocityPair { v1: v1_common(p.x1, p.x2, p.t, params)?, v2: v1_common(p.x2, p.x1, p.t, params)? })
}

/// `∂v1/∂x2` of the common-bath field.
pub fn coupling_common(t: f64, params: &PhysParams) -> Result<f64> {
    require_dissipative(params, "coupling_common")?;
    v1_common(0.0, 1.0, t, params)
}

/// Quantum force to first order in `γ` at fixed temperature.
pub fn f_qm_common_first_order(p: ConfigPoint, params: &PhysParams) -> ForcePair {
    let (g, temp, mu) = (params.gamma(), params.temperature(), params.mu());
    let sch = f_qm_sch(p, mu);
    let t = p.t;
    let mt2 = mu * mu * t * t;
    let bracket = -mu + 2.0 * (mt2 * mt2 + 2.0 * mt2 + 3.0) / 3.0 * temp;
    let corr = 4.0 * mu * (p.x1 + p.x2) * t / (mt2 + 1.0).powi(3) * bracket * g;
    // the correction depends on x1 + x2 only, so it is the same for both particles
    ForcePair { f1: sch.f1 + corr, f2: sch.f2 + corr }
}

/// Nonlocality measure for a common bath.
///
/// The numerator `g(t)` equals `2γ` times the velocity numerator at
/// `(x1, x2) = (0, 1)`, so `η^c = |∂v1/∂x2|`.
pub fn eta_common(t: f64, params: &PhysParams) -> Result<f64> {
    Ok(coupling_common(t, params)?.abs())
}

// ---------------------------------------------------------------------------
// Distinct baths
// ---------------------------------------------------------------------------

/// Velocity of either particle for the unsqueezed state (`μ = 1`) with
/// independent baths; it depends on that particle's own position only.
pub fn v_distinct_mu1(x: f64, t: f64, params: &PhysParams) -> Result<f64> {
    Ok(distinct_mu1_rate(t, params)? * x)
}

/// Slope `v/x` of [`v_distinct_mu1`].
pub fn distinct_mu1_rate(t: f64, params: &PhysParams) -> Result<f64> {
    if params.mu() != 1.0 {
        return Err(Error::Domain(format!(
            "closed-form distinct-bath velocity is only available at mu = 1 (got {})",
            params.mu()
        )));
    }
    require_dissipative(params, "v_distinct_mu1")?;
    let (g, d) = (params.gamma(), params.diffusion());
    let em = -(-2.0 * g * t).exp_m1(); // 1 - e^{-2γt}
    let num = 2.0 * g * em * (d * em + g * (1.0 - em));
    let den = d * (2.0 * expm1_residual(2.0 * g * t) - em * em) + g * (em * em + 4.0 * g * g);
    checked_div(num, den, "distinct-bath velocity")
}

/// Nonlocality measure for distinct baths (over e^{8γt}, in `1 - e^{-2γt}`).
pub fn eta_distinct(t: f64, params: &PhysParams) -> Result<f64> {
    require_dissipative(params, "eta_distinct")?;
    let (g, d, mu) = (params.gamma(), params.diffusion(), params.mu());
    let mu2 = mu * mu;
    let em = -(-2.0 * g * t).exp_m1();
    let b2 = 1.0 - em;
    let r = expm1_residual(2.0 * g * t);
    let bracket = 2.0 * g * (g * g * (mu2 + 1.0) * b2 + g * d * mu * em + d * mu * t * b2)
        - d * mu * em * (2.0 - em) / 2.0;
    let num = 4.0 * g * g * (mu2 - 1.0) * (em / 2.0) * bracket;
    let h1 = 4.0 * g.powi(3) * mu2 + 2.0 * d * mu * r + (g - d * mu) * em * em;
    let h2 = 4.0 * g.powi(3) + 2.0 * d * mu * r + mu * (g * mu - d) * em * em;
    Ok(checked_div(num, h1 * h2, "eta_distinct")?.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;
    use proptest::prelude::*;

    fn pt(x1: f64, x2: f64, t: f64) -> ConfigPoint {
        ConfigPoint::new(x1, x2, t)
    }

    #[test]
    fn psi_at_origin_and_unit_point() {
        let v = psi_sch(pt(0.0, 0.0, 0.0), 1.0);
        assert!((v.re - 0.564_189_583_5).abs() < 1e-10 && v.im.abs() < 1e-15);
        let v = psi_sch(pt(1.0, 1.0, 0.0), 1.0);
        assert!((v.re - 0.207_553_749).abs() < 1e-9 && v.im.abs() < 1e-15);
    }

    #[test]
    fn psi_matches_initial_state() {
        let mu: f64 = 0.3;
        for &(x1, x2) in &[(0.4, -1.1), (2.0, 1.5), (-0.3, 0.0)] {
            let expected = (-(mu * (x1 + x2) * (x1 + x2)) / 4.0 - (x1 - x2) * (x1 - x2) / (4.0 * mu)).exp()
                / PI.sqrt();
            let got = psi_sch(pt(x1, x2, 0.0), mu);
            assert!((got.re - expected).abs() < 1e-14 && got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn psi_stays_normalized() {
        // midpoint rule on a square wide enough for the spread state at t = 2
        let (mu, t) = (0.4, 2.0);
        let (l, n) = (14.0, 700);
        let h = 2.0 * l / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let x1 = -l + (i as f64 + 0.5) * h;
            for j in 0..n {
                let x2 = -l + (j as f64 + 0.5) * h;
                sum += psi_sch(pt(x1, x2, t), mu).norm_sqr();
            }
        }
        assert!((sum * h * h - 1.0).abs() < 1e-8, "norm = {}", sum * h * h);
    }

    #[test]
    fn velocity_examples() {
        for &t in &[0.0, 0.3, 1.0, 4.0] {
            let v = v_sch(pt(0.7, 0.7, t), 1.0);
            assert!((v.v1 - 0.7 * t / (1.0 + t * t)).abs() < 1e-15);
        }
        assert_eq!(v_sch(pt(2.0, -3.0, 0.0), 0.3), VelocityPair { v1: 0.0, v2: 0.0 });
        assert!((v_sch(pt(1.0, -1.0, 1.0), 0.5).v1 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn trajectory_examples() {
        assert_eq!(traj_sch(0.0, 1.5, -0.7, 0.4), (1.5, -0.7));
        assert!((traj_sch(2.0, 1.0, 1.0, 0.5).0 - 2f64.sqrt()).abs() < 1e-15);
        assert!((traj_sch(3.0, 1.0, 0.0, 1.0).0 - 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn along_trajectory_velocity_is_composition() {
        assert_eq!(v_sch_along(0.0, 1.0, 2.0, 0.4), VelocityPair { v1: 0.0, v2: 0.0 });
        let (t, a, mu) = (1.7, 0.8, 0.35);
        let v = v_sch_along(t, a, -a, mu);
        let expected = t * 2.0 * a / (2.0 * mu * (t * t + mu * mu).sqrt());
        assert!((v.v1 - expected).abs() < 1e-14);
        for &(t, a, b, mu) in &[(1.0, 1.0, 0.0, 0.5), (2.5, -0.3, 1.2, 0.2), (0.4, 2.0, 1.0, 0.9)] {
            let (x1, x2) = traj_sch(t, a, b, mu);
            let want = v_sch(pt(x1, x2, t), mu);
            let got = v_sch_along(t, a, b, mu);
            assert!((want.v1 - got.v1).abs() < 1e-13 && (want.v2 - got.v2).abs() < 1e-13);
        }
    }

    #[test]
    fn quantum_potential_examples() {
        assert!((q_sch(pt(0.0, 0.0, 0.0), 1.0) - 1.0).abs() < 1e-15);
        let (t, mu) = (0.8, 0.45);
        let q_diag = q_sch(pt(0.9, 0.9, t), mu);
        let a = mu * mu * t * t + 1.0;
        let b = mu * mu + t * t;
        let expected = 0.25 * (2.0 * mu * (1.0 / a + 1.0 / b) - mu * mu * 3.24 / (a * a));
        assert!((q_diag - expected).abs() < 1e-14);
    }

    /// Quantum potential `-½ Σ ∂²|ψ| / |ψ|` by 5-point finite differences on `|psi_sch|`.
    fn q_fd(x1: f64, x2: f64, t: f64, mu: f64) -> f64 {
        let h = 1e-3;
        let amp = |a: f64, b: f64| psi_sch(pt(a, b, t), mu).norm();
        let d2 = |f: &dyn Fn(f64) -> f64| {
            (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
        };
        let lap = d2(&|e| amp(x1 + e, x2)) + d2(&|e| amp(x1, x2 + e));
        -0.5 * lap / amp(x1, x2)
    }

    #[test]
    fn quantum_potential_matches_finite_differences() {
        for &(x1, x2, t, mu) in &[(0.0, 0.0, 0.5, 0.4), (0.3, -0.2, 1.0, 0.4), (1.0, 0.5, 2.0, 0.7), (-0.6, 0.2, 0.2, 0.9)] {
            let q = q_sch(pt(x1, x2, t), mu);
            assert!((q - q_fd(x1, x2, t, mu)).abs() < 1e-6, "{q} vs {}", q_fd(x1, x2, t, mu));
        }
    }

    #[test]
    fn force_examples() {
        assert_eq!(f_qm_sch(pt(0.0, 0.0, 1.3), 0.6), ForcePair { f1: 0.0, f2: 0.0 });
        assert!((f_qm_sch(pt(1.0, -1.0, 0.0), 0.5).f1 - 4.0).abs() < 1e-14);
    }

    #[test]
    fn force_is_minus_gradient_of_potential() {
        let (x1, x2, t, mu, h) = (0.3, -0.2, 1.0, 0.4, 1e-4);
        let dq1 = (q_sch(pt(x1 + h, x2, t), mu) - q_sch(pt(x1 - h, x2, t), mu)) / (2.0 * h);
        let dq2 = (q_sch(pt(x1, x2 + h, t), mu) - q_sch(pt(x1, x2 - h, t), mu)) / (2.0 * h);
        let f = f_qm_sch(pt(x1, x2, t), mu);
        assert!((f.f1 + dq1).abs() < 1e-6);
        assert!((f.f2 + dq2).abs() < 1e-6);
    }

    #[test]
    fn force_along_trajectory() {
        assert_eq!(f_qm_sch_along(0.0, 0.0, 0.0, 0.5), ForcePair { f1: 0.0, f2: 0.0 });
        let (t, a, b, mu) = (1.3, 0.7, -0.2, 0.6);
        let (x1, x2) = traj_sch(t, a, b, mu);
        let want = f_qm_sch(pt(x1, x2, t), mu);
        let got = f_qm_sch_along(t, a, b, mu);
        assert!((want.f1 - got.f1).abs() < 1e-10 && (want.f2 - got.f2).abs() < 1e-10);
        // t^-3 decay: t^3 F approaches a constant
        let c1 = f_qm_sch_along(1e3, a, b, mu).f1 * 1e9;
        let c2 = f_qm_sch_along(2e3, a, b, mu).f1 * 8e9;
        assert!(((c1 - c2) / c2).abs() < 1e-5);
    }

    #[test]
    fn eta_sch_examples() {
        for &t in &[0.0, 0.5, 3.0] {
            assert_eq!(eta_sch(t, 1.0), 0.0);
        }
        assert_eq!(eta_sch(0.0, 0.3), 0.0);
        assert!((eta_sch(1.0, 0.5) - 0.3).abs() < 1e-15);
        assert!((eta_sch(1.3, 0.4) - coupling_sch(1.3, 0.4).abs()).abs() < 1e-16);
    }

    #[test]
    fn eta_sch_peak_matches_golden_section() {
        // frozen from a golden-section maximization of eta_sch, tol 1e-10
        let (t, e) = eta_sch_peak(0.5).unwrap();
        assert!((t - 0.453_31).abs() < 1e-5, "{t}");
        assert!((e - 0.443_71).abs() < 1e-5, "{e}");
        assert!((eta_sch(t, 0.5) - e).abs() < 1e-12);
        assert!(matches!(eta_sch_peak(1.0), Err(Error::Degenerate(_))));
        assert!(eta_sch_peak(1.0 - 1e-9).unwrap().1 < 1e-8);
        let peaks: Vec<f64> = (1..10).map(|k| eta_sch_peak(k as f64 / 10.0).unwrap().1).collect();
        assert!(peaks.windows(2).all(|w| w[1] < w[0]));
    }

    /// Verbatim transcription of the published expressions (overflows for large γt).
    mod raw {
        pub fn v1_common(x1: f64, x2: f64, t: f64, g: f64, d: f64, mu: f64) -> f64 {
            let (e8, e4) = ((8.0 * g * t).exp(), (4.0 * g * t).exp());
            let f = e8 * (4.0 * g * d * mu * t * t * (3.0 * x1 - x2)
                + t * (x1 - x2) * (16.0 * g.powi(3) + g * mu * mu - 3.0 * d * mu)
                + 4.0 * g * d * mu.powi(3) * (x1 + x2))
                + 2.0 * mu * e4 * (g * mu - 2.0 * d)
                    * (2.0 * g * t * t * (x1 + x2) + t * (x2 - x1) + 2.0 * g * mu * mu * (x1 + x2))
                + mu * (d - g * mu) * (4.0 * g * t * t * (x1 + x2) + t * (x2 - x1) + 4.0 * g * mu * mu * (x1 + x2));
            f / (2.0 * (mu * mu + t * t) * bracket(t, g, d, mu))
        }

        fn bracket(t: f64, g: f64, d: f64, mu: f64) -> f64 {
            let (e8, e4) = ((8.0 * g * t).exp(), (4.0 * g * t).exp());
            mu * (g * mu - d) + e8 * (16.0 * g.powi(3) - 3.0 * d * mu + g * mu * (8.0 * d * t + mu))
                - 2.0 * mu * e4 * (g * mu - 2.0 * d)
        }

        pub fn eta_common(t: f64, g: f64, d: f64, mu: f64) -> f64 {
            let (e8, e4) = ((8.0 * g * t).exp(), (4.0 * g * t).exp());
            let inner = 4.0 * g * mu * mu + 4.0 * g * t * t + t;
            let num = 2.0 * g * e8 * (4.0 * g * d * mu.powi(3) - 4.0 * g * d * mu * t * t
                - t * (16.0 * g.powi(3) + g * mu * mu - 3.0 * d * mu))
                + 4.0 * g * mu * e4 * (g * mu - 2.0 * d) * (2.0 * g * mu * mu + 2.0 * g * t * t + t)
                - mu * (2.0 * g * g * mu * inner - 2.0 * g * d * inner);
            num.abs() / (4.0 * g * (mu * mu + t * t) * bracket(t, g, d, mu)).abs()
        }

        pub fn distinct_mu1_rate(t: f64, g: f64, d: f64) -> f64 {
            let (e2, e4) = ((2.0 * g * t).exp(), (4.0 * g * t).exp());
            2.0 * g * (e2 - 1.0) * (d * (e2 - 1.0) + g)
                / (d * (-1.0 + 4.0 * e2 + e4 * (-3.0 + 4.0 * g * t)) + g * (1.0 - 2.0 * e2 + e4 * (1.0 + 4.0 * g * g)))
        }

        pub fn eta_distinct(t: f64, g: f64, d: f64, mu: f64) -> f64 {
            let (e2, e4) = ((2.0 * g * t).exp(), (4.0 * g * t).exp());
            let num = 4.0 * g * g * (mu * mu - 1.0) * (5.0 * g * t).exp() * (g * t).sinh()
                * (2.0 * g * (g * g * (mu * mu + 1.0) + g * d * mu * (e2 - 1.0) + d * mu * t)
                    - d * mu * (2.0 * g * t).sinh());
            let h = (g - d * mu + e4 * (4.0 * g.powi(3) * mu * mu + g + d * mu * (4.0 * g * t - 3.0))
                - 2.0 * e2 * (g - 2.0 * d * mu))
                * (mu * (g * mu - d) + e4 * (4.0 * g.powi(3) - 3.0 * d * mu + g * mu * (4.0 * d * t + mu))
                    - 2.0 * mu * e2 * (g * mu - 2.0 * d));
            num.abs() / h.abs()
        }
    }

    #[test]
    fn stable_forms_agree_with_transcription() {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        for &(g, temp) in &[(0.05, 5.0), (0.1, 10.0), (0.1, 20.0), (0.5, 3.0)] {
            for &mu in &[0.2, 0.5, 0.9, 1.0] {
                let p = make_params(g, temp, mu).unwrap();
                let d = p.diffusion();
                for k in 1..=40 {
                    let t = k as f64 * 0.25;
                    let a = v_common(pt(0.8, -0.3, t), &p).unwrap().v1;
                    let b = raw::v1_common(0.8, -0.3, t, g, d, mu);
                    assert!(rel(a, b) < 1e-9, "v_common g={g} T={temp} mu={mu} t={t}: {a} vs {b}");
                    let a = eta_common(t, &p).unwrap();
                    let b = raw::eta_common(t, g, d, mu);
                    assert!(rel(a, b) < 1e-8 || (a - b).abs() < 1e-12, "eta_common t={t}: {a} vs {b}");
                    let a = eta_distinct(t, &p).unwrap();
                    let b = raw::eta_distinct(t, g, d, mu);
                    assert!(rel(a, b) < 1e-8 || (a - b).abs() < 1e-12, "eta_distinct t={t}: {a} vs {b}");
                    if mu == 1.0 {
                        let a = distinct_mu1_rate(t, &p).unwrap();
                        let b = raw::distinct_mu1_rate(t, g, d);
                        assert!(rel(a, b) < 1e-9, "v_distinct t={t}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn residual_series_matches_direct() {
        // the direct form is trustworthy away from 0; the series must join it
        for &x in &[0.05f64, 0.099, 0.1, 0.3, 2.0] {
            let direct = x + (-x).exp_m1();
            assert!((expm1_residual(x) - direct).abs() <= 1e-13 * direct, "{x}");
        }
        for &x in &[1e-9f64, 1e-6] {
            assert!((expm1_residual(x) / (x * x / 2.0) - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn common_velocity_at_t0_vanishes() {
        let p = make_params(0.1, 10.0, 0.5).unwrap();
        let v = v_common(pt(1.3, -0.4, 0.0), &p).unwrap();
        assert!(v.v1.abs() < 1e-15 && v.v2.abs() < 1e-15);
    }

    #[test]
    fn common_velocity_schrodinger_limit() {
        let p = make_params(1e-8, 1e-8, 0.5).unwrap();
        for i in 0..=6 {
            for j in 0..=6 {
                for &t in &[0.1, 0.5, 1.0, 2.0, 5.0] {
                    let q = pt(-3.0 + i as f64, -3.0 + j as f64, t);
                    let a = v_common(q, &p).unwrap();
                    let b = v_sch(q, 0.5);
                    assert!((a.v1 - b.v1).abs() < 1e-6 && (a.v2 - b.v2).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn common_requires_friction() {
        let p = make_params(0.0, 10.0, 0.5).unwrap();
        assert!(matches!(v_common(pt(1.0, 0.0, 1.0), &p), Err(Error::Domain(_))));
        assert!(matches!(eta_common(1.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn first_order_force() {
        let q = pt(0.4, -0.1, 0.9);
        let p0 = make_params(0.0, 10.0, 0.3).unwrap();
        assert_eq!(f_qm_common_first_order(q, &p0), f_qm_sch(q, 0.3));
        let p = make_params(0.05, 10.0, 0.3).unwrap();
        let anti = pt(0.6, -0.6, 1.1);
        assert_eq!(f_qm_common_first_order(anti, &p), f_qm_sch(anti, 0.3));
    }

    #[test]
    fn distinct_mu1_examples() {
        let p = make_params(0.1, 10.0, 1.0).unwrap();
        assert_eq!(v_distinct_mu1(0.0, 2.0, &p).unwrap(), 0.0);
        assert_eq!(v_distinct_mu1(1.5, 0.0, &p).unwrap(), 0.0);
        let lim = make_params(1e-8, 1e-8, 1.0).unwrap();
        assert!((v_distinct_mu1(1.0, 1.0, &lim).unwrap() - 0.5).abs() < 1e-6);
        let squeezed = make_params(0.1, 10.0, 0.5).unwrap();
        assert!(matches!(v_distinct_mu1(1.0, 1.0, &squeezed), Err(Error::Domain(_))));
    }

    #[test]
    fn eta_at_zero_time() {
        let p = make_params(0.1, 10.0, 0.5).unwrap();
        assert!(eta_common(0.0, &p).unwrap() < 1e-15);
        assert_eq!(eta_distinct(0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn eta_common_schrodinger_limit() {
        let p = make_params(1e-6, 1e-6, 0.5).unwrap();
        for k in 0..=50 {
            let t = k as f64 * 0.1;
            assert!((eta_common(t, &p).unwrap() - eta_sch(t, 0.5)).abs() < 1e-5, "t = {t}");
        }
    }

    #[test]
    fn eta_common_oscillates() {
        let p = make_params(0.1, 10.0, 0.5).unwrap();
        let vals: Vec<f64> = (0..=4000).map(|k| eta_common(k as f64 * 0.01, &p).unwrap()).collect();
        let maxima = vals.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count();
        assert!(maxima >= 2, "{maxima}");
    }

    #[test]
    fn eta_distinct_vanishes_when_separable() {
        let p = make_params(0.1, 10.0, 1.0).unwrap();
        for k in 0..=100 {
            assert_eq!(eta_distinct(k as f64 * 0.1, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn eta_distinct_single_lobe_before_first_zero() {
        // rises to one maximum, then decreases monotonically until the
        // coupling changes sign near t ≈ 2.1
        let p = make_params(0.1, 10.0, 0.5).unwrap();
        let vals: Vec<f64> = (0..=200).map(|k| eta_distinct(k as f64 * 0.01, &p).unwrap()).collect();
        let imax = vals.iter().enumerate().fold(0, |b, (i, v)| if *v > vals[b] { i } else { b });
        assert!(imax > 0 && imax < 100);
        assert!(vals[..=imax].windows(2).all(|w| w[1] > w[0]));
        assert!(vals[imax..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn large_times_do_not_overflow() {
        let p = make_params(5.0, 10.0, 0.5).unwrap();
        // raw e^{8γt} would overflow at γt ≈ 89
        let t = 100.0;
        assert!(eta_common(t, &p).unwrap().is_finite());
        assert!(eta_distinct(t, &p).unwrap().is_finite());
        assert!(v_common(pt(1.0, 2.0, t), &p).unwrap().v1.is_finite());
    }

    proptest! {
        #[test]
        fn swap_symmetry(x1 in -5.0f64..5.0, x2 in -5.0f64..5.0, t in 0.0f64..20.0,
                         mu in 0.05f64..=1.0, g in 0.01f64..1.0, temp in 0.0f64..30.0) {
            let p = pt(x1, x2, t);
            let params = make_params(g, temp, mu).unwrap();
            let a = v_sch(p, mu);
            let b = v_sch(p.swapped(), mu);
            prop_assert_eq!(a.v2, b.v1);
            let a = f_qm_sch(p, mu);
            let b = f_qm_sch(p.swapped(), mu);
            prop_assert_eq!(a.f2, b.f1);
            let a = v_common(p, &params).unwrap();
            let b = v_common(p.swapped(), &params).unwrap();
            prop_assert_eq!(a.v2, b.v1);
        }

        #[test]
        fn fields_are_odd(x1 in -5.0f64..5.0, x2 in -5.0f64..5.0, t in 0.0f64..20.0,
                          mu in 0.05f64..=1.0, g in 0.01f64..1.0, temp in 0.0f64..30.0) {
            let params = make_params(g, temp, mu).unwrap();
            let p = pt(x1, x2, t);
            let n = pt(-x1, -x2, t);
            let tol = |a: f64| 1e-12 * (1.0 + a.abs());
            let (a, b) = (v_sch(p, mu), v_sch(n, mu));
            prop_assert!((a.v1 + b.v1).abs() <= tol(a.v1));
            let (a, b) = (f_qm_sch(p, mu), f_qm_sch(n, mu));
            prop_assert!((a.f1 + b.f1).abs() <= tol(a.f1));
            let (a, b) = (v_common(p, &params).unwrap(), v_common(n, &params).unwrap());
            prop_assert!((a.v1 + b.v1).abs() <= tol(a.v1));
        }

        #[test]
        fn eta_is_nonnegative(t in 0.0f64..40.0, mu in 0.05f64..=1.0, g in 0.01f64..1.0, temp in 0.0f64..30.0) {
            let params = make_params(g, temp, mu).unwrap();
            prop_assert!(eta_sch(t, mu) >= 0.0);
            prop_assert!(eta_common(t, &params).unwrap() >= 0.0);
            prop_assert!(eta_distinct(t, &params).unwrap() >= 0.0);
        }
    }
}
