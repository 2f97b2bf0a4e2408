//! Physical parameters and scenario taxonomy.
//!
//! Everything is dimensionless with `m = ħ = k_B = 1`: positions in units of
//! the initial packet width, time in `mσ₀²/ħ`, the relaxation rate in
//! `ħ/(mσ₀²)` and temperature in `ħ²/(mσ₀²k_B)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Dimensionless bath and state parameters.
///
/// The diffusion coefficient is always derived as `D = 2γT`; there is no way
/// to set it independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    gamma: f64,
    temperature: f64,
    mu: f64,
    diffusion: f64,
}

impl PhysParams {
    pub fn new(gamma: f64, temperature: f64, mu: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::Parameter(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(Error::Parameter(format!(
                "temperature must be finite and >= 0, got {temperature}"
            )));
        }
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::Parameter(format!("mu must lie in (0, 1], got {mu}")));
        }
        Ok(Self { gamma, temperature, mu, diffusion: 2.0 * gamma * temperature })
    }

    /// Closed-system parameters: no friction, no diffusion.
    pub fn unitary(mu: f64) -> Result<Self> {
        Self::new(0.0, 0.0, mu)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Squeezing decay factor `μ = e^{-2s}`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.gamma, self.temperature, mu)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.gamma, temperature, self.mu)
    }
}

/// Shorthand for [`PhysParams::new`].
pub fn make_params(gamma: f64, temperature: f64, mu: f64) -> Result<PhysParams> {
    PhysParams::new(gamma, temperature, mu)
}

/// How the two particles couple to their environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Closed-system Schrödinger evolution.
    Unitary,
    /// Each particle has its own identical thermal bath.
    DistinctBaths,
    /// Both particles share one bath (adds cross friction and cross decoherence).
    CommonBath,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Unitary, Scenario::DistinctBaths, Scenario::CommonBath];

    /// Short name used on the command line and in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Unitary => "sch",
            Scenario::DistinctBaths => "distinct",
            Scenario::CommonBath => "common",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sch" | "unitary" | "schrodinger" => Ok(Scenario::Unitary),
            "distinct" | "dis" | "d" => Ok(Scenario::DistinctBaths),
            "common" | "com" | "c" => Ok(Scenario::CommonBath),
            other => Err(Error::Parameter(format!(
                "unknown scenario `{other}` (expected sch, distinct or common)"
            ))),
        }
    }
}

/// A scenario paired with its parameters.
///
/// Pairing with [`Scenario::Unitary`] zeroes the bath parameters, and a bath
/// scenario with `γ = 0` is the Schrödinger limit; [`Model::is_closed`]
/// reports either case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub scenario: Scenario,
    pub params: PhysParams,
}

impl Model {
    pub fn new(scenario: Scenario, params: PhysParams) -> Self {
        let params = match scenario {
            Scenario::Unitary => PhysParams { gamma: 0.0, temperature: 0.0, diffusion: 0.0, ..params },
            _ => params,
        };
        Self { scenario, params }
    }

    pub fn unitary(mu: f64) -> Result<Self> {
        Ok(Self::new(Scenario::Unitary, PhysParams::unitary(mu)?))
    }

    /// No friction acts, so the dynamics is closed whatever the scenario tag.
    pub fn is_closed(&self) -> bool {
        self.params.gamma == 0.0
    }

    pub fn mu(&self) -> f64 {
        self.params.mu
    }
}

/// A configuration-space point at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigPoint {
    pub x1: f64,
    pub x2: f64,
    pub t: f64,
}

impl ConfigPoint {
    pub fn new(x1: f64, x2: f64, t: f64) -> Self {
        debug_assert!(t >= 0.0, "negative time {t}");
        Self { x1, x2, t }
    }

    /// The point with the particle labels exchanged.
    pub fn swapped(&self) -> Self {
        Self { x1: self.x2, x2: self.x1, t: self.t }
    }
}
