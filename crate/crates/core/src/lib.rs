//! Bohmian trajectories and the velocity-sensitivity nonlocality measure for a
//! two-mode squeezed Gaussian state, under free Schrödinger evolution or the
//! two-particle Caldeira-Leggett master equation with distinct or common baths.
//!
//! The crate has two independent routes to every dynamical quantity:
//! [`closed_form`] transcribes the analytic expressions, and
//! [`gaussian_engine`] propagates Wigner moments of the master equation and
//! rebuilds the density-matrix kernel from them. The second route also covers
//! the general-μ distinct-bath velocity field, for which no closed form is used.

pub mod closed_form;
pub mod error;
pub mod gaussian_engine;
pub mod measures;
pub mod params;
pub mod search;
pub mod trajectories;
pub mod validation;

pub use closed_form::{ForcePair, VelocityPair};
pub use error::{Error, Result, Side};
pub use params::{make_params, ConfigPoint, Model, PhysParams, Scenario};
