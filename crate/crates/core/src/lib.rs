//! Numerical laboratory for 1D reaction-diffusion SPDEs with fast transport
//! and white-noise flux forcing on the boundary.
//!
//! When the diffusion runs much faster than the reaction (rate `1/eps`), the
//! solution field collapses onto its spatial average and the SPDE can be
//! replaced by a one-dimensional SDE whose coefficients are averages against
//! the invariant measure of the transport semigroup. This crate simulates
//! both sides of that limit on a shared Brownian stream and measures the
//! strong convergence rate and the Gaussian fluctuations around it:
//!
//! * [`operator`] - eigenbasis, invariant measure and semigroup of the
//!   elliptic operator; the coordinate system for everything else.
//! * [`neumann`] - the Neumann map and the boundary-noise propagator.
//! * [`noise`] - reproducible coupled Wiener increments.
//! * [`coefficients`] - declarative reaction/noise fields with hypothesis
//!   validation.
//! * [`spde`] - exponential Euler integrator in spectral coordinates.
//! * [`fd`] - physical-space theta-scheme used as a cross-check oracle.
//! * [`averaged`] - the limiting scalar SDE in coupled and law-equivalent
//!   form.
//! * [`fluctuation`] - the fluctuation field, its limit covariance and the
//!   statistical comparison.
//! * [`config`] / [`experiments`] - JSON-driven experiment runners and CSV
//!   reports behind the `fastavg` CLI.

pub mod averaged;
pub mod coefficients;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fd;
pub mod fluctuation;
pub mod grid;
pub mod neumann;
pub mod noise;
pub mod operator;
pub mod spde;
mod tridiag;

pub use error::{Error, Result};
