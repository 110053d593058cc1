//! Multi-level simulator for the Lorentz gas in a slab between two mass
//! reservoirs, in the weak-coupling regime.
//!
//! The same stationary transport problem is treated at three levels of
//! description, each with its own module:
//!
//! * [`micro`] — Newtonian motion through a Poisson field of soft scatterers
//!   (backward exit-time Monte Carlo over obstacle realizations),
//! * [`kinetic`] — the linear Boltzmann jump process and the linear Landau
//!   angular diffusion (backward exit-time Monte Carlo),
//! * [`grid`] — deterministic stationary solvers on an `(x1, theta)` grid,
//!   used as the oracle for both Monte Carlo levels.
//!
//! [`scattering`] provides the single-obstacle deflection machinery shared by
//! all levels, [`medium`] the lazily generated obstacle field, and
//! [`analysis`] the macroscopic observables: density and flux profiles, the
//! Green-Kubo diffusion coefficient and the Fick's-law residual.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod grid;
pub mod kinetic;
pub mod medium;
pub mod micro;
pub mod params;
pub mod parallel;
pub mod potential;
pub mod quadrature;
pub mod scattering;

pub use params::KineticParams;
pub use potential::{Profile, QuarticBump};
pub use scattering::ScatteringTable;
