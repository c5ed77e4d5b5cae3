//! Mean-field model of a three-level Rydberg ladder in a warm vapor, where
//! phase locking and direction-dependent probe response emerge from a shared
//! population-dependent level shift.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: single-class Bloch equations with a power-law Rydberg shift,
//!   plus an adaptive Runge–Kutta integrator.
//! - [`fixed_points`]: self-consistent steady states, linear stability,
//!   regime classification and adiabatic hysteresis sweeps.
//! - [`thermal`]: Maxwell–Boltzmann velocity classes coupled through a
//!   shared mean-field shift, Doppler geometries and probe transmission.
//! - [`signal`]: dominant frequency, synchronization metrics and the
//!   non-reciprocity contrast ratio.
//! - [`runner`]: scenario files, presets and the experiment commands behind
//!   the `rydsync` binary.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod error;
pub mod fixed_points;
pub mod model;
pub mod runner;
pub mod signal;
pub mod thermal;

pub use error::{Error, Result};
pub use model::{bloch_rhs, self_shift, BlochState, IntegratorConfig, ModelParams, Trajectory};
