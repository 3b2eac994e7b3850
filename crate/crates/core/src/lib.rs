//! Time-periodic subsonic solutions of the one-dimensional isentropic Euler
//! equations with linear damping `β(t,x)ρu`, driven by dissipative
//! time-periodic boundary conditions.
//!
//! The crate works in perturbation Riemann-invariant coordinates
//! `φ = (m − m̄, n − n̄)` around a constant subsonic equilibrium and provides:
//!
//! * [`model`]: the γ-law gas, Riemann-invariant transforms, eigenvalues,
//!   the equilibrium with its admissible ball, damping fields and boundary
//!   forcings.
//! * [`characteristics`]: characteristic tracing on the periodic strip,
//!   integrating-factor weights and path quadrature.
//! * [`periodic`]: the linearized characteristic fixed-point iteration that
//!   produces the time-periodic solution, plus contraction diagnostics.
//! * [`ibvp`]: a semi-Lagrangian forward solver for the initial-boundary
//!   value problem, used to probe stability of the periodic solution.
//! * [`analysis`]: decay-rate fitting, regularity probes, closed-form
//!   frozen-coefficient oracles and conservative-form residuals.
//!
//! The crate is `no_std` (with `alloc`). The `parallel` feature enables
//! rayon-backed per-node parallelism in the sweeps; results are bitwise
//! identical to the serial path.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod characteristics;
mod error;
pub mod field;
pub mod ibvp;
pub mod interp;
pub(crate) mod math;
pub mod model;
pub mod periodic;
pub mod series;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use field::PeriodicField;
pub use model::{BoundaryForcing, DampingField, Equilibrium, GasState, RiemannPair};

/// How the characteristic speeds depend on the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coefficients {
    /// `λᵢ(φ + Φ)`: the quasilinear problem.
    #[default]
    Nonlinear,
    /// `λᵢ(Φ)`: coefficients frozen at the equilibrium (linear transport).
    Frozen,
}
