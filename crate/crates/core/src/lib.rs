//! Finite-dimensional laboratory for the quantum BBGKY hierarchy, its dual,
//! the generalized quantum kinetic equation, and their mean-field limits.
//!
//! Everything runs on lattices small enough that independent oracles (direct
//! unitary evolution plus partial traces, hierarchy ODE integration, nested
//! quadrature) stay affordable, so each series solution is cross-checked
//! against at least one alternative route:
//!
//! - [`operator`]: dense many-body operators, tensor embedding, partial
//!   traces, norms.
//! - [`dynamics`]: Hamiltonians, the unitary groups they generate, Heisenberg
//!   and von Neumann generators, Duhamel residuals.
//! - [`partitions`] / [`cumulants`]: set partitions with cluster elements and
//!   the signed cumulants of evolution groups built from them.
//! - [`hierarchies`]: cumulant series for marginal states and observables,
//!   the duality pairing, correlation operators, and ODE oracles.
//! - [`kinetic`]: scattering operators and the generalized quantum kinetic
//!   equation for the one-particle density operator.
//! - [`meanfield`]: quantum Vlasov dynamics, chaos-propagation sweeps, and
//!   the split-step Hartree / nonlinear Schrödinger solver.

pub mod cumulants;
pub mod dynamics;
pub mod error;
pub mod hierarchies;
pub mod kinetic;
pub mod meanfield;
pub mod model;
pub mod ode;
pub mod operator;
pub mod partitions;
pub mod quad;
pub mod random;
pub mod sequence;
mod sums;

pub use error::{Error, Result};
pub use model::{Boundary, ModelConfig};
pub use operator::MBOperator;
pub use sequence::OperatorSequence;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
