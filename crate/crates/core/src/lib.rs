//! Expansive motions of the N-body problem with homogeneous pair potentials
//! `U(x) = Σ_{i<j} m_i m_j / |r_i - r_j|^α`.
//!
//! The crate builds the reference paths that guide hyperbolic, parabolic and
//! hyperbolic-parabolic escapes, synthesizes actual motions by minimizing a
//! discretized renormalized action, integrates Newton's equations, and checks
//! the resulting trajectories against their asymptotic expansions.
//!
//! Everything here is `no_std` with `alloc`; file formats and the command line
//! live in the companion `expansive-cli` crate.

#![no_std]
// NaN-rejecting guards read as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod action;
pub mod asymptotics;
pub mod central_config;
mod error;
pub mod linalg;
pub mod nbody;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod reference;
pub mod trajectory;

pub use action::{ActionProblem, MeshKind, PerturbationGrid, TailMode};
pub use asymptotics::{ChazyClass, ExpansionSpec, PowerLawFit};
pub use central_config::{CentralConfiguration, ClusterPartition};
pub use error::{Error, Result};
pub use nbody::{Configuration, MassSystem};
pub use potential::PotentialModel;
pub use reference::{GammaCoefficients, ReferencePath, Regime};
pub use trajectory::{Provenance, SynthesisReport, Trajectory};
