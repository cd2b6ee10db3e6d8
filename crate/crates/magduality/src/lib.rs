//! Two variational models of magnetostatics on a periodic box, and the
//! machinery that connects them.
//!
//! The `(m, h_s)` model minimizes a material energy plus stray-field energy
//! over magnetization and self-field subject to the Maxwell constraint
//! (curl h_s = 0, div(χm + h_s) = 0). The single-field model minimizes a
//! dual material energy plus a quadratic misfit over divergence-free
//! inductions `b`. At critical points the two are related by pointwise
//! transfer maps and take the same energy value; away from critical points
//! they do not. This crate computes critical points of both models,
//! transfers states between them, and certifies the residuals and energy
//! gap of any given state.
//!
//! Module map:
//! - [`grid`]: periodic sampled fields and spectral differential operators
//! - [`helmholtz`]: the curl-free projection, stray fields, scalar potentials
//! - [`materials`]: the energy-density catalogue (densities, gradients,
//!   subdifferentials, proximal maps, closed-form conjugates)
//! - [`legendre`]: conjugate transforms, a brute-force conjugation oracle,
//!   Fenchel identity and involution checks
//! - [`solvers`]: projected/proximal gradient solvers for both models
//! - [`equivalence`]: transfer maps, critical-state certification, roundtrips
//! - [`scenario`]: JSON-driven batch runs (see the `magduality` binary)

pub mod equivalence;
pub mod error;
pub mod extreal;
mod fourier;
pub mod grid;
pub mod helmholtz;
pub mod io;
pub mod legendre;
pub mod materials;
pub mod scenario;
pub mod solvers;
pub(crate) mod vec3;

pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use grid::{GridSpec, Region, ScalarField, VectorField};
pub use materials::MaterialModel;
