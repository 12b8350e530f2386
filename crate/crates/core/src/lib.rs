//! Markovian diffusion processes in the standard (Smoluchowski) form and in
//! the recoil form, where the medium's reaction inverts the sign of the
//! `grad(Omega - Q)` source in the ensemble momentum law.
//!
//! The crate provides
//! - [`fields`]: local operators (osmotic/current velocity, `Q`, `Omega`) and
//!   residuals of the momentum, Hamilton-Jacobi and Girsanov identities,
//! - [`analytic`]: closed-form free Brownian, free recoil and harmonic recoil
//!   solutions,
//! - [`evolve`]: a split-step spectral solver for the linearizing
//!   Schrodinger equation and a conservative Fokker-Planck integrator,
//! - [`sde`]: reproducible Euler-Maruyama ensembles,
//! - [`diagnostics`]: moments, energies, pressure and momentum-rate measures,
//! - [`cli`]: the scenario runner behind the `recoil-diffusion` binary.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod deriv;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod fields;
pub mod grid;
pub mod par;
pub mod sde;

pub use deriv::Scheme;
pub use error::{Error, Result};
pub use fields::{DiffusionParams, Mode, ScalarField, ScalarKind, VectorField, VectorKind};
pub use grid::Grid;
pub use par::Execution;

/// A state tagged with its time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub time: f64,
    pub state: T,
}
