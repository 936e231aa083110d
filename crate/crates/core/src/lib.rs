//! Work statistics of localized unitaries acting on thermal (KMS) states of a
//! free scalar field, defined through a Ramsey interferometer on an ancilla
//! qubit.
//!
//! The crate is organised bottom-up:
//!
//! - [`special_math`]: Dawson integral, adaptive radial quadrature and the
//!   characteristic-function inversion.
//! - [`field_model`]: field parameters, switching and smearing profiles.
//! - [`charfn`]: characteristic functions of the work distribution
//!   (perturbative thermal/vacuum and the instantaneous "delta" coupling).
//! - [`workdist`]: densities, moments and fluctuation-theorem checks.
//! - [`ramsey_sim`]: an independent discrete-mode simulation of the
//!   interferometer used to validate the continuum formulas.
//! - [`cli`]: the batch front end.
//!
//! Natural units (ħ = c = 1) are used throughout.

pub mod charfn;
pub mod cli;
pub mod error;
pub mod field_model;
pub mod ramsey_sim;
pub mod special_math;
pub mod workdist;

pub use error::{Error, Result};
