//! Shape-invariant generalization of the non-resonant Jaynes-Cummings model.
//!
//! A model is specified purely algebraically by its remainder sequence `R_k`.
//! From it the crate builds the energy ladder, an exact two-channel matrix
//! representation of the coupled atom/mode operator algebra, closed-form
//! spectra, the interaction-picture evolution matrix and the population
//! inversion matrix with its series particular solution. Every closed form
//! can be checked against the brute-force references in [`oracle`].
//!
//! Module map:
//!
//! * [`model`]: remainder sequences, energy ladders and validity checks.
//! * [`rep`]: two-channel operators, weighted shifts, Hamiltonian parts,
//!   the `Ĉ`/`D̂` operators and the algebraic identity suite.
//! * [`spectrum`]: analytic eigenvalues and mixing amplitudes.
//! * [`evolution`]: closed-form propagator and its diagnostics.
//! * [`inversion`]: F-matrix, auxiliary series, particular solution and
//!   the population-inversion matrix.
//! * [`oracle`]: eigensolver, exact propagators, quadrature and finite
//!   differences.

pub mod error;
pub mod evolution;
pub mod inversion;
pub mod model;
pub mod oracle;
pub mod rep;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{Coupling, LadderSpectrum, ModelFamily, ShapeInvariantModel, ValidityReport};
pub use rep::{Layout, Phase, TwoChannelOperator};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
