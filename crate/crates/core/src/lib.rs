//! Numerical and symbolic calculus of functionals on smooth periodic fields.
//!
//! The crate represents smooth functions on the circle by samples on a
//! uniform grid with spectral derivative access, builds jets and jet-space
//! Lagrangian densities on top of them, and probes arbitrary functionals
//! `Field -> f64` for differentiability, additivity, and locality.
//!
//! Module map:
//!
//! * [`grid`] — periodic grids, fields, spectral calculus, norms.
//! * [`jet`] — k-jets at grid nodes and their polynomial realizations.
//! * [`expr`] — symbolic jet-coordinate expressions, total derivatives, and
//!   the Euler-Lagrange operator.
//! * [`zoo`] — the built-in functionals, including the non-local
//!   counterexample and the unbounded-order example.
//! * [`engine`] — finite-difference Gâteaux derivatives, gradient densities,
//!   kernel probes, and distribution-order estimates.
//! * [`locality`] — additivity / diagonal-support tests and the combined
//!   locality verdict.
//! * [`identities`] — integral identities: fundamental theorem of calculus,
//!   the two Poincaré identities, exactness of total derivatives.
//! * [`peetre`] — mollifier family, quantitative cutoff estimates, and
//!   jet-determination probes.
//! * [`report`] — structured probe reports and their CSV form.
//! * [`io`] — CSV serialization of fields, spectra, and jets.

pub mod engine;
pub mod error;
pub mod expr;
pub mod grid;
pub mod identities;
pub mod io;
pub mod jet;
pub mod locality;
mod linalg;
pub mod peetre;
pub mod quadrature;
pub mod report;
pub mod zoo;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec, SupportWindow};

