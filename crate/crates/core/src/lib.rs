//! Pseudospectral solver and experiment harness for norm inflation and randomized data in
//! the defocusing and focusing power-type nonlinear Schrödinger equation.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubbles;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod grid;
pub mod profile;
pub mod quadrature;
pub mod randomization;
pub mod sobolev;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec, Representation};
