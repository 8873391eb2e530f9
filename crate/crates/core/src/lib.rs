//! Mean-field SGD laboratory.
//!
//! Synthetic Gaussian-mixture data, one-pass SGD for two- and three-layer
//! networks, the rotationally reduced risk functionals of the isotropic law,
//! particle integration of the limiting transport dynamics, and the
//! statistics used to compare the two (Hoeffding's D, 1-D distances).

pub mod activation;
pub mod data;
pub mod error;
pub mod harness;
pub mod network;
pub mod pde;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod statics;

pub use activation::ActivationKind;
pub use error::{Error, Result};
