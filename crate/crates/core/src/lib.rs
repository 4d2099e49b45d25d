//! Quasinormal modes of one-dimensional open wave and Klein–Gordon systems,
//! including higher-order Wronskian zeros and their Jordan blocks.

pub mod cli;
pub mod design;
pub mod error;
pub mod evolution;
pub mod jordan;
pub mod model;
pub mod odeint;
pub mod perturbation;
pub mod ptmodel;
pub mod quadrature;
pub mod spectral;
pub mod tps;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
