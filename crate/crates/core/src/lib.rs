//! Conditioning of Gaussian random variables, explicit concentration bounds
//! for kriging errors, and Monte-Carlo machinery that checks those bounds.

pub mod bounds;
pub mod concentration;
pub mod conditioning;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod real;
pub mod rng;
pub mod sampling;
pub mod spheres;

pub use error::{Error, Result};
