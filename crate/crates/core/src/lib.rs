//! First-exit-time distributions for subordinator-driven log-return models.
//!
//! The numerical kernels ([`specfun`], [`quad`], [`laplace`], [`levy`],
//! [`firstexit`]) are generic over the scalar type through [`Real`]; the
//! aliases below pin them to `f64`, which is what the simulation and data
//! layers use.

pub mod curve;
pub mod decomp;
pub mod empirical;
pub mod error;
pub mod firstexit;
pub mod laplace;
pub mod levy;
pub mod mc;
pub mod real;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use real::{KahanSum, Real};

pub type Grid = curve::Grid<f64>;
pub type DensityCurve = curve::DensityCurve<f64>;
pub type TransformFn = laplace::TransformFn<f64>;
pub type InversionSettings = laplace::InversionSettings<f64>;
pub type QuadSettings = quad::QuadSettings<f64>;
