//! One-step R-estimation of regression coefficients in linear models with
//! α-stable errors.
//!
//! The crate is `no_std` (with `alloc`). File formats, caching, parallel
//! Monte Carlo and the command line live in the `onestep` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod efficiency;
pub mod error;
pub mod harness;
pub mod linear_model;
pub mod onestep;
pub mod quadrature;
pub mod ranks;
pub mod roots;
pub mod scores;
pub mod special;
pub mod stable;

pub use error::{Error, Result};
pub use stable::{Law, StableParams, StableTable};

pub use nalgebra;
