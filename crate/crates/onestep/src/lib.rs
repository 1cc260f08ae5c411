//! Files, caching, parallel Monte Carlo and the `onestep` command line on
//! top of [`onestep_core`].

pub mod cache;
pub mod error;
pub mod io;
pub mod parallel;

pub use error::{Error, Result};
pub use onestep_core as core;
