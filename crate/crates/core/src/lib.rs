//! Mean orbital pseudo-metric toolkit: exact optimal transport between orbit
//! measures, periodic-orbit searches, asymptotic average pseudo-orbits and
//! periodic decompositions for interval maps, circle rotations and full shifts.

mod error;
pub mod num;
pub mod decomp;

pub mod dynsys;
pub mod periodic;
pub mod pseudometric;
pub mod shadowing;
pub mod transport;

pub use error::{Error, Result};
pub use num::{Num, Rational};

/// Library version embedded in generated artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
