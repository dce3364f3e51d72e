//! First-passage percolation on thin strips and its exact mapping to a
//! discrete-time TASEP with open boundaries.
//!
//! The crate covers the column sweep for Cross-model distances
//! ([`strip`]), the synchronous TASEP and its stationary law ([`tasep`]),
//! the profile/configuration correspondence ([`correspondence`]), strip
//! distance expectations ([`estimator`]) and plane experiments ([`plane`]).

pub mod correspondence;
pub mod error;
pub mod estimator;
pub mod parallel;
pub mod plane;
pub mod rng;
pub mod stats;
pub mod strip;
pub mod tasep;

pub use error::{Error, Result};
