//! Numerical core for lower bounds on the norms of projections from spaces of
//! Lipschitz functions on the Euclidean ball onto 2-homogeneous polynomials.
//!
//! The crate is `no_std` (it needs `alloc`). IO, file formats and the command
//! line live in the `polyproj` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod averaging;
pub mod bounds;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod polynomials;
pub mod witness;

pub use error::{Error, Result};
