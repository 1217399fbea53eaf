//! Closed-form solutions and numerical nondegeneracy checks for the critical
//! Kirchhoff equation `-(a + b∫|∇u|²)Δu = u⁵` on `R³`.
//!
//! The crate is `no_std` (with `alloc`). File formats, the command line and
//! threading live in the `kirchhoff-cli` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod closed_form;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod quadrature;
pub mod report;
pub mod shooting;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
