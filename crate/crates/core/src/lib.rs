//! Spectral lattice numerics for the renormalized Wick square of a free
//! scalar field on static space-times.
//!
//! The crate is `no_std` (with `alloc`). It builds the example geometries
//! (Newtonian shell potentials and the conformal factors derived from them),
//! discretizes the spatial Klein-Gordon operator on tori and radial grids,
//! diagonalizes it, and evaluates ground, thermal and excess two-point
//! kernels. From those kernels it extracts the Wick square by differencing
//! against a flat reference operator on the same lattice, and converts it to
//! a local temperature `T = sqrt(12 w)`.
//!
//! File formats, configuration and the command line live in the companion
//! `wickthermo` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod euclidean;
pub mod extrapolate;
pub mod geometry;
pub mod lattice;
pub mod linalg;
pub mod math;
pub mod spectral;
pub mod thermal;

pub use error::{Error, Result};
