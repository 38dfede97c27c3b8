//! Symbolic-numeric verification toolkit for left-invariant second-order
//! operators on Lie groups over n-dimensional space.
//!
//! The crate is organized around a small differential ring of symbolic
//! expressions ([`symbolic`]) on top of which everything else is built:
//! Lie group laws and their right-invariant densities ([`group`]),
//! vector fields with bracket-rank certificates ([`fields`]),
//! second-order operators in coordinate and quasi-divergence form
//! ([`operator`]), the Kolmogorov-type evolution class ([`kolmogorov`]),
//! mean-value operators on Euclidean balls ([`meanvalue`]) and weighted
//! Lp scans with scripted demonstrations ([`liouville`]).
//!
//! The crate is `no_std` + `alloc`; all IO, configuration and report
//! serialization live in the companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod fields;
pub mod group;
pub mod kolmogorov;
pub mod linalg;
pub mod liouville;
pub mod matexp;
pub mod meanvalue;
pub mod operator;
pub mod quad;
pub mod ratmat;
pub mod sample;
pub mod scalar;
pub mod symbolic;
