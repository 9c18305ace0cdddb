//! Grid laboratory for plurisubharmonic extension across small singular sets.
//!
//! Fields live on uniform grids over balls in C^n (stored as R^{2n}). The
//! crate certifies subharmonicity and plurisubharmonicity with mean-value
//! tests, computes constrained convex envelopes, checks the ABP inequality
//! and runs the contact-point extension argument end to end.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abp;
pub mod calculus;
pub mod catalog;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod pipeline;
pub mod singular_sets;
pub mod viscosity;

pub use error::{Error, Result};
pub use expr::Function;
pub use geometry::{ComplexPoint, GridDomain, ScalarField};
pub use singular_sets::SingularSet;
