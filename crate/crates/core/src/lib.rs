//! # krnorm
//!
//! Kantorovich-Rubinstein transshipment norms for balanced discrete measures
//! and for first-order distributions written as divergences of structured
//! vector measures.
//!
//! The norm W¹(f) is computed along three routes that check each other:
//!
//! | Route | Module | Problem |
//! |-------|--------|---------|
//! | minimal connection | [`matchnorm`] | min Σ m·\|x − y\| over transport plans |
//! | dual potential | [`matchnorm`] | max ⟨f, u⟩ over 1-Lipschitz u |
//! | minimal flow | [`beckmann`] | min ‖λ‖ subject to −div λ = f |
//!
//! On top of these sit generalized transport plans on Ω × S^{N−1} × [0, ∞)
//! ([`genplan`]), transport densities rasterized on grids ([`density`]) and
//! the tangential/normal splitting that measures how far a distribution is
//! from the closure of balanced measures ([`sharpspace`]).
//!
//! ## Sign convention
//!
//! Throughout, ⟨−div ν, φ⟩ = ∫ ∇φ · dν. A vector measure ν with −div ν = f
//! therefore points from the negative part of f toward the positive part,
//! i.e. against the direction in which mass is transported.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use thiserror::Error;

pub mod beckmann;
pub mod density;
pub mod flow;
pub mod genplan;
pub mod geometry;
pub mod grid;
pub mod instances;
pub mod lp;
pub mod matchnorm;
pub mod measures;
pub mod quadrature;
pub mod sharpspace;

pub use geometry::{Domain, Point, Vector};
pub use grid::Grid;
pub use measures::{
    DipoleChain, Distribution, SignedAtomMeasure, StructuredVectorMeasure, TestFunction,
};

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("measure is not balanced: total mass {total:e} exceeds tolerance {tolerance:e}")]
    Unbalanced { total: f64, tolerance: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("tail bound {bound:e} cannot be brought under the requested truncation {requested:e} with the listed pairs")]
    TailTooLarge { bound: f64, requested: f64 },

    #[error("epsilon {requested:e} is below the smallest certifiable tail {floor:e}")]
    EpsilonBelowFloor { requested: f64, floor: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear program: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
