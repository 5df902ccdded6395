//! Geodesic slice sampling on built-in Riemannian manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`manifold`]: geodesics, tangent directions and metadata for Euclidean
//!   space, round spheres and flat tori.
//! * [`target`]: unnormalised densities, their level-set function and exact
//!   reference samplers.
//! * [`slice1d`]: stepping-out and reeled shrinkage along a geodesic line.
//! * [`kernel`]: the geodesic slice sampler transition and chain execution.
//! * [`bounds`]: explicit uniform-ergodicity constants.
//! * [`harness`]: statistical checks of the convergence bound and of the
//!   one-dimensional building blocks.

// Parameter checks are written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod manifold;
pub mod rng;
pub mod slice1d;
pub mod target;

pub use error::{Error, Result};
pub use manifold::{Geometry, Manifold, ManifoldInfo, Point, TangentVector};
pub use slice1d::{Interval, IntervalSet, StepBudget, StepOutParams};
pub use target::Target;

/// Crate version, recorded in every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
