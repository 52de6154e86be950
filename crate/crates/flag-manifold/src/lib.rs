//! Riemannian geometry and optimization on real flag manifolds.
//!
//! A *flag* is a nested chain of linear subspaces `V_1 ⊂ ... ⊂ V_d` of fixed
//! dimensions `n_1 < ... < n_d` inside `R^n`. The set of all flags of a given
//! signature is a smooth compact manifold, `Flag(n_1, ..., n_d; n)`, which
//! contains the Grassmannian as the `d = 1` special case. This crate equips
//! it with everything a Riemannian optimizer needs, in closed form:
//!
//! * four extrinsic coordinate systems and conversions between them
//!   ([`point`]);
//! * tangent vectors, the canonical invariant metric, and tangent
//!   projections ([`tangent`]);
//! * geodesics via skew-symmetric matrix exponentials, arclength, geodesic
//!   distance, and parallel transport ([`geodesic`]);
//! * Riemannian gradients and Hessians assembled from Euclidean partial
//!   derivatives, plus Newton search directions ([`calculus`]);
//! * steepest-descent, conjugate-gradient, and Newton iterations with
//!   geodesic line searches ([`solver`]);
//! * ready-made benchmark objectives with analytic derivatives and a
//!   closed-form ground truth ([`objectives`]).
//!
//! The narrative guide under `book/` walks through the same material
//! chapter by chapter; its code listings are compiled as doc-tests via the
//! [`guide`] module.

pub mod calculus;
pub mod error;
pub mod geodesic;
pub mod guide;
mod linalg;
pub mod objectives;
pub mod point;
pub mod signature;
pub mod solver;
pub mod tangent;

pub use error::{FlagError, Result};
pub use nalgebra;
pub use point::{OrthogonalPoint, ProjectionPoint, ReducedProjectionPoint, StiefelPoint};
pub use signature::FlagSignature;
pub use tangent::{SkewGenerator, TangentVector};
