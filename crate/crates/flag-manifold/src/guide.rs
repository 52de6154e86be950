//! The long-form guide, mirrored from the mdbook sources under `book/` so
//! that every code listing in the book compiles and runs with `cargo test
//! --doc`. Read it rendered with `mdbook serve book`, or right here in
//! rustdoc.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/signatures-and-coordinates.md")]
pub mod signatures_and_coordinates {}

#[doc = include_str!("../../../book/src/tangent-vectors-and-metric.md")]
pub mod tangent_vectors_and_metric {}

#[doc = include_str!("../../../book/src/geodesics-and-transport.md")]
pub mod geodesics_and_transport {}

#[doc = include_str!("../../../book/src/gradients-and-hessians.md")]
pub mod gradients_and_hessians {}

#[doc = include_str!("../../../book/src/solvers.md")]
pub mod solvers {}

#[doc = include_str!("../../../book/src/benchmarks.md")]
pub mod benchmarks {}
