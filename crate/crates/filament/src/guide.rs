//! The user guide, embedded so its examples are compiled and run.
//!
//! Each chapter of the book under `book/src/` is included here as module
//! documentation, so every fenced Rust snippet in the guide compiles and
//! runs under `cargo test`.  The book and the library cannot drift apart
//! silently.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/profile-model.md")]
pub mod profile_model {}

#[doc = include_str!("../../../book/src/quadrature.md")]
pub mod quadrature {}

#[doc = include_str!("../../../book/src/boundary-layer.md")]
pub mod boundary_layer {}

#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
