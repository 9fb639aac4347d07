//! The chapters of the book, included as documentation so that
//! `cargo test --doc` runs every Rust sample against the current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/finite_volume.md")]
pub mod finite_volume {}
#[doc = include_str!("../../../book/src/galerkin.md")]
pub mod galerkin {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/acceptance.md")]
pub mod acceptance {}
