//! The guide in `book/src`, one module per chapter, so that `cargo test`
//! compiles and runs every Rust snippet in it.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/hypergraphs.md")]
pub mod hypergraphs {}

#[doc = include_str!("../../../book/src/laplacian.md")]
pub mod laplacian {}

#[doc = include_str!("../../../book/src/checks.md")]
pub mod checks {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
