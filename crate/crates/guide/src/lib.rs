//! The evipath guide, compiled as doc-tests.
//!
//! Each module includes one chapter of the mdbook under `book/src`, so every
//! Rust snippet in the book runs with `cargo test -p evipath-guide`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/embeddings.md")]
pub mod embeddings {}

#[doc = include_str!("../../../book/src/specificity.md")]
pub mod specificity {}

#[doc = include_str!("../../../book/src/selection.md")]
pub mod selection {}

#[doc = include_str!("../../../book/src/prompts.md")]
pub mod prompts {}

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}

#[doc = include_str!("../../../book/src/ablations.md")]
pub mod ablations {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
