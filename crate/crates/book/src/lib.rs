//! The guide in `book/` compiled as doctests, so its snippets cannot drift
//! from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/nets.md")]
pub mod nets {}

#[doc = include_str!("../../../book/src/games.md")]
pub mod games {}

#[doc = include_str!("../../../book/src/strategies.md")]
pub mod strategies {}

#[doc = include_str!("../../../book/src/alignment.md")]
pub mod alignment {}

#[doc = include_str!("../../../book/src/soundness.md")]
pub mod soundness {}

#[doc = include_str!("../../../book/src/files-and-cli.md")]
pub mod files_and_cli {}
