//! Test harness for the guide in `book/`.
//!
//! mdBook cannot run a book's code samples against external crates, so
//! each chapter is attached here as a doc comment: `cargo test --doc -p
//! prola-guide` compiles and executes every fenced Rust block. A chapter
//! edit that breaks an example breaks the build, which is the point.
//!
//! One module per chapter so a failing doc test names its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/algorithm.md")]
pub mod algorithm {}

#[doc = include_str!("../../../book/src/environments.md")]
pub mod environments {}

#[doc = include_str!("../../../book/src/regret.md")]
pub mod regret {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
