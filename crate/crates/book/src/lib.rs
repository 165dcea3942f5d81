//! The chapters of the guide in `book/src`, included as documentation so
//! that `cargo test` compiles and runs every Rust code block in them.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod getting_started {}

#[doc = include_str!("../../../book/src/configuration.md")]
pub mod configuration {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/synthetic.md")]
pub mod synthetic {}

#[doc = include_str!("../../../book/src/knockoffs.md")]
pub mod knockoffs {}

#[doc = include_str!("../../../book/src/forecaster.md")]
pub mod forecaster {}

#[doc = include_str!("../../../book/src/inference.md")]
pub mod inference {}

#[doc = include_str!("../../../book/src/results.md")]
pub mod results {}
