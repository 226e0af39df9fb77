//! The user guide's chapters, compiled as doc-tests.
//!
//! Every fenced Rust block in `book/src/*.md` runs under
//! `cargo test --doc`, so the guide cannot drift from the API it
//! documents. One module per chapter keeps failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/time-and-clocks.md")]
pub mod time_and_clocks {}

#[doc = include_str!("../../../book/src/metastability.md")]
pub mod metastability {}

#[doc = include_str!("../../../book/src/gray-pointers.md")]
pub mod gray_pointers {}

#[doc = include_str!("../../../book/src/fifo-designs.md")]
pub mod fifo_designs {}

#[doc = include_str!("../../../book/src/pausible-clocking.md")]
pub mod pausible_clocking {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness_guide {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli_guide {}
