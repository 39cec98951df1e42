//! Doc-tests for the guide in `book/`. Each chapter is included verbatim so
//! its Rust snippets compile and run under `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/bits.md")]
pub mod bits {}

#[doc = include_str!("../../../book/src/encoding.md")]
pub mod encoding {}

#[doc = include_str!("../../../book/src/dictionary.md")]
pub mod dictionary {}

#[doc = include_str!("../../../book/src/learning.md")]
pub mod learning {}

#[doc = include_str!("../../../book/src/selection.md")]
pub mod selection {}

#[doc = include_str!("../../../book/src/files.md")]
pub mod files {}
