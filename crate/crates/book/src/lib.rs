//! Compiles the guide's code blocks as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/data-model.md")]
pub mod data_model {}
#[doc = include_str!("../../../book/src/corruption.md")]
pub mod corruption {}
#[doc = include_str!("../../../book/src/detection.md")]
pub mod detection {}
#[doc = include_str!("../../../book/src/quantification.md")]
pub mod quantification {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/backends.md")]
pub mod backends {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
