//! The guide in `book/`, compiled so its listings run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/material.md")]
pub mod material {}

#[doc = include_str!("../../../book/src/pcf-model.md")]
pub mod pcf_model {}

#[doc = include_str!("../../../book/src/bsfwm.md")]
pub mod bsfwm {}

#[doc = include_str!("../../../book/src/design-sweep.md")]
pub mod design_sweep {}

#[doc = include_str!("../../../book/src/compensation.md")]
pub mod compensation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
