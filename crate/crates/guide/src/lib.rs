//! The user guide. Each chapter is compiled as a module so `cargo test`
//! runs its examples.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod chapter1 {}

#[doc = include_str!("../../../book/src/generating.md")]
pub mod chapter2 {}

#[doc = include_str!("../../../book/src/pruning.md")]
pub mod chapter3 {}

#[doc = include_str!("../../../book/src/amoeba.md")]
pub mod chapter4 {}

#[doc = include_str!("../../../book/src/refining.md")]
pub mod chapter5 {}

#[doc = include_str!("../../../book/src/edp.md")]
pub mod chapter6 {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod chapter7 {}
