//! The chapters of `book/`, compiled here so that every snippet runs as a doctest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/chains.md")]
pub mod chains {}

#[doc = include_str!("../../../book/src/effective.md")]
pub mod effective {}

#[doc = include_str!("../../../book/src/propagation.md")]
pub mod propagation {}

#[doc = include_str!("../../../book/src/free-fermions.md")]
pub mod free_fermions {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../README.md")]
pub mod readme {}
