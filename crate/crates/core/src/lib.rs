// Input guards are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod borchers;
pub mod cli;
pub mod config;
pub mod error;
pub mod fock;
pub mod innerfunc;
pub mod lightray;
pub mod massive;
pub mod phase;
pub mod report;
pub mod scatter;
pub mod smatrix;
pub mod sparse;
pub mod unitary;

pub use error::{Error, Result};
