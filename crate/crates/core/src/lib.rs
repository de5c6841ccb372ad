//! Random walk loop soups on the upper half-plane lattice.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocks;
pub mod cli;
pub mod cluster;
pub mod crossing;
pub mod error;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
