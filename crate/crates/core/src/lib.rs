#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod auction;
pub mod audit;
pub mod cli;
pub mod config;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod rng;
mod ser;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
