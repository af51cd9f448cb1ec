#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::suspicious_arithmetic_impl,
    clippy::too_many_arguments
)]
pub mod bayes;
pub mod check;
pub mod cli;
pub mod config;
pub mod error;
pub mod fpe;
pub mod generator;
pub mod geometry;
pub mod io;
pub mod jet;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
