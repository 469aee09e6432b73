#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod bounds;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod io;
pub mod kernels;
pub mod mechanisms;
pub mod qrd;
pub mod spectral;

pub use error::{Error, Result};
