//! Variable-order fractional relaxation, renewal processes and continuous-time
//! random walks, evaluated through numerical Laplace inversion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cli;
pub mod covariance;
pub mod ctrw;
pub mod error;
pub mod kernels;
pub mod laplace;
pub mod mittag_leffler;
pub mod order;
pub mod quad;
pub mod relaxation;
pub mod renewal;
pub mod sampled;
pub mod special;

pub use error::{Error, Result};
pub use laplace::{ContourPlan, Method};
pub use order::OrderFunction;
pub use sampled::{SampledFunction, TailPolicy};
