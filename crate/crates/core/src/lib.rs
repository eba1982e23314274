//! Monte Carlo and closed-form toolkit for the zero cell of stationary
//! hyperplane tessellations and the one-bit codes they induce.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cellgeom;
pub mod codec;
pub mod experiments;
pub mod lp;
pub mod processes;
pub mod quad;
pub mod rng;
pub mod specfun;
pub mod stats;
