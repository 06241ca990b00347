//! Factor-augmented VARs with grouped sparse autoencoder factors.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod bvar;
pub mod data;
pub mod factors;
pub mod forecast;
pub mod gsae;
pub mod irf;
pub mod numeric;
pub mod pipeline;
