//! Fuel-optimal control of a refrigerated semi-trailer that recharges its
//! battery through an axle generator by towing against the tractor.
//!
//! The pipeline runs drive cycle -> tractor powertrain -> trailer battery ->
//! energy-management strategy -> sweep and comparison reports.

// Parameter checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cycle;
pub mod ems;
pub mod error;
pub mod harness;
mod par;
pub mod powertrain;
pub mod simulate;
pub mod trailer;

pub use error::{Error, Result};
