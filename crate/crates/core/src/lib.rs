//! Dynamical demand-response models for real-time pricing.
//!
//! The crate covers the full loop: a population of price-responsive customers
//! produces hourly price/consumption data ([`sim`]), the data is turned into
//! supervised structures ([`features`]), linear, feedforward, recurrent and
//! LSTM models learn the price to aggregate-consumption mapping ([`nn`]), and
//! [`metrics`] scores them. [`pipeline`] wires the stages together behind the
//! `drmodel` command-line front-end.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod features;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod par;
pub mod pipeline;
pub mod sim;

pub use error::{Error, Result};
