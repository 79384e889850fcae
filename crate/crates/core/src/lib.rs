//! Twin-beam squeezed-light readout of micro-cantilever displacement.
//!
//! [`quanta`] holds the twin-beam photon statistics, [`spatial`] maps them
//! onto a split photodiode, [`mechanics`] turns photocurrent noise into
//! displacement noise, [`timeseries`] simulates and analyzes detector
//! records, and [`experiments`] bundles them into reproducible scenarios.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod mechanics;
pub mod quanta;
pub mod spatial;
pub mod timeseries;
pub mod units;

pub use error::{Error, Result};
