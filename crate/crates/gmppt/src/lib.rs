//! Simulation of partially shaded photovoltaic arrays and a fast global
//! maximum power point tracker built on step-wise power upper bounds.
//!
//! * [`plant`] evaluates single-diode modules, bypassed strings and arrays
//!   and provides the brute-force ground truth.
//! * [`tracker`] holds the measurement port abstraction and the bounded
//!   global search.
//! * [`baseline`] holds plain perturb-and-observe and a fixed-interval
//!   peak-scanning tracker used for comparison.
//! * [`harness`] runs scenarios, random sweeps and writes reports.

pub mod baseline;
pub mod error;
pub mod harness;
pub mod plant;
mod solve;
pub mod tracker;

pub use error::{Error, Result};
