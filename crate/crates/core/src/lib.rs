//! Simulation and analysis of two-photon interference at a beam splitter,
//! observed with photon-number-resolving energy detectors.
//!
//! The crate is organised bottom-up:
//!
//! * [`biphoton`] builds the spectral amplitude of a down-converted photon pair
//!   and moves it between the frequency and time domains.
//! * [`interference`] turns a temporal amplitude into same-port and cross-port
//!   coincidence probabilities as a function of the relative delay.
//! * [`detector`] is a phenomenological transition-edge sensor: binomial
//!   efficiency loss, Gaussian energy smearing, thermal-window pileup and
//!   photon-number inference.
//! * [`acquisition`] runs the Monte Carlo experiment and emits time-tagged
//!   detection events.
//! * [`analysis`] reconstructs coincidence probabilities from an event stream,
//!   calibrates detector efficiency from heralded pairs and fits the
//!   triangular interference feature.
//!
//! Everything here is `no_std` and only needs an allocator. File formats and
//! the command-line driver live in the `homsim` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod acquisition;
pub mod analysis;
pub mod biphoton;
pub mod detector;
mod error;
pub mod fft;
pub mod interference;
mod math;
mod optimize;

pub use error::{Error, Result};
pub use math::{sinc, triangle};
