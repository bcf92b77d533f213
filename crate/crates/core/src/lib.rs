// SPDX-License-Identifier: MIT OR Apache-2.0

//! Quickest change detection for a sensor that pays one unit of harvested
//! energy per observation.
//!
//! The crate is organised bottom-up:
//!
//! - [`observation`]: pre/post-change densities, log-likelihood ratios and the
//!   censored observation `Z_k` (a real sample or the trivial marker).
//! - [`energy`]: arrival pmfs, the finite battery recursion, and the battery
//!   Markov chain with its stationary distribution.
//! - [`policy`]: causal sampling rules (immediate, generalized immediate,
//!   save-test).
//! - [`detector`]: log-domain CUSUM (Page) and one-sided SPRT statistics plus
//!   the two-sided excursion used by the renewal formulas.
//! - [`engine`]: full-system trials, Monte Carlo estimators for delays and
//!   run lengths, threshold calibration and the analytic/asymptotic formulas.
//! - [`experiment`]: presets, config parsing, CSV output and text summaries
//!   used by the `quickdet` binary.

#![forbid(unsafe_code)]

pub mod detector;
pub mod energy;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod observation;
pub mod policy;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};
