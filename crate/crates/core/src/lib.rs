//! Online change-point detection for sequences of network snapshots.
//!
//! A sliding window of graphs is modelled with a hierarchical random graph
//! whose connection probabilities carry Beta posteriors. Candidate change
//! points inside the window are scored with a posterior Bayes factor, and the
//! decision threshold is calibrated per window by parametric bootstrap.
//! Scalar baselines (mean degree, mean geodesic distance, mean local
//! clustering) run the identical decision machinery with a conjugate
//! Gaussian model.

pub mod baselines;
pub mod cli;
pub mod detect;
pub mod error;
pub mod evalkit;
pub mod fit;
pub mod ghrg;
pub mod graph;
pub mod leafset;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
