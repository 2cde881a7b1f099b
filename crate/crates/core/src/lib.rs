//! Adaptive correction of noisy ordinal labels.
//!
//! Every training sample carries a Gaussian label distribution `(mu, sigma)`
//! over the ordinal ranks. K models are cross-trained on folds of the data and
//! their out-of-fold predictions iteratively move each sample's `mu` toward
//! the (class-debiased) prediction and adapt `sigma` to the observed error.
//!
//! Modules:
//! - [`label_dist`]: label distributions, discretization, KL loss
//! - [`noise`]: Gaussian asymmetric noise injection
//! - [`model`]: the model contract and a reference MLP
//! - [`correction`]: the correction engine and its retraining variants
//! - [`metrics`]: macro-averaged metrics and label quality
//! - [`data`]: datasets, synthetic benchmark, CSV, fold splits
//! - [`experiment`]: declarative end-to-end runs and report aggregation

pub mod correction;
pub mod data;
pub mod error;
pub mod experiment;
pub mod label_dist;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod seed;

pub use error::{Error, Result};
