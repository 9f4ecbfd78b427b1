//! Income inequality against population size.
//!
//! The crate computes discrete Gini coefficients, fits Gini on a polynomial in
//! `ln(population)` through the origin with heteroskedasticity-consistent
//! inference, predicts the "target" Gini for a population, and classifies
//! countries by how far their observed Gini sits from that target.
//!
//! Modules:
//!
//! - [`dataset`] - country records, CSV ingestion, the bundled 2012 table
//! - [`gini`] - Gini coefficient, Lorenz curve, subsample-bias experiment
//! - [`regress`] - least squares with HC0/HC1 covariance and t inference
//! - [`special`] - log-gamma, regularized incomplete beta, Student-t tails
//! - [`targetmodel`] - the `{ln P, (ln P)^2}` model and alternative forms
//! - [`report`] - classification bands and the reproduction check
//! - `cli` - the `popgini` executable (feature `cli`)

#[cfg(feature = "cli")]
pub mod cli;
pub mod dataset;
pub mod error;
pub mod gini;
mod linalg;
pub mod regress;
pub mod report;
pub mod special;
pub mod targetmodel;

pub use dataset::{CountryRecord, Dataset};
pub use error::{Error, Result};
pub use gini::{gini_coefficient, max_gini, IncomeSample, SubsampleReport};
pub use regress::{FitResult, HcVariant, ModelSpec, Regressor};
pub use targetmodel::TargetGiniModel;
