//! Family-based association testing of multivariate phenotypes with
//! missing observations.
//!
//! The crate simulates sib-pair families under a two-locus (marker + QTL)
//! linkage-disequilibrium model, generates traits, masks them according to
//! a missingness pattern, imputes the masked cells by conditional GLMs and
//! runs the logistic-regression TDT on each dataset variant. The
//! [`harness`] module ties these together into Monte Carlo power studies.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod error;
pub mod genetics;
pub mod glm;
pub mod harness;
pub mod imputation;
pub mod missingness;
pub mod pedigree;
pub mod rng;
pub mod special;
pub mod stats;
pub mod tdt;
pub mod traits;

pub use error::{Error, Result};
