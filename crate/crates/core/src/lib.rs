//! Multivariate UGAT count distributions.
//!
//! The joint mass function on `x in N_0^r` is
//! `P(X = x) = prod alpha_{i-1}^{x_i} / ((sum x + beta)^s * S)` where `S` is the
//! normalizing series evaluated by [`series`]. The crate provides the
//! probability functions, moments and sampling ([`distribution`]), the named
//! one-dimensional members of the family ([`special`]), reliability measures
//! ([`reliability`]) and maximum-likelihood fitting ([`fit`]).

pub mod data;
pub mod distribution;
pub mod error;
pub mod fit;
#[cfg(test)]
mod oracle;
pub mod reliability;
pub mod series;
pub mod special;

pub use data::{parse_count_csv, parse_count_vector, parse_real_list, Dataset};
pub use distribution::{stirling_first, CountVector, UgatParams};
pub use error::{Error, Result};
pub use fit::{fit_mle, ExponentMode, FitConfig, FitResult, Interval, ParamEstimate};
pub use reliability::{AgingClass, ReliabilityReport, Verdict};
pub use series::{AlphaVector, SeriesAccuracy, SeriesParams};
pub use special::{ShiftedDistribution, Support};
