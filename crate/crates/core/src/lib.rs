//! Low-rank MMSE filter estimation through a Kronecker-product (rank-`R`
//! matrix) parameterization, with the ridge parameter chosen automatically
//! by an approximate leave-one-out criterion.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor_ops`]: vectorization, Kronecker products and the structured
//!   matrices that linearize the bilinear model in either factor.
//! * [`ridge`]: empirical moments, the full-rank ridge baseline and its exact
//!   leave-one-out (PRESS) criterion.
//! * [`als`]: alternating least squares for the equal-penalty factor problem.
//! * [`alo`]: the approximate leave-one-out metric, the exact leave-one-out
//!   oracle and the search over the regularization parameter.
//! * [`experiment`]: signal generation, metrics and Monte Carlo sweeps.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alo;
pub mod als;
pub mod error;
pub mod experiment;
pub mod ridge;
pub mod search;
pub mod tensor_ops;

pub use alo::{AloEvaluation, AlphaSearchResult, SearchMode};
pub use als::{AlsConfig, AlsResult};
pub use error::{Error, Result};
pub use ridge::{DataSet, Moments};
pub use tensor_ops::{FactorPair, KroneckerShape, Side, StructuredFactorMatrix};
