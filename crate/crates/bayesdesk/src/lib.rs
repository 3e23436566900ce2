//! Desk-scale Bayesian computation.
//!
//! Conjugate updating, Monte Carlo and MCMC kernels, capture-recapture
//! posteriors, two-component normal mixtures, AR/MA/hidden-Markov tools and
//! Ising/Potts lattice samplers. Every stochastic routine takes an explicit
//! [`RngState`] so that runs are reproducible bit for bit.
//!
//! ```
//! use bayesdesk::capture::{darroch_posterior, TwoStageData};
//!
//! let data = TwoStageData::new(25, 25, 5).unwrap();
//! let post = darroch_posterior(&data, None).unwrap();
//! assert!((post.mean() - 130.91).abs() < 0.01);
//! ```

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capture;
pub mod conjugate;
pub mod diagnostics;
pub mod dist;
mod error;
pub mod fields;
pub mod linalg;
pub mod mcmc;
pub mod mixtures;
pub mod montecarlo;
pub mod numeric;
pub mod quad;
mod rng;
pub mod timeseries;

pub use error::{Error, Result};
pub use rng::RngState;
