//! Selection of compact finite-state feature maps for sequence prediction.
//!
//! A feature map sends each history `y_1..y_n` to a state through a
//! deterministic update `s_t = psi(s_{t-1}, y_t)`. Given data, every candidate
//! map induces a maximum-likelihood hidden Markov model; candidates are ranked
//! by a penalized code length (`Cost`, `ICost` or `OCost`) and the minimizer
//! is selected.
//!
//! Modules:
//! - [`seq`]: alphabets, sequences, substring frequencies, ergodicity diagnostics
//! - [`feature_map`]: suffix-tree and general finite-state maps
//! - [`estimation`]: empirical HMMs, penalties and cost criteria
//! - [`source`]: generative models, forward algorithm, stationary distributions, cross-entropy
//! - [`selection`]: model selection and consistency experiments
//! - [`active`]: environments driven by actions, rollouts and reward-based selection
//! - [`io`]: JSON file forms
//!
//! All log-probabilities are natural logarithms (nats).

pub mod active;
pub mod error;
pub mod estimation;
pub mod feature_map;
pub mod io;
pub mod rng;
pub mod selection;
pub mod seq;
pub mod source;

pub use error::{Error, Result};
