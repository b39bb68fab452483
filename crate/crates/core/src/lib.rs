//! Bill enactment forecasting.
//!
//! Class-conditional CBOW language models (hierarchical softmax over a Huffman
//! tree) are inverted with Bayes' rule to score bill text; the text scores and
//! contextual predictors feed a stacked ensemble of a random forest, a gradient
//! boosted machine and an elastic-net logistic regression. Fitted systems are
//! evaluated walk-forward over congresses and explained with similarity queries,
//! partial rank correlation sensitivity analysis and sentence-position curves.

pub mod corpus;
pub mod embeddings;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod insights;
pub mod inversion;
pub mod learners;
pub mod sensitivity;
pub mod util;

pub use error::{Error, Result};
