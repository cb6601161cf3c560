//! Comparison methods: hidden Markov models fit by expectation-maximization
//! with cross-validated state count, and variable-length Markov models.

pub mod hmm;
pub mod vlmm;

pub use hmm::{cross_validate, em_train, hmm_word_distribution, CrossValidation, DenseHmm, EmConfig};
pub use vlmm::{vlmm_learn, ContextTree};
