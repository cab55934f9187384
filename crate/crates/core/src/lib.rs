//! Detection of cyber-security events in noisy short text.
//!
//! The pipeline: ingest and filter a short-text corpus, train three word
//! embedding channels on it, compress them into per-token meta-embeddings
//! with a convolutional autoencoder, derive a per-tweet contextual vector
//! from topic, entity and relation tokens, and classify with a fused
//! CNN + BiLSTM + contextual model.

pub mod context;
pub mod data;
pub mod embeddings;
pub mod error;
pub mod gradcheck;
pub mod langid;
pub mod meta;
pub mod nn;
pub mod rng;
pub mod text;

pub use error::{Error, Result};
