//! Emoji and solidarity analysis for crisis-event tweet corpora.
//!
//! Stages: ingest a JSONL corpus, label tweets through an annotated hashtag
//! lexicon, train solidarity classifiers, count and rank emoji, split by
//! user geography, build co-occurrence networks and day-by-day diffusion
//! series. The `analyze` binary wires the stages together.

pub mod classify;
pub mod corpus;
pub mod diffusion;
pub mod emoji;
pub mod error;
pub mod geo;
pub mod labeling;
pub mod network;
pub mod pipeline;
mod xml;

pub use error::{Error, Result};
