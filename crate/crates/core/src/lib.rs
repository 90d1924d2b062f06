//! Chunk-level open information extraction.
//!
//! A sentence is represented as a sequence of typed, non-overlapping chunks.
//! This crate reads and writes the corpus formats, analyses how chunk
//! boundaries line up with gold tuple spans, lifts token dependency trees to
//! chunk graphs, trains a chunker and a chunk-level tuple extractor on top of
//! precomputed token embeddings, and scores extractions.

pub mod alignment;
pub mod autodiff;
pub mod config;
pub mod chunker;
pub mod depgraph;
pub mod error;
pub mod eval;
pub mod extractor;
pub mod io;
pub mod model;
pub mod par;
pub mod synth;
pub mod toy;
pub mod train;
pub mod vocab;

pub use error::{Error, Result};
