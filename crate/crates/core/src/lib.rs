//! Food-hazard event extraction from Arabic text.
//!
//! The pipeline is: [`text`] preprocessing, a BiLSTM-CRF [`tagger`] over
//! the 13-tag IOB set in [`tags`], span decoding and template filling in
//! [`extraction`], and scoring in [`eval`]. [`corpus`] and [`features`]
//! handle data files, vocabularies and embeddings.

#![allow(clippy::needless_range_loop)]

pub mod corpus;
pub mod error;
pub mod eval;
pub mod extraction;
pub mod features;
pub mod linalg;
pub mod rng;
pub mod synthetic;
pub mod tagger;
pub mod tags;
pub mod text;

pub use error::{Error, Result};
