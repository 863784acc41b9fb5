//! Core library of the vidsum toolkit: evaluation metrics and combinatorial
//! selection for multi-keyframe video summaries with captions.
//!
//! The toolkit operates entirely on precomputed artifacts — per-frame
//! feature matrices, candidate tables, likelihood tables — and performs no
//! model training or inference. It provides:
//!
//! - [`model`]: the shared data model (videos, reference annotations,
//!   feature matrices, predictions, candidates) and its file formats.
//! - [`akm`]: aligned keyframe matching (exact and cosine matchers) via
//!   exact dynamic programming, with a brute-force oracle.
//! - [`meteor`]: the exact-unigram stage of the METEOR caption metric.
//! - [`caption`]: the caption evaluation protocol — align predictions to
//!   references by cosine AKM, then score captions.
//! - [`selector`]: exact DP selection of N non-overlapping (or softly
//!   penalized) segment/caption candidates, with a brute-force oracle.
//! - [`beam`]: width-W beam search over chronological (frame, caption)
//!   pairs with pluggable scorers, plus an exhaustive oracle.
//! - [`filter`]: centroid-distance outlier filtering of reference
//!   annotations.
//! - [`pseudo`]: deterministic pseudo-video instance generation from
//!   image–caption collections.
//! - [`stats`]: dataset statistics.
//!
//! All numeric procedures are deterministic: f64 accumulation in fixed
//! order, explicit tie-breaks, and a fully specified random generator
//! ([`rng`]).

pub mod akm;
pub mod beam;
pub mod caption;
pub mod error;
pub mod filter;
pub mod io;
pub mod meteor;
pub mod model;
pub mod pseudo;
pub mod rng;
pub mod selector;
pub mod stats;
pub(crate) mod util;

pub use error::{Error, ErrorKind, Result};
