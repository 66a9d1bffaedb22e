//! Topic-model toolkit for large, imbalanced diachronic text collections.
//!
//! The pipeline: ingest timestamped records ([`corpus`]), draw a per-year
//! balanced training subset ([`sampler`]), train LDA by collapsed Gibbs
//! sampling ([`lda`]) or a dynamic topic model ([`dtm`]), infer topic
//! proportions for every document of the full collection ([`inference`]),
//! aggregate them into per-period topic prominence ([`prominence`]), and
//! inspect how topics drift or stretch across time ([`diagnostics`]).
//! [`synthgen`] produces seeded corpora with planted dynamics to check all of
//! the above against known ground truth.
//!
//! Runnable walkthroughs live in `examples/`; the `diachron` binary exposes
//! the same steps as subcommands.

pub mod cli;
pub mod corpus;
pub mod diagnostics;
pub mod dtm;
pub mod error;
pub mod inference;
pub mod lda;
pub mod math;
pub mod prominence;
pub mod rng;
pub mod sampler;
pub mod synthgen;

pub use corpus::{BowDocument, Document, TimeSlicedCorpus, Vocabulary};
pub use dtm::{DtmConfig, DtmModel};
pub use error::{Error, Result};
pub use inference::{FoldInConfig, Theta};
pub use lda::{LdaConfig, LdaModel};
pub use prominence::{ProminenceSeries, TopicCluster};
