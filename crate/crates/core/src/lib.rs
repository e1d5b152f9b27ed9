//! Popularity prediction and ranking for news streams.
//!
//! The crate predicts how often a news item will be shared in the two days
//! after publication, with a focus on the rare, very popular items. The
//! predictions are turned into news rankings, optionally fused with an
//! official ranking, and scored with utility-based regression metrics and
//! rank-quality metrics under temporal Monte Carlo protocols.
//!
//! Pipeline, module by module:
//!
//! * [`corpus`]: news items, ranking snapshots, JSON-lines IO and a seeded
//!   synthetic stream generator.
//! * [`features`]: headline bag-of-words and lexicon sentiment scores.
//! * [`relevance`]: the relevance function over tweet counts and the
//!   rare/normal partition.
//! * [`resample`]: SMOTE for regression and random under-sampling.
//! * [`learners`]: linear and random-forest regressors.
//! * [`regeval`]: precision, recall and F1 over rare events.
//! * [`ranking`]: ground-truth, predicted, fused and baseline rankings.
//! * [`rankeval`]: P@k, AP, R-precision, reciprocal rank and NDCG@k.
//! * [`harness`]: Monte Carlo windows and the four evaluation protocols.
//! * [`cli`]: the `newsrank` command-line front end.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod features;
pub mod harness;
pub mod learners;
pub mod rankeval;
pub mod ranking;
pub mod regeval;
pub mod relevance;
pub mod resample;
mod seed;

pub use error::{Error, Result};

/// Version string echoed into every written artifact.
pub const VERSION: &str = concat!("newsrank ", env!("CARGO_PKG_VERSION"));
