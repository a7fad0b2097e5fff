//! Label-map driven synthesis of abdominal training volumes.
//!
//! - [`volio`]: volumes, NIfTI-1 I/O, resampling and field-of-view changes.
//! - [`labelprep`]: source-to-target label mappings and CT preconditioning.
//! - [`gmmcluster`]: univariate Gaussian mixtures and label-map augmentation.
//! - [`synthgen`]: randomised image synthesis and deterministic sample streams.
//! - [`evalmetrics`]: Dice, HD95, aggregation and the Kruskal-Wallis test.
//!
//! Every random draw is keyed by an explicit seed; see [`seed`].

pub mod error;
pub mod evalmetrics;
pub mod filter;
pub mod gmmcluster;
pub mod labelprep;
pub mod seed;
pub mod synthgen;
pub mod volio;

pub use error::{Error, Result};

// The guide's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/volumes.md")]
    mod volumes {}
    #[doc = include_str!("../../../book/src/labels.md")]
    mod labels {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    mod clustering {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    mod synthesis {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
