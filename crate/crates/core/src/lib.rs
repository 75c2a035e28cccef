//! Open-world packet traffic classification.
//!
//! Keeps a payload-byte deep-learning classifier accurate when previously
//! unseen applications appear in live traffic:
//!
//! 1. [`classifier`] — dense / 1-D-CNN packet classifiers with per-packet
//!    confidence scores and feature maps, built on the [`nn`] engine.
//! 2. [`discriminator`] — confidence thresholding plus a self-trained binary
//!    discriminator that filters packets of unknown applications.
//! 3. [`labeler`] — PCA + K-means with BIC model selection that clusters the
//!    filtered packets into discovered classes and assigns labels.
//! 4. [`updater`] — merges the discovered classes into the training set and
//!    updates the classifier by transfer learning with a resized output.
//! 5. [`metrics`] — confusion matrices, pairwise precision/recall/F-beta,
//!    Rand index, and throughput benchmarking.
//!
//! Everything is deterministic from a single seed (see [`seed`]).

pub mod classifier;
pub mod discriminator;
pub mod error;
pub mod labeler;
pub mod metrics;
pub mod nn;
pub mod packet;
pub mod seed;
pub mod tensor;
pub mod updater;

pub use error::{Error, Result};
pub use tensor::Tensor;
