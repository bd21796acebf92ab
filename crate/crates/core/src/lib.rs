//! Context-aware decoding utilities for zero-shot ASR.
//!
//! The crate is model-agnostic: it never runs an acoustic model. It prepares
//! the text and audio that a promptable recognizer consumes, selects among the
//! n-best candidates of a non-promptable one, and measures the result.
//!
//! - [`textnorm`]: Arabic-oriented normalization applied before every comparison.
//! - [`metrics`]: edit distance, WER/CER, sentence BLEU and pooled corpus rates.
//! - [`retrieval`]: char_wb TF-IDF index and dense-vector nearest neighbours.
//! - [`prompt`]: prompt reordering, prompt/prefix plans, WAV concatenation.
//! - [`rerank`]: Top-1, proxy-guided Nearest (single or interpolated) and Oracle selection.
//! - [`harness`]: manifests, beam and interpolation sweeps, reports, synthetic corpora.
//! - [`providers`]: adapters for external ASR/TTS systems with an on-disk cache.
//!
//! Scores are generic over [`Score`]; `f64`, `f32` and the exact
//! [`Exact`] rational are supported out of the box.
//!
//! ```
//! use ctxdecode::rerank::{select_nearest, NBestList};
//! use ctxdecode::{normalize, DistanceMetric, ExactProxySet, NormalizationConfig};
//!
//! let cfg = NormalizationConfig::default();
//! let nbest = NBestList::from_texts(
//!     ["ذهب الولد", "ذهب الولد الى المدرسة"].iter().map(|s| normalize(s, &cfg)),
//!     2,
//! )?;
//! let proxy = ExactProxySet::single("proxy_a", normalize("ذهب الولد الى مدرسة", &cfg));
//! let chosen = select_nearest(&nbest, &proxy, DistanceMetric::Wer);
//! assert_eq!(chosen.chosen_rank, 2);
//! # Ok::<(), ctxdecode::Error>(())
//! ```

pub mod error;
pub mod harness;
pub mod metrics;
pub mod prompt;
pub mod providers;
pub mod rerank;
pub mod retrieval;
pub mod scalar;
pub mod textnorm;

pub use error::{Error, Result};
pub use metrics::{DistanceMetric, ScorePair};
pub use scalar::Score;
pub use textnorm::{normalize, NormalizationConfig, NormalizedText};

/// Exact rational scores; word- and character-level distances are ratios of
/// small integers so argmin decisions never depend on rounding.
pub type Exact = num_rational::Rational64;

pub type ProxySet64 = rerank::ProxySet<f64>;
pub type ExactProxySet = rerank::ProxySet<Exact>;
pub type Selection64 = rerank::SelectionResult<f64>;
pub type ExactSelection = rerank::SelectionResult<Exact>;

pub type TfIdfIndex64 = retrieval::TfIdfIndex<f64>;
pub type TfIdfIndex32 = retrieval::TfIdfIndex<f32>;
pub type DenseVectorSet64 = retrieval::DenseVectorSet<f64>;
pub type DenseVectorSet32 = retrieval::DenseVectorSet<f32>;
pub type RetrievalHit64 = retrieval::RetrievalHit<f64>;
