//! Exact nearest-neighbour retrieval over a fixed text collection.
//!
//! The built-in representation is a char_wb TF-IDF index ([`TfIdfIndex`]);
//! externally produced embeddings can be searched with [`DenseVectorSet`].
//! Ties are broken by ascending document id everywhere.

mod dense;
mod ngrams;
mod persist;
mod tfidf;

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use dense::{load_dense_jsonl, query_dense, DenseVectorSet};
pub use ngrams::{char_wb_ngrams, Analyzer};
pub use persist::{load_index, save_index, sidecar_path, IndexSidecar, INDEX_FORMAT_VERSION};
pub use tfidf::{build_index, query, TfIdfIndex};

use crate::error::{Error, Result};
use crate::textnorm::{normalize, NormalizationConfig, NormalizedText};

/// Floating-point type of index weights and similarities.
pub trait Weight: Float + std::fmt::Debug + Send + Sync + 'static {}

impl<T: Float + std::fmt::Debug + Send + Sync + 'static> Weight for T {}

/// A retrievable document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocMeta {
    pub id: String,
    pub text: NormalizedText,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audio: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalHit<F> {
    pub doc_id: String,
    pub similarity: F,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusLine {
    id: String,
    text: String,
    #[serde(default)]
    audio: Option<String>,
}

/// Reads a corpus in JSONL form: `{"id": str, "text": str, "audio": str?}`.
pub fn load_corpus_jsonl(path: &Path, cfg: &NormalizationConfig) -> Result<Vec<DocMeta>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusLine = serde_json::from_str(&line).map_err(|e| Error::Manifest {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(DocMeta {
            id: rec.id,
            text: normalize(&rec.text, cfg),
            audio: rec.audio.map(PathBuf::from),
        });
    }
    Ok(docs)
}

/// Similarity descending, then doc id ascending.
pub(crate) fn rank_hits<F: PartialOrd + Copy>(mut scored: Vec<(&str, F)>, k: usize) -> Vec<RetrievalHit<F>> {
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (id, similarity))| RetrievalHit {
            doc_id: id.to_string(),
            similarity,
            rank: i + 1,
        })
        .collect()
}
