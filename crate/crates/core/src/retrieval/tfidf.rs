use std::collections::{HashMap, HashSet};

use super::{rank_hits, Analyzer, DocMeta, RetrievalHit, Weight};
use crate::error::{Error, Result};
use crate::textnorm::NormalizedText;

/// Char n-gram TF-IDF index with L2-normalized document vectors.
///
/// Weights are `tf · idf` with raw counts for tf and
/// `idf = ln((1 + N) / (1 + df)) + 1`. Feature ids are assigned in order of
/// first occurrence, so the same corpus order always yields the same index.
#[derive(Debug, Clone)]
pub struct TfIdfIndex<F = f64> {
    pub(super) analyzer: Analyzer,
    pub(super) vocab: HashMap<String, u32>,
    pub(super) features: Vec<String>,
    pub(super) idf: Vec<F>,
    pub(super) docs: Vec<DocMeta>,
    pub(super) doc_vectors: Vec<Vec<(u32, F)>>,
    pub(super) postings: Vec<Vec<(u32, F)>>,
    pub(super) by_id: HashMap<String, u32>,
}

impl<F: Weight> TfIdfIndex<F> {
    pub fn analyzer(&self) -> Analyzer {
        self.analyzer
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn docs(&self) -> &[DocMeta] {
        &self.docs
    }

    pub fn doc(&self, id: &str) -> Option<&DocMeta> {
        self.by_id.get(id).map(|&i| &self.docs[i as usize])
    }

    pub fn feature_id(&self, ngram: &str) -> Option<u32> {
        self.vocab.get(ngram).copied()
    }

    pub fn idf(&self, ngram: &str) -> Option<F> {
        self.feature_id(ngram).map(|f| self.idf[f as usize])
    }

    /// Sparse unit vector of a stored document, sorted by feature id.
    pub fn doc_vector(&self, id: &str) -> Option<&[(u32, F)]> {
        self.by_id.get(id).map(|&i| self.doc_vectors[i as usize].as_slice())
    }

    /// TF-IDF vector of arbitrary text against this index's vocabulary;
    /// unseen n-grams are ignored.
    pub fn vectorize(&self, text: &NormalizedText) -> Vec<(u32, F)> {
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for g in self.analyzer.ngrams(text) {
            if let Some(&fid) = self.vocab.get(&g) {
                *counts.entry(fid).or_insert(0) += 1;
            }
        }
        weigh(counts, &self.idf)
    }

    pub(super) fn from_parts(
        analyzer: Analyzer,
        features: Vec<String>,
        idf: Vec<F>,
        docs: Vec<DocMeta>,
        doc_vectors: Vec<Vec<(u32, F)>>,
    ) -> Result<Self> {
        let vocab: HashMap<String, u32> = features
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i as u32))
            .collect();
        if vocab.len() != features.len() {
            return Err(Error::IndexFormat("duplicate feature in vocabulary".into()));
        }
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if by_id.insert(d.id.clone(), i as u32).is_some() {
                return Err(Error::DuplicateId(d.id.clone()));
            }
        }
        let mut postings = vec![Vec::new(); features.len()];
        for (d, vec) in doc_vectors.iter().enumerate() {
            for &(fid, w) in vec {
                let slot = postings
                    .get_mut(fid as usize)
                    .ok_or_else(|| Error::IndexFormat(format!("feature id {fid} out of range")))?;
                slot.push((d as u32, w));
            }
        }
        Ok(TfIdfIndex {
            analyzer,
            vocab,
            features,
            idf,
            docs,
            doc_vectors,
            postings,
            by_id,
        })
    }
}

fn weigh<F: Weight>(counts: HashMap<u32, u32>, idf: &[F]) -> Vec<(u32, F)> {
    let mut v: Vec<(u32, F)> = counts
        .into_iter()
        .map(|(fid, tf)| (fid, F::from(tf).expect("count fits") * idf[fid as usize]))
        .collect();
    v.sort_unstable_by_key(|&(fid, _)| fid);
    let norm = v.iter().fold(F::zero(), |acc, &(_, w)| acc + w * w).sqrt();
    if norm > F::zero() {
        for (_, w) in &mut v {
            *w = *w / norm;
        }
    }
    v
}

/// Builds an index over `corpus`. Document ids must be unique.
pub fn build_index<F: Weight>(corpus: Vec<DocMeta>, analyzer: Analyzer) -> Result<TfIdfIndex<F>> {
    analyzer.validate()?;
    if corpus.is_empty() {
        return Err(Error::Empty("retrieval corpus"));
    }
    let mut seen = HashSet::with_capacity(corpus.len());
    for d in &corpus {
        if !seen.insert(d.id.as_str()) {
            return Err(Error::DuplicateId(d.id.clone()));
        }
    }

    let mut vocab: HashMap<String, u32> = HashMap::new();
    let mut features: Vec<String> = Vec::new();
    let mut df: Vec<u64> = Vec::new();
    let mut doc_counts: Vec<HashMap<u32, u32>> = Vec::with_capacity(corpus.len());
    for d in &corpus {
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for g in analyzer.ngrams(&d.text) {
            let fid = match vocab.get(&g) {
                Some(&fid) => fid,
                None => {
                    let fid = features.len() as u32;
                    vocab.insert(g.clone(), fid);
                    features.push(g);
                    df.push(0);
                    fid
                }
            };
            let c = counts.entry(fid).or_insert(0);
            if *c == 0 {
                df[fid as usize] += 1;
            }
            *c += 1;
        }
        doc_counts.push(counts);
    }

    let n = F::from(corpus.len() as u64 + 1).expect("corpus size fits");
    let idf: Vec<F> = df
        .iter()
        .map(|&d| (n / F::from(d + 1).expect("df fits")).ln() + F::one())
        .collect();
    let doc_vectors = doc_counts.into_iter().map(|c| weigh(c, &idf)).collect();
    TfIdfIndex::from_parts(analyzer, features, idf, corpus, doc_vectors)
}

/// Exact top-`k` cosine search. A query with no known n-grams returns no hits.
pub fn query<F: Weight>(index: &TfIdfIndex<F>, text: &NormalizedText, k: usize) -> Result<Vec<RetrievalHit<F>>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if index.is_empty() {
        return Err(Error::Empty("retrieval index"));
    }
    let q = index.vectorize(text);
    if q.is_empty() {
        return Ok(Vec::new());
    }
    let mut scores: HashMap<u32, F> = HashMap::new();
    for &(fid, qw) in &q {
        for &(doc, dw) in &index.postings[fid as usize] {
            let s = scores.entry(doc).or_insert_with(F::zero);
            *s = *s + qw * dw;
        }
    }
    let scored = scores
        .into_iter()
        .map(|(doc, s)| (index.docs[doc as usize].id.as_str(), s))
        .collect();
    Ok(rank_hits(scored, k))
}
