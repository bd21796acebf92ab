use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{rank_hits, RetrievalHit, Weight};
use crate::error::{Error, Result};

/// Externally produced embeddings keyed by document id, all of one dimension.
#[derive(Debug, Clone)]
pub struct DenseVectorSet<F = f64> {
    dim: usize,
    ids: Vec<String>,
    data: Vec<F>,
    seen: HashSet<String>,
}

impl<F: Weight> DenseVectorSet<F> {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dense vector dimension must be positive".into()));
        }
        Ok(DenseVectorSet {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            seen: HashSet::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: &[F]) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector for `{id}` has dimension {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if !self.seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[F]> {
        let i = self.ids.iter().position(|x| x == id)?;
        Some(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    fn iter(&self) -> impl Iterator<Item = (&str, &[F])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }
}

fn cosine<F: Weight>(a: &[F], b: &[F]) -> F {
    let (mut dot, mut na, mut nb) = (F::zero(), F::zero(), F::zero());
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == F::zero() || nb == F::zero() {
        return F::zero();
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Exact top-`k` cosine search over every stored vector.
pub fn query_dense<F: Weight>(set: &DenseVectorSet<F>, query: &[F], k: usize) -> Result<Vec<RetrievalHit<F>>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if set.is_empty() {
        return Err(Error::Empty("dense vector set"));
    }
    if query.len() != set.dim {
        return Err(Error::InvalidInput(format!(
            "query has dimension {}, expected {}",
            query.len(),
            set.dim
        )));
    }
    let scored = set.iter().map(|(id, v)| (id, cosine(query, v))).collect();
    Ok(rank_hits(scored, k))
}

#[derive(Deserialize)]
struct DenseLine {
    id: String,
    vector: Vec<f64>,
}

/// Reads `{"id": str, "vector": [number, ...]}` lines; the first line fixes
/// the dimension.
pub fn load_dense_jsonl<F: Weight>(path: &Path) -> Result<DenseVectorSet<F>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut set: Option<DenseVectorSet<F>> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DenseLine = serde_json::from_str(&line).map_err(|e| Error::Manifest {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let v: Vec<F> = rec.vector.iter().map(|&x| F::from(x).unwrap_or_else(F::nan)).collect();
        let set = match &mut set {
            Some(s) => s,
            None => set.insert(DenseVectorSet::new(v.len())?),
        };
        set.insert(rec.id, &v)?;
    }
    set.ok_or(Error::Empty("dense vector file"))
}
