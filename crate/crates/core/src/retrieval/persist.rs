//! On-disk index format.
//!
//! Little-endian binary body:
//!
//! ```text
//! magic    b"CTXTFIDF"
//! u32      format version
//! u32 u32  n_min n_max
//! u8       lowercase
//! u32 u32  document count, feature count
//! features: str ngram, f64 idf           (in feature-id order)
//! docs:     str id, str text, u8 has_audio, [str audio],
//!           u32 nnz, nnz × (u32 feature id, f64 weight)
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8. A JSON sidecar
//! (`<index>.json`) repeats the build parameters with the SHA-256 of the body;
//! loading checks both.

use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Analyzer, DocMeta, TfIdfIndex, Weight};
use crate::error::{Error, Result};
use crate::textnorm::NormalizedText;

pub const INDEX_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"CTXTFIDF";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSidecar {
    pub format: String,
    pub version: u32,
    pub analyzer: Analyzer,
    pub num_docs: usize,
    pub num_features: usize,
    pub sha256: String,
}

pub fn sidecar_path(index_path: &Path) -> PathBuf {
    let mut s = index_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.write_u32::<LittleEndian>(s.len() as u32).expect("vec write");
    buf.extend_from_slice(s.as_bytes());
}

fn encode<F: Weight>(index: &TfIdfIndex<F>) -> Vec<u8> {
    let mut buf = Vec::new();
    let w = &mut buf;
    w.extend_from_slice(MAGIC);
    w.write_u32::<LittleEndian>(INDEX_FORMAT_VERSION).expect("vec write");
    w.write_u32::<LittleEndian>(index.analyzer.n_min as u32)
        .expect("vec write");
    w.write_u32::<LittleEndian>(index.analyzer.n_max as u32)
        .expect("vec write");
    w.write_u8(index.analyzer.lowercase as u8).expect("vec write");
    w.write_u32::<LittleEndian>(index.docs.len() as u32).expect("vec write");
    w.write_u32::<LittleEndian>(index.features.len() as u32)
        .expect("vec write");
    for (g, idf) in index.features.iter().zip(&index.idf) {
        put_str(w, g);
        w.write_f64::<LittleEndian>(idf.to_f64().unwrap_or(f64::NAN))
            .expect("vec write");
    }
    for (d, vec) in index.docs.iter().zip(&index.doc_vectors) {
        put_str(w, &d.id);
        put_str(w, d.text.as_str());
        match &d.audio {
            Some(p) => {
                w.write_u8(1).expect("vec write");
                put_str(w, &p.to_string_lossy());
            }
            None => w.write_u8(0).expect("vec write"),
        }
        w.write_u32::<LittleEndian>(vec.len() as u32).expect("vec write");
        for &(fid, weight) in vec {
            w.write_u32::<LittleEndian>(fid).expect("vec write");
            w.write_f64::<LittleEndian>(weight.to_f64().unwrap_or(f64::NAN))
                .expect("vec write");
        }
    }
    buf
}

/// Writes the index body to `path` and its sidecar next to it.
pub fn save_index<F: Weight>(index: &TfIdfIndex<F>, path: &Path) -> Result<IndexSidecar> {
    let body = encode(index);
    let sidecar = IndexSidecar {
        format: "ctxdecode-tfidf".into(),
        version: INDEX_FORMAT_VERSION,
        analyzer: index.analyzer,
        num_docs: index.docs.len(),
        num_features: index.features.len(),
        sha256: hex::encode(Sha256::digest(&body)),
    };
    fs::write(path, &body).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar)?;
    fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))?;
    Ok(sidecar)
}

struct Decoder<'a> {
    cur: Cursor<&'a [u8]>,
}

impl Decoder<'_> {
    fn fail(what: &str) -> Error {
        Error::IndexFormat(format!("truncated or corrupt body while reading {what}"))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        self.cur.read_u8().map_err(|_| Self::fail(what))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.cur.read_u32::<LittleEndian>().map_err(|_| Self::fail(what))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        self.cur.read_f64::<LittleEndian>().map_err(|_| Self::fail(what))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let remaining = self.cur.get_ref().len() as u64 - self.cur.position();
        if len as u64 > remaining {
            return Err(Self::fail(what));
        }
        let mut bytes = vec![0u8; len];
        self.cur.read_exact(&mut bytes).map_err(|_| Self::fail(what))?;
        String::from_utf8(bytes).map_err(|_| Error::IndexFormat(format!("{what} is not UTF-8")))
    }
}

fn decode<F: Weight>(body: &[u8]) -> Result<TfIdfIndex<F>> {
    if body.len() < MAGIC.len() || &body[..MAGIC.len()] != MAGIC {
        return Err(Error::IndexFormat("bad magic; not a ctxdecode index".into()));
    }
    let mut d = Decoder {
        cur: Cursor::new(&body[MAGIC.len()..]),
    };
    let version = d.u32("version")?;
    if version != INDEX_FORMAT_VERSION {
        return Err(Error::IndexFormat(format!(
            "unsupported index version {version} (expected {INDEX_FORMAT_VERSION})"
        )));
    }
    let analyzer = Analyzer {
        n_min: d.u32("n_min")? as usize,
        n_max: d.u32("n_max")? as usize,
        lowercase: d.u8("lowercase")? != 0,
    };
    analyzer.validate()?;
    let num_docs = d.u32("document count")? as usize;
    let num_features = d.u32("feature count")? as usize;

    let cast = |x: f64| F::from(x).ok_or_else(|| Error::IndexFormat("weight not representable".into()));
    let mut features = Vec::with_capacity(num_features.min(1 << 20));
    let mut idf = Vec::with_capacity(num_features.min(1 << 20));
    for _ in 0..num_features {
        features.push(d.string("feature")?);
        idf.push(cast(d.f64("idf")?)?);
    }
    let mut docs = Vec::with_capacity(num_docs.min(1 << 20));
    let mut vectors = Vec::with_capacity(num_docs.min(1 << 20));
    for _ in 0..num_docs {
        let id = d.string("doc id")?;
        let text = d.string("doc text")?;
        let audio = match d.u8("audio flag")? {
            0 => None,
            1 => Some(PathBuf::from(d.string("audio path")?)),
            other => return Err(Error::IndexFormat(format!("bad audio flag {other}"))),
        };
        let nnz = d.u32("nnz")? as usize;
        let mut v = Vec::with_capacity(nnz.min(1 << 16));
        for _ in 0..nnz {
            let fid = d.u32("feature id")?;
            v.push((fid, cast(d.f64("weight")?)?));
        }
        docs.push(DocMeta {
            id,
            text: NormalizedText::from_normalized(&text),
            audio,
        });
        vectors.push(v);
    }
    if (d.cur.position() as usize) != d.cur.get_ref().len() {
        return Err(Error::IndexFormat("trailing bytes after index body".into()));
    }
    TfIdfIndex::from_parts(analyzer, features, idf, docs, vectors)
}

/// Loads an index and verifies it against its sidecar. When `expected` is
/// given, the stored analyzer parameters must match it.
pub fn load_index<F: Weight>(path: &Path, expected: Option<Analyzer>) -> Result<TfIdfIndex<F>> {
    let body = fs::read(path).map_err(|e| Error::io(path, e))?;
    let side_path = sidecar_path(path);
    let side_raw = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let sidecar: IndexSidecar = serde_json::from_str(&side_raw)?;
    if sidecar.version != INDEX_FORMAT_VERSION {
        return Err(Error::IndexFormat(format!(
            "sidecar version {} unsupported (expected {INDEX_FORMAT_VERSION})",
            sidecar.version
        )));
    }
    let digest = hex::encode(Sha256::digest(&body));
    if digest != sidecar.sha256 {
        return Err(Error::IndexFormat("index body does not match sidecar digest".into()));
    }
    let index = decode::<F>(&body)?;
    if index.analyzer != sidecar.analyzer
        || index.docs.len() != sidecar.num_docs
        || index.features.len() != sidecar.num_features
    {
        return Err(Error::IndexFormat("sidecar parameters disagree with index body".into()));
    }
    if let Some(want) = expected {
        if want != index.analyzer {
            return Err(Error::IndexFormat(format!(
                "index was built with {:?}, requested {:?}",
                index.analyzer, want
            )));
        }
    }
    Ok(index)
}
