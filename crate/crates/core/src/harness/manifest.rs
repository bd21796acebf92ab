use std::borrow::Cow;
use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rerank::{Candidate, NBestList};
use crate::textnorm::{normalize, NormalizationConfig, NormalizedText};

/// One manifest line as stored on disk.
///
/// ```json
/// {"id": str, "reference": str, "audio": str?,
///  "nbest": {"<B>": [{"rank": int, "text": str, "score": float?}]},
///  "proxies": {"<system>": str}, "first_pass": str?}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub id: String,
    pub reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
    pub nbest: BTreeMap<String, Vec<ManifestCandidate>>,
    #[serde(default)]
    pub proxies: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_pass: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestCandidate {
    pub rank: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// A validated, normalized evaluation unit.
#[derive(Debug, Clone)]
pub struct UtteranceRecord {
    pub id: String,
    pub reference: NormalizedText,
    pub audio: Option<PathBuf>,
    /// Keyed by beam size.
    pub nbest: BTreeMap<usize, NBestList>,
    pub proxies: BTreeMap<String, NormalizedText>,
    /// Name of the proxy designated as first-pass transcription.
    pub first_pass: Option<String>,
}

impl UtteranceRecord {
    pub fn from_manifest(rec: ManifestRecord, cfg: &NormalizationConfig) -> std::result::Result<Self, String> {
        if rec.id.is_empty() {
            return Err("empty id".into());
        }
        if rec.nbest.is_empty() {
            return Err(format!("record `{}` has no n-best lists", rec.id));
        }
        let mut nbest = BTreeMap::new();
        for (key, cands) in rec.nbest {
            let beam: usize = key
                .parse()
                .ok()
                .filter(|&b| b > 0)
                .ok_or_else(|| format!("record `{}`: beam key `{key}` is not a positive integer", rec.id))?;
            let candidates = cands
                .into_iter()
                .map(|c| Candidate {
                    rank: c.rank,
                    text: normalize(&c.text, cfg),
                    score: c.score,
                })
                .collect();
            let list =
                NBestList::new(candidates, beam).map_err(|e| format!("record `{}`, beam {beam}: {e}", rec.id))?;
            nbest.insert(beam, list);
        }
        let proxies: BTreeMap<String, NormalizedText> =
            rec.proxies.into_iter().map(|(k, v)| (k, normalize(&v, cfg))).collect();
        if let Some(fp) = &rec.first_pass {
            if !proxies.contains_key(fp) {
                return Err(format!(
                    "record `{}`: first_pass `{fp}` is not among its proxies",
                    rec.id
                ));
            }
        }
        Ok(UtteranceRecord {
            id: rec.id,
            reference: normalize(&rec.reference, cfg),
            audio: rec.audio.map(PathBuf::from),
            nbest,
            proxies,
            first_pass: rec.first_pass,
        })
    }

    /// The list from the largest beam run.
    pub fn full_nbest(&self) -> &NBestList {
        self.nbest.values().next_back().expect("validated non-empty")
    }

    /// Candidates for beam size `b`: the native list when present, otherwise
    /// the first `b` candidates of the largest run if it has at least `b`.
    /// The flag is true when the prefix fallback was used.
    pub fn nbest_for(&self, b: usize) -> Option<(Cow<'_, NBestList>, bool)> {
        if let Some(list) = self.nbest.get(&b) {
            return Some((Cow::Borrowed(list), false));
        }
        let full = self.full_nbest();
        if full.len() >= b {
            let t = full.truncated(b).expect("b > 0 and list long enough");
            Some((Cow::Owned(t), true))
        } else {
            None
        }
    }
}

/// Parses JSONL from `reader`; `source` names it in error messages.
pub fn parse_manifest<R: Read>(reader: R, source: &str, cfg: &NormalizationConfig) -> Result<Vec<UtteranceRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let err = |message: String| Error::Manifest {
            path: source.to_string(),
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestRecord = serde_json::from_str(&line).map_err(|e| err(format!("malformed record: {e}")))?;
        if !seen.insert(rec.id.clone()) {
            return Err(err(format!("duplicate id `{}`", rec.id)));
        }
        out.push(UtteranceRecord::from_manifest(rec, cfg).map_err(err)?);
    }
    if out.is_empty() {
        log::warn!("{source}: manifest is empty");
    }
    Ok(out)
}

pub fn load_manifest(path: &Path, cfg: &NormalizationConfig) -> Result<Vec<UtteranceRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(file, &path.display().to_string(), cfg)
}
