//! Seeded synthetic corpora for desk-scale evaluation.
//!
//! Each utterance has a random reference drawn from a vocabulary of
//! Arabic-letter pseudo-words. Every n-best candidate and every proxy is an
//! independent corruption of the reference: each word is deleted with
//! probability `del_rate`, otherwise substituted with probability
//! `sub_rate`, and a random word is inserted after it with probability
//! `ins_rate`. The generator is ChaCha8 seeded from `seed`.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{ManifestCandidate, ManifestRecord};

const LETTERS: &[char] = &[
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق', 'ك', 'ل',
    'م', 'ن', 'ه', 'و', 'ي',
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub sub_rate: f64,
    pub del_rate: f64,
    pub ins_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub utterances: usize,
    pub nbest: usize,
    pub vocab_size: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub candidate: Corruption,
    pub proxy: Corruption,
    /// Names of the proxy systems; each gets an independent corruption.
    pub proxy_names: Vec<String>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            utterances: 1000,
            nbest: 10,
            vocab_size: 400,
            min_words: 5,
            max_words: 14,
            candidate: Corruption {
                sub_rate: 0.15,
                del_rate: 0.04,
                ins_rate: 0.03,
            },
            proxy: Corruption {
                sub_rate: 0.08,
                del_rate: 0.02,
                ins_rate: 0.02,
            },
            proxy_names: vec!["proxy_a".into(), "proxy_b".into()],
            seed: 20240601,
        }
    }
}

fn vocabulary(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut words = Vec::with_capacity(size);
    while words.len() < size {
        let len = rng.gen_range(2..=6);
        let w: String = (0..len).map(|_| *LETTERS.choose(rng).expect("letters")).collect();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

fn corrupt(rng: &mut ChaCha8Rng, words: &[&str], vocab: &[String], c: Corruption) -> String {
    let mut out: Vec<&str> = Vec::with_capacity(words.len() + 2);
    for &w in words {
        if rng.gen_bool(c.del_rate) {
            // deleted
        } else if rng.gen_bool(c.sub_rate) {
            let mut s = vocab.choose(rng).expect("vocab").as_str();
            while s == w && vocab.len() > 1 {
                s = vocab.choose(rng).expect("vocab").as_str();
            }
            out.push(s);
        } else {
            out.push(w);
        }
        if rng.gen_bool(c.ins_rate) {
            out.push(vocab.choose(rng).expect("vocab").as_str());
        }
    }
    out.join(" ")
}

/// Generates `cfg.utterances` manifest records with a single n-best list of
/// `cfg.nbest` distinct candidates each.
pub fn generate(cfg: &SyntheticConfig) -> Vec<ManifestRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = vocabulary(&mut rng, cfg.vocab_size.max(2));
    let width = cfg.utterances.max(1).to_string().len();
    (0..cfg.utterances)
        .map(|u| {
            let n_words = rng.gen_range(cfg.min_words.max(1)..=cfg.max_words.max(cfg.min_words.max(1)));
            let reference: Vec<&str> = (0..n_words)
                .map(|_| vocab.choose(&mut rng).expect("vocab").as_str())
                .collect();
            let mut seen = HashSet::new();
            let mut cands = Vec::with_capacity(cfg.nbest);
            let mut attempts = 0;
            while cands.len() < cfg.nbest {
                let text = corrupt(&mut rng, &reference, &vocab, cfg.candidate);
                attempts += 1;
                if seen.insert(text.clone()) || attempts > 50 * cfg.nbest {
                    cands.push(ManifestCandidate {
                        rank: cands.len() + 1,
                        text,
                        score: None,
                    });
                }
            }
            let proxies: BTreeMap<String, String> = cfg
                .proxy_names
                .iter()
                .map(|name| (name.clone(), corrupt(&mut rng, &reference, &vocab, cfg.proxy)))
                .collect();
            ManifestRecord {
                id: format!("syn-{u:0width$}"),
                reference: reference.join(" "),
                audio: None,
                nbest: BTreeMap::from([(cfg.nbest.to_string(), cands)]),
                proxies,
                first_pass: cfg.proxy_names.first().cloned(),
            }
        })
        .collect()
}

/// JSONL encoding, one record per line.
pub fn to_jsonl(records: &[ManifestRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("record serializes"));
        s.push('\n');
    }
    s
}
