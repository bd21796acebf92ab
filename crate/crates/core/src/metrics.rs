//! Edit distance and the text-level distances used for selection and scoring.

use std::collections::HashMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Score;
use crate::textnorm::NormalizedText;

/// Smoothing added to zero higher-order BLEU precisions.
pub const BLEU_EPSILON: f64 = 0.1;
pub const BLEU_MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    Wer,
    Cer,
    #[serde(rename = "bleu")]
    OneMinusBleu,
}

impl DistanceMetric {
    pub const ALL: [DistanceMetric; 3] = [DistanceMetric::Wer, DistanceMetric::Cer, DistanceMetric::OneMinusBleu];

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceMetric::Wer => "wer",
            DistanceMetric::Cer => "cer",
            DistanceMetric::OneMinusBleu => "bleu",
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wer" => Ok(DistanceMetric::Wer),
            "cer" => Ok(DistanceMetric::Cer),
            "bleu" | "1-bleu" | "one-minus-bleu" => Ok(DistanceMetric::OneMinusBleu),
            other => Err(Error::InvalidInput(format!(
                "unknown metric `{other}` (expected wer, cer or bleu)"
            ))),
        }
    }
}

/// Edit count against a reference length.
///
/// Also the monoid used for pooled corpus rates: sums of errors over sums of
/// reference lengths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScorePair {
    pub errors: u64,
    pub ref_len: u64,
}

impl ScorePair {
    pub fn new(errors: u64, ref_len: u64) -> Self {
        ScorePair { errors, ref_len }
    }

    /// `errors / ref_len`; `+inf` when the reference is empty and there are
    /// errors, 0 when both are zero.
    pub fn rate(&self) -> f64 {
        match (self.errors, self.ref_len) {
            (0, 0) => 0.0,
            (_, 0) => f64::INFINITY,
            (e, n) => e as f64 / n as f64,
        }
    }

    /// Exact rate in `S`, or `None` for the infinite sentinel.
    pub fn ratio<S: Score>(&self) -> Option<S> {
        match (self.errors, self.ref_len) {
            (0, 0) => Some(S::zero()),
            (_, 0) => None,
            (e, n) => Some(S::from_ratio(e, n)),
        }
    }

    /// Orders by rate without floating point; infinite rates sort last and
    /// among themselves by raw error count.
    pub fn cmp_rate(&self, other: &ScorePair) -> std::cmp::Ordering {
        let infinite = |p: &ScorePair| p.ref_len == 0 && p.errors > 0;
        match (infinite(self), infinite(other)) {
            (true, true) => self.errors.cmp(&other.errors),
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            (false, false) => {
                let (a, b) = (self.ref_len.max(1), other.ref_len.max(1));
                (self.errors as u128 * b as u128).cmp(&(other.errors as u128 * a as u128))
            }
        }
    }
}

impl Add for ScorePair {
    type Output = ScorePair;

    fn add(self, rhs: ScorePair) -> ScorePair {
        ScorePair {
            errors: self.errors + rhs.errors,
            ref_len: self.ref_len + rhs.ref_len,
        }
    }
}

impl AddAssign for ScorePair {
    fn add_assign(&mut self, rhs: ScorePair) {
        *self = *self + rhs;
    }
}

impl Sum for ScorePair {
    fn sum<I: Iterator<Item = ScorePair>>(iter: I) -> Self {
        iter.fold(ScorePair::default(), Add::add)
    }
}

/// Levenshtein distance with unit costs.
///
/// Two-row DP over the shorter sequence: O(|a|·|b|) time, O(min(|a|,|b|))
/// memory.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0usize; short.len() + 1];
    for (i, x) in long.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

pub fn wer(hyp: &NormalizedText, reference: &NormalizedText) -> ScorePair {
    let h: Vec<&str> = hyp.words().collect();
    let r: Vec<&str> = reference.words().collect();
    ScorePair::new(edit_distance(&h, &r) as u64, r.len() as u64)
}

/// Character-level counterpart of [`wer`]; spaces count as characters.
pub fn cer(hyp: &NormalizedText, reference: &NormalizedText) -> ScorePair {
    let h: Vec<char> = hyp.as_str().chars().collect();
    let r: Vec<char> = reference.as_str().chars().collect();
    ScorePair::new(edit_distance(&h, &r) as u64, r.len() as u64)
}

fn ngram_counts<'a>(words: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    if words.len() >= n {
        for g in words.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU over word n-grams, orders 1 to 4, uniform weights,
/// with brevity penalty.
///
/// A zero modified precision at orders 2..4 becomes
/// `ε / (total + ε)` with ε = [`BLEU_EPSILON`]; an order with no hypothesis
/// n-grams therefore contributes 1. A zero unigram precision yields 0.
/// Two empty strings score 1.
pub fn sentence_bleu(hyp: &NormalizedText, reference: &NormalizedText) -> f64 {
    let h: Vec<&str> = hyp.words().collect();
    let r: Vec<&str> = reference.words().collect();
    match (h.is_empty(), r.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }

    let mut log_sum = 0.0;
    for n in 1..=BLEU_MAX_ORDER {
        let hyp_counts = ngram_counts(&h, n);
        let ref_counts = ngram_counts(&r, n);
        let total: usize = hyp_counts.values().sum();
        let matched: usize = hyp_counts
            .iter()
            .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        let precision = if matched > 0 {
            matched as f64 / total as f64
        } else if n == 1 {
            return 0.0;
        } else {
            BLEU_EPSILON / (total as f64 + BLEU_EPSILON)
        };
        log_sum += precision.ln() / BLEU_MAX_ORDER as f64;
    }

    let (c, rl) = (h.len() as f64, r.len() as f64);
    let bp = if c > rl { 1.0 } else { (1.0 - rl / c).exp() };
    (bp * log_sum.exp()).clamp(0.0, 1.0)
}

/// Distance between a hypothesis and a (pseudo-)reference.
///
/// WER/CER use `reference` as the denominator side. An empty reference falls
/// back to `errors / max(|hyp|, |reference|)` so scores stay finite.
pub fn distance<S: Score>(metric: DistanceMetric, hyp: &NormalizedText, reference: &NormalizedText) -> S {
    let rate = |pair: ScorePair, hyp_len: usize| -> S {
        pair.ratio().unwrap_or_else(|| {
            let denom = (hyp_len as u64).max(pair.ref_len);
            S::from_ratio(pair.errors, denom)
        })
    };
    match metric {
        DistanceMetric::Wer => rate(wer(hyp, reference), hyp.word_count()),
        DistanceMetric::Cer => rate(cer(hyp, reference), hyp.as_str().chars().count()),
        DistanceMetric::OneMinusBleu => {
            let bleu = sentence_bleu(hyp, reference);
            S::from_f64(1.0 - bleu)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRates {
    pub wer: ScorePair,
    pub cer: ScorePair,
}

/// Pooled corpus WER and CER: summed errors over summed reference lengths.
pub fn corpus_rates<'a, I>(pairs: I) -> Result<CorpusRates>
where
    I: IntoIterator<Item = (&'a NormalizedText, &'a NormalizedText)>,
{
    let mut n = 0usize;
    let mut rates = CorpusRates {
        wer: ScorePair::default(),
        cer: ScorePair::default(),
    };
    for (hyp, reference) in pairs {
        n += 1;
        rates.wer += wer(hyp, reference);
        rates.cer += cer(hyp, reference);
    }
    if n == 0 {
        return Err(Error::Empty("corpus has no hypothesis/reference pairs"));
    }
    Ok(rates)
}
