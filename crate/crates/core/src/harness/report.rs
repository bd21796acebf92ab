use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::metrics::ScorePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Eval,
    BeamSweep,
    AlphaSweep,
}

/// Pooled rates of one policy at one beam size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub beam: String,
    pub policy: String,
    pub utterances: usize,
    pub word_errors: u64,
    pub ref_words: u64,
    /// Percent.
    pub wer: f64,
    pub char_errors: u64,
    pub ref_chars: u64,
    /// Percent.
    pub cer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub utterances: usize,
    pub word_errors: u64,
    pub ref_words: u64,
    pub wer: f64,
    pub char_errors: u64,
    pub ref_chars: u64,
    pub cer: f64,
    /// WER(α) − WER(single proxy p1), percentage points.
    pub deviation_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceSelection {
    pub id: String,
    pub beam: String,
    pub policy: String,
    pub chosen_rank: usize,
    pub score: f64,
    pub word: ScorePair,
    pub chars: ScorePair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub id: String,
    pub beam: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub kind: ReportKind,
    pub config_digest: String,
    pub utterances: usize,
    pub notes: Vec<String>,
    pub policy_rows: Vec<PolicyRow>,
    pub alpha_rows: Vec<AlphaRow>,
    pub selections: Vec<UtteranceSelection>,
    pub skipped: Vec<SkippedRecord>,
}

pub(crate) fn percent(p: ScorePair) -> f64 {
    if p.ref_len == 0 {
        if p.errors == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * p.errors as f64 / p.ref_len as f64
    }
}

impl PolicyRow {
    pub(crate) fn new(beam: String, policy: String, utterances: usize, word: ScorePair, chars: ScorePair) -> Self {
        PolicyRow {
            beam,
            policy,
            utterances,
            word_errors: word.errors,
            ref_words: word.ref_len,
            wer: percent(word),
            char_errors: chars.errors,
            ref_chars: chars.ref_len,
            cer: percent(chars),
        }
    }
}

/// Unpooled per-(beam, policy) averages; never the default summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceMean {
    pub beam: String,
    pub policy: String,
    /// Utterances averaged over; empty references are left out.
    pub utterances: usize,
    pub wer: f64,
    pub cer: f64,
}

/// Mean of per-utterance WER and CER (percent) for every (beam, policy)
/// pair in the report's selections, in first-seen order.
pub fn sentence_means(report: &EvaluationReport) -> Vec<SentenceMean> {
    let mut out: Vec<SentenceMean> = Vec::new();
    let mut sums: Vec<(f64, f64)> = Vec::new();
    for s in &report.selections {
        let i = match out.iter().position(|m| m.beam == s.beam && m.policy == s.policy) {
            Some(i) => i,
            None => {
                out.push(SentenceMean {
                    beam: s.beam.clone(),
                    policy: s.policy.clone(),
                    utterances: 0,
                    wer: 0.0,
                    cer: 0.0,
                });
                sums.push((0.0, 0.0));
                out.len() - 1
            }
        };
        if s.word.ref_len == 0 || s.chars.ref_len == 0 {
            continue;
        }
        out[i].utterances += 1;
        sums[i].0 += percent(s.word);
        sums[i].1 += percent(s.chars);
    }
    for (m, (w, c)) in out.iter_mut().zip(sums) {
        if m.utterances > 0 {
            m.wer = w / m.utterances as f64;
            m.cer = c / m.utterances as f64;
        }
    }
    out
}

/// SHA-256 (hex) of the JSON encoding of `value`.
pub fn digest_of<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable config");
    hex::encode(Sha256::digest(bytes))
}

fn header<W: Write>(w: &mut W, report: &EvaluationReport) -> Result<()> {
    let io = |e| crate::error::Error::io("<report>", e);
    writeln!(
        w,
        "# kind={}",
        serde_json::to_value(report.kind)?.as_str().unwrap_or("")
    )
    .map_err(io)?;
    writeln!(w, "# config_digest={}", report.config_digest).map_err(io)?;
    writeln!(w, "# utterances={}", report.utterances).map_err(io)?;
    for note in &report.notes {
        writeln!(w, "# note: {note}").map_err(io)?;
    }
    Ok(())
}

const POLICY_COLUMNS: [&str; 9] = [
    "beam",
    "policy",
    "utterances",
    "word_errors",
    "ref_words",
    "wer",
    "char_errors",
    "ref_chars",
    "cer",
];

const ALPHA_COLUMNS: [&str; 9] = [
    "alpha",
    "utterances",
    "word_errors",
    "ref_words",
    "wer",
    "char_errors",
    "ref_chars",
    "cer",
    "deviation_pp",
];

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

/// Comment header followed by the policy table. Rates have four decimals.
pub fn write_policy_csv<W: Write>(mut w: W, report: &EvaluationReport) -> Result<()> {
    header(&mut w, report)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(POLICY_COLUMNS)?;
    for r in &report.policy_rows {
        csv.write_record([
            r.beam.clone(),
            r.policy.clone(),
            r.utterances.to_string(),
            r.word_errors.to_string(),
            r.ref_words.to_string(),
            f4(r.wer),
            r.char_errors.to_string(),
            r.ref_chars.to_string(),
            f4(r.cer),
        ])?;
    }
    csv.flush().map_err(|e| crate::error::Error::io("<report>", e))?;
    Ok(())
}

pub fn write_alpha_csv<W: Write>(mut w: W, report: &EvaluationReport) -> Result<()> {
    header(&mut w, report)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(ALPHA_COLUMNS)?;
    for r in &report.alpha_rows {
        csv.write_record([
            f4(r.alpha),
            r.utterances.to_string(),
            r.word_errors.to_string(),
            r.ref_words.to_string(),
            f4(r.wer),
            r.char_errors.to_string(),
            r.ref_chars.to_string(),
            f4(r.cer),
            f4(r.deviation_pp),
        ])?;
    }
    csv.flush().map_err(|e| crate::error::Error::io("<report>", e))?;
    Ok(())
}

/// The table matching the report kind: α rows for α sweeps, policy rows otherwise.
pub fn write_csv<W: Write>(w: W, report: &EvaluationReport) -> Result<()> {
    match report.kind {
        ReportKind::AlphaSweep => write_alpha_csv(w, report),
        _ => write_policy_csv(w, report),
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r)
}

pub fn read_policy_csv<R: Read>(r: R) -> Result<Vec<PolicyRow>> {
    let mut rdr = reader(r);
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<PolicyRow>, _>>()?;
    Ok(rows)
}

pub fn read_alpha_csv<R: Read>(r: R) -> Result<Vec<AlphaRow>> {
    let mut rdr = reader(r);
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<AlphaRow>, _>>()?;
    Ok(rows)
}
