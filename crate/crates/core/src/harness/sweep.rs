use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::UtteranceRecord;
use super::report::{percent, AlphaRow, EvaluationReport, PolicyRow, ReportKind, SkippedRecord, UtteranceSelection};
use crate::error::{Error, Result};
use crate::metrics::{cer, wer, DistanceMetric, ScorePair};
use crate::rerank::{select_nearest, select_oracle, select_top1, NBestList, Proxy, ProxySet, SelectionResult};
use crate::scalar::Score;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Top1,
    Nearest,
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Top1, PolicyKind::Nearest, PolicyKind::Oracle];
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top1" => Ok(PolicyKind::Top1),
            "nearest" => Ok(PolicyKind::Nearest),
            "oracle" => Ok(PolicyKind::Oracle),
            other => Err(Error::InvalidInput(format!(
                "unknown policy `{other}` (expected top1, nearest or oracle)"
            ))),
        }
    }
}

/// A proxy system name with its (unnormalized) weight, written `name[:weight]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyWeight {
    pub system: String,
    pub weight: f64,
}

impl FromStr for ProxyWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (system, weight) = match s.rsplit_once(':') {
            Some((name, w)) => {
                let w: f64 = w
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad proxy weight in `{s}`")))?;
                (name, w)
            }
            None => (s, 1.0),
        };
        if system.is_empty() || !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidInput(format!("bad proxy spec `{s}`")));
        }
        Ok(ProxyWeight {
            system: system.to_string(),
            weight,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BeamChoice {
    /// Exactly this many candidates (native list or prefix fallback).
    Fixed(usize),
    /// Each record's largest list.
    Full,
}

impl fmt::Display for BeamChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BeamChoice::Fixed(b) => write!(f, "{b}"),
            BeamChoice::Full => f.write_str("full"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub metric: DistanceMetric,
    pub proxies: Vec<ProxyWeight>,
    /// Skipped records become an error.
    pub strict: bool,
    /// Worker threads; results do not depend on it.
    #[serde(skip)]
    pub jobs: usize,
    #[serde(skip)]
    pub config_digest: String,
}

impl SweepConfig {
    pub fn new(metric: DistanceMetric, proxies: Vec<ProxyWeight>) -> Self {
        SweepConfig {
            metric,
            proxies,
            strict: false,
            jobs: 1,
            config_digest: String::new(),
        }
    }
}

pub fn alpha_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

fn proxy(rec: &UtteranceRecord, system: &str) -> Result<Proxy> {
    let text = rec
        .proxies
        .get(system)
        .ok_or_else(|| Error::InvalidInput(format!("record `{}` has no proxy `{system}`", rec.id)))?;
    Ok(Proxy {
        system: system.to_string(),
        text: text.clone(),
    })
}

/// The record's proxies named in `weights`, with weights normalized to sum
/// to one. A single proxy always gets weight one.
pub fn proxy_set<S: Score>(rec: &UtteranceRecord, weights: &[ProxyWeight]) -> Result<ProxySet<S>> {
    if weights.is_empty() {
        return Err(Error::InvalidInput(
            "nearest selection needs at least one --proxy".into(),
        ));
    }
    let proxies = weights
        .iter()
        .map(|w| proxy(rec, &w.system))
        .collect::<Result<Vec<_>>>()?;
    if proxies.len() == 1 {
        let p = proxies.into_iter().next().expect("one proxy");
        return Ok(ProxySet::single(p.system, p.text));
    }
    ProxySet::normalized(proxies, weights.iter().map(|w| S::from_f64(w.weight)).collect())
}

fn policy_label(kind: PolicyKind, proxies: &[ProxyWeight]) -> String {
    match kind {
        PolicyKind::Top1 => "top1".into(),
        PolicyKind::Oracle => "oracle".into(),
        PolicyKind::Nearest if proxies.len() == 1 => format!("nearest:{}", proxies[0].system),
        PolicyKind::Nearest => {
            let parts: Vec<String> = proxies.iter().map(|p| format!("{}@{}", p.system, p.weight)).collect();
            format!("nearest:{}", parts.join("+"))
        }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {jobs} workers: {e}")))
}

struct Usable<'a> {
    rec: &'a UtteranceRecord,
    list: Cow<'a, NBestList>,
}

struct Resolved<'a> {
    usable: Vec<Usable<'a>>,
    skipped: Vec<SkippedRecord>,
    fallback: usize,
}

fn resolve<'a>(corpus: &'a [UtteranceRecord], beam: BeamChoice, strict: bool) -> Result<Resolved<'a>> {
    if corpus.is_empty() {
        return Err(Error::Empty("manifest has no records"));
    }
    let mut out = Resolved {
        usable: Vec::new(),
        skipped: Vec::new(),
        fallback: 0,
    };
    for rec in corpus {
        match beam {
            BeamChoice::Full => out.usable.push(Usable {
                rec,
                list: Cow::Borrowed(rec.full_nbest()),
            }),
            BeamChoice::Fixed(b) => match rec.nbest_for(b) {
                Some((list, fb)) => {
                    out.fallback += usize::from(fb);
                    out.usable.push(Usable { rec, list });
                }
                None => {
                    log::warn!("record `{}`: no n-best list with {b} candidates", rec.id);
                    out.skipped.push(SkippedRecord {
                        id: rec.id.clone(),
                        beam: b.to_string(),
                        reason: format!("largest list has {} candidates", rec.full_nbest().len()),
                    });
                }
            },
        }
    }
    if strict && !out.skipped.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} record(s) lack candidates for beam {beam} (first: `{}`)",
            out.skipped.len(),
            out.skipped[0].id
        )));
    }
    if out.usable.is_empty() {
        return Err(match beam {
            BeamChoice::Fixed(b) => Error::NoUsableRecords(b),
            BeamChoice::Full => Error::Empty("manifest has no records"),
        });
    }
    Ok(out)
}

struct PolicyOutcome {
    selections: Vec<UtteranceSelection>,
    word: ScorePair,
    chars: ScorePair,
}

/// Runs `select` on every usable record in parallel; output order follows
/// the corpus, and pooling is an integer sum, so the worker count never
/// changes the result.
fn run_policy<S, F>(
    pool: &rayon::ThreadPool,
    usable: &[Usable<'_>],
    beam: &str,
    label: &str,
    select: F,
) -> Result<PolicyOutcome>
where
    S: Score,
    F: Fn(&UtteranceRecord, &NBestList) -> Result<SelectionResult<S>> + Sync,
{
    let selections: Vec<UtteranceSelection> = pool.install(|| {
        usable
            .par_iter()
            .map(|u| {
                let r = select(u.rec, &u.list)?;
                Ok(UtteranceSelection {
                    id: u.rec.id.clone(),
                    beam: beam.to_string(),
                    policy: label.to_string(),
                    chosen_rank: r.chosen_rank,
                    score: r.score.to_f64(),
                    word: wer(&r.chosen_text, &u.rec.reference),
                    chars: cer(&r.chosen_text, &u.rec.reference),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let word = selections.iter().map(|s| s.word).sum();
    let chars = selections.iter().map(|s| s.chars).sum();
    Ok(PolicyOutcome {
        selections,
        word,
        chars,
    })
}

fn run_kind<S: Score>(
    pool: &rayon::ThreadPool,
    usable: &[Usable<'_>],
    beam: &str,
    kind: PolicyKind,
    cfg: &SweepConfig,
) -> Result<PolicyOutcome> {
    let label = policy_label(kind, &cfg.proxies);
    match kind {
        PolicyKind::Top1 => run_policy(pool, usable, beam, &label, |_, l| Ok(select_top1::<S>(l))),
        PolicyKind::Oracle => run_policy(pool, usable, beam, &label, |r, l| {
            Ok(select_oracle::<S>(l, &r.reference))
        }),
        PolicyKind::Nearest => run_policy(pool, usable, beam, &label, |r, l| {
            let set = proxy_set::<S>(r, &cfg.proxies)?;
            Ok(select_nearest(l, &set, cfg.metric))
        }),
    }
}

fn fallback_note(n: usize) -> Option<String> {
    (n > 0)
        .then(|| format!("{n} per-beam list(s) approximated by truncating the largest run to its first B candidates"))
}

fn sweep<S: Score>(
    corpus: &[UtteranceRecord],
    policies: &[PolicyKind],
    beams: &[BeamChoice],
    cfg: &SweepConfig,
    kind: ReportKind,
) -> Result<EvaluationReport> {
    let pool = pool(cfg.jobs)?;
    let mut report = EvaluationReport {
        kind,
        config_digest: cfg.config_digest.clone(),
        utterances: corpus.len(),
        notes: vec![format!("selection metric={} scalar={}", cfg.metric, S::name())],
        policy_rows: Vec::new(),
        alpha_rows: Vec::new(),
        selections: Vec::new(),
        skipped: Vec::new(),
    };
    let mut fallback = 0;
    for &beam in beams {
        let resolved = resolve(corpus, beam, cfg.strict)?;
        fallback += resolved.fallback;
        let beam_label = beam.to_string();
        for &kind in policies {
            let out = run_kind::<S>(&pool, &resolved.usable, &beam_label, kind, cfg)?;
            report.policy_rows.push(PolicyRow::new(
                beam_label.clone(),
                policy_label(kind, &cfg.proxies),
                resolved.usable.len(),
                out.word,
                out.chars,
            ));
            report.selections.extend(out.selections);
        }
        report.skipped.extend(resolved.skipped);
    }
    report.notes.extend(fallback_note(fallback));
    Ok(report)
}

/// Pooled WER/CER for each policy at each beam size.
pub fn run_beam_sweep<S: Score>(
    corpus: &[UtteranceRecord],
    policies: &[PolicyKind],
    beams: &[usize],
    cfg: &SweepConfig,
) -> Result<EvaluationReport> {
    if let Some(&b) = beams.iter().find(|&&b| b == 0) {
        return Err(Error::InvalidInput(format!("beam size {b} must be positive")));
    }
    let beams: Vec<BeamChoice> = beams.iter().map(|&b| BeamChoice::Fixed(b)).collect();
    sweep::<S>(corpus, policies, &beams, cfg, ReportKind::BeamSweep)
}

/// Policy comparison at a single beam setting.
pub fn run_eval<S: Score>(
    corpus: &[UtteranceRecord],
    policies: &[PolicyKind],
    beam: BeamChoice,
    cfg: &SweepConfig,
) -> Result<EvaluationReport> {
    sweep::<S>(corpus, policies, &[beam], cfg, ReportKind::Eval)
}

/// Two-proxy interpolation over `alphas`, with deviations against
/// single-proxy selection on `p1`. Baseline rows (Top-1, Nearest on each
/// proxy, Oracle) are included as policy rows.
pub fn run_alpha_sweep<S: Score>(
    corpus: &[UtteranceRecord],
    p1: &str,
    p2: &str,
    alphas: &[f64],
    beam: BeamChoice,
    cfg: &SweepConfig,
) -> Result<EvaluationReport> {
    if p1 == p2 {
        return Err(Error::InvalidInput(format!(
            "interpolation needs two distinct proxies, got `{p1}` twice"
        )));
    }
    if let Some(&a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::AlphaOutOfRange(a));
    }
    let pool = pool(cfg.jobs)?;
    let resolved = resolve(corpus, beam, cfg.strict)?;
    let usable = &resolved.usable;
    let beam_label = beam.to_string();
    let metric = cfg.metric;

    let mut report = EvaluationReport {
        kind: ReportKind::AlphaSweep,
        config_digest: cfg.config_digest.clone(),
        utterances: corpus.len(),
        notes: vec![format!(
            "selection metric={metric} scalar={} p1={p1} p2={p2} beam={beam_label}",
            S::name()
        )],
        policy_rows: Vec::new(),
        alpha_rows: Vec::new(),
        selections: Vec::new(),
        skipped: resolved.skipped.clone(),
    };

    let single = |name: &str| {
        vec![ProxyWeight {
            system: name.to_string(),
            weight: 1.0,
        }]
    };
    let p1_cfg = SweepConfig {
        proxies: single(p1),
        ..cfg.clone()
    };
    let p2_cfg = SweepConfig {
        proxies: single(p2),
        ..cfg.clone()
    };
    let runs = [
        (PolicyKind::Top1, cfg),
        (PolicyKind::Nearest, &p1_cfg),
        (PolicyKind::Nearest, &p2_cfg),
        (PolicyKind::Oracle, cfg),
    ];
    let mut baseline = None;
    for (i, (kind, c)) in runs.into_iter().enumerate() {
        let out = run_kind::<S>(&pool, usable, &beam_label, kind, c)?;
        report.policy_rows.push(PolicyRow::new(
            beam_label.clone(),
            policy_label(kind, &c.proxies),
            usable.len(),
            out.word,
            out.chars,
        ));
        if i == 1 {
            baseline = Some(out.word);
        }
        report.selections.extend(out.selections);
    }
    let baseline = baseline.expect("p1 row");

    for &a in alphas {
        let alpha = S::from_f64(a);
        let label = format!("alpha={a}");
        let out = run_policy(&pool, usable, &beam_label, &label, |r, l| {
            let set = ProxySet::pair(proxy(r, p1)?, proxy(r, p2)?, alpha)?;
            Ok(select_nearest(l, &set, metric))
        })?;
        let n = out.word.ref_len;
        let deviation_pp = if n == 0 {
            0.0
        } else {
            (out.word.errors as f64 - baseline.errors as f64) * 100.0 / n as f64
        };
        report.alpha_rows.push(AlphaRow {
            alpha: a,
            utterances: usable.len(),
            word_errors: out.word.errors,
            ref_words: out.word.ref_len,
            wer: percent(out.word),
            char_errors: out.chars.errors,
            ref_chars: out.chars.ref_len,
            cer: percent(out.chars),
            deviation_pp,
        });
        report.selections.extend(out.selections);
    }
    report.notes.extend(fallback_note(resolved.fallback));
    Ok(report)
}
