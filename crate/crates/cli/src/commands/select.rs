use std::io::Write;
use std::path::Path;

use anyhow::Result;
use ctxdecode::harness::{
    alpha_grid, proxy_set, run_alpha_sweep, run_beam_sweep, run_eval, sentence_means, write_csv, BeamChoice,
    EvaluationReport, PolicyKind, ProxyWeight, SweepConfig,
};
use ctxdecode::rerank::{select_nearest, select_oracle, select_top1, SelectionResult};
use ctxdecode::{DistanceMetric, Error, Exact, Score};
use rayon::prelude::*;
use serde::Serialize;

use super::Ctx;
use crate::args::{Format, ReportArgs, Scalar, SelectArgs};
use crate::io::{finish, write_jsonl, writer};
use crate::run_config::RunConfig;

macro_rules! with_scalar {
    ($scalar:expr, $S:ident => $body:expr) => {
        match $scalar {
            Scalar::Exact => {
                type $S = Exact;
                $body
            }
            Scalar::F64 => {
                type $S = f64;
                $body
            }
            Scalar::F32 => {
                type $S = f32;
                $body
            }
        }
    };
}

fn scalar(args: &SelectArgs) -> Scalar {
    args.scalar.unwrap_or(match args.metric {
        DistanceMetric::OneMinusBleu => Scalar::F64,
        _ => Scalar::Exact,
    })
}

fn scalar_name(s: Scalar) -> &'static str {
    match s {
        Scalar::Exact => "exact",
        Scalar::F64 => "f64",
        Scalar::F32 => "f32",
    }
}

#[derive(Serialize)]
#[serde(bound(serialize = "S: Score"))]
struct RerankLine<'a, S> {
    id: &'a str,
    beam: String,
    #[serde(flatten)]
    result: SelectionResult<S>,
}

fn rerank_with<S: Score>(
    ctx: &Ctx,
    args: &SelectArgs,
    proxies: &[ProxyWeight],
    policy: PolicyKind,
    beam: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let corpus = ctx.manifest(&args.manifest)?;
    let mut usable = Vec::with_capacity(corpus.len());
    for rec in &corpus {
        match beam {
            None => usable.push((rec, std::borrow::Cow::Borrowed(rec.full_nbest()))),
            Some(b) => match rec.nbest_for(b) {
                Some((list, _)) => usable.push((rec, list)),
                None => ctx.skip(format!("record `{}`: fewer than {b} candidates", rec.id))?,
            },
        }
    }
    let label = beam.map_or_else(|| "full".to_string(), |b| b.to_string());
    let metric = args.metric;
    let results = ctx.pool()?.install(|| {
        usable
            .par_iter()
            .map(|(rec, list)| {
                Ok(match policy {
                    PolicyKind::Top1 => select_top1::<S>(list),
                    PolicyKind::Oracle => select_oracle::<S>(list, &rec.reference),
                    PolicyKind::Nearest => select_nearest(list, &proxy_set::<S>(rec, proxies)?, metric),
                })
            })
            .collect::<ctxdecode::Result<Vec<_>>>()
    })?;
    let mut w = writer(out)?;
    write_jsonl(
        &mut w,
        usable.iter().zip(results).map(|((rec, _), result)| RerankLine {
            id: &rec.id,
            beam: label.clone(),
            result,
        }),
    )?;
    finish(w)
}

pub fn rerank(
    ctx: &Ctx,
    args: &SelectArgs,
    proxies: &[ProxyWeight],
    policy: PolicyKind,
    beam: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    if beam == Some(0) {
        return Err(Error::InvalidInput("--beam must be positive".into()).into());
    }
    with_scalar!(scalar(args), S => rerank_with::<S>(ctx, args, proxies, policy, beam, out))
}

fn policies(p: Vec<PolicyKind>) -> Vec<PolicyKind> {
    if p.is_empty() {
        PolicyKind::ALL.to_vec()
    } else {
        p
    }
}

fn sweep_config(ctx: &Ctx, args: &SelectArgs, proxies: Vec<ProxyWeight>, run: &RunConfig) -> SweepConfig {
    SweepConfig {
        metric: args.metric,
        proxies,
        strict: ctx.global.strict,
        jobs: ctx.jobs,
        config_digest: run.digest(),
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    run_config: &'a RunConfig,
    report: &'a EvaluationReport,
}

fn emit(mut report: EvaluationReport, run: &RunConfig, args: &ReportArgs) -> Result<()> {
    if args.sentence_mean {
        for m in sentence_means(&report) {
            report.notes.push(format!(
                "sentence-mean beam={} policy={} utterances={} wer={:.4} cer={:.4}",
                m.beam, m.policy, m.utterances, m.wer, m.cer
            ));
        }
    }
    if let Some(path) = &args.selections {
        let mut w = writer(Some(path))?;
        write_jsonl(&mut w, &report.selections)?;
        finish(w)?;
    }
    let mut w = writer(args.out.out.as_deref())?;
    match args.format {
        Format::Csv => write_csv(&mut w, &report)?,
        Format::Json => {
            serde_json::to_writer_pretty(
                &mut w,
                &JsonReport {
                    run_config: run,
                    report: &report,
                },
            )?;
            w.write_all(b"\n")?;
        }
    }
    finish(w)
}

fn base(ctx: &Ctx, command: &'static str, args: &SelectArgs) -> RunConfig {
    ctx.run_config(command, Some(args.metric))
        .path("manifest", &args.manifest)
        .param("scalar", scalar_name(scalar(args)))
}

pub fn eval(
    ctx: &Ctx,
    args: &SelectArgs,
    proxies: Vec<ProxyWeight>,
    policy: Vec<PolicyKind>,
    beam: Option<usize>,
    report: &ReportArgs,
) -> Result<()> {
    let beam = match beam {
        Some(0) => return Err(Error::InvalidInput("--beam must be positive".into()).into()),
        Some(b) => BeamChoice::Fixed(b),
        None => BeamChoice::Full,
    };
    let policy = policies(policy);
    let run = base(ctx, "eval", args)
        .param("proxies", &proxies)
        .param("policies", &policy)
        .param("beam", beam);
    let cfg = sweep_config(ctx, args, proxies, &run);
    let corpus = ctx.manifest(&args.manifest)?;
    let rep = with_scalar!(scalar(args), S => run_eval::<S>(&corpus, &policy, beam, &cfg))?;
    emit(rep, &run, report)
}

/// `2-10`, `1,2,4-6`; order kept, duplicates rejected.
pub fn parse_beams(s: &str) -> ctxdecode::Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("bad beam list `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let v: usize = part.parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo == 0 || lo > hi {
            return Err(bad());
        }
        for b in lo..=hi {
            if out.contains(&b) {
                return Err(Error::InvalidInput(format!("beam {b} listed twice")));
            }
            out.push(b);
        }
    }
    Ok(out)
}

pub fn sweep_beam(
    ctx: &Ctx,
    args: &SelectArgs,
    proxies: Vec<ProxyWeight>,
    policy: Vec<PolicyKind>,
    beams: &str,
    report: &ReportArgs,
) -> Result<()> {
    let beams = parse_beams(beams)?;
    let policy = policies(policy);
    let run = base(ctx, "sweep-beam", args)
        .param("proxies", &proxies)
        .param("policies", &policy)
        .param("beams", &beams);
    let cfg = sweep_config(ctx, args, proxies, &run);
    let corpus = ctx.manifest(&args.manifest)?;
    let rep = with_scalar!(scalar(args), S => run_beam_sweep::<S>(&corpus, &policy, &beams, &cfg))?;
    emit(rep, &run, report)
}

pub fn sweep_alpha(
    ctx: &Ctx,
    args: &SelectArgs,
    p1: &str,
    p2: &str,
    alphas: Vec<f64>,
    beam: Option<usize>,
    report: &ReportArgs,
) -> Result<()> {
    let alphas = if alphas.is_empty() { alpha_grid() } else { alphas };
    let beam = match beam {
        Some(0) => return Err(Error::InvalidInput("--beam must be positive".into()).into()),
        Some(b) => BeamChoice::Fixed(b),
        None => BeamChoice::Full,
    };
    let run = base(ctx, "sweep-alpha", args)
        .param("p1", p1)
        .param("p2", p2)
        .param("alphas", &alphas)
        .param("beam", beam);
    let cfg = sweep_config(ctx, args, Vec::new(), &run);
    let corpus = ctx.manifest(&args.manifest)?;
    let rep = with_scalar!(scalar(args), S => run_alpha_sweep::<S>(&corpus, p1, p2, &alphas, beam, &cfg))?;
    emit(rep, &run, report)
}

#[cfg(test)]
mod tests {
    use super::parse_beams;

    #[test]
    fn beam_lists() {
        assert_eq!(parse_beams("2-5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_beams("1, 3-4,10").unwrap(), vec![1, 3, 4, 10]);
        assert!(parse_beams("0-3").is_err());
        assert!(parse_beams("5-2").is_err());
        assert!(parse_beams("2,2").is_err());
        assert!(parse_beams("x").is_err());
    }
}
