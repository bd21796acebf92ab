use std::path::Path;

use anyhow::Result;
use ctxdecode::prompt::{
    build_prefix, build_prompt, check_duration, concat_with_silence, read_wav, utterance_seed, write_wav,
    DurationBudget, PrefixContext, PrefixPlan, PromptPlan, PromptStrategy,
};
use ctxdecode::retrieval::{load_index, query, DocMeta};
use ctxdecode::{Error, TfIdfIndex64};
use serde::Serialize;

use super::{first_passes, Ctx, FirstPass};
use crate::args::{FirstPassArgs, Source, Strategy};
use crate::io::{finish, print_line, write_jsonl, writer};

#[derive(Serialize)]
struct Keyed<'a, T> {
    id: &'a str,
    #[serde(flatten)]
    plan: T,
}

fn load(path: Option<&Path>) -> Result<Option<TfIdfIndex64>> {
    Ok(path.map(|p| load_index(p, None)).transpose()?)
}

pub fn prompt_build(
    ctx: &Ctx,
    strategy: Strategy,
    input: &FirstPassArgs,
    index: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let index = load(index)?;
    if strategy == Strategy::Retrieve && index.is_none() {
        return Err(Error::MissingIndex.into());
    }
    let units = first_passes(ctx, input)?;
    let mut plans: Vec<PromptPlan> = Vec::with_capacity(units.len());
    for u in &units {
        let s = match strategy {
            Strategy::FirstPass => PromptStrategy::FirstPass,
            Strategy::Shuffle => PromptStrategy::Shuffled {
                seed: utterance_seed(ctx.global.seed, &u.id),
            },
            Strategy::Reverse => PromptStrategy::Reversed,
            Strategy::Retrieve => PromptStrategy::RetrievedText,
        };
        plans.push(build_prompt(&u.text, &u.system, s, index.as_ref())?);
    }
    let mut w = writer(out)?;
    write_jsonl(
        &mut w,
        units.iter().zip(&plans).map(|(u, plan)| Keyed { id: &u.id, plan }),
    )?;
    finish(w)
}

fn budget(ctx: &Ctx) -> DurationBudget {
    DurationBudget {
        strict: ctx.global.strict,
        ..DurationBudget::default()
    }
}

#[derive(Serialize)]
struct AudioSummary {
    ctx_samples: usize,
    silence_samples: usize,
    test_samples: usize,
    samples: usize,
    duration_s: f64,
}

pub fn prefix_audio(ctx: &Ctx, c: &Path, test: &Path, silence: f64, out: &Path) -> Result<()> {
    let a = read_wav(c)?;
    let b = read_wav(test)?;
    let joined = concat_with_silence(&a, &b, silence)?;
    check_duration(joined.duration_s(), budget(ctx))?;
    write_wav(out, &joined)?;
    let summary = AudioSummary {
        ctx_samples: a.len(),
        silence_samples: joined.len() - a.len() - b.len(),
        test_samples: b.len(),
        samples: joined.len(),
        duration_s: joined.duration_s(),
    };
    print_line(&serde_json::to_string(&summary)?)?;
    Ok(())
}

pub struct PlanArgs<'a> {
    pub source: Source,
    pub input: &'a FirstPassArgs,
    pub index: Option<&'a Path>,
    pub tts: Option<&'a str>,
    pub silence: f64,
    pub materialize: Option<&'a Path>,
}

/// Best-scoring document other than the utterance itself.
fn exemplar<'a>(index: &'a TfIdfIndex64, u: &FirstPass) -> Result<Option<&'a DocMeta>> {
    let hits = query(index, &u.text, 8)?;
    Ok(hits
        .iter()
        .find(|h| h.doc_id != u.id)
        .and_then(|h| index.doc(&h.doc_id)))
}

fn plan_one(
    args: &PlanArgs<'_>,
    index: Option<&TfIdfIndex64>,
    providers: Option<&ctxdecode::providers::ProviderSet>,
    u: &FirstPass,
    test: &Path,
) -> ctxdecode::Result<Option<PrefixPlan>> {
    let tts = || -> ctxdecode::Result<(&ctxdecode::providers::ProviderSet, &str)> {
        match (providers, args.tts) {
            (Some(p), Some(name)) => Ok((p, name)),
            _ => Err(Error::InvalidConfig("this source needs --tts and --providers".into())),
        }
    };
    let context = match args.source {
        Source::Retrieved | Source::SpeakerTts => {
            let index = index.ok_or(Error::MissingIndex)?;
            let Some(doc) = exemplar(index, u).map_err(|e| Error::InvalidInput(e.to_string()))? else {
                return Ok(None);
            };
            if args.source == Source::Retrieved {
                return build_prefix(PrefixContext::Retrieved(doc), test, args.silence).map(Some);
            }
            let (set, name) = tts()?;
            let audio = set.fetch_prefix_audio(name, &u.id, doc.text.as_str(), Some(test))?;
            PrefixContext::SpeakerTts {
                text: doc.text.clone(),
                audio: Some(audio),
            }
        }
        Source::SelfPrefix => {
            let (set, name) = tts()?;
            let audio = set.fetch_prefix_audio(name, &u.id, u.text.as_str(), Some(test))?;
            PrefixContext::SelfPrefix {
                first_pass: u.text.clone(),
                audio: Some(audio),
            }
        }
    };
    build_prefix(context, test, args.silence).map(Some)
}

pub fn prefix_plan(ctx: &Ctx, args: PlanArgs<'_>, out: Option<&Path>) -> Result<()> {
    let index = load(args.index)?;
    let providers = match args.source {
        Source::Retrieved => None,
        _ => Some(ctx.provider_set()?),
    };
    if let Some(dir) = args.materialize {
        std::fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("{}: {e}", dir.display()))?;
    }
    let units = first_passes(ctx, args.input)?;
    let mut w = writer(out)?;
    for u in &units {
        let Some(test) = u.audio.as_deref() else {
            ctx.skip(format!("record `{}`: no test audio", u.id))?;
            continue;
        };
        let plan = match plan_one(&args, index.as_ref(), providers.as_ref(), u, test) {
            Ok(Some(plan)) => plan,
            Ok(None) => {
                ctx.skip(format!("record `{}`: retrieval found no exemplar", u.id))?;
                continue;
            }
            Err(e @ Error::MissingAudio(_)) => {
                ctx.skip(format!("record `{}`: {e}", u.id))?;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if let Some(dir) = args.materialize {
            let wave = plan.materialize(budget(ctx))?;
            write_wav(&dir.join(format!("{}.wav", u.id)), &wave)?;
        }
        write_jsonl(&mut w, [Keyed { id: &u.id, plan: &plan }])?;
    }
    finish(w)
}
