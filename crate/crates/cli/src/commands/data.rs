use std::path::Path;

use anyhow::Result;
use ctxdecode::harness::synth::{generate, to_jsonl, Corruption, SyntheticConfig};
use ctxdecode::providers::RequestKind;
use ctxdecode::Error;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::Ctx;
use crate::args::Request;
use crate::io::{finish, write_jsonl, writer};

pub struct SynthArgs<'a> {
    pub utterances: usize,
    pub nbest: usize,
    pub vocab: usize,
    pub candidate_rates: &'a [f64],
    pub proxy_rates: &'a [f64],
    pub proxy_names: Vec<String>,
}

fn corruption(r: &[f64]) -> ctxdecode::Result<Corruption> {
    if r.len() != 3 || r.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidInput(format!(
            "corruption rates {r:?} must be three values in [0, 1]"
        )));
    }
    Ok(Corruption {
        sub_rate: r[0],
        del_rate: r[1],
        ins_rate: r[2],
    })
}

pub fn synth(ctx: &Ctx, args: SynthArgs<'_>, out: Option<&Path>) -> Result<()> {
    if args.nbest == 0 || args.vocab < 2 {
        return Err(Error::InvalidInput("--nbest must be positive and --vocab at least 2".into()).into());
    }
    let cfg = SyntheticConfig {
        utterances: args.utterances,
        nbest: args.nbest,
        vocab_size: args.vocab,
        candidate: corruption(args.candidate_rates)?,
        proxy: corruption(args.proxy_rates)?,
        proxy_names: args.proxy_names,
        seed: ctx.global.seed,
        ..SyntheticConfig::default()
    };
    let mut w = writer(out)?;
    w.write_all(to_jsonl(&generate(&cfg)).as_bytes())?;
    finish(w)
}

#[derive(Serialize)]
struct Fetched<'a> {
    id: &'a str,
    request: &'static str,
    value: Value,
}

pub fn fetch(
    ctx: &Ctx,
    provider: &str,
    request: Request,
    manifest: &Path,
    beam: usize,
    system: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let set = ctx.provider_set()?;
    set.spec(provider)?;
    let corpus = ctx.manifest(manifest)?;
    let kind = match request {
        Request::FirstPass => RequestKind::FirstPass,
        Request::Nbest => RequestKind::Nbest,
        Request::PrefixAudio => RequestKind::PrefixAudio,
    };
    let values = ctx.pool()?.install(|| {
        corpus
            .par_iter()
            .map(|rec| -> ctxdecode::Result<Value> {
                let audio = rec.audio.as_deref();
                Ok(match kind {
                    RequestKind::FirstPass => Value::String(set.fetch_first_pass(provider, &rec.id, audio)?),
                    RequestKind::Nbest => {
                        let list = set.fetch_nbest(provider, &rec.id, audio, beam, &ctx.norm)?;
                        serde_json::to_value(list.candidates())?
                    }
                    RequestKind::PrefixAudio => {
                        let sys = system.or(rec.first_pass.as_deref()).ok_or_else(|| {
                            Error::InvalidInput(format!("record `{}`: no --system and no first_pass", rec.id))
                        })?;
                        let text = rec
                            .proxies
                            .get(sys)
                            .ok_or_else(|| Error::InvalidInput(format!("record `{}` has no proxy `{sys}`", rec.id)))?;
                        let path = set.fetch_prefix_audio(provider, &rec.id, text.as_str(), audio)?;
                        Value::String(path.display().to_string())
                    }
                })
            })
            .collect::<ctxdecode::Result<Vec<_>>>()
    })?;
    let mut w = writer(out)?;
    write_jsonl(
        &mut w,
        corpus.iter().zip(values).map(|(rec, value)| Fetched {
            id: &rec.id,
            request: kind.as_str(),
            value,
        }),
    )?;
    finish(w)
}
