mod data;
mod index;
mod prompt;
mod select;
mod text;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ctxdecode::harness::{load_manifest, UtteranceRecord};
use ctxdecode::providers::{FetchOptions, ProviderConfig, ProviderSet};
use ctxdecode::{normalize, DistanceMetric, Error, NormalizationConfig, NormalizedText};

use crate::args::{Cli, Command, FirstPassArgs, GlobalArgs, IndexCommand, PrefixCommand, PromptCommand};
use crate::run_config::RunConfig;

pub struct Ctx {
    pub global: GlobalArgs,
    pub norm: NormalizationConfig,
    pub providers: Option<ProviderConfig>,
    pub jobs: usize,
}

fn load_norm(path: &Path) -> Result<NormalizationConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    let cfg: NormalizationConfig = parsed.map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

impl Ctx {
    fn new(global: GlobalArgs) -> Result<Self> {
        let jobs = match global.jobs {
            Some(0) => return Err(Error::InvalidInput("--jobs must be at least 1".into()).into()),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let norm = match &global.config {
            Some(p) => load_norm(p)?,
            None => NormalizationConfig::default(),
        };
        let providers = global.providers.as_deref().map(ProviderConfig::load).transpose()?;
        Ok(Ctx {
            global,
            norm,
            providers,
            jobs,
        })
    }

    pub fn run_config(&self, command: &'static str, metric: Option<DistanceMetric>) -> RunConfig {
        RunConfig {
            version: env!("CARGO_PKG_VERSION"),
            command,
            normalization: self.norm.clone(),
            metric,
            seed: self.global.seed,
            strict: self.global.strict,
            providers: self.providers.clone(),
            paths: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn provider_set(&self) -> Result<ProviderSet> {
        let cfg = self
            .providers
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("this command needs --providers".into()))?;
        let options = FetchOptions {
            offline: self.global.offline,
            refresh: self.global.refresh,
        };
        Ok(ProviderSet::new(cfg, options)?)
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .context("starting worker threads")
    }

    pub fn manifest(&self, path: &Path) -> Result<Vec<UtteranceRecord>> {
        Ok(load_manifest(path, &self.norm)?)
    }

    /// In strict mode an error; otherwise a warning and `Ok(())`.
    pub fn skip(&self, what: String) -> Result<()> {
        if self.global.strict {
            return Err(Error::InvalidInput(what).into());
        }
        log::warn!("skipping {what}");
        Ok(())
    }
}

/// One utterance's first-pass hypothesis.
pub struct FirstPass {
    pub id: String,
    pub audio: Option<PathBuf>,
    pub system: String,
    pub text: NormalizedText,
}

/// (id, audio, system, text) before provider lookup.
type Unit = (String, Option<PathBuf>, Option<String>, Option<String>);

/// Resolves `--manifest`/`--tsv`/`--system`/`--provider` into first-pass
/// texts, in input order.
pub fn first_passes(ctx: &Ctx, args: &FirstPassArgs) -> Result<Vec<FirstPass>> {
    let mut units: Vec<Unit> = Vec::new();
    if let Some(path) = &args.manifest {
        for rec in ctx.manifest(path)? {
            let system = args.system.clone().or(rec.first_pass.clone());
            let text = system
                .as_ref()
                .and_then(|s| rec.proxies.get(s))
                .map(|t| t.as_str().to_string());
            units.push((rec.id, rec.audio, system, text));
        }
    } else if let Some(path) = &args.tsv {
        for (i, line) in crate::io::read_lines(Some(path))?.into_iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (id, text) = line.split_once('\t').ok_or_else(|| Error::Manifest {
                path: path.display().to_string(),
                line: i + 1,
                message: "expected `id<TAB>text`".into(),
            })?;
            units.push((id.to_string(), None, args.system.clone(), Some(text.to_string())));
        }
    } else {
        return Err(Error::InvalidInput("one of --manifest or --tsv is required".into()).into());
    }

    if let Some(provider) = &args.provider {
        let set = ctx.provider_set()?;
        let pool = ctx.pool()?;
        use rayon::prelude::*;
        let fetched = pool.install(|| {
            units
                .par_iter()
                .map(|(id, audio, _, _)| set.fetch_first_pass(provider, id, audio.as_deref()))
                .collect::<ctxdecode::Result<Vec<_>>>()
        })?;
        return Ok(units
            .into_iter()
            .zip(fetched)
            .map(|((id, audio, _, _), raw)| FirstPass {
                id,
                audio,
                system: provider.clone(),
                text: normalize(&raw, &ctx.norm),
            })
            .collect());
    }

    let mut out = Vec::with_capacity(units.len());
    for (id, audio, system, text) in units {
        match (system, text) {
            (sys, Some(text)) => out.push(FirstPass {
                id,
                audio,
                system: sys.unwrap_or_else(|| "input".into()),
                text: normalize(&text, &ctx.norm),
            }),
            (Some(sys), None) => ctx.skip(format!("record `{id}`: no proxy `{sys}`"))?,
            (None, None) => ctx.skip(format!("record `{id}`: no --system given and no first_pass field"))?,
        }
    }
    Ok(out)
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(cli.global)?;
    match cli.command {
        Command::Normalize { input, out } => text::normalize_cmd(&ctx, input.as_deref(), out.out.as_deref()),
        Command::Score {
            metric,
            hyp,
            reference,
            manifest,
            system,
            out,
        } => text::score(
            &ctx,
            metric,
            hyp.zip(reference),
            manifest.as_deref(),
            &system,
            out.out.as_deref(),
        ),
        Command::Index(IndexCommand::Build {
            corpus,
            out,
            ngram_min,
            ngram_max,
            no_lowercase,
        }) => index::build(&ctx, &corpus, &out, ngram_min, ngram_max, !no_lowercase),
        Command::Index(IndexCommand::Query { index, k, input, out }) => {
            index::query_cmd(&ctx, &index, k, input.as_deref(), out.out.as_deref())
        }
        Command::Prompt(PromptCommand::Build {
            strategy,
            input,
            index,
            out,
        }) => prompt::prompt_build(&ctx, strategy, &input, index.as_deref(), out.out.as_deref()),
        Command::Prefix(PrefixCommand::Audio {
            ctx: c,
            test,
            silence,
            out,
        }) => prompt::prefix_audio(&ctx, &c, &test, silence, &out),
        Command::Prefix(PrefixCommand::Plan {
            source,
            input,
            index,
            tts,
            silence,
            materialize,
            out,
        }) => prompt::prefix_plan(
            &ctx,
            prompt::PlanArgs {
                source,
                input: &input,
                index: index.as_deref(),
                tts: tts.as_deref(),
                silence,
                materialize: materialize.as_deref(),
            },
            out.out.as_deref(),
        ),
        Command::Rerank {
            select,
            proxy,
            policy,
            beam,
            out,
        } => select::rerank(&ctx, &select, &proxy, policy, beam, out.out.as_deref()),
        Command::Eval {
            select,
            proxy,
            policy,
            beam,
            report,
        } => select::eval(&ctx, &select, proxy, policy, beam, &report),
        Command::SweepBeam {
            select,
            proxy,
            policy,
            beams,
            report,
        } => select::sweep_beam(&ctx, &select, proxy, policy, &beams, &report),
        Command::SweepAlpha {
            select,
            p1,
            p2,
            alphas,
            beam,
            report,
        } => select::sweep_alpha(&ctx, &select, &p1, &p2, alphas, beam, &report),
        Command::Synth {
            utterances,
            nbest,
            vocab,
            candidate_rates,
            proxy_rates,
            proxy_names,
            out,
        } => data::synth(
            &ctx,
            data::SynthArgs {
                utterances,
                nbest,
                vocab,
                candidate_rates: &candidate_rates,
                proxy_rates: &proxy_rates,
                proxy_names,
            },
            out.out.as_deref(),
        ),
        Command::Fetch {
            provider,
            request,
            manifest,
            beam,
            system,
            out,
        } => data::fetch(
            &ctx,
            &provider,
            request,
            &manifest,
            beam,
            system.as_deref(),
            out.out.as_deref(),
        ),
    }
}
