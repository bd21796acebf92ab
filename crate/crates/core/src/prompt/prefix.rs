use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::wav::{concat_with_silence, read_wav, silence_samples, Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::retrieval::{DocMeta, RetrievalHit, TfIdfIndex, Weight};
use crate::textnorm::NormalizedText;

pub const DEFAULT_SILENCE_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrefixSource {
    RetrievedExemplar,
    SpeakerTts,
    SelfPrefix,
}

/// Where the contextual (text, audio) pair comes from.
#[derive(Debug, Clone)]
pub enum PrefixContext<'a> {
    /// A retrieved document; its audio path is the context audio.
    Retrieved(&'a DocMeta),
    /// Context text voiced by a provider in the test speaker's voice.
    SpeakerTts {
        text: NormalizedText,
        audio: Option<PathBuf>,
    },
    /// The utterance's own first-pass hypothesis voiced by a provider.
    SelfPrefix {
        first_pass: NormalizedText,
        audio: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixPlan {
    pub context_text: NormalizedText,
    pub context_audio: PathBuf,
    pub test_audio: PathBuf,
    pub silence_s: f64,
    pub source: PrefixSource,
}

/// Combined-length limit for the encoder input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationBudget {
    pub limit_s: f64,
    /// Exceeding the limit is an error instead of a warning.
    pub strict: bool,
}

impl Default for DurationBudget {
    fn default() -> Self {
        DurationBudget {
            limit_s: 30.0,
            strict: false,
        }
    }
}

/// Returns `Ok(true)` when within budget, `Ok(false)` after logging a
/// warning, or an error in strict mode. Audio is never truncated.
pub fn check_duration(seconds: f64, budget: DurationBudget) -> Result<bool> {
    if seconds <= budget.limit_s {
        return Ok(true);
    }
    if budget.strict {
        return Err(Error::DurationBudget {
            seconds,
            limit: budget.limit_s,
        });
    }
    log::warn!(
        "combined audio is {seconds:.2} s, over the {:.0} s window; passing it through untruncated",
        budget.limit_s
    );
    Ok(false)
}

/// Picks the top retrieval hit's document, for exemplar prefixing.
pub fn exemplar_from_hits<'a, F: Weight>(hits: &[RetrievalHit<F>], index: &'a TfIdfIndex<F>) -> Result<&'a DocMeta> {
    let hit = hits.first().ok_or(Error::MissingAudio(
        "retrieval returned no exemplar; fall back to prompt-only decoding".into(),
    ))?;
    index
        .doc(&hit.doc_id)
        .ok_or_else(|| Error::InvalidInput(format!("hit `{}` is not in the index", hit.doc_id)))
}

pub fn build_prefix(context: PrefixContext<'_>, test_audio: &Path, silence_s: f64) -> Result<PrefixPlan> {
    silence_samples(silence_s)?;
    let (context_text, context_audio, source) = match context {
        PrefixContext::Retrieved(doc) => {
            let audio = doc
                .audio
                .clone()
                .ok_or_else(|| Error::MissingAudio(format!("retrieved document `{}` has no audio path", doc.id)))?;
            (doc.text.clone(), audio, PrefixSource::RetrievedExemplar)
        }
        PrefixContext::SpeakerTts { text, audio } => {
            let audio =
                audio.ok_or_else(|| Error::MissingAudio("speaker-conditioned synthesis produced no audio".into()))?;
            (text, audio, PrefixSource::SpeakerTts)
        }
        PrefixContext::SelfPrefix { first_pass, audio } => {
            let audio = audio.ok_or_else(|| Error::MissingAudio("self-prefix synthesis produced no audio".into()))?;
            (first_pass, audio, PrefixSource::SelfPrefix)
        }
    };
    Ok(PrefixPlan {
        context_text,
        context_audio,
        test_audio: test_audio.to_path_buf(),
        silence_s,
        source,
    })
}

impl PrefixPlan {
    /// Text to place before the decoder history.
    pub fn decoder_prefix(&self) -> &NormalizedText {
        &self.context_text
    }

    /// Duration of the concatenated input given the two clip lengths in samples.
    pub fn combined_duration_s(&self, ctx_samples: usize, test_samples: usize) -> f64 {
        let gap = (self.silence_s * SAMPLE_RATE as f64).round() as usize;
        (ctx_samples + gap + test_samples) as f64 / SAMPLE_RATE as f64
    }

    /// Reads both clips and returns the concatenated encoder input.
    pub fn materialize(&self, budget: DurationBudget) -> Result<Waveform> {
        let ctx = read_wav(&self.context_audio)?;
        let test = read_wav(&self.test_audio)?;
        check_duration(self.combined_duration_s(ctx.len(), test.len()), budget)?;
        concat_with_silence(&ctx, &test, self.silence_s)
    }
}
