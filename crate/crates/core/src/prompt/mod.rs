//! Decoder prompts and encoder/decoder prefixes for promptable recognizers.
//!
//! Providers own token-level framing; everything here is plain normalized
//! text plus 16 kHz mono PCM audio.

mod prefix;
mod reorder;
mod wav;

use serde::{Deserialize, Serialize};

pub use prefix::{
    build_prefix, check_duration, exemplar_from_hits, DurationBudget, PrefixContext, PrefixPlan, PrefixSource,
    DEFAULT_SILENCE_S,
};
pub use reorder::{reverse_words, shuffle_words, utterance_seed};
pub use wav::{concat_with_silence, read_wav, wav_bytes, write_wav, Waveform, SAMPLE_RATE};

use crate::error::{Error, Result};
use crate::retrieval::{query, TfIdfIndex, Weight};
use crate::textnorm::NormalizedText;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PromptStrategy {
    FirstPass,
    Shuffled { seed: u64 },
    Reversed,
    RetrievedText,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    /// Text came from the named first-pass system.
    Proxy {
        system: String,
    },
    /// Text is a retrieved index document; the query was the named system's output.
    Retrieved {
        system: String,
        doc_id: String,
        similarity: f64,
    },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptPlan {
    pub strategy: PromptStrategy,
    pub prompt_text: NormalizedText,
    pub provenance: Provenance,
    /// Set when there is nothing to prompt with; decode without context.
    pub no_context: bool,
}

/// Builds the decoder prompt for one utterance from its first-pass
/// transcription (produced by `system`).
pub fn build_prompt<F: Weight>(
    first_pass: &NormalizedText,
    system: &str,
    strategy: PromptStrategy,
    index: Option<&TfIdfIndex<F>>,
) -> Result<PromptPlan> {
    let proxy = || Provenance::Proxy {
        system: system.to_string(),
    };
    let (prompt_text, provenance) = match strategy {
        PromptStrategy::FirstPass => (first_pass.clone(), proxy()),
        PromptStrategy::Shuffled { seed } => (shuffle_words(first_pass, seed), proxy()),
        PromptStrategy::Reversed => (reverse_words(first_pass), proxy()),
        PromptStrategy::RetrievedText => {
            let index = index.ok_or(Error::MissingIndex)?;
            match query(index, first_pass, 1)?.into_iter().next() {
                Some(hit) => {
                    let doc = index.doc(&hit.doc_id).expect("hit ids come from the index");
                    (
                        doc.text.clone(),
                        Provenance::Retrieved {
                            system: system.to_string(),
                            doc_id: hit.doc_id,
                            similarity: hit.similarity.to_f64().unwrap_or(f64::NAN),
                        },
                    )
                }
                None => (
                    NormalizedText::from_words([], first_pass.source_hash()),
                    Provenance::None,
                ),
            }
        }
    };
    let no_context = prompt_text.is_empty();
    let provenance = if no_context { Provenance::None } else { provenance };
    Ok(PromptPlan {
        strategy,
        prompt_text,
        provenance,
        no_context,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::{build_index, Analyzer, DocMeta};
    use crate::textnorm::{normalize, NormalizationConfig};
    use crate::TfIdfIndex64;

    fn t(s: &str) -> NormalizedText {
        normalize(s, &NormalizationConfig::default())
    }

    fn one_doc() -> TfIdfIndex64 {
        let doc = DocMeta {
            id: "ref-1".into(),
            text: t("ذهب الولد الى المدرسة"),
            audio: None,
        };
        build_index(vec![doc], Analyzer::default()).unwrap()
    }

    #[test]
    fn first_pass_and_reversed() {
        let fp = t("كتب الولد الدرس");
        let plan = build_prompt::<f64>(&fp, "sm4t", PromptStrategy::FirstPass, None).unwrap();
        assert_eq!(plan.prompt_text, fp);
        assert!(!plan.no_context);
        let rev = build_prompt::<f64>(&t("ا ب"), "sm4t", PromptStrategy::Reversed, None).unwrap();
        assert_eq!(rev.prompt_text.as_str(), "ب ا");
    }

    #[test]
    fn retrieved_text_uses_top_hit() {
        let index = one_doc();
        let plan = build_prompt(&t("ذهب الولد"), "sm4t", PromptStrategy::RetrievedText, Some(&index)).unwrap();
        assert_eq!(plan.prompt_text.as_str(), "ذهب الولد الى المدرسة");
        assert!(matches!(plan.provenance, Provenance::Retrieved { ref doc_id, .. } if doc_id == "ref-1"));
    }

    #[test]
    fn retrieval_miss_is_no_context() {
        let index = one_doc();
        let plan = build_prompt(&t("قمر"), "sm4t", PromptStrategy::RetrievedText, Some(&index)).unwrap();
        assert!(plan.no_context);
        assert!(plan.prompt_text.is_empty());
        assert_eq!(plan.provenance, Provenance::None);
    }

    #[test]
    fn retrieval_requires_index() {
        let err = build_prompt::<f64>(&t("قمر"), "x", PromptStrategy::RetrievedText, None).unwrap_err();
        assert!(matches!(err, Error::MissingIndex));
    }

    #[test]
    fn plan_json_shape() {
        let plan = build_prompt::<f64>(&t("ا ب ج"), "sm4t", PromptStrategy::Shuffled { seed: 7 }, None).unwrap();
        let v = serde_json::to_value(&plan).unwrap();
        assert_eq!(v["strategy"]["kind"], "shuffled");
        assert_eq!(v["strategy"]["seed"], 7);
        assert_eq!(v["provenance"]["system"], "sm4t");
        assert_eq!(v["no_context"], false);
    }
}
