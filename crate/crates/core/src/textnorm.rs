//! Text normalization shared by references, hypotheses, proxies and index
//! documents.
//!
//! The pipeline, in order: Unicode NFC, punctuation removal (keeping a
//! configurable set, `%` and `@` by default), removal of Arabic combining
//! marks and tatweel, folding of alef hamza/madda seats onto bare alef,
//! Eastern Arabic digit mapping, removal of Latin-script tokens, and
//! whitespace collapse.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::{is_nfc, UnicodeNormalization};
use unicode_script::{Script, UnicodeScript};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    pub remove_punctuation: bool,
    pub strip_diacritics: bool,
    pub normalize_hamza_madda: bool,
    pub convert_eastern_numerals: bool,
    pub drop_latin_tokens: bool,
    pub punctuation_keep_set: BTreeSet<char>,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            remove_punctuation: true,
            strip_diacritics: true,
            normalize_hamza_madda: true,
            convert_eastern_numerals: true,
            drop_latin_tokens: true,
            punctuation_keep_set: ['%', '@'].into_iter().collect(),
        }
    }
}

impl NormalizationConfig {
    /// NFC and whitespace collapse only.
    pub fn minimal() -> Self {
        NormalizationConfig {
            remove_punctuation: false,
            strip_diacritics: false,
            normalize_hamza_madda: false,
            convert_eastern_numerals: false,
            drop_latin_tokens: false,
            punctuation_keep_set: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.punctuation_keep_set.iter().find(|c| !is_punctuation(**c)) {
            return Err(Error::InvalidConfig(format!(
                "punctuation_keep_set contains {c:?} (U+{:04X}), which is not punctuation",
                *c as u32
            )));
        }
        Ok(())
    }
}

/// Text that has been through [`normalize`].
///
/// Guaranteed to be NFC, free of leading/trailing whitespace and of runs of
/// more than one space.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NormalizedText {
    text: String,
    source_hash: u64,
}

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn source_hash(&self) -> u64 {
        self.source_hash
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.text.split(' ').filter(|w| !w.is_empty())
    }

    pub fn word_count(&self) -> usize {
        self.words().count()
    }

    pub fn into_string(self) -> String {
        self.text
    }

    /// Joins words that are already normalized tokens (reordering, stored
    /// index documents). Callers must not pass raw text.
    pub(crate) fn from_words<'a>(words: impl IntoIterator<Item = &'a str>, source_hash: u64) -> Self {
        let mut text = String::new();
        for w in words {
            if w.is_empty() {
                continue;
            }
            if !text.is_empty() {
                text.push(' ');
            }
            text.push_str(w);
        }
        NormalizedText { text, source_hash }
    }

    pub(crate) fn from_normalized(text: &str) -> Self {
        NormalizedText::from_words(text.split(' '), digest64(text))
    }
}

impl fmt::Debug for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.text, f)
    }
}

impl fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl AsRef<str> for NormalizedText {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

impl Serialize for NormalizedText {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

pub(crate) fn digest64(s: &str) -> u64 {
    let d = Sha256::digest(s.as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("sha256 is 32 bytes"))
}

/// Unicode P* plus the Arabic comma, semicolon and question mark.
pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    ) || matches!(c, '\u{060C}' | '\u{061B}' | '\u{061F}')
}

/// Harakat, Quranic marks in U+064B..U+065F, superscript alef, and tatweel.
pub fn is_arabic_diacritic(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{065F}' | '\u{0670}' | '\u{0640}')
}

fn fold_hamza(c: char) -> char {
    match c {
        '\u{0622}' | '\u{0623}' | '\u{0625}' | '\u{0671}' => '\u{0627}',
        other => other,
    }
}

/// Maps U+0660..U+0669 and U+06F0..U+06F9 to ASCII digits.
pub fn western_digit(c: char) -> Option<char> {
    let base = match c {
        '\u{0660}'..='\u{0669}' => 0x0660,
        '\u{06F0}'..='\u{06F9}' => 0x06F0,
        _ => return None,
    };
    char::from_digit(c as u32 - base, 10)
}

fn is_latin_token(token: &str) -> bool {
    token.chars().any(|c| c.script() == Script::Latin)
}

fn single_pass(raw: &str, cfg: &NormalizationConfig) -> String {
    let mut chars = String::with_capacity(raw.len());
    for c in raw.nfc() {
        if cfg.remove_punctuation && is_punctuation(c) && !cfg.punctuation_keep_set.contains(&c) {
            continue;
        }
        if cfg.strip_diacritics && is_arabic_diacritic(c) {
            continue;
        }
        let c = if cfg.normalize_hamza_madda { fold_hamza(c) } else { c };
        let c = if cfg.convert_eastern_numerals {
            western_digit(c).unwrap_or(c)
        } else {
            c
        };
        chars.push(c);
    }

    let mut out = String::with_capacity(chars.len());
    for token in chars.split_whitespace() {
        if cfg.drop_latin_tokens && is_latin_token(token) {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Runs the normalization pipeline.
///
/// Removing characters can leave a base letter next to a combining mark it
/// composes with, so the pipeline is repeated until the output is NFC.
pub fn normalize(raw: &str, cfg: &NormalizationConfig) -> NormalizedText {
    let mut text = single_pass(raw, cfg);
    for _ in 0..4 {
        if is_nfc(&text) {
            break;
        }
        text = single_pass(&text, cfg);
    }
    NormalizedText {
        text,
        source_hash: digest64(raw),
    }
}

pub fn tokenize_words(t: &NormalizedText) -> Vec<&str> {
    t.words().collect()
}
