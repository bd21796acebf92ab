use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::NormalizedText;

/// Word-boundary-aware character n-grams.
///
/// Each whitespace-delimited token is padded with one space on each side and
/// every length-n window of the padded token is emitted, for n in
/// `n_min..=n_max`. Once a padded token is no longer than n it is emitted
/// whole a single time and larger n are skipped for that token.
pub fn char_wb_ngrams(text: &NormalizedText, n_min: usize, n_max: usize) -> Result<Vec<String>> {
    check_range(n_min, n_max)?;
    let mut out = Vec::new();
    for word in text.words() {
        push_word_ngrams(word, n_min, n_max, &mut out);
    }
    Ok(out)
}

fn check_range(n_min: usize, n_max: usize) -> Result<()> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidConfig(format!(
            "n-gram range ({n_min}, {n_max}) must satisfy 1 <= min <= max"
        )));
    }
    Ok(())
}

fn push_word_ngrams(word: &str, n_min: usize, n_max: usize, out: &mut Vec<String>) {
    let padded: Vec<char> = std::iter::once(' ')
        .chain(word.chars())
        .chain(std::iter::once(' '))
        .collect();
    for n in n_min..=n_max {
        if padded.len() <= n {
            out.push(padded.iter().collect());
            break;
        }
        out.extend(padded.windows(n).map(|w| w.iter().collect::<String>()));
    }
}

/// Featurization parameters of a [`TfIdfIndex`](super::TfIdfIndex).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analyzer {
    pub n_min: usize,
    pub n_max: usize,
    pub lowercase: bool,
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer {
            n_min: 3,
            n_max: 5,
            lowercase: true,
        }
    }
}

impl Analyzer {
    pub fn new(n_min: usize, n_max: usize) -> Result<Self> {
        check_range(n_min, n_max)?;
        Ok(Analyzer {
            n_min,
            n_max,
            lowercase: true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_range(self.n_min, self.n_max)
    }

    pub fn ngrams(&self, text: &NormalizedText) -> Vec<String> {
        let mut out = Vec::new();
        for word in text.words() {
            if self.lowercase {
                push_word_ngrams(&word.to_lowercase(), self.n_min, self.n_max, &mut out);
            } else {
                push_word_ngrams(word, self.n_min, self.n_max, &mut out);
            }
        }
        out
    }
}
