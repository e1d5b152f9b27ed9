use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::text::{is_negator, sentiment_tokens};
use crate::error::{Error, Result};

/// Word polarities in {-1, +1}.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, i8>", into = "BTreeMap<String, i8>")]
pub struct Lexicon {
    words: BTreeMap<String, i8>,
}

impl TryFrom<BTreeMap<String, i8>> for Lexicon {
    type Error = Error;

    fn try_from(words: BTreeMap<String, i8>) -> Result<Self> {
        Self::from_pairs(words)
    }
}

impl From<Lexicon> for BTreeMap<String, i8> {
    fn from(l: Lexicon) -> Self {
        l.words
    }
}

#[derive(Deserialize)]
struct Row {
    word: String,
    polarity: i8,
}

impl Lexicon {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, i8)>,
        S: Into<String>,
    {
        let mut words = BTreeMap::new();
        for (w, p) in pairs {
            let w: String = w.into();
            if p != 1 && p != -1 {
                return Err(Error::InvalidParams(format!("polarity of {w:?} must be -1 or 1, got {p}")));
            }
            words.insert(w.to_lowercase(), p);
        }
        Ok(Self { words })
    }

    /// Reads a `word,polarity` CSV with a header row.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr
            .deserialize::<Row>()
            .map(|r| r.map(|r| (r.word, r.polarity)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_pairs(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// The small English lexicon shipped with the crate.
    pub fn default_english() -> Self {
        Self::from_csv_reader(include_str!("../../data/lexicon.csv").as_bytes())
            .expect("bundled lexicon is well formed")
    }

    pub fn polarity(&self, word: &str) -> Option<i8> {
        self.words.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Sorted positive and negative words.
    pub fn split_by_polarity(&self) -> (Vec<String>, Vec<String>) {
        let pos = self.words.iter().filter(|(_, &p)| p > 0).map(|(w, _)| w.clone()).collect();
        let neg = self.words.iter().filter(|(_, &p)| p < 0).map(|(w, _)| w.clone()).collect();
        (pos, neg)
    }
}

/// Length-normalized polarity: the sum of signed lexicon hits divided by
/// the square root of the token count. A hit flips sign when a negator
/// occurs among the two tokens before it. Each negator applies to the first
/// hit after it only, so "not good deal" scores `(-1 + 1) / sqrt(3)`.
pub fn sentiment(text: &str, lexicon: &Lexicon) -> f64 {
    let tokens = sentiment_tokens(text);
    if tokens.is_empty() {
        return 0.0;
    }
    let mut total = 0i64;
    for (i, tok) in tokens.iter().enumerate() {
        if let Some(p) = lexicon.polarity(tok) {
            let negated = tokens[i.saturating_sub(2)..i]
                .iter()
                .rev()
                .take_while(|t| lexicon.polarity(t).is_none())
                .any(|t| is_negator(t));
            total += if negated { -p as i64 } else { p as i64 };
        }
    }
    total as f64 / (tokens.len() as f64).sqrt()
}
