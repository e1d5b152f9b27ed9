//! Predictor vectors for news items: headline term frequencies plus the
//! sentiment scores of title and headline.

mod sentiment;
mod text;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::NewsItem;
use crate::error::{Error, Result};

pub use sentiment::{sentiment, Lexicon};
pub use text::{is_negator, is_stopword, sentiment_tokens, terms};

/// Vocabulary size used when none is configured.
pub const DEFAULT_MAX_TERMS: usize = 150;

pub const SENT_TITLE: &str = "sent_title";
pub const SENT_HEADLINE: &str = "sent_headline";

/// Headline terms selected on a training split, ordered by descending
/// document frequency then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabularyRepr) -> Result<Self> {
        Vocabulary::new(r.terms, r.doc_freq)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    pub fn new(terms: Vec<String>, doc_freq: Vec<usize>) -> Result<Self> {
        if terms.len() != doc_freq.len() {
            return Err(Error::LengthMismatch {
                left: terms.len(),
                right: doc_freq.len(),
            });
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidParams(format!("duplicate vocabulary term {t:?}")));
            }
        }
        Ok(Self { terms, doc_freq, index })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn schema(&self) -> Schema {
        Schema::new(self.terms.clone())
    }
}

/// Keeps the `max_terms` headline terms with the highest document frequency.
pub fn build_vocabulary<'a, I>(train_items: I, max_terms: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a NewsItem>,
{
    let mut df: HashMap<String, usize> = HashMap::new();
    let mut n_docs = 0usize;
    for item in train_items {
        n_docs += 1;
        let distinct: BTreeSet<String> = terms(&item.headline).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    if n_docs == 0 {
        return Err(Error::EmptyDataset);
    }
    if df.is_empty() || max_terms == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_terms);
    let (terms, doc_freq) = ranked.into_iter().unzip();
    Vocabulary::new(terms, doc_freq)
}

/// Feature names: one per vocabulary term, then the two sentiment scores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    terms: Vec<String>,
}

impl Schema {
    pub fn new(terms: Vec<String>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn n_features(&self) -> usize {
        self.terms.len() + 2
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.terms.iter().map(|t| format!("tf:{t}")).collect();
        names.push(SENT_TITLE.into());
        names.push(SENT_HEADLINE.into());
        names
    }

    /// Hex SHA-256 over the ordered feature names.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for name in self.feature_names() {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Fails unless `other` has exactly this schema, naming the terms
    /// missing from `other` and the extra ones it has.
    pub fn check(&self, other: &Schema) -> Result<()> {
        if self == other {
            return Ok(());
        }
        let mine: BTreeSet<&String> = self.terms.iter().collect();
        let theirs: BTreeSet<&String> = other.terms.iter().collect();
        Err(Error::SchemaMismatch {
            missing: mine.difference(&theirs).map(|s| s.to_string()).collect(),
            extra: theirs.difference(&mine).map(|s| s.to_string()).collect(),
        })
    }
}

/// Term counts followed by `sent_title` and `sent_headline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(tf: Vec<f64>, sent_title: f64, sent_headline: f64) -> Self {
        let mut v = tf;
        v.push(sent_title);
        v.push(sent_headline);
        Self(v)
    }

    /// Wraps a raw value vector laid out as `[tf.., sent_title, sent_headline]`.
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "feature vector needs the two sentiment slots");
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn tf(&self) -> &[f64] {
        &self.0[..self.0.len() - 2]
    }

    pub fn sent_title(&self) -> f64 {
        self.0[self.0.len() - 2]
    }

    pub fn sent_headline(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Feature rows with aligned targets and item ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<FeatureVector>,
    y: Vec<f64>,
    ids: Vec<String>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<FeatureVector>, y: Vec<f64>, ids: Vec<String>) -> Result<Self> {
        if rows.len() != y.len() || rows.len() != ids.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: y.len().min(ids.len()),
            });
        }
        let width = schema.n_features();
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: width,
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite target".into()));
        }
        Ok(Self { schema, rows, y, ids })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.n_features()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    pub(crate) fn push(&mut self, row: FeatureVector, y: f64, id: String) {
        debug_assert_eq!(row.len(), self.schema.n_features());
        self.rows.push(row);
        self.y.push(y);
        self.ids.push(id);
    }

    pub(crate) fn empty_like(&self) -> Self {
        Self {
            schema: self.schema.clone(),
            rows: Vec::new(),
            y: Vec::new(),
            ids: Vec::new(),
        }
    }
}

/// Feature vector of one item under `vocab`.
pub fn feature_vector(item: &NewsItem, vocab: &Vocabulary, lexicon: &Lexicon) -> FeatureVector {
    let mut tf = vec![0.0; vocab.len()];
    for t in terms(&item.headline) {
        if let Some(j) = vocab.position(&t) {
            tf[j] += 1.0;
        }
    }
    FeatureVector::new(tf, sentiment(&item.title, lexicon), sentiment(&item.headline, lexicon))
}

/// Feature rows for items whose counts may be unknown (prediction time).
pub fn feature_rows<'a, I>(items: I, vocab: &Vocabulary, lexicon: &Lexicon) -> Vec<FeatureVector>
where
    I: IntoIterator<Item = &'a NewsItem>,
{
    items.into_iter().map(|it| feature_vector(it, vocab, lexicon)).collect()
}

/// Training dataset; every item must have a known count.
pub fn featurize<'a, I>(items: I, vocab: &Vocabulary, lexicon: &Lexicon) -> Result<Dataset>
where
    I: IntoIterator<Item = &'a NewsItem>,
{
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut ids = Vec::new();
    for item in items {
        let count = item.n_tweets_2d.ok_or_else(|| Error::UnknownTarget(item.id.clone()))?;
        rows.push(feature_vector(item, vocab, lexicon));
        y.push(count as f64);
        ids.push(item.id.clone());
    }
    Dataset::new(vocab.schema(), rows, y, ids)
}
