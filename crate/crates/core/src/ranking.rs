//! Rankings over the news pool of a snapshot.
//!
//! A pool is the set of items shown in one official snapshot. Items that are
//! at least two days old at the reference time are OLD (their count is
//! observable); the rest are NEW and need a prediction. Rankings built from
//! scores ([`RankKind::GroundTruth`], [`RankKind::Predicted`]) order by
//! descending score, then earlier publication, then id. The other kinds are
//! orders over positions and store the position-like key as score.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{count_window, slice_length, Corpus, NewsItem, Snapshot};
use crate::error::{Error, Result};
use crate::features::{feature_rows, Lexicon, Vocabulary};
use crate::learners::Model;

/// Number of 30-minute slices in the two-day horizon.
pub const FINAL_SLICE: u32 = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankKind {
    GroundTruth,
    Predicted,
    Official,
    Fused,
    BaselineTime,
}

impl RankKind {
    pub fn label(self) -> &'static str {
        match self {
            RankKind::GroundTruth => "ground_truth",
            RankKind::Predicted => "predicted",
            RankKind::Official => "official",
            RankKind::Fused => "fused",
            RankKind::BaselineTime => "baseline_time",
        }
    }

    /// Whether larger scores rank higher.
    pub fn score_descending(self) -> bool {
        matches!(self, RankKind::GroundTruth | RankKind::Predicted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub id: String,
    pub score: f64,
}

/// An ordered list of unique ids; position 1 is the top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    entries: Vec<RankEntry>,
    kind: RankKind,
}

impl RankedList {
    /// Checks id uniqueness and score monotonicity for the kind.
    pub fn new(entries: Vec<RankEntry>, kind: RankKind) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        let ordered = entries.windows(2).all(|w| {
            if kind.score_descending() {
                w[0].score >= w[1].score
            } else {
                w[0].score <= w[1].score
            }
        });
        if !ordered {
            return Err(Error::InvalidParams(format!("{} scores are out of order", kind.label())));
        }
        Ok(Self { entries, kind })
    }

    /// A list in the given order with positions as scores.
    pub fn from_order<I, S>(ids: I, kind: RankKind) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entries = ids
            .into_iter()
            .enumerate()
            .map(|(i, id)| RankEntry {
                id: id.into(),
                score: (i + 1) as f64,
            })
            .collect();
        Self::new(entries, kind)
    }

    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    pub fn kind(&self) -> RankKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn top(&self, k: usize) -> impl Iterator<Item = &str> {
        self.ids().take(k)
    }

    /// 1-based position of every id.
    pub fn positions(&self) -> HashMap<&str, usize> {
        self.ids().enumerate().map(|(i, id)| (id, i + 1)).collect()
    }

    pub fn score_of(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.score)
    }

    /// Keeps the entries whose id passes `keep`, in order.
    pub fn restrict(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        Self {
            entries: self.entries.iter().filter(|e| keep(&e.id)).cloned().collect(),
            kind: self.kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Age {
    Old,
    New,
}

/// The items of one snapshot tagged OLD or NEW against a reference time.
#[derive(Debug, Clone, PartialEq)]
pub struct NewsPool {
    ref_time: DateTime<Utc>,
    members: Vec<(String, Age)>,
}

impl NewsPool {
    pub fn ref_time(&self) -> DateTime<Utc> {
        self.ref_time
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Ids in snapshot order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|(id, _)| id.as_str())
    }

    pub fn members(&self) -> &[(String, Age)] {
        &self.members
    }

    pub fn age_of(&self, id: &str) -> Option<Age> {
        self.members.iter().find(|(m, _)| m == id).map(|(_, a)| *a)
    }

    pub fn old_ids(&self) -> impl Iterator<Item = &str> {
        self.with_age(Age::Old)
    }

    pub fn new_ids(&self) -> impl Iterator<Item = &str> {
        self.with_age(Age::New)
    }

    fn with_age(&self, age: Age) -> impl Iterator<Item = &str> {
        self.members.iter().filter(move |(_, a)| *a == age).map(|(id, _)| id.as_str())
    }

    /// The sub-pool of members passing `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&str, Age) -> bool) -> Self {
        Self {
            ref_time: self.ref_time,
            members: self.members.iter().filter(|(id, a)| keep(id, *a)).cloned().collect(),
        }
    }

    /// Drops members whose count is unknown.
    pub fn known_only(&self, corpus: &Corpus) -> Self {
        self.filter(|id, _| corpus.get(id).is_some_and(NewsItem::is_known))
    }
}

/// OLD when the item is at least two days old at `ref_time`.
pub fn age_at(item: &NewsItem, ref_time: DateTime<Utc>) -> Age {
    if item.pub_ts + count_window() <= ref_time {
        Age::Old
    } else {
        Age::New
    }
}

pub fn build_pool(snapshot: &Snapshot, corpus: &Corpus, ref_time: DateTime<Utc>) -> Result<NewsPool> {
    let missing: Vec<String> = snapshot
        .ranked_ids
        .iter()
        .filter(|id| corpus.get(id).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnknownIds(missing));
    }
    let members = snapshot
        .ranked_ids
        .iter()
        .map(|id| (id.clone(), age_at(corpus.get(id).expect("checked above"), ref_time)))
        .collect();
    Ok(NewsPool { ref_time, members })
}

/// Orders `(id, score)` pairs by descending score, earlier publication, id.
pub fn rank_by_score(corpus: &Corpus, scores: Vec<(String, f64)>, kind: RankKind) -> Result<RankedList> {
    let mut keyed = Vec::with_capacity(scores.len());
    for (id, score) in scores {
        if score.is_nan() {
            return Err(Error::InvalidParams(format!("score of {id:?} is NaN")));
        }
        let ts = corpus.item(&id)?.pub_ts;
        keyed.push((id, score, ts));
    }
    keyed.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.2.cmp(&b.2))
            .then_with(|| a.0.cmp(&b.0))
    });
    let entries = keyed.into_iter().map(|(id, score, _)| RankEntry { id, score }).collect();
    RankedList::new(entries, kind)
}

fn observed(corpus: &Corpus, id: &str) -> Result<f64> {
    corpus
        .item(id)?
        .n_tweets_2d
        .map(|c| c as f64)
        .ok_or_else(|| Error::UnknownTarget(id.to_string()))
}

/// Pool ordered by observed counts.
pub fn ground_truth_rank(pool: &NewsPool, corpus: &Corpus) -> Result<RankedList> {
    let scores = pool
        .ids()
        .map(|id| Ok((id.to_string(), observed(corpus, id)?)))
        .collect::<Result<Vec<_>>>()?;
    rank_by_score(corpus, scores, RankKind::GroundTruth)
}

/// Anything that maps items to predicted counts.
pub trait Predict {
    fn predict_items(&self, items: &[&NewsItem]) -> Result<Vec<f64>>;
}

/// A fitted model with the vocabulary and lexicon used to featurize its
/// inputs. This is what gets saved for one-shot ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub vocabulary: Vocabulary,
    pub lexicon: Lexicon,
    pub model: Model,
}

impl ModelBundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bundle: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        bundle.vocabulary.schema().check(bundle.model.schema())?;
        Ok(bundle)
    }
}

impl Predict for ModelBundle {
    fn predict_items(&self, items: &[&NewsItem]) -> Result<Vec<f64>> {
        let rows = feature_rows(items.iter().copied(), &self.vocabulary, &self.lexicon);
        self.model.predict(&self.vocabulary.schema(), &rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictMode {
    /// Rank the NEW items only, by prediction.
    NewOnly,
    /// Rank everything: OLD by observed count, NEW by prediction.
    Hybrid,
}

/// Per-item scores behind [`predicted_rank`], in pool order.
pub fn predicted_scores<P: Predict + ?Sized>(
    pool: &NewsPool,
    corpus: &Corpus,
    model: &P,
    mode: PredictMode,
) -> Result<Vec<(String, f64)>> {
    let new_items = pool.new_ids().map(|id| corpus.item(id)).collect::<Result<Vec<_>>>()?;
    let preds = model.predict_items(&new_items)?;
    let mut predicted: HashMap<&str, f64> =
        new_items.iter().map(|it| it.id.as_str()).zip(preds).collect();
    let mut out = Vec::with_capacity(pool.len());
    for (id, age) in pool.members() {
        match (age, mode) {
            (Age::New, _) => out.push((id.clone(), predicted.remove(id.as_str()).expect("predicted above"))),
            (Age::Old, PredictMode::Hybrid) => out.push((id.clone(), observed(corpus, id)?)),
            (Age::Old, PredictMode::NewOnly) => {}
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(out)
}

pub fn predicted_rank<P: Predict + ?Sized>(
    pool: &NewsPool,
    corpus: &Corpus,
    model: &P,
    mode: PredictMode,
) -> Result<RankedList> {
    let scores = predicted_scores(pool, corpus, model, mode)?;
    rank_by_score(corpus, scores, RankKind::Predicted)
}

/// The linear factor `1 - (t - 1) / t_f`, with `t` capped at `t_f`.
pub fn decay_factor(t: u32, t_f: u32) -> Result<f64> {
    if t < 1 || t_f < 1 {
        return Err(Error::InvalidParams(format!("slice index must be >= 1 (t = {t}, t_f = {t_f})")));
    }
    let t = t.min(t_f);
    Ok(1.0 - (t - 1) as f64 / t_f as f64)
}

pub fn decay(base: f64, t: u32, t_f: u32) -> Result<f64> {
    Ok(base * decay_factor(t, t_f)?)
}

/// The 30-minute slice an item is in at `ref_time`: `ceil(age / 30 min)`
/// clamped to `[1, t_f]`.
pub fn slice_index(pub_ts: DateTime<Utc>, ref_time: DateTime<Utc>, t_f: u32) -> u32 {
    let secs = (ref_time - pub_ts).num_seconds();
    let len = slice_length().num_seconds();
    let t = if secs <= 0 { 1 } else { (secs + len - 1) / len };
    t.clamp(1, t_f as i64) as u32
}

/// Multiplies each score by the decay factor of its item's age.
pub fn apply_decay(
    corpus: &Corpus,
    scores: &[(String, f64)],
    ref_time: DateTime<Utc>,
    t_f: u32,
) -> Result<Vec<(String, f64)>> {
    scores
        .iter()
        .map(|(id, s)| {
            let t = slice_index(corpus.item(id)?.pub_ts, ref_time, t_f);
            Ok((id.clone(), decay(*s, t, t_f)?))
        })
        .collect()
}

/// Ordered view of an official snapshot restricted to a pool.
pub fn official_rank(pool: &NewsPool) -> RankedList {
    RankedList::from_order(pool.ids(), RankKind::Official).expect("pool ids are unique")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fusion {
    /// Mean of the two positions.
    Agreement,
    /// Best of the two positions.
    Poll,
}

impl Fusion {
    pub fn label(self) -> &'static str {
        match self {
            Fusion::Agreement => "agr",
            Fusion::Poll => "poll",
        }
    }
}

/// Combines two rankings of the same ids by position. Ties are broken by the
/// higher score in `rank_b`, then by id, so `rank_b` should be the
/// framework ranking carrying the (decayed) predicted scores.
pub fn fuse(rank_a: &RankedList, rank_b: &RankedList, strategy: Fusion) -> Result<RankedList> {
    let pa = rank_a.positions();
    let pb = rank_b.positions();
    let mut diff: Vec<String> = pa
        .keys()
        .filter(|id| !pb.contains_key(*id))
        .chain(pb.keys().filter(|id| !pa.contains_key(*id)))
        .map(|s| s.to_string())
        .collect();
    if !diff.is_empty() {
        diff.sort();
        return Err(Error::IdSetMismatch(diff));
    }
    let b_score: HashMap<&str, f64> = rank_b.entries().iter().map(|e| (e.id.as_str(), e.score)).collect();
    let tie_score = |id: &str| {
        let s = b_score[id];
        if rank_b.kind().score_descending() {
            s
        } else {
            -s
        }
    };
    let mut keyed: Vec<(&str, f64)> = rank_a
        .ids()
        .map(|id| {
            let (a, b) = (pa[id] as f64, pb[id] as f64);
            let key = match strategy {
                Fusion::Agreement => (a + b) / 2.0,
                Fusion::Poll => a.min(b),
            };
            (id, key)
        })
        .collect();
    keyed.sort_by(|x, y| {
        x.1.total_cmp(&y.1)
            .then_with(|| tie_score(y.0).total_cmp(&tie_score(x.0)))
            .then_with(|| x.0.cmp(y.0))
    });
    let entries = keyed
        .into_iter()
        .map(|(id, key)| RankEntry { id: id.to_string(), score: key })
        .collect();
    RankedList::new(entries, RankKind::Fused)
}

/// Most recent first; the score is the age in hours.
pub fn baseline_time(pool: &NewsPool, corpus: &Corpus) -> Result<RankedList> {
    let mut aged = pool
        .ids()
        .map(|id| {
            let age = (pool.ref_time - corpus.item(id)?.pub_ts).num_seconds() as f64 / 3600.0;
            Ok((id.to_string(), age))
        })
        .collect::<Result<Vec<_>>>()?;
    aged.sort_by(|a, b| match a.1.total_cmp(&b.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    let entries = aged.into_iter().map(|(id, score)| RankEntry { id, score }).collect();
    RankedList::new(entries, RankKind::BaselineTime)
}

/// Writes `rank,id,score,kind` rows.
pub fn write_rank_csv<W: Write>(writer: W, list: &RankedList) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rank", "id", "score", "kind"])?;
    for (i, e) in list.entries().iter().enumerate() {
        w.write_record([(i + 1).to_string(), e.id.clone(), e.score.to_string(), list.kind().label().to_string()])?;
    }
    w.flush()?;
    Ok(())
}
