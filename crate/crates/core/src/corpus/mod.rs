//! News items, ranking snapshots and their JSON-lines representation.

mod synth;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Duration, SubsecRound, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use synth::{generate_synthetic, GenParams};

/// Maximum number of ranked ids kept in one snapshot.
pub const SNAPSHOT_DEPTH: usize = 100;

/// Length of one snapshot interval.
pub fn slice_length() -> Duration {
    Duration::minutes(30)
}

/// Window after publication during which tweets are counted.
pub fn count_window() -> Duration {
    Duration::days(2)
}

/// One news story.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsItem {
    pub id: String,
    pub title: String,
    pub headline: String,
    pub pub_ts: DateTime<Utc>,
    /// Tweets in the two days after `pub_ts`; `None` when the count is unknown.
    #[serde(default)]
    pub n_tweets_2d: Option<u64>,
}

impl NewsItem {
    pub fn is_known(&self) -> bool {
        self.n_tweets_2d.is_some()
    }
}

/// One 30-minute query of the official ranking. Position 0 is the top.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub ts: DateTime<Utc>,
    pub ranked_ids: Vec<String>,
}

/// A validated, immutable collection of items and snapshots for one topic.
#[derive(Debug, Clone)]
pub struct Corpus {
    items: Vec<NewsItem>,
    index: HashMap<String, usize>,
    snapshots: Vec<Snapshot>,
    topic: String,
}

impl Corpus {
    pub fn new(
        mut items: Vec<NewsItem>,
        snapshots: Vec<Snapshot>,
        topic: impl Into<String>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(items.len());
        for (i, item) in items.iter_mut().enumerate() {
            validate_item(item)?;
            item.pub_ts = item.pub_ts.trunc_subsecs(0);
            if index.insert(item.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(item.id.clone()));
            }
        }
        let corpus = Self {
            items,
            index,
            snapshots,
            topic: topic.into(),
        };
        for (i, snap) in corpus.snapshots.iter().enumerate() {
            corpus.validate_snapshot(i, snap)?;
        }
        Ok(corpus)
    }

    fn validate_snapshot(&self, pos: usize, snap: &Snapshot) -> Result<()> {
        if pos > 0 && snap.ts <= self.snapshots[pos - 1].ts {
            return Err(Error::InvalidCorpus(format!(
                "snapshot {} at {} is not after the previous snapshot",
                pos + 1,
                snap.ts
            )));
        }
        if snap.ranked_ids.len() > SNAPSHOT_DEPTH {
            return Err(Error::InvalidCorpus(format!(
                "snapshot at {} ranks {} ids (max {SNAPSHOT_DEPTH})",
                snap.ts,
                snap.ranked_ids.len()
            )));
        }
        let mut seen = HashSet::new();
        let mut unknown = Vec::new();
        for id in &snap.ranked_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidCorpus(format!(
                    "snapshot at {} lists {id:?} twice",
                    snap.ts
                )));
            }
            if !self.index.contains_key(id) {
                unknown.push(id.clone());
            }
        }
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::UnknownIds(unknown))
        }
    }

    pub fn items(&self) -> &[NewsItem] {
        &self.items
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn get(&self, id: &str) -> Option<&NewsItem> {
        self.index.get(id).map(|&i| &self.items[i])
    }

    /// Looks up `id`, failing with [`Error::UnknownIds`].
    pub fn item(&self, id: &str) -> Result<&NewsItem> {
        self.get(id)
            .ok_or_else(|| Error::UnknownIds(vec![id.to_string()]))
    }

    /// Items with a known count, ordered by publication time then id.
    pub fn known_items_by_time(&self) -> Vec<&NewsItem> {
        let mut v: Vec<&NewsItem> = self.items.iter().filter(|it| it.is_known()).collect();
        v.sort_by(|a, b| a.pub_ts.cmp(&b.pub_ts).then_with(|| a.id.cmp(&b.id)));
        v
    }

    pub fn snapshot_at(&self, ts: DateTime<Utc>) -> Option<&Snapshot> {
        self.snapshots
            .binary_search_by(|s| s.ts.cmp(&ts))
            .ok()
            .map(|i| &self.snapshots[i])
    }

    /// Up to `n` snapshot timestamps closest to `ts`.
    pub fn nearest_snapshot_times(&self, ts: DateTime<Utc>, n: usize) -> Vec<DateTime<Utc>> {
        let mut times: Vec<DateTime<Utc>> = self.snapshots.iter().map(|s| s.ts).collect();
        times.sort_by_key(|t| ((*t - ts).num_seconds().abs(), *t));
        times.truncate(n);
        times
    }
}

fn validate_item(item: &NewsItem) -> Result<()> {
    if item.id.is_empty() {
        return Err(Error::InvalidCorpus("item with empty id".into()));
    }
    if item.headline.trim().is_empty() {
        return Err(Error::InvalidCorpus(format!(
            "item {:?} has an empty headline",
            item.id
        )));
    }
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Loads and validates a catalog and a snapshot file. The topic label is
/// taken from the catalog file stem.
pub fn load_corpus(catalog_path: &Path, snapshots_path: &Path) -> Result<Corpus> {
    let items: Vec<NewsItem> = read_jsonl(catalog_path)?;
    let snapshots: Vec<Snapshot> = read_jsonl(snapshots_path)?;
    let topic = catalog_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Corpus::new(items, snapshots, topic)
}

pub fn write_corpus(corpus: &Corpus, catalog_path: &Path, snapshots_path: &Path) -> Result<()> {
    write_jsonl(catalog_path, corpus.items())?;
    write_jsonl(snapshots_path, corpus.snapshots())
}

/// Summary statistics printed by the `validate` and `synth` subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub topic: String,
    pub n_items: usize,
    pub n_unknown: usize,
    pub n_snapshots: usize,
    pub first_snapshot: Option<DateTime<Utc>>,
    pub last_snapshot: Option<DateTime<Utc>>,
}

impl Corpus {
    pub fn summary(&self) -> CorpusSummary {
        CorpusSummary {
            topic: self.topic.clone(),
            n_items: self.items.len(),
            n_unknown: self.items.iter().filter(|i| !i.is_known()).count(),
            n_snapshots: self.snapshots.len(),
            first_snapshot: self.snapshots.first().map(|s| s.ts),
            last_snapshot: self.snapshots.last().map(|s| s.ts),
        }
    }
}
