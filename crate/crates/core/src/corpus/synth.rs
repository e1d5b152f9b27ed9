//! Seeded synthetic news stream.
//!
//! Headlines are drawn from a generated vocabulary. A handful of designated
//! "hot" terms raise the expected log tweet count additively, so the target
//! is predictable from the headline but noisy. Tweet counts come from a
//! discretized log-normal, which gives the heavy right tail of real sharing
//! counts. Every 30 simulated minutes a snapshot ranks the live items by a
//! noisy blend of popularity and recency.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Zipf};
use serde::{Deserialize, Serialize};

use super::{slice_length, Corpus, NewsItem, Snapshot, SNAPSHOT_DEPTH};
use crate::error::{Error, Result};
use crate::features::{is_negator, is_stopword, Lexicon};
use crate::seed;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const MAX_VOCAB: usize = 4000;
const FILLERS: &[&str] = &["the", "of", "in", "for", "and", "to", "on", "a"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    /// Number of distinct content words.
    pub vocab_size: usize,
    /// Number of words that raise popularity when present.
    pub hot_terms: usize,
    /// Probability that a given hot term appears in a headline.
    pub hot_rate: f64,
    /// Additive log-count effect of each hot term.
    pub hot_effect: f64,
    /// Regular content words per headline.
    pub words_per_headline: usize,
    /// Zipf exponent of regular word frequencies.
    pub zipf_exponent: f64,
    /// Location of the log-normal count distribution.
    pub log_mu: f64,
    /// Scale of the log-normal count distribution.
    pub log_sigma: f64,
    /// Log-count effect per sentiment-bearing word in the headline.
    pub sentiment_effect: f64,
    /// Probability that a headline carries a sentiment word.
    pub sentiment_rate: f64,
    /// Standard deviation of the official ranker's per-item error.
    pub noise: f64,
    /// Official score penalty per hour of age.
    pub recency_weight: f64,
    /// Items older than this are not ranked in snapshots.
    pub max_age_hours: f64,
    /// Probability that an item's tweet count is unknown.
    pub unknown_rate: f64,
    /// Beginning of the simulated period.
    pub start: DateTime<Utc>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            vocab_size: 400,
            hot_terms: 12,
            hot_rate: 0.025,
            hot_effect: 0.45,
            words_per_headline: 6,
            zipf_exponent: 1.0,
            log_mu: 3.5,
            log_sigma: 0.33,
            sentiment_effect: 0.1,
            sentiment_rate: 0.4,
            noise: 1.0,
            recency_weight: 0.1,
            max_age_hours: 72.0,
            unknown_rate: 0.0,
            start: Utc.with_ymd_and_hms(2014, 5, 1, 0, 0, 0).unwrap(),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        let rate = |x: f64| (0.0..=1.0).contains(&x);
        if self.vocab_size <= self.hot_terms || self.vocab_size > MAX_VOCAB {
            return bad("vocab_size must exceed hot_terms and be at most 4000");
        }
        if self.words_per_headline == 0 {
            return bad("words_per_headline must be positive");
        }
        if !rate(self.hot_rate) || !rate(self.sentiment_rate) || !(0.0..1.0).contains(&self.unknown_rate) {
            return bad("rates must lie in [0, 1]");
        }
        if !(self.zipf_exponent > 0.0) {
            return bad("zipf_exponent must be positive");
        }
        for (name, v) in [
            ("log_sigma", self.log_sigma),
            ("noise", self.noise),
            ("recency_weight", self.recency_weight),
            ("hot_effect", self.hot_effect),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be non-negative")));
            }
        }
        if !(self.max_age_hours > 0.0) {
            return bad("max_age_hours must be positive");
        }
        if !self.log_mu.is_finite() {
            return bad("log_mu must be finite");
        }
        Ok(())
    }
}

/// Pronounceable, unique word for a vocabulary index.
fn vocab_word(i: usize) -> String {
    let syl = |k: usize| {
        let c = CONSONANTS[k % CONSONANTS.len()] as char;
        let v = VOWELS[(k / CONSONANTS.len()) % VOWELS.len()] as char;
        format!("{c}{v}")
    };
    let per = CONSONANTS.len() * VOWELS.len();
    format!("{}{}r", syl(i % per), syl(i / per))
}

/// The first `n` generated words that do not collide with a stopword, a
/// negator or a lexicon entry.
fn vocabulary(n: usize, lexicon: &Lexicon) -> Vec<String> {
    (0..)
        .map(vocab_word)
        .filter(|w| !is_stopword(w) && !is_negator(w) && lexicon.polarity(w).is_none())
        .take(n)
        .collect()
}

/// Generates a deterministic synthetic corpus.
///
/// Snapshots are taken at `start + k * 30min` for `k = 1..=n_slices`, and
/// publication times fall in `[start, start + n_slices * 30min)`.
pub fn generate_synthetic(seed: u64, n_items: usize, n_slices: usize, params: &GenParams) -> Result<Corpus> {
    if n_items == 0 || n_slices == 0 {
        return Err(Error::InvalidParams("n_items and n_slices must be positive".into()));
    }
    params.validate()?;

    let mut rng = seed::rng(seed, &[0]);
    let lexicon = Lexicon::default_english();
    let (positive, negative) = lexicon.split_by_polarity();
    let words = vocabulary(params.vocab_size, &lexicon);
    let (hot, regular) = words.split_at(params.hot_terms);
    let zipf = Zipf::new(regular.len() as u64, params.zipf_exponent)
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let noise = Normal::new(0.0, params.log_sigma).map_err(|e| Error::InvalidParams(e.to_string()))?;

    let span_secs = (n_slices as i64) * slice_length().num_seconds();
    let mut offsets: Vec<i64> = (0..n_items).map(|_| rng.gen_range(0..span_secs)).collect();
    offsets.sort_unstable();
    for i in 1..offsets.len() {
        if offsets[i] <= offsets[i - 1] {
            offsets[i] = offsets[i - 1] + 1;
        }
    }

    let mut items = Vec::with_capacity(n_items);
    let mut latent = Vec::with_capacity(n_items);
    for (i, off) in offsets.iter().enumerate() {
        let mut tokens: Vec<String> = (0..params.words_per_headline)
            .map(|_| regular[zipf.sample(&mut rng) as usize - 1].clone())
            .collect();
        let mut n_hot = 0usize;
        for term in hot {
            if rng.gen_bool(params.hot_rate) {
                tokens.push(term.clone());
                n_hot += 1;
            }
        }
        tokens.shuffle(&mut rng);
        let mut n_sent = 0usize;
        if rng.gen_bool(params.sentiment_rate) {
            let pool = if rng.gen_bool(0.5) { &positive } else { &negative };
            if let Some(w) = pool.choose(&mut rng) {
                let at = rng.gen_range(0..=tokens.len());
                tokens.insert(at, w.clone());
                if rng.gen_bool(0.15) {
                    tokens.insert(at, "not".into());
                }
                n_sent += 1;
            }
        }
        let filler = FILLERS[rng.gen_range(0..FILLERS.len())];
        tokens.insert(rng.gen_range(0..=tokens.len()), filler.to_string());
        let headline = capitalize(&tokens.join(" "));

        let title_len = (tokens.len() / 2).max(2).min(tokens.len());
        let mut title_tokens: Vec<String> = tokens[..title_len].to_vec();
        if rng.gen_bool(params.sentiment_rate / 2.0) {
            let pool = if rng.gen_bool(0.5) { &positive } else { &negative };
            if let Some(w) = pool.choose(&mut rng) {
                title_tokens.push(w.clone());
            }
        }
        let title = capitalize(&title_tokens.join(" "));

        let z = params.log_mu
            + params.hot_effect * n_hot as f64
            + params.sentiment_effect * n_sent as f64
            + noise.sample(&mut rng);
        let count = z.exp().floor().max(0.0) as u64;
        let known = !rng.gen_bool(params.unknown_rate);
        latent.push(z);
        items.push(NewsItem {
            id: format!("n{i:06}"),
            title,
            headline,
            pub_ts: params.start + Duration::seconds(*off),
            n_tweets_2d: known.then_some(count),
        });
    }

    let snapshots = official_snapshots(seed, n_slices, params, &items, &latent)?;
    Corpus::new(items, snapshots, "synthetic")
}

fn official_snapshots(
    seed: u64,
    n_slices: usize,
    params: &GenParams,
    items: &[NewsItem],
    latent: &[f64],
) -> Result<Vec<Snapshot>> {
    let mut rng = seed::rng(seed, &[1]);
    let err = Normal::new(0.0, params.noise).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let bias: Vec<f64> = latent.iter().map(|_| err.sample(&mut rng)).collect();
    let max_age = Duration::seconds((params.max_age_hours * 3600.0) as i64);

    let mut snapshots = Vec::with_capacity(n_slices);
    let mut lo = 0usize;
    let mut hi = 0usize;
    for k in 1..=n_slices {
        let ts = params.start + slice_length() * k as i32;
        while hi < items.len() && items[hi].pub_ts <= ts {
            hi += 1;
        }
        while lo < hi && ts - items[lo].pub_ts > max_age {
            lo += 1;
        }
        let mut scored: Vec<(f64, usize)> = (lo..hi)
            .map(|i| {
                let age_h = (ts - items[i].pub_ts).num_seconds() as f64 / 3600.0;
                (latent[i] + bias[i] - params.recency_weight * age_h, i)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(SNAPSHOT_DEPTH);
        snapshots.push(Snapshot {
            ts,
            ranked_ids: scored.into_iter().map(|(_, i)| items[i].id.clone()).collect(),
        });
    }
    Ok(snapshots)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_corpus() {
        let a = generate_synthetic(11, 300, 20, &GenParams::default()).unwrap();
        let b = generate_synthetic(11, 300, 20, &GenParams::default()).unwrap();
        assert_eq!(a.items(), b.items());
        assert_eq!(a.snapshots(), b.snapshots());
        let c = generate_synthetic(12, 300, 20, &GenParams::default()).unwrap();
        assert_ne!(a.items(), c.items());
    }

    #[test]
    fn ninety_six_slices_span_two_days() {
        let p = GenParams::default();
        let corpus = generate_synthetic(5, 200, 96, &p).unwrap();
        let snaps = corpus.snapshots();
        assert_eq!(snaps.len(), 96);
        assert_eq!(snaps.last().unwrap().ts - p.start, Duration::hours(48));
        for w in snaps.windows(2) {
            assert_eq!(w[1].ts - w[0].ts, Duration::minutes(30));
        }
        for item in corpus.items() {
            assert!(item.pub_ts >= p.start && item.pub_ts < p.start + Duration::hours(48));
        }
    }

    #[test]
    fn counts_are_right_skewed() {
        for seed in 0..5 {
            let corpus = generate_synthetic(seed, 1000, 10, &GenParams::default()).unwrap();
            let mut y: Vec<f64> = corpus.items().iter().filter_map(|i| i.n_tweets_2d).map(|v| v as f64).collect();
            y.sort_by(f64::total_cmp);
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            let median = (y[y.len() / 2 - 1] + y[y.len() / 2]) / 2.0;
            assert!(mean > median, "seed {seed}: mean {mean} median {median}");
        }
    }

    #[test]
    fn publication_times_are_distinct() {
        let corpus = generate_synthetic(2, 2000, 4, &GenParams::default()).unwrap();
        for w in corpus.items().windows(2) {
            assert!(w[0].pub_ts < w[1].pub_ts);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let p = GenParams {
            hot_rate: -0.1,
            ..GenParams::default()
        };
        assert!(generate_synthetic(1, 10, 1, &p).is_err());
        let p = GenParams {
            noise: -1.0,
            ..GenParams::default()
        };
        assert!(generate_synthetic(1, 10, 1, &p).is_err());
        assert!(generate_synthetic(1, 0, 1, &GenParams::default()).is_err());
        assert!(generate_synthetic(1, 10, 0, &GenParams::default()).is_err());
    }

    #[test]
    fn unknown_rate_marks_items() {
        let p = GenParams {
            unknown_rate: 0.2,
            ..GenParams::default()
        };
        let corpus = generate_synthetic(3, 500, 4, &p).unwrap();
        let unknown = corpus.items().iter().filter(|i| !i.is_known()).count();
        assert!(unknown > 50 && unknown < 150, "{unknown}");
    }

    #[test]
    fn vocab_words_are_unique_and_unreserved() {
        let lex = Lexicon::default_english();
        let words = vocabulary(MAX_VOCAB, &lex);
        assert_eq!(words.len(), MAX_VOCAB);
        let set: std::collections::HashSet<&String> = words.iter().collect();
        assert_eq!(set.len(), MAX_VOCAB);
        assert!(words.iter().all(|w| !is_stopword(w) && !is_negator(w)));
    }
}
