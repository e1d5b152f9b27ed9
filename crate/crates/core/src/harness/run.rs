use std::collections::{BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    combo_name, mc_windows, AugmentationResult, ComboResult, ExperimentReport, ProtocolKind, ProtocolSpec,
    RankAggregate, RankWindow, RankingResult, RegressionResult, SystemCurve, Window,
};
use crate::corpus::{count_window, slice_length, Corpus, NewsItem};
use crate::error::{Error, Result};
use crate::features::{build_vocabulary, featurize, feature_rows, Dataset, Lexicon, Vocabulary};
use crate::learners::{fit, Model};
use crate::rankeval::{Confusion, QueryScores, RankReport, RELEVANT_DEPTH};
use crate::ranking::{
    apply_decay, baseline_time, build_pool, fuse, official_rank, predicted_rank, predicted_scores, rank_by_score,
    slice_index, Fusion, NewsPool, Predict, PredictMode, RankKind, RankedList, FINAL_SLICE,
};
use crate::regeval::{utility_prf, RegAggregate, RegScores};
use crate::relevance::RelevanceFn;
use crate::resample::resample;
use crate::seed;
use crate::VERSION;

pub(crate) const STREAM_WINDOWS: u64 = 0x5749;
const STREAM_RESAMPLE: u64 = 0x5245;
const STREAM_LEARNER: u64 = 0x4c45;

/// The ids handed to each fitted statistic in one window, for leakage checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowAudit {
    pub window: usize,
    /// Items whose headlines built the vocabulary.
    pub vocabulary_ids: Vec<String>,
    /// Targets used to place the relevance control points.
    pub relevance_ids: Vec<String>,
    /// Rows whose feature statistics were measured (resampling neighbours
    /// and linear-model scaling), synthetic rows mapped to their seed.
    pub scaling_ids: Vec<String>,
    /// Rows the learners were fitted on, synthetic rows mapped to their seed.
    pub fit_ids: Vec<String>,
    /// Items whose counts were predicted and scored.
    pub test_ids: Vec<String>,
    pub train_max_pub_ts: DateTime<Utc>,
    pub test_min_pub_ts: Option<DateTime<Utc>>,
}

/// Runs `spec` on `corpus` with the bundled English lexicon.
pub fn run_protocol(corpus: &Corpus, spec: &ProtocolSpec) -> Result<ExperimentReport> {
    run_protocol_with(corpus, spec, &Lexicon::default_english())
}

pub fn run_protocol_with(corpus: &Corpus, spec: &ProtocolSpec, lexicon: &Lexicon) -> Result<ExperimentReport> {
    run_protocol_audited(corpus, spec, lexicon).map(|(r, _)| r)
}

/// Like [`run_protocol_with`], also returning one audit record per window.
pub fn run_protocol_audited(
    corpus: &Corpus,
    spec: &ProtocolSpec,
    lexicon: &Lexicon,
) -> Result<(ExperimentReport, Vec<WindowAudit>)> {
    spec.validate()?;
    let known = corpus.known_items_by_time();
    let n_cases = if spec.kind.is_ranking() {
        if corpus.snapshots().is_empty() {
            return Err(Error::InvalidCorpus("ranking protocols need snapshots".into()));
        }
        corpus.snapshots().len()
    } else {
        known.len()
    };
    let windows = mc_windows(n_cases, spec)?;
    let env = Env {
        corpus,
        spec,
        lexicon,
        known,
    };
    let outcomes = windows
        .par_iter()
        .map(|w| env.window(w))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(corpus, spec, n_cases, windows, outcomes))
}

struct Env<'a> {
    corpus: &'a Corpus,
    spec: &'a ProtocolSpec,
    lexicon: &'a Lexicon,
    known: Vec<&'a NewsItem>,
}

/// Statistics fitted on one training window.
struct TrainContext {
    vocab: Vocabulary,
    train: Dataset,
    rel: RelevanceFn,
}

struct Fitted {
    ctx: TrainContext,
    /// Indexed `learner * n_resamplers + resampler`.
    models: Vec<Model>,
    fit_ids: BTreeSet<String>,
}

struct Bound<'a> {
    vocab: &'a Vocabulary,
    lexicon: &'a Lexicon,
    model: &'a Model,
}

impl Predict for Bound<'_> {
    fn predict_items(&self, items: &[&NewsItem]) -> Result<Vec<f64>> {
        let rows = feature_rows(items.iter().copied(), self.vocab, self.lexicon);
        self.model.predict(&self.vocab.schema(), &rows)
    }
}

enum Outcome {
    Regression(Vec<RegScores>),
    Ranking(Vec<RankWindow>),
    Augmentation(Vec<(String, Vec<Option<f64>>)>),
}

fn base_id(id: &str) -> &str {
    id.split_once("#syn").map_or(id, |(b, _)| b)
}

impl Env<'_> {
    fn window(&self, w: &Window) -> Result<(Outcome, WindowAudit)> {
        let train_items = self.train_items(w)?;
        let fitted = self.fit_window(w.index, &train_items)?;
        let train_ids: Vec<String> = train_items.iter().map(|it| it.id.clone()).collect();
        let (outcome, test_ids) = match self.spec.kind {
            ProtocolKind::PredEval => self.pred_eval(w, &train_items, &fitted)?,
            ProtocolKind::StandaloneRank | ProtocolKind::RealworldRank => self.rank_eval(w, &fitted)?,
            ProtocolKind::Augmentation => self.augmentation(w, &fitted)?,
        };
        let mut scaling: BTreeSet<String> = fitted.ctx.train.ids().iter().cloned().collect();
        scaling.extend(fitted.fit_ids.iter().cloned());
        let test_min_pub_ts = test_ids
            .iter()
            .map(|id| self.corpus.item(id).map(|it| it.pub_ts))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min();
        let audit = WindowAudit {
            window: w.index,
            vocabulary_ids: train_ids,
            relevance_ids: fitted.ctx.train.ids().to_vec(),
            scaling_ids: scaling.into_iter().collect(),
            fit_ids: fitted.fit_ids.into_iter().collect(),
            test_ids,
            train_max_pub_ts: train_items.iter().map(|it| it.pub_ts).max().expect("non-empty training set"),
            test_min_pub_ts,
        };
        Ok((outcome, audit))
    }

    /// Items of the cases before the window start. For the ranking
    /// protocols these are the items published from the first training
    /// snapshot's slice until two days before the last training snapshot,
    /// so every training count was complete when training ended.
    fn train_items(&self, w: &Window) -> Result<Vec<&NewsItem>> {
        let items: Vec<&NewsItem> = if self.spec.kind.is_ranking() {
            let snaps = self.corpus.snapshots();
            let lo = snaps[w.train.start].ts - slice_length();
            let hi = snaps[w.train.end - 1].ts - count_window();
            self.known
                .iter()
                .copied()
                .filter(|it| it.pub_ts >= lo && it.pub_ts <= hi)
                .collect()
        } else {
            self.known[w.train.clone()].to_vec()
        };
        if items.len() < 4 {
            return Err(Error::InvalidParams(format!(
                "window {} has {} training items; the training period must extend well beyond the two-day exclusion",
                w.index,
                items.len()
            )));
        }
        Ok(items)
    }

    fn fit_window(&self, w: usize, train_items: &[&NewsItem]) -> Result<Fitted> {
        let spec = self.spec;
        let vocab = build_vocabulary(train_items.iter().copied(), spec.max_terms)?;
        let train = featurize(train_items.iter().copied(), &vocab, self.lexicon)?;
        let rel = spec.relevance.build(train.y())?;
        let ctx = TrainContext { vocab, train, rel };

        let n_res = spec.resamplers.len();
        let mut slots: Vec<Option<Model>> = vec![None; spec.learners.len() * n_res];
        let mut fit_ids = BTreeSet::new();
        for (ri, rp) in spec.resamplers.iter().enumerate() {
            let mut params = rp.clone();
            params.seed = seed::derive(spec.seed, &[STREAM_RESAMPLE, w as u64, ri as u64]);
            let data = resample(&ctx.train, &ctx.rel, &params)?;
            fit_ids.extend(data.ids().iter().map(|id| base_id(id).to_string()));
            for (li, learner) in spec.learners.iter().enumerate() {
                let s = seed::derive(spec.seed, &[STREAM_LEARNER, w as u64, li as u64, ri as u64]);
                slots[li * n_res + ri] = Some(fit(&learner.clone().with_seed(s), &data)?);
            }
        }
        Ok(Fitted {
            ctx,
            models: slots.into_iter().map(|m| m.expect("every combination fitted")).collect(),
            fit_ids,
        })
    }

    fn bound<'a>(&'a self, fitted: &'a Fitted, model: &'a Model) -> Bound<'a> {
        Bound {
            vocab: &fitted.ctx.vocab,
            lexicon: self.lexicon,
            model,
        }
    }

    fn pred_eval(&self, w: &Window, train_items: &[&NewsItem], fitted: &Fitted) -> Result<(Outcome, Vec<String>)> {
        let max_train = train_items.iter().map(|it| it.pub_ts).max().expect("non-empty");
        let test_items: Vec<&NewsItem> = self.known[w.test.clone()]
            .iter()
            .copied()
            .filter(|it| it.pub_ts > max_train)
            .collect();
        let test = featurize(test_items.iter().copied(), &fitted.ctx.vocab, self.lexicon)?;
        let scores = fitted
            .models
            .iter()
            .map(|m| utility_prf(test.y(), &m.predict_dataset(&test)?, &fitted.ctx.rel))
            .collect::<Result<Vec<_>>>()?;
        Ok((Outcome::Regression(scores), test.ids().to_vec()))
    }

    fn test_pools(&self, w: &Window) -> Result<Vec<NewsPool>> {
        self.corpus.snapshots()[w.test.clone()]
            .iter()
            .map(|s| Ok(build_pool(s, self.corpus, s.ts)?.known_only(self.corpus)))
            .collect()
    }

    fn rank_eval(&self, w: &Window, fitted: &Fitted) -> Result<(Outcome, Vec<String>)> {
        let standalone = self.spec.kind == ProtocolKind::StandaloneRank;
        let mode = if standalone { PredictMode::NewOnly } else { PredictMode::Hybrid };
        let mut per_query: Vec<Vec<QueryScores>> = vec![Vec::new(); fitted.models.len()];
        let mut test_ids = BTreeSet::new();
        for pool in self.test_pools(w)? {
            let pool = if standalone { pool.filter(|_, a| a == crate::ranking::Age::New) } else { pool };
            let query = pool.ref_time().to_rfc3339();
            if pool.is_empty() {
                per_query.iter_mut().for_each(|q| q.push(QueryScores::undefined(&query)));
                continue;
            }
            test_ids.extend(pool.new_ids().map(str::to_string));
            let truth = crate::ranking::ground_truth_rank(&pool, self.corpus)?;
            for (m, out) in fitted.models.iter().zip(per_query.iter_mut()) {
                let pred = predicted_rank(&pool, self.corpus, &self.bound(fitted, m), mode)?;
                out.push(QueryScores::score_with(&query, &pred, &truth, &self.spec.grades)?);
            }
        }
        let windows = per_query
            .into_iter()
            .map(|q| RankWindow::of(w.index, &RankReport::of(q)))
            .collect();
        Ok((Outcome::Ranking(windows), test_ids.into_iter().collect()))
    }

    fn augmentation(&self, w: &Window, fitted: &Fitted) -> Result<(Outcome, Vec<String>)> {
        let horizon = self.spec.horizon as usize;
        let names = self.system_names();
        let n_combo = fitted.models.len();
        let mut conf = vec![vec![Confusion::default(); horizon]; names.len()];
        let mut test_ids = BTreeSet::new();
        for pool in self.test_pools(w)? {
            if pool.is_empty() {
                continue;
            }
            let q = pool.ref_time();
            test_ids.extend(pool.new_ids().map(str::to_string));
            let slice: HashMap<&str, usize> = pool
                .ids()
                .map(|id| Ok((id, slice_index(self.corpus.item(id)?.pub_ts, q, FINAL_SLICE) as usize)))
                .collect::<Result<_>>()?;
            let observed: Vec<(String, f64)> = pool
                .ids()
                .map(|id| Ok((id.to_string(), self.corpus.item(id)?.n_tweets_2d.expect("known only") as f64)))
                .collect::<Result<_>>()?;
            let truth = rank_by_score(
                self.corpus,
                apply_decay(self.corpus, &observed, q, FINAL_SLICE)?,
                RankKind::GroundTruth,
            )?;
            let official = official_rank(&pool);
            let mut systems: Vec<RankedList> = Vec::with_capacity(names.len());
            for m in &fitted.models {
                let raw = predicted_scores(&pool, self.corpus, &self.bound(fitted, m), PredictMode::Hybrid)?;
                let framework = rank_by_score(
                    self.corpus,
                    apply_decay(self.corpus, &raw, q, FINAL_SLICE)?,
                    RankKind::Predicted,
                )?;
                let agr = fuse(&official, &framework, Fusion::Agreement)?;
                let poll = fuse(&official, &framework, Fusion::Poll)?;
                systems.extend([framework, agr, poll]);
            }
            systems.push(baseline_time(&pool, self.corpus)?);
            systems.push(official);
            debug_assert_eq!(systems.len(), 3 * n_combo + 2);
            for (s, sys) in systems.iter().enumerate() {
                for (t, acc) in conf[s].iter_mut().enumerate() {
                    let in_slice = |id: &&str| slice[id] == t + 1;
                    acc.add(Confusion::between(
                        sys.top(RELEVANT_DEPTH).filter(in_slice),
                        truth.top(RELEVANT_DEPTH).filter(in_slice),
                    ));
                }
            }
        }
        let curves = names
            .into_iter()
            .zip(conf)
            .map(|(n, c)| (n, c.iter().map(Confusion::f1).collect()))
            .collect();
        Ok((Outcome::Augmentation(curves), test_ids.into_iter().collect()))
    }

    /// `{combo}`, `{combo}.agr`, `{combo}.poll` per combination, then the
    /// time baseline and the official ranking.
    fn system_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for l in &self.spec.learners {
            for r in &self.spec.resamplers {
                let c = combo_name(l.label(), r.strategy);
                let agr = format!("{c}.{}", Fusion::Agreement.label());
                let poll = format!("{c}.{}", Fusion::Poll.label());
                names.extend([c, agr, poll]);
            }
        }
        names.push(OFFICIAL_TIME.into());
        names.push(OFFICIAL.into());
        names
    }
}

/// System name of the official ranking.
pub const OFFICIAL: &str = "official";
/// System name of the official pool ordered by recency.
pub const OFFICIAL_TIME: &str = "official.time";

fn assemble(
    corpus: &Corpus,
    spec: &ProtocolSpec,
    n_cases: usize,
    windows: Vec<Window>,
    outcomes: Vec<(Outcome, WindowAudit)>,
) -> (ExperimentReport, Vec<WindowAudit>) {
    let n_res = spec.resamplers.len();
    let mut results: Vec<ComboResult> = spec
        .learners
        .iter()
        .flat_map(|l| {
            spec.resamplers.iter().map(move |r| ComboResult {
                learner: l.label().to_string(),
                resample: r.strategy,
                regression: None,
                ranking: None,
            })
        })
        .collect();
    debug_assert_eq!(results.len(), spec.learners.len() * n_res);
    let mut audits = Vec::with_capacity(outcomes.len());
    let mut reg: Vec<Vec<RegScores>> = vec![Vec::new(); results.len()];
    let mut rank: Vec<Vec<RankWindow>> = vec![Vec::new(); results.len()];
    let mut curves: Vec<(String, Vec<Vec<Option<f64>>>)> = Vec::new();
    for (outcome, audit) in outcomes {
        audits.push(audit);
        match outcome {
            Outcome::Regression(s) => s.into_iter().enumerate().for_each(|(i, v)| reg[i].push(v)),
            Outcome::Ranking(s) => s.into_iter().enumerate().for_each(|(i, v)| rank[i].push(v)),
            Outcome::Augmentation(systems) => {
                if curves.is_empty() {
                    curves = systems.iter().map(|(n, _)| (n.clone(), Vec::new())).collect();
                }
                for ((_, acc), (_, v)) in curves.iter_mut().zip(systems) {
                    acc.push(v);
                }
            }
        }
    }
    for (i, combo) in results.iter_mut().enumerate() {
        match spec.kind {
            ProtocolKind::PredEval => {
                combo.regression = Some(RegressionResult {
                    aggregate: RegAggregate::of(&reg[i]),
                    per_window: std::mem::take(&mut reg[i]),
                });
            }
            ProtocolKind::StandaloneRank | ProtocolKind::RealworldRank => {
                combo.ranking = Some(RankingResult {
                    aggregate: RankAggregate::of(&rank[i]),
                    per_window: std::mem::take(&mut rank[i]),
                });
            }
            ProtocolKind::Augmentation => {}
        }
    }
    let augmentation = (spec.kind == ProtocolKind::Augmentation).then(|| AugmentationResult {
        horizon: spec.horizon,
        systems: curves
            .into_iter()
            .map(|(n, w)| SystemCurve::of(n, w, spec.horizon as usize))
            .collect(),
    });
    let report = ExperimentReport {
        version: VERSION.to_string(),
        protocol: spec.kind,
        seed: spec.seed,
        config: spec.clone(),
        corpus: corpus.summary(),
        n_cases,
        windows,
        results,
        augmentation,
    };
    (report, audits)
}
