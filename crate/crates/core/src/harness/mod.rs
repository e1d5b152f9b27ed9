//! Temporal Monte Carlo evaluation.
//!
//! Each repetition draws a point in time, trains on the window of cases
//! before it and tests on the cases after it. For prediction evaluation the
//! cases are news items ordered by publication time; for the ranking
//! protocols they are the 30-minute snapshots. Every learner and
//! resampling strategy in the grid sees the same windows, and vocabulary,
//! relevance function and scaling are refitted on each training window.

mod output;
mod run;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSummary;
use crate::error::{Error, Result};
use crate::features::DEFAULT_MAX_TERMS;
use crate::learners::LearnerSpec;
use crate::rankeval::{GradeScheme, RankReport};
use crate::regeval::{Mean, RegAggregate, RegScores};
use crate::relevance::RelevanceConfig;
use crate::resample::{ResampleParams, Strategy};
use crate::seed;

pub use output::{write_report, ReportFiles};
pub use run::{run_protocol, run_protocol_audited, run_protocol_with, WindowAudit, OFFICIAL, OFFICIAL_TIME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    /// Utility-based regression metrics on held-out items.
    PredEval,
    /// Rankings of the NEW items of each test snapshot.
    StandaloneRank,
    /// Hybrid rankings of whole test snapshots.
    RealworldRank,
    /// Decayed rankings fused with the official order, scored per time slice.
    Augmentation,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [
        ProtocolKind::PredEval,
        ProtocolKind::StandaloneRank,
        ProtocolKind::RealworldRank,
        ProtocolKind::Augmentation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProtocolKind::PredEval => "pred-eval",
            ProtocolKind::StandaloneRank => "standalone-rank",
            ProtocolKind::RealworldRank => "realworld-rank",
            ProtocolKind::Augmentation => "augmentation",
        }
    }

    /// Whether test cases are snapshots rather than items.
    pub fn is_ranking(self) -> bool {
        !matches!(self, ProtocolKind::PredEval)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.label() == norm)
            .ok_or_else(|| Error::InvalidParams(format!("unknown protocol {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSize {
    /// A fraction of all cases.
    Fraction(f64),
    /// A fixed number of snapshots.
    Snapshots(usize),
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub reps: usize,
    pub train_frac: f64,
    pub test_size: TestSize,
    pub seed: u64,
    pub learners: Vec<LearnerSpec>,
    pub resamplers: Vec<ResampleParams>,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    #[serde(default)]
    pub relevance: RelevanceConfig,
    #[serde(default)]
    pub grades: GradeScheme,
    /// Slices scored by the augmentation protocol (`t = 1..=horizon`).
    #[serde(default = "default_horizon")]
    pub horizon: u32,
}

fn default_max_terms() -> usize {
    DEFAULT_MAX_TERMS
}

fn default_horizon() -> u32 {
    8
}

impl ProtocolSpec {
    /// The documented defaults of each protocol with the full grid of
    /// learners and strategies (augmentation uses random forest with
    /// under-sampling only).
    pub fn new(kind: ProtocolKind, seed: u64) -> Self {
        let (reps, train_frac, test_size) = match kind {
            ProtocolKind::PredEval => (50, 0.5, TestSize::Fraction(0.25)),
            ProtocolKind::StandaloneRank => (100, 0.2, TestSize::Snapshots(24)),
            ProtocolKind::RealworldRank => (50, 0.2, TestSize::Snapshots(96)),
            ProtocolKind::Augmentation => (50, 0.2, TestSize::Snapshots(96)),
        };
        let (learners, resamplers) = if kind == ProtocolKind::Augmentation {
            (vec![LearnerSpec::random_forest()], vec![ResampleParams::new(Strategy::Under)])
        } else {
            (
                vec![LearnerSpec::linear(), LearnerSpec::random_forest()],
                [Strategy::None, Strategy::Under, Strategy::Smoter]
                    .into_iter()
                    .map(ResampleParams::new)
                    .collect(),
            )
        };
        Self {
            kind,
            reps,
            train_frac,
            test_size,
            seed,
            learners,
            resamplers,
            max_terms: DEFAULT_MAX_TERMS,
            relevance: RelevanceConfig::default(),
            grades: GradeScheme::default(),
            horizon: default_horizon(),
        }
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_learners(mut self, learners: Vec<LearnerSpec>) -> Self {
        self.learners = learners;
        self
    }

    pub fn with_strategies(mut self, strategies: &[Strategy]) -> Self {
        self.resamplers = strategies.iter().map(|&s| ResampleParams::new(s)).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.reps < 1 {
            return bad("reps must be at least 1".into());
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad(format!("train_frac must lie in (0, 1), got {}", self.train_frac));
        }
        match self.test_size {
            TestSize::Fraction(f) if !(f > 0.0 && f < 1.0) => {
                return bad(format!("test fraction must lie in (0, 1), got {f}"));
            }
            TestSize::Snapshots(0) => return bad("test size must be at least one snapshot".into()),
            _ => {}
        }
        if self.learners.is_empty() || self.resamplers.is_empty() {
            return bad("learner and resampling grids must be non-empty".into());
        }
        if self.max_terms == 0 {
            return bad("max_terms must be positive".into());
        }
        if !(1..=crate::ranking::FINAL_SLICE).contains(&self.horizon) {
            return bad(format!("horizon must lie in 1..=96, got {}", self.horizon));
        }
        for l in &self.learners {
            l.validate()?;
        }
        for r in &self.resamplers {
            r.validate()?;
        }
        self.grades.validate()
    }
}

/// One Monte Carlo repetition over time-ordered cases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub index: usize,
    pub train: Range<usize>,
    pub test: Range<usize>,
}

/// Sizes of the train and test windows for `n_cases`.
pub fn window_sizes(n_cases: usize, spec: &ProtocolSpec) -> (usize, usize) {
    let train = ((spec.train_frac * n_cases as f64).floor() as usize).max(1);
    let test = match spec.test_size {
        TestSize::Fraction(f) => ((f * n_cases as f64).floor() as usize).max(1),
        TestSize::Snapshots(k) => k,
    };
    (train, test)
}

/// Draws `spec.reps` windows. Start points are uniform over the valid
/// positions, so windows of different repetitions may overlap.
pub fn mc_windows(n_cases: usize, spec: &ProtocolSpec) -> Result<Vec<Window>> {
    spec.validate()?;
    let (train, test) = window_sizes(n_cases, spec);
    if train + test > n_cases {
        return Err(Error::WindowTooLarge {
            required: train + test,
            available: n_cases,
        });
    }
    let mut rng = seed::rng(spec.seed, &[run::STREAM_WINDOWS]);
    Ok((0..spec.reps)
        .map(|index| {
            let start = rng.gen_range(train..=n_cases - test);
            Window {
                index,
                train: start - train..start,
                test: start..start + test,
            }
        })
        .collect())
}

/// Ranking metrics of one window: means over its queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankWindow {
    pub window: usize,
    pub map: Option<f64>,
    pub mrp: Option<f64>,
    pub mrr: Option<f64>,
    pub ndcg_at_10: Option<f64>,
    pub p_at_10: Option<f64>,
    pub f1_top10: Option<f64>,
    pub n_queries: usize,
    /// Queries without any relevant item.
    pub n_undefined: usize,
}

impl RankWindow {
    fn of(window: usize, report: &RankReport) -> Self {
        Self {
            window,
            map: report.map.value,
            mrp: report.mrp.value,
            mrr: report.mrr.value,
            ndcg_at_10: report.ndcg_at_k.value,
            p_at_10: report.p_at_k.value,
            f1_top10: report.f1_top10.value,
            n_queries: report.per_query.len(),
            n_undefined: report.map.n_dropped,
        }
    }
}

/// Window means averaged over the windows where they are defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankAggregate {
    pub map: Mean,
    pub mrp: Mean,
    pub mrr: Mean,
    pub ndcg_at_10: Mean,
    pub p_at_10: Mean,
    pub f1_top10: Mean,
}

impl RankAggregate {
    pub fn of(windows: &[RankWindow]) -> Self {
        let m = |f: fn(&RankWindow) -> Option<f64>| Mean::of(windows.iter().map(f));
        Self {
            map: m(|w| w.map),
            mrp: m(|w| w.mrp),
            mrr: m(|w| w.mrr),
            ndcg_at_10: m(|w| w.ndcg_at_10),
            p_at_10: m(|w| w.p_at_10),
            f1_top10: m(|w| w.f1_top10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub aggregate: RegAggregate,
    pub per_window: Vec<RegScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub aggregate: RankAggregate,
    pub per_window: Vec<RankWindow>,
}

/// Results of one learner and resampling strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboResult {
    pub learner: String,
    pub resample: Strategy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regression: Option<RegressionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RankingResult>,
}

impl ComboResult {
    /// Name in the style `rfUNDER`.
    pub fn name(&self) -> String {
        combo_name(&self.learner, self.resample)
    }
}

pub(crate) fn combo_name(learner: &str, strategy: Strategy) -> String {
    format!("{learner}{}", strategy.label().to_ascii_uppercase())
}

/// Top-10 F1 of one system per time slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemCurve {
    pub system: String,
    /// Mean over windows for slices `1..=horizon`.
    pub per_slice: Vec<Mean>,
    /// Mean of the defined per-slice values.
    pub mean_f1: Option<f64>,
    /// `per_window[w][t - 1]`.
    pub per_window: Vec<Vec<Option<f64>>>,
}

impl SystemCurve {
    pub(crate) fn of(system: String, per_window: Vec<Vec<Option<f64>>>, horizon: usize) -> Self {
        let per_slice: Vec<Mean> = (0..horizon).map(|t| Mean::of(per_window.iter().map(|w| w[t]))).collect();
        let mean_f1 = Mean::of(per_slice.iter().map(|m| m.value)).value;
        Self {
            system,
            per_slice,
            mean_f1,
            per_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationResult {
    pub horizon: u32,
    pub systems: Vec<SystemCurve>,
}

impl AugmentationResult {
    pub fn system(&self, name: &str) -> Option<&SystemCurve> {
        self.systems.iter().find(|s| s.system == name)
    }
}

/// Output of [`run_protocol`]; serializes deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub protocol: ProtocolKind,
    pub seed: u64,
    pub config: ProtocolSpec,
    pub corpus: CorpusSummary,
    pub n_cases: usize,
    pub windows: Vec<Window>,
    pub results: Vec<ComboResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<AugmentationResult>,
}

impl ExperimentReport {
    pub fn combo(&self, learner: &str, strategy: Strategy) -> Option<&ComboResult> {
        self.results.iter().find(|c| c.learner == learner && c.resample == strategy)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: ProtocolKind, reps: usize) -> ProtocolSpec {
        ProtocolSpec::new(kind, 7).with_reps(reps)
    }

    #[test]
    fn window_arithmetic() {
        let ws = mc_windows(1000, &spec(ProtocolKind::PredEval, 50)).unwrap();
        assert_eq!(ws.len(), 50);
        for w in &ws {
            assert_eq!(w.train.len(), 500);
            assert_eq!(w.test.len(), 250);
            assert!((500..=750).contains(&w.test.start));
            assert_eq!(w.train.end, w.test.start);
        }
        assert_eq!(ws, mc_windows(1000, &spec(ProtocolKind::PredEval, 50)).unwrap());
        let other = mc_windows(1000, &ProtocolSpec::new(ProtocolKind::PredEval, 8)).unwrap();
        assert_ne!(ws, other);
    }

    #[test]
    fn snapshot_windows() {
        let ws = mc_windows(500, &spec(ProtocolKind::StandaloneRank, 3)).unwrap();
        for w in ws {
            assert_eq!((w.train.len(), w.test.len()), (100, 24));
        }
    }

    #[test]
    fn too_small_for_window() {
        match mc_windows(100, &spec(ProtocolKind::RealworldRank, 1)) {
            Err(Error::WindowTooLarge { required, available }) => assert_eq!((required, available), (116, 100)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn protocol_names() {
        for k in ProtocolKind::ALL {
            assert_eq!(k.label().parse::<ProtocolKind>().unwrap(), k);
        }
        assert_eq!("pred_eval".parse::<ProtocolKind>().unwrap(), ProtocolKind::PredEval);
        assert!("ranking".parse::<ProtocolKind>().is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(spec(ProtocolKind::PredEval, 0).validate().is_err());
        let mut s = spec(ProtocolKind::PredEval, 1);
        s.train_frac = 1.0;
        assert!(s.validate().is_err());
        let mut s = spec(ProtocolKind::PredEval, 1);
        s.learners.clear();
        assert!(s.validate().is_err());
        assert!(spec(ProtocolKind::Augmentation, 2).validate().is_ok());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = spec(ProtocolKind::StandaloneRank, 4);
        let back: ProtocolSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn curve_means() {
        let c = SystemCurve::of("x".into(), vec![vec![Some(1.0), None], vec![Some(0.5), Some(0.2)]], 2);
        assert_eq!(c.per_slice[0].value, Some(0.75));
        assert_eq!(c.per_slice[1].value, Some(0.2));
        assert_eq!(c.per_slice[1].n_dropped, 1);
        assert!((c.mean_f1.unwrap() - 0.475).abs() < 1e-12);
    }
}
