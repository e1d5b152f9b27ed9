//! Rank-quality metrics: P@k, AP, R-precision, reciprocal rank, NDCG@k and
//! the top-10 set F1.
//!
//! Binary relevance marks the ground-truth top 10; graded relevance maps
//! ground-truth ranks to grades 3 (ranks 1-3), 2 (4-6), 1 (7-10) and 0.
//! Metrics whose denominator is empty are `None` and are dropped from means.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::RankedList;
use crate::regeval::Mean;

/// Ground-truth depth counted as relevant.
pub const RELEVANT_DEPTH: usize = 10;

/// Maps a ground-truth rank to a grade: rank `r` gets
/// `bands.len() - i` where `bands[i]` is the first bound with `r <= bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeScheme {
    pub bands: Vec<usize>,
}

impl Default for GradeScheme {
    fn default() -> Self {
        Self { bands: vec![3, 6, 10] }
    }
}

impl GradeScheme {
    pub fn validate(&self) -> Result<()> {
        let ok = !self.bands.is_empty()
            && self.bands[0] >= 1
            && self.bands.windows(2).all(|w| w[0] < w[1])
            && *self.bands.last().unwrap() <= RELEVANT_DEPTH;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "grade bands must increase within 1..={RELEVANT_DEPTH}, got {:?}",
                self.bands
            )))
        }
    }

    pub fn grade(&self, rank: usize) -> u8 {
        self.bands
            .iter()
            .position(|&b| rank <= b)
            .map_or(0, |i| (self.bands.len() - i) as u8)
    }
}

/// Binary and graded judgments for one query.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelevanceJudgments {
    relevant: HashSet<String>,
    grades: HashMap<String, u8>,
}

impl RelevanceJudgments {
    /// Every id with a positive grade must also be relevant.
    pub fn new(relevant: HashSet<String>, grades: HashMap<String, u8>) -> Result<Self> {
        if let Some((id, _)) = grades.iter().find(|(id, &g)| g > 0 && !relevant.contains(*id)) {
            return Err(Error::InvalidParams(format!("{id:?} has a grade but is not relevant")));
        }
        Ok(Self { relevant, grades })
    }

    pub fn from_truth(truth: &RankedList) -> Self {
        Self::from_truth_with(truth, &GradeScheme::default())
    }

    pub fn from_truth_with(truth: &RankedList, scheme: &GradeScheme) -> Self {
        let relevant = truth.top(RELEVANT_DEPTH).map(str::to_string).collect();
        let grades = truth
            .ids()
            .enumerate()
            .map(|(i, id)| (id.to_string(), scheme.grade(i + 1)))
            .filter(|(_, g)| *g > 0)
            .collect();
        Self { relevant, grades }
    }

    pub fn is_relevant(&self, id: &str) -> bool {
        self.relevant.contains(id)
    }

    pub fn grade(&self, id: &str) -> u8 {
        self.grades.get(id).copied().unwrap_or(0)
    }

    pub fn n_relevant(&self) -> usize {
        self.relevant.len()
    }

    fn flags<'a>(&'a self, ranking: &'a RankedList) -> impl Iterator<Item = bool> + 'a {
        ranking.ids().map(|id| self.is_relevant(id))
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidParams("cutoff k must be at least 1".into()));
    }
    Ok(())
}

/// Relevant items in the top `k` over `k`; short rankings count as padded.
pub fn p_at_k(ranking: &RankedList, judg: &RelevanceJudgments, k: usize) -> Result<f64> {
    check_k(k)?;
    let hits = judg.flags(ranking).take(k).filter(|&r| r).count();
    Ok(hits as f64 / k as f64)
}

/// Mean of P@k at each relevant position, divided by all relevant items.
pub fn average_precision(ranking: &RankedList, judg: &RelevanceJudgments) -> Option<f64> {
    let total = judg.n_relevant();
    if total == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, rel) in judg.flags(ranking).enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total as f64)
}

/// Precision at depth R, the number of relevant items.
pub fn r_precision(ranking: &RankedList, judg: &RelevanceJudgments) -> Option<f64> {
    let r = judg.n_relevant();
    if r == 0 {
        return None;
    }
    Some(judg.flags(ranking).take(r).filter(|&x| x).count() as f64 / r as f64)
}

/// Inverse position of the first relevant item, 0 when none is retrieved.
pub fn reciprocal_rank(ranking: &RankedList, judg: &RelevanceJudgments) -> f64 {
    judg.flags(ranking)
        .position(|r| r)
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

fn dcg<I: IntoIterator<Item = u8>>(grades: I, k: usize) -> f64 {
    grades
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| ((1u64 << g) - 1) as f64 / ((i + 2) as f64).log2())
        .sum()
}

/// DCG@k over the ideal DCG@k of all judged grades.
pub fn ndcg_at_k(ranking: &RankedList, judg: &RelevanceJudgments, k: usize) -> Result<Option<f64>> {
    check_k(k)?;
    let mut ideal: Vec<u8> = judg.grades.values().copied().filter(|&g| g > 0).collect();
    if ideal.is_empty() {
        return Ok(None);
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let got = dcg(ranking.ids().map(|id| judg.grade(id)), k);
    Ok(Some(got / dcg(ideal, k)))
}

/// Arithmetic mean of the defined values.
pub fn mean_over_queries<I: IntoIterator<Item = Option<f64>>>(per_query: I) -> Mean {
    Mean::of(per_query)
}

/// Overlap counts between a predicted and an actual set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn between<'a, P, A>(positives: P, actuals: A) -> Self
    where
        P: IntoIterator<Item = &'a str>,
        A: IntoIterator<Item = &'a str>,
    {
        let pos: HashSet<&str> = positives.into_iter().collect();
        let act: HashSet<&str> = actuals.into_iter().collect();
        let tp = pos.intersection(&act).count();
        Self {
            tp,
            fp: pos.len() - tp,
            fn_: act.len() - tp,
        }
    }

    pub fn add(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    /// `2TP / (2TP + FP + FN)`; `None` when all counts are zero.
    pub fn f1(&self) -> Option<f64> {
        let d = 2 * self.tp + self.fp + self.fn_;
        (d > 0).then(|| 2.0 * self.tp as f64 / d as f64)
    }
}

/// F1 between the top-10 sets of a system ranking and the ground truth.
pub fn f1_top10(system: &RankedList, truth: &RankedList) -> Option<f64> {
    if system.is_empty() || truth.is_empty() {
        return None;
    }
    Confusion::between(system.top(RELEVANT_DEPTH), truth.top(RELEVANT_DEPTH)).f1()
}

/// Metrics of one query; all `None` for a query without relevant items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryScores {
    pub query: String,
    pub ap: Option<f64>,
    pub rp: Option<f64>,
    pub rr: Option<f64>,
    pub ndcg: Option<f64>,
    pub p_at_k: Option<f64>,
    pub f1_top10: Option<f64>,
}

/// Cutoff used for NDCG@k and P@k in reports.
pub const REPORT_K: usize = 10;

impl QueryScores {
    pub fn undefined(query: impl Into<String>) -> Self {
        Self {
            query: query.into(),
            ap: None,
            rp: None,
            rr: None,
            ndcg: None,
            p_at_k: None,
            f1_top10: None,
        }
    }

    pub fn score(query: impl Into<String>, system: &RankedList, truth: &RankedList) -> Result<Self> {
        Self::score_with(query, system, truth, &GradeScheme::default())
    }

    pub fn score_with(
        query: impl Into<String>,
        system: &RankedList,
        truth: &RankedList,
        scheme: &GradeScheme,
    ) -> Result<Self> {
        let judg = RelevanceJudgments::from_truth_with(truth, scheme);
        let defined = judg.n_relevant() > 0;
        Ok(Self {
            query: query.into(),
            ap: average_precision(system, &judg),
            rp: r_precision(system, &judg),
            rr: defined.then(|| reciprocal_rank(system, &judg)),
            ndcg: ndcg_at_k(system, &judg, REPORT_K)?,
            p_at_k: defined.then(|| p_at_k(system, &judg, REPORT_K)).transpose()?,
            f1_top10: f1_top10(system, truth),
        })
    }
}

/// MAP, MRP, MRR, NDCG@10, P@10 and top-10 F1 over a set of queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub map: Mean,
    pub mrp: Mean,
    pub mrr: Mean,
    pub ndcg_at_k: Mean,
    pub p_at_k: Mean,
    pub f1_top10: Mean,
    pub per_query: Vec<QueryScores>,
}

impl RankReport {
    pub fn of(per_query: Vec<QueryScores>) -> Self {
        let m = |f: fn(&QueryScores) -> Option<f64>| mean_over_queries(per_query.iter().map(f));
        Self {
            map: m(|q| q.ap),
            mrp: m(|q| q.rp),
            mrr: m(|q| q.rr),
            ndcg_at_k: m(|q| q.ndcg),
            p_at_k: m(|q| q.p_at_k),
            f1_top10: m(|q| q.f1_top10),
            per_query,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::RankKind;
    use proptest::prelude::*;

    fn ranking(n: usize) -> RankedList {
        RankedList::from_order((0..n).map(|i| format!("d{i}")), RankKind::Official).unwrap()
    }

    /// Judgments from per-position relevance flags plus `extra` relevant
    /// items that are not retrieved.
    fn judg(flags: &[u8], extra: usize) -> RelevanceJudgments {
        let mut relevant: HashSet<String> = flags
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > 0)
            .map(|(i, _)| format!("d{i}"))
            .collect();
        let mut grades: HashMap<String, u8> =
            flags.iter().enumerate().map(|(i, &g)| (format!("d{i}"), g)).collect();
        for j in 0..extra {
            relevant.insert(format!("x{j}"));
            grades.insert(format!("x{j}"), 1);
        }
        RelevanceJudgments::new(relevant, grades).unwrap()
    }

    #[test]
    fn precision_at_k() {
        assert_eq!(p_at_k(&ranking(3), &judg(&[1, 1, 1], 0), 3).unwrap(), 1.0);
        assert!((p_at_k(&ranking(3), &judg(&[1, 0, 1], 0), 3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(p_at_k(&ranking(0), &judg(&[], 1), 5).unwrap(), 0.0);
        assert!(p_at_k(&ranking(1), &judg(&[1], 0), 0).is_err());
    }

    #[test]
    fn average_precision_examples() {
        let ap = average_precision(&ranking(3), &judg(&[1, 0, 1], 0)).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(average_precision(&ranking(3), &judg(&[1, 1, 1], 0)), Some(1.0));
        assert_eq!(average_precision(&ranking(2), &judg(&[0, 1], 0)), Some(0.5));
        assert_eq!(average_precision(&ranking(2), &judg(&[0, 0], 0)), None);
        // unretrieved relevant items still count in the denominator
        assert_eq!(average_precision(&ranking(1), &judg(&[1], 1)), Some(0.5));
    }

    #[test]
    fn r_precision_examples() {
        assert!((r_precision(&ranking(4), &judg(&[1, 0, 1, 1], 0)).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r_precision(&ranking(3), &judg(&[1, 1, 1], 0)), Some(1.0));
        let padded = r_precision(&ranking(5), &judg(&[1, 0, 1, 0, 0], 8)).unwrap();
        assert!((padded - 0.2).abs() < 1e-12);
        assert_eq!(r_precision(&ranking(2), &judg(&[0, 0], 0)), None);
    }

    #[test]
    fn reciprocal_rank_examples() {
        assert_eq!(reciprocal_rank(&ranking(3), &judg(&[1, 0, 0], 0)), 1.0);
        assert_eq!(reciprocal_rank(&ranking(4), &judg(&[0, 0, 0, 1], 0)), 0.25);
        assert_eq!(reciprocal_rank(&ranking(2), &judg(&[0, 0], 1)), 0.0);
        let mrr = mean_over_queries([Some(1.0), Some(0.25)]);
        assert_eq!(mrr.value, Some(0.625));
    }

    #[test]
    fn ndcg_examples() {
        let ideal = ndcg_at_k(&ranking(3), &judg(&[3, 2, 0], 0), 3).unwrap().unwrap();
        assert!((ideal - 1.0).abs() < 1e-12);
        let dcg_ideal = 7.0 + 3.0 / 3f64.log2();
        assert!((dcg_ideal - 8.8928).abs() < 1e-4);
        let v = ndcg_at_k(&ranking(3), &judg(&[0, 2, 3], 0), 3).unwrap().unwrap();
        assert!((v - (3.0 / 3f64.log2() + 3.5) / dcg_ideal).abs() < 1e-12);
        assert!((v - 0.6064).abs() < 1e-4);
        assert_eq!(ndcg_at_k(&ranking(3), &judg(&[0, 2, 3], 0), 1).unwrap(), Some(0.0));
        assert_eq!(ndcg_at_k(&ranking(2), &judg(&[0, 0], 0), 2).unwrap(), None);
    }

    #[test]
    fn mean_drops_undefined() {
        let m = mean_over_queries([Some(0.8), None]);
        assert_eq!((m.value, m.n_dropped), (Some(0.8), 1));
        assert_eq!(mean_over_queries([Some(0.3)]).value, Some(0.3));
        assert_eq!(mean_over_queries([None]).value, None);
    }

    fn order(ids: &[&str]) -> RankedList {
        RankedList::from_order(ids.iter().copied(), RankKind::Official).unwrap()
    }

    #[test]
    fn top10_f1_examples() {
        let a: Vec<String> = (0..20).map(|i| format!("i{i:02}")).collect();
        let ids = |r: std::ops::Range<usize>| a[r].iter().map(String::as_str).collect::<Vec<_>>();
        let truth = order(&ids(0..20));
        assert_eq!(f1_top10(&truth, &truth), Some(1.0));
        let mut half = ids(5..15);
        half.extend(ids(0..5));
        half.extend(ids(15..20));
        assert_eq!(f1_top10(&order(&half), &truth), Some(0.5));
        let mut disjoint = ids(10..20);
        disjoint.extend(ids(0..10));
        assert_eq!(f1_top10(&order(&disjoint), &truth), Some(0.0));
        assert_eq!(f1_top10(&order(&[]), &order(&[])), None);
        // small pools use everything on both sides
        assert_eq!(f1_top10(&order(&["b", "a"]), &order(&["a", "b"])), Some(1.0));
    }

    #[test]
    fn judgments_from_truth() {
        let truth = order(&(0..15).map(|i| format!("g{i:02}")).collect::<Vec<_>>().iter().map(String::as_str).collect::<Vec<_>>());
        let j = RelevanceJudgments::from_truth(&truth);
        assert_eq!(j.n_relevant(), 10);
        assert!(j.is_relevant("g09") && !j.is_relevant("g10"));
        let grades: Vec<u8> = truth.ids().map(|id| j.grade(id)).collect();
        assert_eq!(grades, [3, 3, 3, 2, 2, 2, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn grade_scheme_validation() {
        assert!(GradeScheme::default().validate().is_ok());
        assert!(GradeScheme { bands: vec![5, 4] }.validate().is_err());
        assert!(GradeScheme { bands: vec![3, 12] }.validate().is_err());
    }

    #[test]
    fn confusion_f1() {
        let c = Confusion { tp: 0, fp: 0, fn_: 3 };
        assert_eq!(c.f1(), Some(0.0));
        assert_eq!(Confusion::default().f1(), None);
        assert_eq!(Confusion { tp: 2, fp: 2, fn_: 2 }.f1(), Some(0.5));
    }

    proptest! {
        #[test]
        fn adjacent_swap_never_hurts(grades in prop::collection::vec(0u8..4, 2..10), at in 0usize..9) {
            let at = at % (grades.len() - 1);
            prop_assume!(grades[at] < grades[at + 1]);
            let j = judg(&grades, 0);
            let before = ranking(grades.len());
            let mut ids: Vec<String> = before.ids().map(str::to_string).collect();
            ids.swap(at, at + 1);
            let after = RankedList::from_order(ids, RankKind::Official).unwrap();
            let eps = 1e-12;
            if let (Some(a), Some(b)) = (average_precision(&before, &j), average_precision(&after, &j)) {
                prop_assert!(b + eps >= a);
            }
            prop_assert!(reciprocal_rank(&after, &j) + eps >= reciprocal_rank(&before, &j));
            let k = grades.len();
            if let (Some(a), Some(b)) = (ndcg_at_k(&before, &j, k).unwrap(), ndcg_at_k(&after, &j, k).unwrap()) {
                prop_assert!(b + eps >= a);
            }
        }

        #[test]
        fn metrics_in_unit_interval(grades in prop::collection::vec(0u8..4, 0..12), extra in 0usize..3, k in 1usize..12) {
            let j = judg(&grades, extra);
            let r = ranking(grades.len());
            let p = p_at_k(&r, &j, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            for v in [average_precision(&r, &j), r_precision(&r, &j), ndcg_at_k(&r, &j, k).unwrap(), Some(reciprocal_rank(&r, &j))].into_iter().flatten() {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }
}
