//! Bagged regression trees with variance-reduction splits.
//!
//! Split search runs over per-feature bins. When a feature has at most
//! `max_bins` distinct training values every distinct value gets its own bin
//! and the search is exact; otherwise the bins follow the empirical quantiles.
//! Bootstrap draws are made by position over the rows sorted by id, so the
//! fitted forest does not depend on the input row order.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(p / 3)`.
    pub mtry: Option<usize>,
    /// Minimum number of (bootstrap) cases in each leaf.
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub max_bins: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            min_leaf: 5,
            bootstrap: true,
            max_bins: 256,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if self.min_leaf == 0 {
            return bad("min_leaf must be positive");
        }
        if self.mtry == Some(0) {
            return bad("mtry must be positive");
        }
        if !(2..=256).contains(&self.max_bins) {
            return bad("max_bins must lie in 2..=256");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
enum Node {
    Leaf { value: f64 },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature as usize] <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<Tree>,
}

/// Training matrix quantized per feature.
struct Binned {
    /// Column-major bin codes.
    codes: Vec<Vec<u8>>,
    /// Split thresholds; bin `b` covers values up to `cuts[b]`.
    cuts: Vec<Vec<f64>>,
}

impl Binned {
    fn new(train: &Dataset, max_bins: usize) -> Self {
        let p = train.n_features();
        let mut codes = Vec::with_capacity(p);
        let mut cuts = Vec::with_capacity(p);
        for j in 0..p {
            let col: Vec<f64> = train.rows().iter().map(|r| r.values()[j]).collect();
            let mut distinct = col.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let c: Vec<f64> = if distinct.len() <= max_bins {
                distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect()
            } else {
                let mut c: Vec<f64> = (1..max_bins)
                    .map(|k| {
                        let at = k * distinct.len() / max_bins;
                        (distinct[at - 1] + distinct[at]) / 2.0
                    })
                    .collect();
                c.dedup();
                c
            };
            codes.push(col.iter().map(|v| c.partition_point(|t| t < v) as u8).collect());
            cuts.push(c);
        }
        Self { codes, cuts }
    }

    fn n_bins(&self, j: usize) -> usize {
        self.cuts[j].len() + 1
    }
}

struct Builder<'a> {
    binned: &'a Binned,
    y: &'a [f64],
    mtry: usize,
    min_leaf: usize,
    counts: Vec<usize>,
    sums: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    bin: usize,
    gain: f64,
}

impl Builder<'_> {
    fn grow<R: Rng>(&mut self, rng: &mut R, rows: &mut [u32]) -> Tree {
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut stack = vec![(0usize, 0usize, rows.len())];
        while let Some((at, lo, hi)) = stack.pop() {
            let part = &mut rows[lo..hi];
            let n = part.len();
            let sum: f64 = part.iter().map(|&r| self.y[r as usize]).sum();
            let mean = sum / n as f64;
            let spread = part.iter().map(|&r| (self.y[r as usize] - mean).powi(2)).sum::<f64>();
            nodes[at] = Node::Leaf { value: mean };
            if n < 2 * self.min_leaf || spread <= 1e-12 * (1.0 + mean * mean) * n as f64 {
                continue;
            }
            let Some(best) = self.best_split(rng, part, sum) else {
                continue;
            };
            let codes = &self.binned.codes[best.feature];
            let mut split = 0usize;
            for k in 0..n {
                if codes[part[k] as usize] as usize <= best.bin {
                    part.swap(k, split);
                    split += 1;
                }
            }
            let left = nodes.len();
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[at] = Node::Split {
                feature: best.feature as u32,
                threshold: self.binned.cuts[best.feature][best.bin],
                left: left as u32,
                right: left as u32 + 1,
            };
            stack.push((left + 1, lo + split, hi));
            stack.push((left, lo, lo + split));
        }
        Tree { nodes }
    }

    fn best_split<R: Rng>(&mut self, rng: &mut R, part: &[u32], sum: f64) -> Option<BestSplit> {
        let p = self.binned.codes.len();
        let n = part.len();
        let parent = sum * sum / n as f64;
        let mut best: Option<BestSplit> = None;
        for j in index::sample(rng, p, self.mtry.min(p)) {
            let nb = self.binned.n_bins(j);
            if nb < 2 {
                continue;
            }
            let codes = &self.binned.codes[j];
            self.counts[..nb].fill(0);
            self.sums[..nb].fill(0.0);
            for &r in part {
                let b = codes[r as usize] as usize;
                self.counts[b] += 1;
                self.sums[b] += self.y[r as usize];
            }
            let (mut nl, mut sl) = (0usize, 0.0f64);
            for b in 0..nb - 1 {
                nl += self.counts[b];
                sl += self.sums[b];
                if self.counts[b] == 0 {
                    continue;
                }
                let nr = n - nl;
                if nl < self.min_leaf {
                    continue;
                }
                if nr < self.min_leaf {
                    break;
                }
                let sr = sum - sl;
                let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent;
                if gain > 1e-9 * parent.abs().max(1.0) && best.as_ref().is_none_or(|bs| gain > bs.gain) {
                    best = Some(BestSplit { feature: j, bin: b, gain });
                }
            }
        }
        best
    }
}

impl ForestModel {
    pub fn fit(params: &ForestParams, train: &Dataset, seed: u64) -> Result<Self> {
        params.validate()?;
        let n = train.len();
        let p = train.n_features();
        let mtry = params.mtry.unwrap_or_else(|| p.div_ceil(3)).clamp(1, p.max(1));
        let binned = Binned::new(train, params.max_bins);
        let mut canonical: Vec<u32> = (0..n as u32).collect();
        canonical.sort_by(|&a, &b| train.ids()[a as usize].cmp(&train.ids()[b as usize]));

        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed, &[t as u64]);
                let mut rows: Vec<u32> = if params.bootstrap {
                    (0..n).map(|_| canonical[rng.gen_range(0..n)]).collect()
                } else {
                    canonical.clone()
                };
                let mut builder = Builder {
                    binned: &binned,
                    y: train.y(),
                    mtry,
                    min_leaf: params.min_leaf,
                    counts: vec![0; 256],
                    sums: vec![0.0; 256],
                };
                builder.grow(&mut rng, &mut rows)
            })
            .collect();
        Ok(Self { trees })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}
