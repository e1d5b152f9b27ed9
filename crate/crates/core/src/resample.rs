//! Rebalancing of training sets toward rare, highly tweeted cases.
//!
//! * SMOTE for regression ([`smoter`]): keeps every rare case, adds
//!   synthetic rare cases interpolated between a rare case and one of its
//!   nearest rare neighbours, and under-samples the normal cases.
//! * Random under-sampling ([`undersample`]): keeps every rare case and a
//!   random subset of normal cases.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector};
use crate::relevance::RelevanceFn;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Smoter,
    Under,
    None,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Smoter => "smoter",
            Strategy::Under => "under",
            Strategy::None => "none",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smoter" | "smote" => Ok(Strategy::Smoter),
            "under" => Ok(Strategy::Under),
            "none" => Ok(Strategy::None),
            other => Err(Error::InvalidParams(format!("unknown resampling strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResampleParams {
    pub strategy: Strategy,
    /// Synthetic cases generated per rare case.
    pub over_pct: f64,
    /// Normal cases kept per rare case (per rare or synthetic case for SMOTER).
    pub under_ratio: f64,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for ResampleParams {
    fn default() -> Self {
        Self {
            strategy: Strategy::None,
            over_pct: 2.0,
            under_ratio: 1.0,
            k_neighbors: 5,
            seed: 0,
        }
    }
}

impl ResampleParams {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.over_pct >= 0.0 && self.over_pct.is_finite()) {
            return Err(Error::InvalidParams(format!("over_pct must be >= 0, got {}", self.over_pct)));
        }
        if !(self.under_ratio > 0.0 && self.under_ratio.is_finite()) {
            return Err(Error::InvalidParams(format!("under_ratio must be > 0, got {}", self.under_ratio)));
        }
        if self.k_neighbors == 0 {
            return Err(Error::InvalidParams("k_neighbors must be at least 1".into()));
        }
        Ok(())
    }
}

/// Applies the configured strategy.
pub fn resample(dataset: &Dataset, rel: &RelevanceFn, params: &ResampleParams) -> Result<Dataset> {
    match params.strategy {
        Strategy::Smoter => smoter(dataset, rel, params),
        Strategy::Under => undersample(dataset, rel, params),
        Strategy::None => {
            params.validate()?;
            Ok(dataset.clone())
        }
    }
}

/// Per-feature centering and scaling measured on one dataset. Constant
/// features get unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(dataset: &Dataset) -> Self {
        let p = dataset.n_features();
        let n = dataset.len().max(1) as f64;
        let mut mean = vec![0.0; p];
        for row in dataset.rows() {
            for (m, v) in mean.iter_mut().zip(row.values()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for row in dataset.rows() {
            for ((s, v), m) in var.iter_mut().zip(row.values()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    /// Unit scaling: plain Euclidean distances.
    pub fn identity(p: usize) -> Self {
        Self {
            mean: vec![0.0; p],
            scale: vec![1.0; p],
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Euclidean distance between `a` and `b` after standardization.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.scale)
            .map(|((x, y), s)| ((x - y) / s).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Synthetic case on the segment from `(xs, ys)` toward `(xn, yn)` at
/// fraction `u`. The target is the inverse-distance weighted mean of the two
/// endpoint targets.
pub fn synthesize(xs: &[f64], ys: f64, xn: &[f64], yn: f64, u: f64, scale: &Standardizer) -> (Vec<f64>, f64) {
    let x_new: Vec<f64> = xs.iter().zip(xn).map(|(a, b)| a + u * (b - a)).collect();
    let ds = scale.distance(&x_new, xs);
    let dn = scale.distance(&x_new, xn);
    let y_new = match (ds == 0.0, dn == 0.0) {
        (true, true) => (ys + yn) / 2.0,
        (true, false) => ys,
        (false, true) => yn,
        (false, false) => {
            let (ws, wn) = (1.0 / ds, 1.0 / dn);
            (ws * ys + wn * yn) / (ws + wn)
        }
    };
    (x_new, y_new.clamp(ys.min(yn), ys.max(yn)))
}

fn split_indices(dataset: &Dataset, rel: &RelevanceFn) -> (Vec<usize>, Vec<usize>) {
    (0..dataset.len()).partition(|&i| rel.is_rare(dataset.y()[i]))
}

/// `k` nearest rare neighbours of every rare case, ties broken by position.
fn rare_neighbours(dataset: &Dataset, rare: &[usize], k: usize, scale: &Standardizer) -> Vec<Vec<usize>> {
    rare.iter()
        .map(|&i| {
            let xi = dataset.rows()[i].values();
            let mut cand: Vec<(f64, usize)> = rare
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (scale.distance(xi, dataset.rows()[j].values()), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Uniform sample without replacement of `m` normal rows, in input order.
fn sample_normal<R: Rng>(rng: &mut R, normal: &[usize], m: usize) -> Vec<usize> {
    let m = m.min(normal.len());
    let mut picked: Vec<usize> = index::sample(rng, normal.len(), m).into_iter().map(|p| normal[p]).collect();
    picked.sort_unstable();
    picked
}

/// SMOTE for regression. The output holds every rare case, then
/// `floor(over_pct * |rare|)` synthetic cases, then
/// `floor(under_ratio * |rare| * (1 + over_pct))` normal cases (capped at
/// the number available).
pub fn smoter(dataset: &Dataset, rel: &RelevanceFn, params: &ResampleParams) -> Result<Dataset> {
    params.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (rare, normal) = split_indices(dataset, rel);
    if rare.len() < 2 {
        return Err(Error::InsufficientRare {
            found: rare.len(),
            needed: 2,
        });
    }
    if params.k_neighbors >= rare.len() {
        return Err(Error::InsufficientRare {
            found: rare.len(),
            needed: params.k_neighbors + 1,
        });
    }
    let scale = Standardizer::fit(dataset);
    let neighbours = rare_neighbours(dataset, &rare, params.k_neighbors, &scale);
    let mut rng = seed::rng(params.seed, &[1]);

    let mut out = dataset.select(&rare);
    let n_syn = (params.over_pct * rare.len() as f64).floor() as usize;
    for j in 0..n_syn {
        let s = j % rare.len();
        let nb = neighbours[s][rng.gen_range(0..params.k_neighbors)];
        let u: f64 = rng.gen();
        let (si, rows, y) = (rare[s], dataset.rows(), dataset.y());
        let (x, target) = synthesize(rows[si].values(), y[si], rows[nb].values(), y[nb], u, &scale);
        out.push(FeatureVector::from_values(x), target, format!("{}#syn{j}", dataset.ids()[si]));
    }
    let m = (params.under_ratio * rare.len() as f64 * (1.0 + params.over_pct)).floor() as usize;
    for i in sample_normal(&mut rng, &normal, m) {
        out.push(dataset.rows()[i].clone(), dataset.y()[i], dataset.ids()[i].clone());
    }
    Ok(out)
}

/// Keeps every rare case and `min(|normal|, floor(under_ratio * |rare|))`
/// normal cases drawn uniformly without replacement.
pub fn undersample(dataset: &Dataset, rel: &RelevanceFn, params: &ResampleParams) -> Result<Dataset> {
    params.validate()?;
    let (rare, normal) = split_indices(dataset, rel);
    if rare.is_empty() {
        return Err(Error::InsufficientRare { found: 0, needed: 1 });
    }
    let mut rng = seed::rng(params.seed, &[2]);
    let m = (params.under_ratio * rare.len() as f64).floor() as usize;
    let mut keep = rare;
    keep.extend(sample_normal(&mut rng, &normal, m));
    let mut out = dataset.empty_like();
    for i in keep {
        out.push(dataset.rows()[i].clone(), dataset.y()[i], dataset.ids()[i].clone());
    }
    Ok(out)
}
