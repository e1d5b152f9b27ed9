//! Relevance of tweet counts and the rare/normal split.
//!
//! The relevance function maps a target value to `[0, 1]`. It is a
//! piecewise cubic Hermite interpolant through control points
//! `(y, relevance, slope)`, constant outside the first and last point. The
//! automatic construction places relevance 0 at the training median and
//! relevance 1 at the upper box-plot fence `Q3 + 1.5 * IQR`, both with zero
//! slope, which makes the curve a smoothstep between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Dataset;

/// Relevance at or above which a case counts as rare.
pub const DEFAULT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub y: f64,
    pub phi: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceFn {
    points: Vec<ControlPoint>,
    threshold: f64,
}

/// User override: explicit `[y, phi]` or `[y, phi, slope]` points and a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelevanceConfig {
    #[serde(default)]
    pub control_points: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        Self {
            control_points: None,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl RelevanceConfig {
    /// Explicit points when configured, otherwise the box-plot construction on `y_train`.
    pub fn build(&self, y_train: &[f64]) -> Result<RelevanceFn> {
        match &self.control_points {
            Some(raw) => RelevanceFn::from_points(raw, self.threshold),
            None => build_relevance(y_train)?.with_threshold(self.threshold),
        }
    }
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Box-plot construction from training targets.
pub fn build_relevance(y_train: &[f64]) -> Result<RelevanceFn> {
    if y_train.len() < 4 {
        return Err(Error::InvalidParams(format!(
            "relevance needs at least 4 targets, got {}",
            y_train.len()
        )));
    }
    if y_train.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("non-finite target".into()));
    }
    let mut y = y_train.to_vec();
    y.sort_by(f64::total_cmp);
    let median = quantile(&y, 0.5);
    let iqr = quantile(&y, 0.75) - quantile(&y, 0.25);
    if !(iqr > 0.0) {
        return Err(Error::ZeroIqr);
    }
    let fence = quantile(&y, 0.75) + 1.5 * iqr;
    RelevanceFn::new(
        vec![
            ControlPoint { y: median, phi: 0.0, slope: 0.0 },
            ControlPoint { y: fence, phi: 1.0, slope: 0.0 },
        ],
        DEFAULT_THRESHOLD,
    )
}

impl RelevanceFn {
    pub fn new(points: Vec<ControlPoint>, threshold: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(threshold > 0.0 && threshold < 1.0) {
            return bad(format!("relevance threshold must lie in (0, 1), got {threshold}"));
        }
        if points.len() < 2 {
            return bad("relevance needs at least two control points".into());
        }
        let first = points[0];
        let last = points[points.len() - 1];
        if first.phi != 0.0 || last.phi != 1.0 {
            return bad("first control point must have relevance 0 and the last relevance 1".into());
        }
        for p in &points {
            if !p.y.is_finite() || !(0.0..=1.0).contains(&p.phi) || !(p.slope >= 0.0) || !p.slope.is_finite() {
                return bad(format!("invalid control point {p:?}"));
            }
        }
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.y <= a.y || b.phi < a.phi {
                return bad(format!("control points must increase: {a:?} then {b:?}"));
            }
            let secant = (b.phi - a.phi) / (b.y - a.y);
            if secant == 0.0 {
                if a.slope != 0.0 || b.slope != 0.0 {
                    return bad(format!("flat segment {a:?}..{b:?} needs zero slopes"));
                }
            } else {
                let (alpha, beta) = (a.slope / secant, b.slope / secant);
                if alpha * alpha + beta * beta > 9.0 + 1e-12 {
                    return bad(format!("slopes at {a:?}..{b:?} break monotonicity"));
                }
            }
        }
        Ok(Self { points, threshold })
    }

    /// Builds from `[y, phi]` or `[y, phi, slope]` rows. Missing slopes are
    /// zero at the ends and follow the Fritsch-Butland rule inside.
    pub fn from_points(raw: &[Vec<f64>], threshold: f64) -> Result<Self> {
        let mut pts = Vec::with_capacity(raw.len());
        for r in raw {
            match r.as_slice() {
                [y, phi] => pts.push((*y, *phi, None)),
                [y, phi, s] => pts.push((*y, *phi, Some(*s))),
                _ => return Err(Error::InvalidParams(format!("control point {r:?} needs 2 or 3 values"))),
            }
        }
        let n = pts.len();
        let points = (0..n)
            .map(|k| {
                let (y, phi, s) = pts[k];
                let slope = s.unwrap_or_else(|| {
                    if k == 0 || k + 1 == n {
                        return 0.0;
                    }
                    let (h0, h1) = (y - pts[k - 1].0, pts[k + 1].0 - y);
                    let (d0, d1) = ((phi - pts[k - 1].1) / h0, (pts[k + 1].1 - phi) / h1);
                    if d0 * d1 <= 0.0 {
                        0.0
                    } else {
                        3.0 * (h0 + h1) / ((2.0 * h1 + h0) / d0 + (h1 + 2.0 * h0) / d1)
                    }
                });
                ControlPoint { y, phi, slope }
            })
            .collect();
        Self::new(points, threshold)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidParams(format!("relevance threshold must lie in (0, 1), got {threshold}")));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn phi(&self, y: f64) -> f64 {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if y.is_nan() {
            return 0.0;
        }
        if y <= first.y {
            return first.phi;
        }
        if y >= last.y {
            return last.phi;
        }
        let k = self.points.partition_point(|p| p.y <= y) - 1;
        let (a, b) = (self.points[k], self.points[k + 1]);
        let h = b.y - a.y;
        let t = (y - a.y) / h;
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * a.phi
            + (t3 - 2.0 * t2 + t) * h * a.slope
            + (-2.0 * t3 + 3.0 * t2) * b.phi
            + (t3 - t2) * h * b.slope;
        v.clamp(0.0, 1.0)
    }

    pub fn is_rare(&self, y: f64) -> bool {
        self.phi(y) >= self.threshold
    }
}

/// Splits `dataset` into rare rows (relevance at or above the threshold)
/// and normal rows, each keeping the input order.
pub fn partition(dataset: &Dataset, rel: &RelevanceFn) -> (Dataset, Dataset) {
    let (rare, normal): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| rel.is_rare(dataset.y()[i]));
    (dataset.select(&rare), dataset.select(&normal))
}
