//! Regression learners behind one fit/predict contract.
//!
//! Two learners ship: ridge-stabilized least squares ([`LinearParams`]) and
//! a random forest ([`ForestParams`]). Both clamp predictions at zero since
//! tweet counts cannot be negative.

mod forest;
mod linear;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector, Schema};

pub use forest::{ForestModel, ForestParams};
pub use linear::{LinearModel, LinearParams};

const MODEL_FORMAT: &str = "newsrank-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerKind {
    Linear(LinearParams),
    RandomForest(ForestParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    #[serde(flatten)]
    pub kind: LearnerKind,
    #[serde(default)]
    pub seed: u64,
}

impl LearnerSpec {
    pub fn linear() -> Self {
        Self {
            kind: LearnerKind::Linear(LinearParams::default()),
            seed: 0,
        }
    }

    pub fn random_forest() -> Self {
        Self {
            kind: LearnerKind::RandomForest(ForestParams::default()),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Short name used in reports: `lm` or `rf`.
    pub fn label(&self) -> &'static str {
        match self.kind {
            LearnerKind::Linear(_) => "lm",
            LearnerKind::RandomForest(_) => "rf",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            LearnerKind::Linear(p) => p.validate(),
            LearnerKind::RandomForest(p) => p.validate(),
        }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lm" | "linear" => Ok(Self::linear()),
            "rf" | "random_forest" | "randomforest" => Ok(Self::random_forest()),
            other => Err(Error::InvalidParams(format!("unknown learner {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Fitted {
    Linear(LinearModel),
    RandomForest(ForestModel),
}

/// A fitted learner bound to the feature schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    format: String,
    version: u32,
    spec: LearnerSpec,
    schema: Schema,
    fingerprint: String,
    fitted: Fitted,
}

/// Fits `spec` on `train`.
pub fn fit(spec: &LearnerSpec, train: &Dataset) -> Result<Model> {
    spec.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let y0 = train.y()[0];
    if train.y().iter().all(|&v| v == y0) {
        return Err(Error::DegenerateTarget);
    }
    let fitted = match &spec.kind {
        LearnerKind::Linear(p) => Fitted::Linear(LinearModel::fit(p, train)?),
        LearnerKind::RandomForest(p) => Fitted::RandomForest(ForestModel::fit(p, train, spec.seed)?),
    };
    Ok(Model {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        spec: spec.clone(),
        schema: train.schema().clone(),
        fingerprint: train.schema().fingerprint(),
        fitted,
    })
}

impl Model {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn as_linear(&self) -> Option<&LinearModel> {
        match &self.fitted {
            Fitted::Linear(m) => Some(m),
            Fitted::RandomForest(_) => None,
        }
    }

    pub fn as_forest(&self) -> Option<&ForestModel> {
        match &self.fitted {
            Fitted::RandomForest(m) => Some(m),
            Fitted::Linear(_) => None,
        }
    }

    /// One non-negative prediction per row. `schema` describes the rows and
    /// must match the training schema.
    pub fn predict(&self, schema: &Schema, rows: &[FeatureVector]) -> Result<Vec<f64>> {
        self.schema.check(schema)?;
        let width = self.schema.n_features();
        rows.iter()
            .map(|row| {
                if row.len() != width {
                    return Err(Error::LengthMismatch {
                        left: row.len(),
                        right: width,
                    });
                }
                let raw = match &self.fitted {
                    Fitted::Linear(m) => m.predict_one(row.values()),
                    Fitted::RandomForest(m) => m.predict_one(row.values()),
                };
                Ok(raw.max(0.0))
            })
            .collect()
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.predict(data.schema(), data.rows())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::InvalidParams(format!(
                "unsupported model format {:?} version {}",
                m.format, m.version
            )));
        }
        if m.fingerprint != m.schema.fingerprint() {
            return Err(Error::InvalidParams("model fingerprint does not match its schema".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line_dataset(xs: &[f64], f: impl Fn(f64) -> f64) -> Dataset {
        let schema = Schema::new(vec!["x".into()]);
        let rows = xs.iter().map(|&x| FeatureVector::new(vec![x], 0.0, 0.0)).collect();
        let ids = (0..xs.len()).map(|i| format!("i{i:03}")).collect();
        Dataset::new(schema, rows, xs.iter().map(|&x| f(x)).collect(), ids).unwrap()
    }

    fn noisy(n: usize, seed: u64) -> Dataset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let schema = Schema::new(vec!["a".into(), "b".into(), "c".into()]);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(0..4) as f64).collect();
            y.push(10.0 * v[0] + 3.0 * v[1] + rng.gen_range(0.0..2.0));
            rows.push(FeatureVector::new(v, rng.gen_range(-1.0..1.0), 0.0));
        }
        let ids = (0..n).map(|i| format!("n{i:04}")).collect();
        Dataset::new(schema, rows, y, ids).unwrap()
    }

    fn small_forest(trees: usize) -> LearnerSpec {
        LearnerSpec {
            kind: LearnerKind::RandomForest(ForestParams {
                n_trees: trees,
                ..ForestParams::default()
            }),
            seed: 3,
        }
    }

    #[test]
    fn linear_recovers_exact_line() {
        let data = line_dataset(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], |x| 2.0 * x);
        let model = fit(&LearnerSpec::linear(), &data).unwrap();
        let lm = model.as_linear().unwrap();
        assert!((lm.coefficients()[0] - 2.0).abs() < 1e-6);
        let pred = model.predict_dataset(&data).unwrap();
        for (p, y) in pred.iter().zip(data.y()) {
            assert!((p - y).abs() < 1e-6);
        }
    }

    #[test]
    fn linear_handles_singular_design() {
        // sentiment columns are constant zero, x is duplicated via scaling
        let schema = Schema::new(vec!["x".into(), "x2".into()]);
        let rows = (0..6).map(|i| FeatureVector::new(vec![i as f64, 2.0 * i as f64], 0.0, 0.0)).collect();
        let data = Dataset::new(schema, rows, (0..6).map(|i| 3.0 * i as f64 + 1.0).collect(), (0..6).map(|i| i.to_string()).collect()).unwrap();
        let model = fit(&LearnerSpec::linear(), &data).unwrap();
        let pred = model.predict_dataset(&data).unwrap();
        assert!((pred[5] - 16.0).abs() < 1e-4);
    }

    #[test]
    fn constant_target_rejected() {
        let data = line_dataset(&[1.0, 2.0, 3.0], |_| 4.0);
        assert!(matches!(fit(&LearnerSpec::linear(), &data), Err(Error::DegenerateTarget)));
        assert!(matches!(fit(&small_forest(3), &data), Err(Error::DegenerateTarget)));
    }

    #[test]
    fn empty_rows_give_empty_predictions() {
        let data = line_dataset(&[0.0, 1.0, 2.0], |x| x);
        let model = fit(&LearnerSpec::linear(), &data).unwrap();
        assert!(model.predict(data.schema(), &[]).unwrap().is_empty());
    }

    #[test]
    fn predictions_are_clamped_at_zero() {
        let data = line_dataset(&[0.0, 1.0, 2.0, 3.0], |x| 10.0 - 3.0 * x);
        let model = fit(&LearnerSpec::linear(), &data).unwrap();
        let p = model.predict(data.schema(), &[FeatureVector::new(vec![100.0], 0.0, 0.0)]).unwrap();
        assert_eq!(p, vec![0.0]);
    }

    #[test]
    fn schema_mismatch_rejected() {
        let data = line_dataset(&[0.0, 1.0, 2.0], |x| x);
        let model = fit(&LearnerSpec::linear(), &data).unwrap();
        let other = Schema::new(vec!["y".into()]);
        let err = model.predict(&other, &[FeatureVector::new(vec![1.0], 0.0, 0.0)]).unwrap_err();
        assert!(err.to_string().contains("missing: [x]") && err.to_string().contains("extra: [y]"));
    }

    #[test]
    fn forest_is_deterministic() {
        let data = noisy(300, 1);
        let a = fit(&small_forest(20), &data).unwrap();
        let b = fit(&small_forest(20), &data).unwrap();
        assert_eq!(a.predict_dataset(&data).unwrap(), b.predict_dataset(&data).unwrap());
    }

    #[test]
    fn forest_ignores_row_order() {
        let data = noisy(200, 2);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.reverse();
        order.swap(3, 50);
        let shuffled = data.select(&order);
        let a = fit(&small_forest(15), &data).unwrap();
        let b = fit(&small_forest(15), &shuffled).unwrap();
        assert_eq!(a.predict_dataset(&data).unwrap(), b.predict_dataset(&data).unwrap());
    }

    #[test]
    fn stump_forest_predicts_training_mean() {
        let data = noisy(40, 5);
        let mean = data.y().iter().sum::<f64>() / 40.0;
        let spec = LearnerSpec {
            kind: LearnerKind::RandomForest(ForestParams {
                n_trees: 7,
                min_leaf: 40,
                bootstrap: false,
                ..ForestParams::default()
            }),
            seed: 1,
        };
        let model = fit(&spec, &data).unwrap();
        for p in model.predict_dataset(&data).unwrap() {
            assert!((p - mean).abs() < 1e-9);
        }
        // with bootstrap the stumps hold bootstrap means, bounded by the targets
        let spec = LearnerSpec {
            kind: LearnerKind::RandomForest(ForestParams {
                n_trees: 7,
                min_leaf: 40,
                ..ForestParams::default()
            }),
            seed: 1,
        };
        let model = fit(&spec, &data).unwrap();
        let lo = data.y().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = data.y().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let preds = model.predict_dataset(&data).unwrap();
        assert!(preds.iter().all(|p| *p >= lo && *p <= hi && *p == preds[0]));
    }

    #[test]
    fn forest_learns_signal() {
        let train = noisy(600, 7);
        let test = noisy(200, 8);
        let model = fit(&small_forest(50), &train).unwrap();
        let pred = model.predict_dataset(&test).unwrap();
        let mse: f64 = pred.iter().zip(test.y()).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / 200.0;
        let mean = test.y().iter().sum::<f64>() / 200.0;
        let var: f64 = test.y().iter().map(|y| (y - mean).powi(2)).sum::<f64>() / 200.0;
        assert!(mse < 0.2 * var, "mse {mse} var {var}");
    }

    #[test]
    fn exact_split_on_distinct_values() {
        // a single informative feature with two values: one split reproduces the groups
        let xs: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        let data = line_dataset(&xs, |x| if x > 0.5 { 100.0 } else { 10.0 });
        let spec = LearnerSpec {
            kind: LearnerKind::RandomForest(ForestParams {
                n_trees: 1,
                bootstrap: false,
                mtry: Some(3),
                ..ForestParams::default()
            }),
            seed: 0,
        };
        let model = fit(&spec, &data).unwrap();
        let p = model
            .predict(data.schema(), &[FeatureVector::new(vec![0.0], 0.0, 0.0), FeatureVector::new(vec![1.0], 0.0, 0.0)])
            .unwrap();
        assert_eq!(p, vec![10.0, 100.0]);
    }

    #[test]
    fn model_json_round_trip() {
        let data = noisy(100, 4);
        for spec in [LearnerSpec::linear(), small_forest(5)] {
            let model = fit(&spec, &data).unwrap();
            let back = Model::from_json(&model.to_json().unwrap()).unwrap();
            assert_eq!(back.predict_dataset(&data).unwrap(), model.predict_dataset(&data).unwrap());
        }
        let mut bad: serde_json::Value = serde_json::from_str(&fit(&LearnerSpec::linear(), &data).unwrap().to_json().unwrap()).unwrap();
        bad["version"] = 99.into();
        assert!(Model::from_json(&bad.to_string()).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec: LearnerSpec = serde_json::from_str(r#"{"kind":"random_forest","n_trees":10,"seed":4}"#).unwrap();
        assert_eq!(spec.label(), "rf");
        assert_eq!(spec.seed, 4);
        assert!(matches!(spec.kind, LearnerKind::RandomForest(ForestParams { n_trees: 10, min_leaf: 5, .. })));
        let bad = LearnerSpec {
            kind: LearnerKind::RandomForest(ForestParams { n_trees: 0, ..ForestParams::default() }),
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn linear_coefficient_scales_inversely(c in 0.1f64..50.0, slope in -5.0f64..5.0) {
            let xs = [0.0, 1.0, 2.5, 3.0, 4.0, 6.0, 7.5];
            let base = line_dataset(&xs, |x| slope * x + 1.0 + (x * 1.7).sin());
            let scaled_x: Vec<f64> = xs.iter().map(|x| x * c).collect();
            let scaled = line_dataset(&scaled_x, |x| slope * x / c + 1.0 + (x / c * 1.7).sin());
            let a = fit(&LearnerSpec::linear(), &base).unwrap();
            let b = fit(&LearnerSpec::linear(), &scaled).unwrap();
            let ca = a.as_linear().unwrap().coefficients()[0];
            let cb = b.as_linear().unwrap().coefficients()[0];
            prop_assert!((cb - ca / c).abs() < 1e-6 * (1.0 + ca.abs()));
        }

        #[test]
        fn in_sample_predictions_nonnegative(seed in 0u64..1000) {
            let data = noisy(60, seed);
            let model = fit(&small_forest(5), &data).unwrap();
            prop_assert!(model.predict_dataset(&data).unwrap().iter().all(|p| *p >= 0.0));
            let lm = fit(&LearnerSpec::linear(), &data).unwrap();
            prop_assert!(lm.predict_dataset(&data).unwrap().iter().all(|p| *p >= 0.0));
        }
    }
}
