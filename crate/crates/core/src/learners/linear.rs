use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::resample::Standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearParams {
    /// Ridge penalty on standardized coefficients.
    pub ridge: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self { ridge: 1e-6 }
    }
}

impl LinearParams {
    pub fn validate(&self) -> Result<()> {
        if self.ridge > 0.0 && self.ridge.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("ridge must be positive, got {}", self.ridge)))
        }
    }
}

/// Least squares on standardized features, reported on the original scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    intercept: f64,
    coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn fit(params: &LinearParams, train: &Dataset) -> Result<Self> {
        let n = train.len();
        let p = train.n_features();
        let std = Standardizer::fit(train);
        let y_mean = train.y().iter().sum::<f64>() / n as f64;
        let z = DMatrix::from_fn(n, p, |i, j| (train.rows()[i].values()[j] - std.mean()[j]) / std.scale()[j]);
        let yc = DVector::from_iterator(n, train.y().iter().map(|v| v - y_mean));
        let mut gram = z.transpose() * &z;
        for j in 0..p {
            gram[(j, j)] += params.ridge;
        }
        let rhs = z.transpose() * yc;
        let beta = gram
            .cholesky()
            .ok_or_else(|| Error::InvalidParams("normal equations are not positive definite".into()))?
            .solve(&rhs);
        let coefficients: Vec<f64> = beta.iter().zip(std.scale()).map(|(b, s)| b / s).collect();
        let intercept = y_mean - coefficients.iter().zip(std.mean()).map(|(c, m)| c * m).sum::<f64>();
        Ok(Self { intercept, coefficients })
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}
