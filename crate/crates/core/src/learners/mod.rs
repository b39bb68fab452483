//! Base learners: CART trees, random forests, gradient boosting and
//! elastic-net logistic regression.

mod elastic_net;
mod forest;
mod gbm;
mod tree;

use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::features::{schema_mismatch, DesignMatrix};
use crate::{Error, Result};

pub use elastic_net::{fit_elastic_net_logistic, ElasticNetModel, ElasticNetParams};
pub use forest::{fit_random_forest, ForestModel, ForestParams};
pub use gbm::{fit_gbm, logistic_loss, negative_gradient, GbmModel, GbmParams};
pub use tree::{fit_tree, Criterion, Node, Tree, TreeParams};

pub const MODEL_FORMAT: &str = "LAWCAST-MODEL v1";

pub(crate) fn check_design(x: ArrayView2<f64>, n: usize) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::invalid(format!("design has {} rows but {n} targets", x.nrows())));
    }
    if n == 0 {
        return Err(Error::invalid("no training rows"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "design contains missing or non-finite values; impute first",
        ));
    }
    Ok(())
}

pub(crate) fn check_targets(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid("targets must be 0 or 1"));
    }
    Ok(())
}

/// Any fitted base learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum Learner {
    Forest(ForestModel),
    Gbm(GbmModel),
    ElasticNet(ElasticNetModel),
}

impl Learner {
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        match self {
            Learner::Forest(m) => m.predict_proba(x),
            Learner::Gbm(m) => m.predict_proba(x),
            Learner::ElasticNet(m) => m.predict_proba(x),
        }
    }
}

/// A learner bound to the column names it was trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub columns: Vec<String>,
    pub model: Learner,
}

impl FittedModel {
    pub fn predict_proba(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        if x.columns != self.columns {
            return Err(schema_mismatch(&self.columns, &x.columns));
        }
        check_design(x.data.view(), x.n_rows())?;
        Ok(self.model.predict_proba(x.data.view()))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v["format"] = MODEL_FORMAT.into();
        Ok(serde_json::to_string(&v)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        if v["format"] != MODEL_FORMAT {
            return Err(Error::invalid(format!("model is not tagged '{MODEL_FORMAT}'")));
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
