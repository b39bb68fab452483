//! Stacked generalization: out-of-fold base predictions feed a non-negative
//! elastic-net logistic meta-learner.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::{schema_mismatch, DesignMatrix};
use crate::learners::{
    fit_elastic_net_logistic, fit_gbm, fit_random_forest, ElasticNetModel, ElasticNetParams, ForestParams, GbmParams,
    Learner, MODEL_FORMAT,
};
use crate::util::{derive_seed, rng_from_seed, sha256_hex};
use crate::{Error, Result};

/// A base learner specification. `Column` passes one design column through
/// unchanged, which is useful for constructed checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSpec {
    Gbm(GbmParams),
    Forest(ForestParams),
    ElasticNet(ElasticNetParams),
    Column { index: usize },
}

impl BaseSpec {
    pub fn name(&self) -> String {
        match self {
            BaseSpec::Gbm(_) => "gbm".into(),
            BaseSpec::Forest(_) => "forest".into(),
            BaseSpec::ElasticNet(_) => "elastic_net".into(),
            BaseSpec::Column { index } => format!("column_{index}"),
        }
    }

    fn fit(&self, x: ArrayView2<f64>, y: &[f64], seed: u64) -> Result<FittedBase> {
        Ok(match self {
            BaseSpec::Gbm(p) => FittedBase::Learner(Learner::Gbm(fit_gbm(x, y, &GbmParams { seed, ..p.clone() })?)),
            BaseSpec::Forest(p) => FittedBase::Learner(Learner::Forest(fit_random_forest(
                x,
                y,
                &ForestParams { seed, ..p.clone() },
            )?)),
            BaseSpec::ElasticNet(p) => FittedBase::Learner(Learner::ElasticNet(fit_elastic_net_logistic(x, y, p)?)),
            BaseSpec::Column { index } => {
                if *index >= x.ncols() {
                    return Err(Error::invalid(format!("column {index} is out of range")));
                }
                FittedBase::Column { index: *index }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedBase {
    Learner(Learner),
    Column { index: usize },
}

impl FittedBase {
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        match self {
            FittedBase::Learner(l) => l.predict_proba(x),
            FittedBase::Column { index } => x.column(*index).to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackConfig {
    pub k_folds: usize,
    pub seed: u64,
    pub bases: Vec<BaseSpec>,
    pub meta: ElasticNetParams,
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig {
            k_folds: 5,
            seed: 1,
            bases: vec![
                BaseSpec::Gbm(GbmParams::default()),
                BaseSpec::Forest(ForestParams::default()),
                BaseSpec::ElasticNet(ElasticNetParams::default()),
            ],
            meta: ElasticNetParams {
                nonnegative: true,
                ..ElasticNetParams::default()
            },
        }
    }
}

impl StackConfig {
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).unwrap_or_default().as_bytes())
    }
}

/// Which rows trained a fold's base learners and which rows it predicted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub train_rows: Vec<usize>,
    pub held_out_rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackedEnsemble {
    pub columns: Vec<String>,
    pub base_names: Vec<String>,
    pub bases: Vec<FittedBase>,
    pub meta: ElasticNetModel,
    pub k_folds: usize,
    pub fold_seed: u64,
    pub config_hash: String,
    pub folds: Vec<FoldRecord>,
}

/// Fold index per row. Each class is shuffled and dealt round-robin, so
/// every fold holds both classes whenever each class has at least `k` rows.
pub fn stratified_folds(y: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid("stacking needs at least two folds"));
    }
    let mut rng = rng_from_seed(seed);
    let mut fold = vec![0usize; y.len()];
    // Dealing continues across classes so fold sizes differ by at most one.
    let mut next = 0usize;
    for class in [1.0, 0.0] {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.len() < k {
            return Err(Error::invalid(format!(
                "class {class} has {} rows, too few for {k} stratified folds",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        for r in rows {
            fold[r] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

pub fn stacked_fit(x: &DesignMatrix, y: &[f64], config: &StackConfig) -> Result<StackedEnsemble> {
    if config.bases.is_empty() {
        return Err(Error::invalid("stacking needs at least one base learner"));
    }
    let n = x.n_rows();
    let fold_seed = derive_seed(config.seed, "stack/folds");
    let fold_of = stratified_folds(y, config.k_folds, fold_seed)?;
    let folds: Vec<FoldRecord> = (0..config.k_folds)
        .map(|f| FoldRecord {
            fold: f,
            train_rows: (0..n).filter(|&i| fold_of[i] != f).collect(),
            held_out_rows: (0..n).filter(|&i| fold_of[i] == f).collect(),
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..config.k_folds)
        .flat_map(|f| (0..config.bases.len()).map(move |b| (f, b)))
        .collect();
    let fold_preds: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(f, b)| {
            let rec = &folds[f];
            let xt = x.data.select(Axis(0), &rec.train_rows);
            let yt: Vec<f64> = rec.train_rows.iter().map(|&i| y[i]).collect();
            let seed = derive_seed(config.seed, &format!("stack/fold{f}/base{b}"));
            let fitted = config.bases[b].fit(xt.view(), &yt, seed)?;
            Ok(fitted.predict_proba(x.data.select(Axis(0), &rec.held_out_rows).view()))
        })
        .collect::<Result<_>>()?;

    let mut oof = Array2::<f64>::zeros((n, config.bases.len()));
    for ((f, b), preds) in jobs.iter().zip(&fold_preds) {
        for (&row, p) in folds[*f].held_out_rows.iter().zip(preds) {
            oof[[row, *b]] = *p;
        }
    }
    let meta_params = ElasticNetParams {
        nonnegative: true,
        ..config.meta.clone()
    };
    let meta = fit_elastic_net_logistic(oof.view(), y, &meta_params)?;

    let bases = config
        .bases
        .par_iter()
        .enumerate()
        .map(|(b, spec)| {
            spec.fit(
                x.data.view(),
                y,
                derive_seed(config.seed, &format!("stack/full/base{b}")),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(StackedEnsemble {
        columns: x.columns.clone(),
        base_names: config.bases.iter().map(BaseSpec::name).collect(),
        bases,
        meta,
        k_folds: config.k_folds,
        fold_seed,
        config_hash: config.hash(),
        folds,
    })
}

impl StackedEnsemble {
    /// Base-learner probabilities, one column per base learner.
    pub fn base_predictions(&self, x: &DesignMatrix) -> Result<Array2<f64>> {
        if x.columns != self.columns {
            return Err(schema_mismatch(&self.columns, &x.columns));
        }
        if x.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "design contains missing or non-finite values; impute first",
            ));
        }
        let mut out = Array2::<f64>::zeros((x.n_rows(), self.bases.len()));
        for (b, base) in self.bases.iter().enumerate() {
            for (i, p) in base.predict_proba(x.data.view()).into_iter().enumerate() {
                out[[i, b]] = p;
            }
        }
        Ok(out)
    }

    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        Ok(self.meta.predict_proba(self.base_predictions(x)?.view()))
    }

    /// Writes `base_<i>.json`, `meta.json` and `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let werr = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Write { path, source }
        };
        fs::create_dir_all(dir).map_err(werr(dir))?;
        for (i, base) in self.bases.iter().enumerate() {
            let mut v = serde_json::to_value(base)?;
            v["format"] = MODEL_FORMAT.into();
            let p = dir.join(format!("base_{i}.json"));
            fs::write(&p, serde_json::to_string(&v)?).map_err(werr(&p))?;
        }
        let mut meta = serde_json::to_value(&self.meta)?;
        meta["format"] = MODEL_FORMAT.into();
        let p = dir.join("meta.json");
        fs::write(&p, serde_json::to_string(&meta)?).map_err(werr(&p))?;
        let manifest = serde_json::json!({
            "format": MODEL_FORMAT,
            "columns": self.columns,
            "base_names": self.base_names,
            "k_folds": self.k_folds,
            "fold_seed": self.fold_seed,
            "config_hash": self.config_hash,
            "folds": self.folds,
        });
        let p = dir.join("manifest.json");
        fs::write(&p, serde_json::to_string_pretty(&manifest)?).map_err(werr(&p))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<serde_json::Value> {
            let p = dir.join(name);
            let text = fs::read_to_string(&p).map_err(|source| Error::Read {
                path: p.clone(),
                source,
            })?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            if v["format"] != MODEL_FORMAT {
                return Err(Error::Format {
                    path: p,
                    reason: format!("not tagged '{MODEL_FORMAT}'"),
                });
            }
            Ok(v)
        };
        let manifest = read("manifest.json")?;
        let base_names: Vec<String> = serde_json::from_value(manifest["base_names"].clone())?;
        let bases = (0..base_names.len())
            .map(|i| Ok(serde_json::from_value(read(&format!("base_{i}.json"))?)?))
            .collect::<Result<Vec<FittedBase>>>()?;
        Ok(StackedEnsemble {
            columns: serde_json::from_value(manifest["columns"].clone())?,
            base_names,
            bases,
            meta: serde_json::from_value(read("meta.json")?)?,
            k_folds: serde_json::from_value(manifest["k_folds"].clone())?,
            fold_seed: serde_json::from_value(manifest["fold_seed"].clone())?,
            config_hash: serde_json::from_value(manifest["config_hash"].clone())?,
            folds: serde_json::from_value(manifest["folds"].clone())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::logit;
    use std::collections::BTreeMap;

    fn design(data: Array2<f64>) -> DesignMatrix {
        DesignMatrix {
            columns: (0..data.ncols()).map(|j| format!("c{j}")).collect(),
            row_ids: (0..data.nrows()).map(|i| format!("r{i}")).collect(),
            data,
            reference_levels: BTreeMap::new(),
        }
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let y: Vec<f64> = (0..103).map(|i| f64::from(i % 10 == 0)).collect();
        let folds = stratified_folds(&y, 5, 9).unwrap();
        for f in 0..5 {
            let rows: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
            assert!(rows.iter().any(|&i| y[i] == 1.0));
            assert!(rows.iter().any(|&i| y[i] == 0.0));
            assert!((20..=21).contains(&rows.len()));
        }
        assert!(stratified_folds(&[1.0, 0.0, 0.0, 0.0], 2, 1).is_err());
    }

    #[test]
    fn zero_meta_weights_give_the_intercept() {
        let x = design(Array2::from_shape_fn((4, 1), |(i, _)| i as f64 / 4.0));
        let ens = StackedEnsemble {
            columns: x.columns.clone(),
            base_names: vec!["column_0".into()],
            bases: vec![FittedBase::Column { index: 0 }],
            meta: ElasticNetModel {
                coefficients: vec![0.0],
                intercept: logit(0.04),
                alpha: 0.5,
                lambda: 1e-5,
                nonnegative: true,
                converged: true,
                iterations: 0,
                objective_trace: vec![],
            },
            k_folds: 5,
            fold_seed: 0,
            config_hash: String::new(),
            folds: vec![],
        };
        for p in ens.predict(&x).unwrap() {
            assert!((p - 0.04).abs() < 1e-15);
        }
    }

    #[test]
    fn held_out_rows_never_train_their_fold() {
        let n = 60;
        let data = Array2::from_shape_fn((n, 2), |(i, j)| ((i * 31 + j * 7) % 13) as f64 / 13.0);
        let y: Vec<f64> = (0..n).map(|i| f64::from(data[[i, 0]] > 0.5)).collect();
        let config = StackConfig {
            bases: vec![BaseSpec::Column { index: 0 }, BaseSpec::Column { index: 1 }],
            ..StackConfig::default()
        };
        let ens = stacked_fit(&design(data), &y, &config).unwrap();
        let mut seen = vec![0; n];
        for f in &ens.folds {
            for r in &f.held_out_rows {
                assert!(!f.train_rows.contains(r));
                seen[*r] += 1;
            }
            assert_eq!(f.train_rows.len() + f.held_out_rows.len(), n);
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert!(ens.meta.coefficients.iter().all(|&c| c >= 0.0));
    }
}
