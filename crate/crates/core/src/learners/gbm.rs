use ndarray::ArrayView2;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::tree::{columns, grow, Criterion, Node, Tree, TreeParams};
use super::{check_design, check_targets};
use crate::util::{derive_seed, logit, rng_from_seed, sigmoid};
use crate::{Error, Result};

/// Newton leaf values are clipped to this magnitude.
const LEAF_CLIP: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub n_stages: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of rows drawn without replacement for each stage.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbmParams {
    fn default() -> Self {
        GbmParams {
            n_stages: 200,
            shrinkage: 0.05,
            max_depth: 3,
            min_leaf: 10,
            subsample: 1.0,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    /// Log-odds of the training base rate.
    pub initial: f64,
    pub shrinkage: f64,
    pub trees: Vec<Tree>,
    /// Mean training logistic loss after each stage (index 0 is the initial model).
    pub train_loss: Vec<f64>,
}

impl GbmModel {
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let mut f = vec![self.initial; x.nrows()];
        for tree in &self.trees {
            for (fi, row) in f.iter_mut().zip(x.rows()) {
                *fi += self.shrinkage * tree.predict_row(row);
            }
        }
        f
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.decision_function(x).into_iter().map(sigmoid).collect()
    }
}

/// Logistic loss of score `f` for label `y`: ln(1 + e^f) − y·f.
pub fn logistic_loss(f: f64, y: f64) -> f64 {
    let softplus = if f > 0.0 {
        f + (-f).exp().ln_1p()
    } else {
        f.exp().ln_1p()
    };
    softplus - y * f
}

/// Negative gradient of [`logistic_loss`] with respect to `f`.
pub fn negative_gradient(f: f64, y: f64) -> f64 {
    y - sigmoid(f)
}

fn mean_loss(f: &[f64], y: &[f64]) -> f64 {
    f.iter().zip(y).map(|(&f, &y)| logistic_loss(f, y)).sum::<f64>() / y.len() as f64
}

pub fn fit_gbm(x: ArrayView2<f64>, y: &[f64], params: &GbmParams) -> Result<GbmModel> {
    check_design(x, y.len())?;
    check_targets(y)?;
    if !(params.shrinkage > 0.0 && params.shrinkage <= 1.0) {
        return Err(Error::invalid("shrinkage must lie in (0, 1]"));
    }
    if !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(Error::invalid("subsample must lie in (0, 1]"));
    }
    let n = y.len();
    let rate = y.iter().sum::<f64>() / n as f64;
    let degenerate = rate == 0.0 || rate == 1.0;
    let eps = 1.0 / (2.0 * n as f64);
    let initial = logit(rate.clamp(eps, 1.0 - eps));
    let mut f = vec![initial; n];
    let mut model = GbmModel {
        initial,
        shrinkage: params.shrinkage,
        trees: Vec::new(),
        train_loss: vec![mean_loss(&f, y)],
    };
    if degenerate {
        return Ok(model);
    }

    let cols = columns(x);
    let tree_params = TreeParams {
        max_depth: Some(params.max_depth),
        min_leaf: params.min_leaf,
        mtry: None,
        criterion: Criterion::Variance,
    };
    let mut rng = rng_from_seed(derive_seed(params.seed, "gbm/subsample"));
    let n_sub = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    let mut residual = vec![0.0; n];
    for _ in 0..params.n_stages {
        for i in 0..n {
            residual[i] = negative_gradient(f[i], y[i]);
        }
        let rows: Vec<usize> = if n_sub < n {
            let mut r = sample(&mut rng, n, n_sub).into_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let mut tree = grow(&cols, &residual, rows.clone(), &tree_params, &mut rng);

        // Replace leaf means with one Newton step on the logistic loss.
        let mut num = vec![0.0; tree.nodes.len()];
        let mut den = vec![0.0; tree.nodes.len()];
        for &i in &rows {
            let leaf = tree.leaf_index(x.row(i));
            let p = sigmoid(f[i]);
            num[leaf] += residual[i];
            den[leaf] += p * (1.0 - p);
        }
        for leaf in 0..tree.nodes.len() {
            if matches!(tree.nodes[leaf], Node::Leaf { .. }) {
                let step = if den[leaf] > 1e-12 { num[leaf] / den[leaf] } else { 0.0 };
                tree.set_leaf_value(leaf, step.clamp(-LEAF_CLIP, LEAF_CLIP));
            }
        }
        for (fi, row) in f.iter_mut().zip(x.rows()) {
            *fi += params.shrinkage * tree.predict_row(row);
        }
        model.train_loss.push(mean_loss(&f, y));
        model.trees.push(tree);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn data(n: usize) -> (Array2<f64>, Vec<f64>) {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            ((i * (2 * j + 5) * 2654435761usize) % 1000) as f64 / 1000.0
        });
        let y = (0..n)
            .map(|i| f64::from(x[[i, 0]] * 2.0 - x[[i, 1]] + 0.2 * ((i % 7) as f64 / 7.0 - 0.5) > 0.4))
            .collect();
        (x, y)
    }

    #[test]
    fn zero_stages_predict_the_base_rate() {
        let (x, y) = data(40);
        let params = GbmParams {
            n_stages: 0,
            ..GbmParams::default()
        };
        let m = fit_gbm(x.view(), &y, &params).unwrap();
        let rate = y.iter().sum::<f64>() / y.len() as f64;
        for p in m.predict_proba(x.view()) {
            assert!((p - rate).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_labels_give_an_intercept_model() {
        let (x, _) = data(10);
        let m = fit_gbm(x.view(), &[0.0; 10], &GbmParams::default()).unwrap();
        assert!(m.trees.is_empty());
        assert!(m.predict_proba(x.view()).iter().all(|&p| (p - 0.05).abs() < 1e-12));
    }

    #[test]
    fn training_loss_falls() {
        let (x, y) = data(300);
        let params = GbmParams {
            n_stages: 50,
            shrinkage: 0.1,
            ..GbmParams::default()
        };
        let m = fit_gbm(x.view(), &y, &params).unwrap();
        assert!(m.train_loss[50] < m.train_loss[1]);
        for w in m.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{w:?}");
        }
    }

    #[test]
    fn scaling_leaves_against_shrinkage_preserves_predictions() {
        let (x, y) = data(200);
        let params = GbmParams {
            n_stages: 20,
            ..GbmParams::default()
        };
        let m = fit_gbm(x.view(), &y, &params).unwrap();
        let mut scaled = m.clone();
        scaled.shrinkage /= 4.0;
        scaled.trees.iter_mut().for_each(|t| t.scale_leaves(4.0));
        for (a, b) in m.predict_proba(x.view()).iter().zip(scaled.predict_proba(x.view())) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn subsampling_is_seeded() {
        let (x, y) = data(120);
        let params = GbmParams {
            n_stages: 10,
            subsample: 0.5,
            ..GbmParams::default()
        };
        assert_eq!(
            fit_gbm(x.view(), &y, &params).unwrap(),
            fit_gbm(x.view(), &y, &params).unwrap()
        );
    }
}
