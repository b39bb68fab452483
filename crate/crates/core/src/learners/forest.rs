use ndarray::ArrayView2;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{columns, grow, Criterion, Tree, TreeParams};
use super::{check_design, check_targets};
use crate::util::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means ⌈√p⌉.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Grow each tree on a size-n sample drawn with replacement. When false
    /// every tree sees all rows once.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 300,
            mtry: None,
            max_depth: None,
            min_leaf: 1,
            bootstrap: true,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub seeds: Vec<u64>,
    pub mtry: usize,
}

impl ForestModel {
    /// Mean over trees of the leaf class frequency.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let mut out = vec![0.0; x.nrows()];
        for tree in &self.trees {
            for (o, row) in out.iter_mut().zip(x.rows()) {
                *o += tree.predict_row(row);
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= k);
        out
    }
}

pub fn fit_random_forest(x: ArrayView2<f64>, y: &[f64], params: &ForestParams) -> Result<ForestModel> {
    check_design(x, y.len())?;
    check_targets(y)?;
    if params.n_trees < 1 {
        return Err(Error::invalid("a forest needs at least one tree"));
    }
    let p = x.ncols();
    let mtry = params.mtry.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).max(1);
    if mtry > p {
        return Err(Error::invalid(format!(
            "mtry {mtry} exceeds the {p} available features"
        )));
    }
    let cols = columns(x);
    let n = y.len();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        mtry: Some(mtry),
        criterion: Criterion::Gini,
    };
    let seeds: Vec<u64> = (0..params.n_trees)
        .map(|i| derive_seed(params.seed, &format!("forest/tree/{i}")))
        .collect();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = rng_from_seed(s);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(&cols, y, rows, &tree_params, &mut rng)
        })
        .collect();
    Ok(ForestModel { trees, seeds, mtry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tree::fit_tree;
    use ndarray::Array2;

    fn data() -> (Array2<f64>, Vec<f64>) {
        let n = 80;
        let x = Array2::from_shape_fn((n, 3), |(i, j)| ((i * (j + 3) * 7919) % 101) as f64 / 101.0);
        let y = (0..n).map(|i| f64::from(x[[i, 0]] + 0.3 * x[[i, 2]] > 0.6)).collect();
        (x, y)
    }

    #[test]
    fn single_unsampled_tree_equals_plain_tree() {
        let (x, y) = data();
        let params = ForestParams {
            n_trees: 1,
            mtry: Some(3),
            bootstrap: false,
            ..ForestParams::default()
        };
        let f = fit_random_forest(x.view(), &y, &params).unwrap();
        let t = fit_tree(x.view(), &y, &TreeParams::default()).unwrap();
        assert_eq!(f.predict_proba(x.view()), t.predict(x.view()));
    }

    #[test]
    fn predictions_are_probabilities_and_memorize() {
        let (x, y) = data();
        let params = ForestParams {
            n_trees: 25,
            ..ForestParams::default()
        };
        let f = fit_random_forest(x.view(), &y, &params).unwrap();
        let p = f.predict_proba(x.view());
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        let correct = p.iter().zip(&y).filter(|(p, y)| (**p > 0.5) == (**y > 0.5)).count();
        assert_eq!(correct, y.len());
    }

    #[test]
    fn oversized_mtry_is_rejected() {
        let (x, y) = data();
        let params = ForestParams {
            mtry: Some(4),
            ..ForestParams::default()
        };
        assert!(fit_random_forest(x.view(), &y, &params).is_err());
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = data();
        let params = ForestParams {
            n_trees: 5,
            ..ForestParams::default()
        };
        assert_eq!(
            fit_random_forest(x.view(), &y, &params).unwrap(),
            fit_random_forest(x.view(), &y, &params).unwrap()
        );
    }
}
