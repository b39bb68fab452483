use lawcast::ensemble::{stacked_fit, BaseSpec, StackConfig};
use lawcast::evaluation::auc;
use lawcast::features::DesignMatrix;
use lawcast::learners::{
    fit_elastic_net_logistic, fit_random_forest, fit_tree, logistic_loss, negative_gradient, Criterion,
    ElasticNetParams, ForestParams, Node, TreeParams,
};
use lawcast::util::{rng_from_seed, sigmoid};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

fn gini_weighted(ys: &[f64]) -> f64 {
    if ys.is_empty() {
        return 0.0;
    }
    let n = ys.len() as f64;
    let p1 = ys.iter().filter(|&&y| y == 1.0).count() as f64 / n;
    n * (1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1))
}

/// Exhaustive search of every feature and every midpoint between distinct values.
fn brute_force_root(x: &Array2<f64>, y: &[f64], min_leaf: usize) -> (usize, f64, f64) {
    let parent = gini_weighted(y);
    let mut best = (usize::MAX, f64::NAN, f64::NEG_INFINITY);
    for j in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(j).to_vec();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<f64>, Vec<f64>) = {
                let mut l = Vec::new();
                let mut r = Vec::new();
                for i in 0..y.len() {
                    if x[[i, j]] <= t {
                        l.push(y[i])
                    } else {
                        r.push(y[i])
                    }
                }
                (l, r)
            };
            if l.len() < min_leaf || r.len() < min_leaf {
                continue;
            }
            let gain = parent - gini_weighted(&l) - gini_weighted(&r);
            if gain > best.2 + 1e-12 {
                best = (j, t, gain);
            }
        }
    }
    best
}

#[test]
fn root_split_matches_exhaustive_search() {
    let mut rng = rng_from_seed(11);
    for trial in 0..40 {
        let n = rng.random_range(10..60);
        let p = rng.random_range(1..5);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(0..1000) as f64 / 10.0);
        let y: Vec<f64> = (0..n)
            .map(|i| f64::from(x[[i, 0]] + rng.random_range(-30.0..30.0) > 50.0))
            .collect();
        if y.iter().all(|&v| v == y[0]) {
            continue;
        }
        let min_leaf = rng.random_range(1..4);
        let params = TreeParams {
            max_depth: Some(1),
            min_leaf,
            mtry: None,
            criterion: Criterion::Gini,
        };
        let tree = fit_tree(x.view(), &y, &params).unwrap();
        let (feature, threshold, gain) = brute_force_root(&x, &y, min_leaf);
        match &tree.nodes[0] {
            Node::Split {
                feature: f,
                threshold: t,
                ..
            } => {
                assert_eq!(*f, feature, "trial {trial}");
                assert!((t - threshold).abs() < 1e-9, "trial {trial}: {t} vs {threshold}");
            }
            Node::Leaf { .. } => assert!(gain <= 1e-12, "trial {trial}: missed gain {gain}"),
        }
    }
}

#[test]
fn negative_gradient_matches_loss_derivative() {
    let h = 1e-6;
    for &y in &[0.0, 1.0] {
        for i in -40..=40 {
            let f = i as f64 * 0.25;
            let fd = (logistic_loss(f + h, y) - logistic_loss(f - h, y)) / (2.0 * h);
            assert!((-fd - negative_gradient(f, y)).abs() < 1e-8, "f={f} y={y}");
        }
    }
}

#[test]
fn elastic_net_recovers_signs() {
    let beta = [1.5, -2.0, 0.0, 0.0, 1.0, 0.0];
    let mut rng = rng_from_seed(21);
    let n = 3000;
    let x = Array2::from_shape_fn((n, beta.len()), |_| StandardNormal.sample(&mut rng));
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eta = -0.5 + (0..beta.len()).map(|j| beta[j] * x[[i, j]]).sum::<f64>();
            f64::from(rng.random::<f64>() < sigmoid(eta))
        })
        .collect();
    let params = ElasticNetParams {
        alpha: 1.0,
        lambda: 0.02,
        ..ElasticNetParams::default()
    };
    let m = fit_elastic_net_logistic(x.view(), &y, &params).unwrap();
    assert!(m.converged);
    for (j, (&b, &t)) in m.coefficients.iter().zip(&beta).enumerate() {
        if t == 0.0 {
            assert!(b.abs() < 0.1, "coefficient {j} = {b}");
        } else {
            assert_eq!(b.signum(), t.signum(), "coefficient {j} = {b}");
            assert!(b.abs() > 0.5, "coefficient {j} = {b}");
        }
    }
    for w in m.objective_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-10, "objective rose: {w:?}");
    }
}

#[test]
fn forest_is_invariant_to_monotone_transforms() {
    let mut rng = rng_from_seed(31);
    let n = 200;
    let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-2.0..2.0));
    let y: Vec<f64> = (0..n)
        .map(|i| f64::from(x[[i, 0]] - x[[i, 2]] + rng.random_range(-1.0..1.0) > 0.0))
        .collect();
    let mut z = x.clone();
    z.column_mut(0).mapv_inplace(f64::exp);
    z.column_mut(2).mapv_inplace(|v| 3.0 * v + 7.0);
    let params = ForestParams {
        n_trees: 30,
        min_leaf: 3,
        seed: 5,
        ..ForestParams::default()
    };
    let a = fit_random_forest(x.view(), &y, &params)
        .unwrap()
        .predict_proba(x.view());
    let b = fit_random_forest(z.view(), &y, &params)
        .unwrap()
        .predict_proba(z.view());
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() < 1e-12);
    }
}

fn design(data: Array2<f64>) -> DesignMatrix {
    DesignMatrix {
        columns: (0..data.ncols()).map(|j| format!("c{j}")).collect(),
        row_ids: (0..data.nrows()).map(|i| format!("r{i}")).collect(),
        data,
        reference_levels: BTreeMap::new(),
    }
}

fn column_stack(seed: u64) -> (DesignMatrix, Vec<f64>) {
    let mut rng = rng_from_seed(seed);
    let n = 400;
    let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.3))).collect();
    let data = Array2::from_shape_fn((n, 3), |(i, j)| match j {
        // Near-perfect probability for the label.
        0 => (0.1 + 0.8 * y[i] + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0),
        // Anti-informative column.
        1 => (0.9 - 0.5 * y[i] + rng.random_range(-0.3..0.3)).clamp(0.0, 1.0),
        _ => rng.random_range(0.0..1.0),
    });
    (design(data), y)
}

fn column_config(seed: u64) -> StackConfig {
    StackConfig {
        k_folds: 5,
        seed,
        bases: (0..3).map(|index| BaseSpec::Column { index }).collect(),
        ..StackConfig::default()
    }
}

#[test]
fn meta_learner_weights_the_oracle_column() {
    let (x, y) = column_stack(41);
    let stack = stacked_fit(&x, &y, &column_config(1)).unwrap();
    let w = &stack.meta.coefficients;
    assert!(w[0] > 0.0);
    assert!(w[0] > 10.0 * w[1].max(w[2]), "weights {w:?}");
    let p = stack.predict(&x).unwrap();
    assert!(auc(&p, &y).unwrap() >= 0.99);
}

#[test]
fn meta_coefficients_are_never_negative() {
    for s in 0..100 {
        let (x, y) = column_stack(1000 + s);
        let stack = stacked_fit(&x, &y, &column_config(s)).unwrap();
        assert!(
            stack.meta.coefficients.iter().all(|&c| c >= 0.0),
            "seed {s}: {:?}",
            stack.meta.coefficients
        );
    }
}

#[test]
fn out_of_fold_rows_never_train_their_own_prediction() {
    let (x, y) = column_stack(7);
    let config = StackConfig {
        bases: vec![BaseSpec::ElasticNet(ElasticNetParams::default())],
        ..column_config(3)
    };
    let stack = stacked_fit(&x, &y, &config).unwrap();
    let mut seen = vec![0; y.len()];
    for f in &stack.folds {
        for r in &f.held_out_rows {
            assert!(!f.train_rows.contains(r));
            seen[*r] += 1;
        }
        let pos = f.held_out_rows.iter().filter(|&&r| y[r] == 1.0).count();
        assert!(pos > 0 && pos < f.held_out_rows.len());
    }
    assert!(seen.iter().all(|&c| c == 1));
}
