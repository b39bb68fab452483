//! CART trees grown greedily on gini or variance reduction.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{check_design, check_targets};
use crate::util::Rng;
use crate::Result;

/// Minimum impurity decrease for a split to be accepted.
const MIN_GAIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Binary 0/1 targets.
    Gini,
    /// Real-valued targets.
    Variance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per split; `None` examines all of them.
    pub mtry: Option<usize>,
    pub criterion: Criterion,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
            mtry: None,
            criterion: Criterion::Gini,
        }
    }
}

/// Rows with `x[feature] <= threshold` go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in creation order; the root is node 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_index(&self, row: ArrayView1<f64>) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn set_leaf_value(&mut self, index: usize, v: f64) {
        if let Node::Leaf { value } = &mut self.nodes[index] {
            *value = v;
        }
    }

    pub fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value } = n {
                *value *= factor;
            }
        }
    }
}

/// Fits one tree on all rows. With `mtry` set, feature subsets are drawn from
/// a generator seeded with zero.
pub fn fit_tree(x: ArrayView2<f64>, y: &[f64], params: &TreeParams) -> Result<Tree> {
    check_design(x, y.len())?;
    if params.criterion == Criterion::Gini {
        check_targets(y)?;
    }
    let cols = columns(x);
    let rows: Vec<usize> = (0..y.len()).collect();
    let mut rng = crate::util::rng_from_seed(0);
    Ok(grow(&cols, y, rows, params, &mut rng))
}

/// Feature-major copy of a design matrix.
pub(crate) fn columns(x: ArrayView2<f64>) -> Vec<Vec<f64>> {
    x.columns().into_iter().map(|c| c.to_vec()).collect()
}

fn impurity(criterion: Criterion, n: f64, sum: f64, sumsq: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    match criterion {
        // n times the gini index of a 0/1 node
        Criterion::Gini => 2.0 * sum * (n - sum) / n,
        Criterion::Variance => (sumsq - sum * sum / n).max(0.0),
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Best split of `rows` over `features` (ascending). Ties keep the earliest
/// feature and then the lowest threshold.
pub(crate) fn best_split(
    cols: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
    criterion: Criterion,
    buf: &mut Vec<(f64, f64)>,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let (sum, sumsq) = rows.iter().fold((0.0, 0.0), |(s, q), &r| (s + y[r], q + y[r] * y[r]));
    let parent = impurity(criterion, n as f64, sum, sumsq);
    if parent <= MIN_GAIN {
        return None;
    }
    let mut best: Option<Split> = None;
    for &f in features {
        let col = &cols[f];
        buf.clear();
        buf.extend(rows.iter().map(|&r| (col[r], y[r])));
        buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if buf[0].0 == buf[n - 1].0 {
            continue;
        }
        let (mut ls, mut lq) = (0.0, 0.0);
        for i in 0..n - 1 {
            ls += buf[i].1;
            lq += buf[i].1 * buf[i].1;
            let nl = i + 1;
            if buf[i].0 == buf[i + 1].0 || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let gain = parent
                - impurity(criterion, nl as f64, ls, lq)
                - impurity(criterion, (n - nl) as f64, sum - ls, sumsq - lq);
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain + MIN_GAIN) {
                let (a, b) = (buf[i].0, buf[i + 1].0);
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// Grows a tree over `rows` (repeats allowed, as in a bootstrap sample).
pub(crate) fn grow(cols: &[Vec<f64>], y: &[f64], rows: Vec<usize>, params: &TreeParams, rng: &mut Rng) -> Tree {
    let p = cols.len();
    let mtry = params.mtry.unwrap_or(p).clamp(1, p.max(1));
    let all: Vec<usize> = (0..p).collect();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, rows, 0usize)];
    let mut buf = Vec::new();
    while let Some((id, rows, depth)) = stack.pop() {
        let value = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
        let can_split = params.max_depth.is_none_or(|d| depth < d);
        let split = if can_split {
            let features = if mtry < p {
                let mut f = sample(rng, p, mtry).into_vec();
                f.sort_unstable();
                f
            } else {
                all.clone()
            };
            best_split(cols, y, &rows, &features, params.min_leaf, params.criterion, &mut buf)
        } else {
            None
        };
        match split {
            None => nodes[id] = Node::Leaf { value },
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| cols[s.feature][i] <= s.threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[id] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    Tree { nodes }
}
