//! Partial rank correlation sensitivity analysis of fitted predictors.

use std::ops::RangeInclusive;
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::BillRecord;
use crate::evaluation::{corpus_features, midranks, TrainedSystem};
use crate::features::{impute_missing, CommitteeMembership, DesignMatrix, DesignSchema, ImputeStrategy, TextScores};
use crate::inversion::Channel;
use crate::util::{derive_seed, quantile_sorted, rng_from_seed};
use crate::{Error, Result};

/// Ridge added to the rank correlation matrix when it is not positive definite.
pub const RIDGE_JITTER: f64 = 1e-8;

const MIN_PIVOT: f64 = 1e-12;

/// Conditional variances below this (in correlation units) count as zero.
const DEGENERATE_VARIANCE: f64 = 1e-6;

/// PRCC of every column of one data set.
#[derive(Clone, Debug, PartialEq)]
pub struct PrccFit {
    /// `None` for constant columns, which are left out of the analysis.
    pub estimates: Vec<Option<f64>>,
    /// The rank correlation matrix needed ridge jitter.
    pub jittered: bool,
    /// Columns whose residual (or the output's residual) vanished; estimate 0.
    pub degenerate: Vec<usize>,
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|v| *v == col[0])
}

/// Midranks of each column, centered.
fn centered_ranks(col: &[f64]) -> Vec<f64> {
    let mid = (col.len() as f64 + 1.0) / 2.0;
    midranks(col).into_iter().map(|r| r - mid).collect()
}

/// PRCC of each column of `x` with `yhat`.
///
/// Ranks are midranks. The partial correlation of column j and the output
/// given the remaining columns (plus an intercept) is read off the inverse of
/// the joint rank correlation matrix.
pub fn prcc_array(x: ArrayView2<f64>, yhat: &[f64]) -> Result<PrccFit> {
    let (n, p) = x.dim();
    if yhat.len() != n {
        return Err(Error::invalid(format!("{} outputs for {n} design rows", yhat.len())));
    }
    if x.iter().chain(yhat).any(|v| !v.is_finite()) {
        return Err(Error::invalid("sensitivity design must be complete and finite"));
    }
    if n == 0 || is_constant(yhat) {
        return Err(Error::invalid("model output is constant; PRCC is undefined"));
    }
    let mut active = Vec::new();
    let mut estimates = vec![None; p];
    for j in 0..p {
        let col: Vec<f64> = x.column(j).to_vec();
        if is_constant(&col) {
            continue;
        }
        active.push(j);
    }
    let k = active.len();
    if n <= k + 2 {
        return Err(Error::invalid(format!("{n} rows are too few for {k} variables")));
    }
    let mut ranks = Array2::<f64>::zeros((n, k + 1));
    for (a, &j) in active.iter().enumerate() {
        let col: Vec<f64> = x.column(j).to_vec();
        for (i, r) in centered_ranks(&col).into_iter().enumerate() {
            ranks[[i, a]] = r;
        }
    }
    for (i, r) in centered_ranks(yhat).into_iter().enumerate() {
        ranks[[i, k]] = r;
    }
    let gram = ranks.t().dot(&ranks);
    let sd: Vec<f64> = gram.diag().iter().map(|v| v.sqrt()).collect();
    let m = k + 1;
    let corr = DMatrix::from_fn(m, m, |a, b| gram[[a, b]] / (sd[a] * sd[b]));

    let mut jittered = false;
    // Tiny pivots mean a numerically singular matrix even when the
    // factorization itself succeeds.
    let factor = corr
        .clone()
        .cholesky()
        .filter(|c| c.l_dirty().diagonal().iter().all(|d| d * d > MIN_PIVOT));
    let precision = match factor {
        Some(c) => c.inverse(),
        None => {
            jittered = true;
            let ridged = corr + DMatrix::identity(m, m) * RIDGE_JITTER;
            ridged
                .cholesky()
                .ok_or_else(|| Error::Numerical("rank correlation matrix is not positive definite".into()))?
                .inverse()
        }
    };

    let mut degenerate = Vec::new();
    let pyy = precision[(k, k)];
    for (a, &j) in active.iter().enumerate() {
        let (pjj, pjy) = (precision[(a, a)], precision[(a, k)]);
        // Conditional covariance of (x_j, y) given the other columns.
        let det = pjj * pyy - pjy * pjy;
        let var_x = pyy / det;
        let var_y = pjj / det;
        // NaN fails every comparison and lands here too.
        let usable = det > 0.0 && var_x > DEGENERATE_VARIANCE && var_y > DEGENERATE_VARIANCE;
        if !usable {
            degenerate.push(j);
            estimates[j] = Some(0.0);
            continue;
        }
        estimates[j] = Some((-pjy / (pjj * pyy).sqrt()).clamp(-1.0, 1.0));
    }
    Ok(PrccFit {
        estimates,
        jittered,
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub variable: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_replicates_used: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub rows: Vec<SensitivityRow>,
    /// Constant columns left out of the analysis.
    pub skipped: Vec<String>,
    pub n: usize,
    pub replicates: usize,
    pub level: f64,
    pub jittered: bool,
    pub degenerate: Vec<String>,
}

impl SensitivityReport {
    pub fn row(&self, variable: &str) -> Option<&SensitivityRow> {
        self.rows.iter().find(|r| r.variable == variable)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::evaluation::write_csv(path, &self.rows)
    }
}

/// PRCC for each design column with no bootstrap.
pub fn prcc(x: &DesignMatrix, yhat: &[f64]) -> Result<Vec<(String, Option<f64>)>> {
    let fit = prcc_array(x.data.view(), yhat)?;
    Ok(x.columns.iter().cloned().zip(fit.estimates).collect())
}

/// PRCC with percentile bootstrap intervals from `replicates` joint row
/// resamples. A replicate in which a column is constant is skipped for that
/// column. Intervals are widened if needed to contain the point estimate.
pub fn bootstrap_prcc(
    x: &DesignMatrix,
    yhat: &[f64],
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<SensitivityReport> {
    if replicates < 100 {
        return Err(Error::Config(format!(
            "bootstrap needs at least 100 replicates, got {replicates}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("interval level {level} is not in (0, 1)")));
    }
    let full = prcc_array(x.data.view(), yhat)?;
    let n = x.n_rows();
    let draws: Vec<Vec<Option<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(seed, &format!("prcc/bootstrap/{b}")));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let xs = x.data.select(Axis(0), &idx);
            let ys: Vec<f64> = idx.iter().map(|&i| yhat[i]).collect();
            match prcc_array(xs.view(), &ys) {
                Ok(fit) => fit.estimates,
                Err(e) => {
                    log::debug!("bootstrap replicate {b} skipped: {e}");
                    vec![None; x.n_cols()]
                }
            }
        })
        .collect();

    let alpha = (1.0 - level) / 2.0;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (j, name) in x.columns.iter().enumerate() {
        let Some(estimate) = full.estimates[j] else {
            log::warn!("column '{name}' is constant; skipped");
            skipped.push(name.clone());
            continue;
        };
        let mut vals: Vec<f64> = draws.iter().filter_map(|d| d[j]).collect();
        vals.sort_by(f64::total_cmp);
        let (lo, hi) = if vals.is_empty() {
            (estimate, estimate)
        } else {
            (quantile_sorted(&vals, alpha), quantile_sorted(&vals, 1.0 - alpha))
        };
        rows.push(SensitivityRow {
            variable: name.clone(),
            estimate,
            ci_low: lo.min(estimate),
            ci_high: hi.max(estimate),
            n_replicates_used: vals.len(),
        });
    }
    Ok(SensitivityReport {
        rows,
        skipped,
        n,
        replicates,
        level,
        jittered: full.jittered,
        degenerate: full.degenerate.iter().map(|&j| x.columns[j].clone()).collect(),
    })
}

/// Empirical design points paired with a fitted system's predictions.
#[derive(Clone, Debug)]
pub struct SensitivityDesign {
    pub matrix: DesignMatrix,
    pub output: Vec<f64>,
    /// Rows removed for missing predictor values.
    pub n_dropped: usize,
}

/// Predicts every bill of `congresses` with `system` and pairs the
/// predictions with the expanded design (chamber interactions included).
/// Rows with any missing predictor are dropped. `bills` also supplies the
/// sponsorship history used for features.
pub fn build_sensitivity_design(
    bills: &[BillRecord],
    membership: &CommitteeMembership,
    system: &TrainedSystem,
    congresses: RangeInclusive<u32>,
) -> Result<SensitivityDesign> {
    let idx: Vec<usize> = (0..bills.len())
        .filter(|&i| congresses.contains(&bills[i].congress))
        .collect();
    if idx.is_empty() {
        return Err(Error::invalid(format!(
            "no bills in congresses {}-{}",
            congresses.start(),
            congresses.end()
        )));
    }
    let range: Vec<BillRecord> = idx.iter().map(|&i| bills[i].clone()).collect();
    let output = system.predict(&range, membership, bills)?;
    let all = corpus_features(bills, membership, system.policy, &system.features);
    let features: Vec<_> = idx.iter().map(|&i| all[i].clone()).collect();
    let (schema, text) = match (&system.stage, &system.classifier) {
        (Some(stage), Some(clf)) if stage.schema.with_text => {
            let body = clf.score_bills(&range, system.policy, Channel::Body);
            let title = clf.score_bills(&range, system.policy, Channel::Title);
            let scores: Vec<TextScores> = body
                .iter()
                .zip(&title)
                .map(|(b, t)| TextScores {
                    body: b.probability,
                    title: t.probability,
                })
                .collect();
            (stage.schema.clone(), Some(scores))
        }
        (Some(stage), _) => (stage.schema.clone(), None),
        (None, _) => (DesignSchema::fit(&features, &system.features, false, true), None),
    };
    let raw = schema.expand(&features, text.as_deref())?;
    let matrix = impute_missing(&raw, ImputeStrategy::Drop)?;
    let kept: std::collections::HashSet<&str> = matrix.row_ids.iter().map(String::as_str).collect();
    let output: Vec<f64> = raw
        .row_ids
        .iter()
        .zip(output)
        .filter(|(id, _)| kept.contains(id.as_str()))
        .map(|(_, p)| p)
        .collect();
    let n_dropped = raw.n_rows() - matrix.n_rows();
    if n_dropped > 0 {
        log::info!("sensitivity design: dropped {n_dropped} rows with missing values");
    }
    Ok(SensitivityDesign {
        matrix,
        output,
        n_dropped,
    })
}
