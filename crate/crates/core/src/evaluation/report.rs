//! Tables derived from walk-forward predictions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::metrics::{auc, brier, compare_models, error_by_subject, log_loss, log_loss_clipped, SubjectError};
use super::walk::{ModelSpec, PredictionRow};
use crate::corpus::SnapshotPolicy;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub model: ModelSpec,
    pub policy: SnapshotPolicy,
    /// A congress number, or "all" for the pooled rows.
    pub congress: String,
    /// NaN when the group holds a single class.
    pub auc: f64,
    pub mean_brier: f64,
    pub mean_logloss: f64,
    pub n: usize,
}

pub fn row_losses(rows: &[&PredictionRow], clip: bool) -> Result<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let y = f64::from(r.outcome);
            if clip {
                log_loss_clipped(r.probability, y)
            } else {
                log_loss(r.probability, y)
            }
        })
        .collect()
}

fn row_briers(rows: &[&PredictionRow]) -> Result<Vec<f64>> {
    rows.iter()
        .map(|r| brier(r.probability, f64::from(r.outcome)))
        .collect()
}

fn summarize(
    model: ModelSpec,
    policy: SnapshotPolicy,
    congress: String,
    rows: &[&PredictionRow],
    clip: bool,
) -> Result<MetricRow> {
    let ps: Vec<f64> = rows.iter().map(|r| r.probability).collect();
    let ys: Vec<f64> = rows.iter().map(|r| f64::from(r.outcome)).collect();
    let n = rows.len();
    Ok(MetricRow {
        model,
        policy,
        congress,
        auc: auc(&ps, &ys).unwrap_or(f64::NAN),
        mean_brier: row_briers(rows)?.iter().sum::<f64>() / n as f64,
        mean_logloss: row_losses(rows, clip)?.iter().sum::<f64>() / n as f64,
        n,
    })
}

/// Per-congress metrics plus a pooled row for each (model, policy).
pub fn metrics_table(rows: &[PredictionRow], clip: bool) -> Result<Vec<MetricRow>> {
    let mut groups: BTreeMap<(ModelSpec, SnapshotPolicy), BTreeMap<u32, Vec<&PredictionRow>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.model, r.policy))
            .or_default()
            .entry(r.congress)
            .or_default()
            .push(r);
    }
    let mut out = Vec::new();
    for ((model, policy), by_congress) in groups {
        let mut all = Vec::new();
        for (c, rs) in by_congress {
            out.push(summarize(model, policy, c.to_string(), &rs, clip)?);
            all.extend(rs);
        }
        out.push(summarize(model, policy, "all".into(), &all, clip)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model_a: ModelSpec,
    pub model_b: ModelSpec,
    pub policy: SnapshotPolicy,
    pub metric: String,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub excluded_a: usize,
    pub excluded_b: usize,
}

/// One-sided Welch tests of "model_a has lower loss than model_b" for every
/// ordered pair of models, on per-bill losses pooled across congresses.
pub fn comparison_table(rows: &[PredictionRow], clip: bool) -> Result<Vec<ComparisonRow>> {
    let mut groups: BTreeMap<(SnapshotPolicy, ModelSpec), Vec<&PredictionRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.policy, r.model)).or_default().push(r);
    }
    let mut out = Vec::new();
    for (&(policy, a), ra) in &groups {
        for (&(policy_b, b), rb) in &groups {
            if policy_b != policy || a == b {
                continue;
            }
            for metric in ["logloss", "brier"] {
                let (la, lb) = if metric == "logloss" {
                    (row_losses(ra, clip)?, row_losses(rb, clip)?)
                } else {
                    (row_briers(ra)?, row_briers(rb)?)
                };
                let Ok(c) = compare_models(&la, &lb) else {
                    log::warn!(
                        "skipping {metric} comparison {} vs {}: degenerate losses",
                        a.as_str(),
                        b.as_str()
                    );
                    continue;
                };
                out.push(ComparisonRow {
                    model_a: a,
                    model_b: b,
                    policy,
                    metric: metric.into(),
                    t: c.t,
                    df: c.df,
                    p_value: c.p_value,
                    mean_a: c.mean_a,
                    mean_b: c.mean_b,
                    n_a: c.n_a,
                    n_b: c.n_b,
                    excluded_a: c.excluded_a,
                    excluded_b: c.excluded_b,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImprovementRow {
    pub model: ModelSpec,
    pub policy: SnapshotPolicy,
    pub congress: String,
    pub logloss_improvement_pct: f64,
    pub brier_improvement_pct: f64,
}

/// Percent reduction of mean log loss and Brier score relative to the null model.
pub fn improvement_over_null(metrics: &[MetricRow]) -> Vec<ImprovementRow> {
    let null: BTreeMap<(SnapshotPolicy, &str), &MetricRow> = metrics
        .iter()
        .filter(|m| m.model == ModelSpec::Null)
        .map(|m| ((m.policy, m.congress.as_str()), m))
        .collect();
    metrics
        .iter()
        .filter(|m| m.model != ModelSpec::Null)
        .filter_map(|m| {
            let base = null.get(&(m.policy, m.congress.as_str()))?;
            Some(ImprovementRow {
                model: m.model,
                policy: m.policy,
                congress: m.congress.clone(),
                logloss_improvement_pct: 100.0 * (base.mean_logloss - m.mean_logloss) / base.mean_logloss,
                brier_improvement_pct: 100.0 * (base.mean_brier - m.mean_brier) / base.mean_brier,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubjectRow {
    pub model: ModelSpec,
    pub policy: SnapshotPolicy,
    pub rank: usize,
    pub subject: String,
    pub mean_logloss: f64,
    pub n: usize,
    pub n_infinite: usize,
}

pub fn subject_table(rows: &[PredictionRow]) -> Result<Vec<SubjectRow>> {
    let mut groups: BTreeMap<(ModelSpec, SnapshotPolicy), Vec<(String, f64)>> = BTreeMap::new();
    for r in rows {
        let l = log_loss(r.probability, f64::from(r.outcome))?;
        groups
            .entry((r.model, r.policy))
            .or_default()
            .push((r.subject.clone(), l));
    }
    let mut out = Vec::new();
    for ((model, policy), losses) in groups {
        for (
            rank,
            SubjectError {
                subject,
                mean_logloss,
                n,
                n_infinite,
            },
        ) in error_by_subject(&losses).into_iter().enumerate()
        {
            out.push(SubjectRow {
                model,
                policy,
                rank: rank + 1,
                subject,
                mean_logloss,
                n,
                n_infinite,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionRow {
    pub model: ModelSpec,
    pub policy: SnapshotPolicy,
    pub outcome: u8,
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: usize,
}

/// Histogram of predicted probabilities by model and true outcome.
pub fn probability_distribution(rows: &[PredictionRow], bins: usize) -> Vec<DistributionRow> {
    let bins = bins.max(1);
    let mut counts: BTreeMap<(ModelSpec, SnapshotPolicy, u8), Vec<usize>> = BTreeMap::new();
    for r in rows {
        let b = ((r.probability * bins as f64) as usize).min(bins - 1);
        counts
            .entry((r.model, r.policy, r.outcome))
            .or_insert_with(|| vec![0; bins])[b] += 1;
    }
    let mut out = Vec::new();
    for ((model, policy, outcome), c) in counts {
        for (b, count) in c.into_iter().enumerate() {
            out.push(DistributionRow {
                model,
                policy,
                outcome,
                bin_low: b as f64 / bins as f64,
                bin_high: (b + 1) as f64 / bins as f64,
                count,
            });
        }
    }
    out
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Chamber;

    fn pred(model: ModelSpec, congress: u32, outcome: u8, p: f64) -> PredictionRow {
        PredictionRow {
            bill_id: format!("b{congress}-{outcome}-{p}"),
            congress,
            chamber: Chamber::House,
            subject: "Taxation".into(),
            outcome,
            model,
            policy: SnapshotPolicy::Oldest,
            probability: p,
        }
    }

    #[test]
    fn metrics_include_pooled_rows() {
        let rows = vec![
            pred(ModelSpec::Null, 107, 1, 0.5),
            pred(ModelSpec::Null, 107, 0, 0.5),
            pred(ModelSpec::Null, 108, 1, 0.5),
            pred(ModelSpec::Null, 108, 0, 0.5),
        ];
        let m = metrics_table(&rows, false).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[2].congress, "all");
        assert_eq!(m[2].n, 4);
        assert_eq!(m[2].auc, 0.5);
        assert_eq!(m[2].mean_brier, 0.25);
    }

    #[test]
    fn improvement_is_relative_to_null() {
        let rows = vec![
            pred(ModelSpec::Null, 107, 1, 0.5),
            pred(ModelSpec::Null, 107, 0, 0.5),
            pred(ModelSpec::Text, 107, 1, 0.9),
            pred(ModelSpec::Text, 107, 0, 0.1),
        ];
        let imp = improvement_over_null(&metrics_table(&rows, false).unwrap());
        assert_eq!(imp.len(), 2);
        assert!((imp[0].brier_improvement_pct - 96.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_counts_every_row() {
        let rows = vec![pred(ModelSpec::Text, 107, 1, 1.0), pred(ModelSpec::Text, 107, 1, 0.0)];
        let d = probability_distribution(&rows, 10);
        assert_eq!(d.iter().map(|r| r.count).sum::<usize>(), 2);
        assert_eq!(d[9].count, 1);
    }
}
