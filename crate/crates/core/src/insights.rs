//! Topic summaries from the class-conditional word vectors and smoothed
//! sentence-position probability curves.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Chamber, Outcome, SnapshotPolicy};
use crate::embeddings::{differential_lists, most_similar, SimilarityQuery};
use crate::inversion::{Channel, InversionClassifier};
use crate::{Error, Result};

pub const DEFAULT_SPAN: f64 = 0.75;
pub const DEFAULT_POSITIONS: usize = 10;

/// Ranked similar words for each (chamber, outcome) model, with words shared
/// by the Enacted and Failed lists of a chamber removed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyntheticSummary {
    pub topic: String,
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
    /// Keyed `house_enacted`, `house_failed`, `senate_enacted`, `senate_failed`.
    pub cells: BTreeMap<String, Vec<String>>,
}

fn topic_label(query: &SimilarityQuery) -> String {
    let mut parts: Vec<String> = query.positives.iter().map(|w| format!("+{w}")).collect();
    parts.extend(query.negatives.iter().map(|w| format!("-{w}")));
    parts.join(" ")
}

pub fn synthetic_summary(
    clf: &InversionClassifier,
    channel: Channel,
    query: &SimilarityQuery,
) -> Result<SyntheticSummary> {
    for chamber in Chamber::ALL {
        for outcome in Outcome::ALL {
            let model = clf.model(chamber, outcome, channel);
            for w in query.positives.iter().chain(&query.negatives) {
                if !model.vocab.contains(w) {
                    return Err(Error::invalid(format!(
                        "query word '{w}' is not in the vocabulary of the {}_{} {} model",
                        chamber.as_str(),
                        outcome.as_str(),
                        channel.as_str()
                    )));
                }
            }
        }
    }
    let mut cells = BTreeMap::new();
    for chamber in Chamber::ALL {
        let mut lists = Vec::new();
        for outcome in Outcome::ALL {
            let model = clf.model(chamber, outcome, channel);
            let mut q = query.clone();
            if q.n > model.vocab.len() {
                log::info!(
                    "candidate cutoff {} capped at the {}_{} vocabulary size {}",
                    q.n,
                    chamber.as_str(),
                    outcome.as_str(),
                    model.vocab.len()
                );
                q.n = model.vocab.len();
            }
            let words: Vec<String> = most_similar(model, &q)?.into_iter().map(|(w, _)| w).collect();
            lists.push(words);
        }
        let (enacted, failed) = differential_lists(&lists[0], &lists[1]);
        cells.insert(format!("{}_enacted", chamber.as_str()), enacted);
        cells.insert(format!("{}_failed", chamber.as_str()), failed);
    }
    Ok(SyntheticSummary {
        topic: topic_label(query),
        positives: query.positives.clone(),
        negatives: query.negatives.clone(),
        cells,
    })
}

/// 1-based indices of `n` evenly spaced sentences of a bill with `len`
/// sentences: round(1 + (i−1)(len−1)/(n−1)).
pub fn sample_indices(len: usize, n: usize) -> Vec<usize> {
    assert!(len >= 1 && n >= 2, "sample_indices needs len >= 1 and n >= 2");
    (1..=n)
        .map(|i| (1.0 + (i - 1) as f64 * (len - 1) as f64 / (n - 1) as f64).round() as usize)
        .collect()
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

/// Local linear regression with tricube weights over the nearest
/// ceil(span·N) points, evaluated at each of `at`.
pub fn loess(xs: &[f64], ys: &[f64], at: &[f64], span: f64) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("loess x and y differ in length"));
    }
    if xs.is_empty() {
        return Err(Error::invalid("loess needs at least one point"));
    }
    if !(span > 0.0 && span <= 1.0) {
        return Err(Error::Config(format!("loess span {span} is not in (0, 1]")));
    }
    let n = xs.len();
    let q = ((span * n as f64).ceil() as usize).clamp(1, n);
    let mut dist = vec![0.0; n];
    at.iter()
        .map(|&x0| {
            for (d, x) in dist.iter_mut().zip(xs) {
                *d = (x - x0).abs();
            }
            let mut sorted = dist.clone();
            let (_, h, _) = sorted.select_nth_unstable_by(q - 1, f64::total_cmp);
            let h = *h;
            let mut weights: Vec<f64> = if h > 0.0 {
                dist.iter().map(|d| tricube(d / h)).collect()
            } else {
                vec![0.0; n]
            };
            if weights.iter().all(|w| *w == 0.0) {
                // Every neighbour sits exactly at the bandwidth.
                weights = dist.iter().map(|&d| if d <= h { 1.0 } else { 0.0 }).collect();
            }
            Ok(local_linear(xs, ys, &weights, x0))
        })
        .collect()
}

fn local_linear(xs: &[f64], ys: &[f64], w: &[f64], x0: f64) -> f64 {
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((w, x), y) in w.iter().zip(xs).zip(ys) {
        sxx += w * (x - xm) * (x - xm);
        sxy += w * (x - xm) * (y - ym);
    }
    if sxx <= 1e-12 * sw {
        // All weight on a single x value.
        return ym;
    }
    ym + sxy / sxx * (x0 - xm)
}

/// Sentence posteriors of one bill with the labels that select its curve.
#[derive(Clone, Debug, PartialEq)]
pub struct BillPosteriors {
    pub outcome: Outcome,
    pub policy: SnapshotPolicy,
    pub posteriors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SentenceCurve {
    pub outcome: Outcome,
    pub policy: SnapshotPolicy,
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
    pub n_bills: usize,
}

impl SentenceCurve {
    pub fn category(&self) -> String {
        format!("{}_{}", self.outcome.as_str(), self.policy.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentenceCurves {
    pub curves: Vec<SentenceCurve>,
    /// Bills with fewer than two sentences.
    pub excluded: usize,
}

#[derive(Serialize)]
struct CurveRow {
    category: String,
    position: f64,
    value: f64,
}

impl SentenceCurves {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<CurveRow> = self
            .curves
            .iter()
            .flat_map(|c| {
                c.positions.iter().zip(&c.values).map(|(&position, &value)| CurveRow {
                    category: c.category(),
                    position,
                    value,
                })
            })
            .collect();
        crate::evaluation::write_csv(path, &rows)
    }
}

/// Samples `n` sentences from every bill, pools (position, posterior) points
/// per outcome and snapshot policy, and loess-smooths them at positions 1..n.
/// Categories with no bills are omitted.
pub fn sentence_curves(bills: &[BillPosteriors], n: usize, span: f64) -> Result<SentenceCurves> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 sample positions, got {n}")));
    }
    // (positions, values, bill count) per category
    let mut pooled: BTreeMap<_, (Vec<f64>, Vec<f64>, usize)> = BTreeMap::new();
    let mut excluded = 0;
    for b in bills {
        if b.posteriors.len() < 2 {
            excluded += 1;
            continue;
        }
        let entry = pooled.entry((b.outcome, b.policy)).or_default();
        for (pos, idx) in sample_indices(b.posteriors.len(), n).into_iter().enumerate() {
            entry.0.push((pos + 1) as f64);
            entry.1.push(b.posteriors[idx - 1]);
        }
        entry.2 += 1;
    }
    if excluded > 0 {
        log::info!("sentence curves: excluded {excluded} bills with fewer than 2 sentences");
    }
    let positions: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let curves = pooled
        .into_par_iter()
        .map(|((outcome, policy), (xs, ys, n_bills))| {
            let values = loess(&xs, &ys, &positions, span)?
                .into_iter()
                .map(|v| v.clamp(0.0, 1.0))
                .collect();
            Ok(SentenceCurve {
                outcome,
                policy,
                positions: positions.clone(),
                values,
                n_bills,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SentenceCurves { curves, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_indices_examples() {
        assert_eq!(sample_indices(10, 10), (1..=10).collect::<Vec<_>>());
        assert_eq!(sample_indices(19, 10), vec![1, 3, 5, 7, 9, 11, 13, 15, 17, 19]);
        let idx = sample_indices(37, 10);
        assert_eq!((idx[0], idx[9]), (1, 37));
        assert!(idx.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn loess_reproduces_lines() {
        let xs: Vec<f64> = (0..50).map(|i| (i % 10) as f64 + 0.1 * (i / 10) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.2 - 0.013 * x).collect();
        let at = [0.0, 2.5, 9.0];
        for span in [0.1, 0.3, 0.75, 1.0] {
            for (a, v) in at.iter().zip(loess(&xs, &ys, &at, span).unwrap()) {
                assert!((v - (0.2 - 0.013 * a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loess_single_x_falls_back_to_mean() {
        let v = loess(&[2.0, 2.0, 2.0], &[0.1, 0.2, 0.3], &[2.0, 5.0], 0.75).unwrap();
        assert!((v[0] - 0.2).abs() < 1e-15);
        assert!((v[1] - 0.2).abs() < 1e-15);
        assert!(loess(&[1.0], &[1.0], &[1.0], 1.5).is_err());
    }

    #[test]
    fn constant_posteriors_give_flat_curves() {
        let mut bills = Vec::new();
        for (k, outcome) in Outcome::ALL.into_iter().enumerate() {
            for policy in [SnapshotPolicy::Oldest, SnapshotPolicy::Newest] {
                for len in [1, 5, 12, 30 + k] {
                    bills.push(BillPosteriors {
                        outcome,
                        policy,
                        posteriors: vec![0.3; len],
                    });
                }
            }
        }
        let curves = sentence_curves(&bills, 10, DEFAULT_SPAN).unwrap();
        assert_eq!(curves.excluded, 4);
        assert_eq!(curves.curves.len(), 4);
        for c in &curves.curves {
            assert_eq!(c.n_bills, 3);
            assert!(c.values.iter().all(|v| (v - 0.3).abs() < 1e-12));
        }
    }
}
