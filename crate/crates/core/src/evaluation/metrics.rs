//! Probability scores, AUC and model comparison tests.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Probability floor used by the clipped log loss.
pub const CLIP_EPSILON: f64 = 1e-15;

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} is outside [0, 1]")));
    }
    Ok(())
}

fn check_label(y: f64) -> Result<()> {
    if y != 0.0 && y != 1.0 {
        return Err(Error::invalid(format!("label {y} is not 0 or 1")));
    }
    Ok(())
}

/// −[y ln p + (1−y) ln(1−p)]; infinite when a certain prediction is wrong.
pub fn log_loss(p: f64, y: f64) -> Result<f64> {
    check_probability(p)?;
    check_label(y)?;
    let q = if y == 1.0 { p } else { 1.0 - p };
    Ok(if q == 1.0 { 0.0 } else { -q.ln() })
}

/// Log loss with the probability clipped to `[ε, 1−ε]`.
pub fn log_loss_clipped(p: f64, y: f64) -> Result<f64> {
    check_probability(p)?;
    log_loss(p.clamp(CLIP_EPSILON, 1.0 - CLIP_EPSILON), y)
}

pub fn brier(p: f64, y: f64) -> Result<f64> {
    check_probability(p)?;
    check_label(y)?;
    Ok((p - y) * (p - y))
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Computed from midranks.
pub fn auc(ps: &[f64], ys: &[f64]) -> Result<f64> {
    if ps.len() != ys.len() {
        return Err(Error::invalid("score and label vectors differ in length"));
    }
    for &y in ys {
        check_label(y)?;
    }
    if ps.iter().any(|p| p.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let n_pos = ys.iter().filter(|&&y| y == 1.0).count();
    let n_neg = ys.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("AUC needs both classes"));
    }
    let ranks = midranks(ps);
    let rank_sum: f64 = ranks.iter().zip(ys).filter(|(_, &y)| y == 1.0).map(|(r, _)| r).sum();
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// 1-based ranks with ties given their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Welch two-sample t-test of mean(a) < mean(b).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Infinite losses left out of the test.
    pub excluded_a: usize,
    pub excluded_b: usize,
}

fn finite_moments(xs: &[f64]) -> (Vec<f64>, usize) {
    let finite: Vec<f64> = xs.iter().copied().filter(|v| v.is_finite()).collect();
    let excluded = xs.len() - finite.len();
    (finite, excluded)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// One-sided Welch test with alternative mean(a) < mean(b). Infinite losses
/// are excluded and counted.
pub fn compare_models(losses_a: &[f64], losses_b: &[f64]) -> Result<Comparison> {
    let (a, excluded_a) = finite_moments(losses_a);
    let (b, excluded_b) = finite_moments(losses_b);
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("each sample needs at least two finite losses"));
    }
    let (ma, va) = mean_var(&a);
    let (mb, vb) = mean_var(&b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return Err(Error::invalid(
            "both samples have zero variance; the t statistic is undefined",
        ));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(Comparison {
        t,
        df,
        p_value: dist.cdf(t),
        mean_a: ma,
        mean_b: mb,
        n_a: a.len(),
        n_b: b.len(),
        excluded_a,
        excluded_b,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubjectError {
    pub subject: String,
    /// Mean over finite losses.
    pub mean_logloss: f64,
    pub n: usize,
    pub n_infinite: usize,
}

impl SubjectError {
    pub fn flagged(&self) -> bool {
        self.n_infinite > 0
    }
}

/// Mean log loss per subject, highest first with ties alphabetical. Subjects
/// with an infinite loss are flagged and listed after the finite ranking.
pub fn error_by_subject(rows: &[(String, f64)]) -> Vec<SubjectError> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (s, l) in rows {
        groups.entry(s.as_str()).or_default().push(*l);
    }
    let mut out: Vec<SubjectError> = groups
        .into_iter()
        .map(|(s, ls)| {
            let finite: Vec<f64> = ls.iter().copied().filter(|v| v.is_finite()).collect();
            SubjectError {
                subject: s.to_string(),
                mean_logloss: if finite.is_empty() {
                    f64::INFINITY
                } else {
                    finite.iter().sum::<f64>() / finite.len() as f64
                },
                n: ls.len(),
                n_infinite: ls.len() - finite.len(),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.flagged()
            .cmp(&b.flagged())
            .then(b.mean_logloss.total_cmp(&a.mean_logloss))
            .then(a.subject.cmp(&b.subject))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_loss_examples() {
        assert!((log_loss(0.5, 1.0).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((log_loss(0.5, 0.0).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(log_loss(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(log_loss(0.0, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(log_loss(1.0, 0.0).unwrap(), f64::INFINITY);
        assert!(log_loss_clipped(0.0, 1.0).unwrap().is_finite());
        assert!(log_loss(1.2, 1.0).is_err());
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(0.5, 0.0).unwrap(), 0.25);
        assert_eq!(brier(0.5, 1.0).unwrap(), 0.25);
        assert_eq!(brier(1.0, 1.0).unwrap(), 0.0);
        assert!((brier(0.9, 0.0).unwrap() - 0.81).abs() < 1e-15);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.1], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 6], &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(auc(&[0.8, 0.7, 0.6, 0.5], &[1.0, 0.0, 1.0, 0.0]).unwrap(), 0.75);
        assert!(auc(&[0.2, 0.4], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn comparison_examples() {
        let a: Vec<f64> = (0..50).map(|i| 0.3 + 0.01 * (i % 7) as f64).collect();
        assert!((compare_models(&a, &a).unwrap().p_value - 0.5).abs() < 1e-12);
        let lo: Vec<f64> = (0..100).map(|i| 0.1 + 1e-4 * (i % 3) as f64).collect();
        let hi: Vec<f64> = (0..100).map(|i| 0.2 + 1e-4 * (i % 5) as f64).collect();
        assert!(compare_models(&lo, &hi).unwrap().p_value < 1e-10);
        assert!(compare_models(&hi, &lo).unwrap().p_value > 0.5);
        assert!(compare_models(&[0.1, 0.1], &[0.1, 0.1]).is_err());
    }

    #[test]
    fn infinite_losses_are_excluded_and_counted() {
        let a = [0.1, 0.2, f64::INFINITY, 0.15];
        let b = [0.3, 0.4, 0.35];
        let c = compare_models(&a, &b).unwrap();
        assert_eq!((c.n_a, c.excluded_a), (3, 1));
    }

    #[test]
    fn subject_ranking() {
        let rows = vec![
            ("Taxation".to_string(), 0.1),
            ("Taxation".to_string(), 0.3),
            ("Health".to_string(), 0.2),
            ("Commemorations".to_string(), f64::INFINITY),
            ("Commemorations".to_string(), 5.0),
        ];
        let ranked = error_by_subject(&rows);
        let names: Vec<&str> = ranked.iter().map(|s| s.subject.as_str()).collect();
        assert_eq!(names, vec!["Health", "Taxation", "Commemorations"]);
        assert!((ranked[0].mean_logloss - 0.2).abs() < 1e-15);
        assert!((ranked[1].mean_logloss - 0.2).abs() < 1e-15);
        assert!(ranked[2].flagged());
    }

    proptest! {
        #[test]
        fn auc_ignores_monotone_transforms(ps in prop::collection::vec(0.0f64..1.0, 4..40), seed in 0u64..1000) {
            let ys: Vec<f64> = (0..ps.len()).map(|i| f64::from((i as u64 + seed).is_multiple_of(3))).collect();
            prop_assume!(ys.contains(&1.0) && ys.contains(&0.0));
            let transformed: Vec<f64> = ps.iter().map(|p| (3.0 * p).exp() - 2.0).collect();
            prop_assert!((auc(&ps, &ys).unwrap() - auc(&transformed, &ys).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn scores_are_bounded(p in 0.0f64..=1.0, y in prop::bool::ANY) {
            let y = f64::from(y);
            prop_assert!(log_loss(p, y).unwrap() >= 0.0);
            let b = brier(p, y).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
        }
    }
}
