//! Design matrices: factor expansion, chamber interactions and imputation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{CommitteePosition, ContextFeatures, FeatureConfig, Region};
use crate::corpus::Session;
use crate::util::median;
use crate::{Error, Result};

pub const SUBJECT_REFERENCE: &str = "Social Sciences and History";

/// Numeric bill characteristics interacted with the house indicator.
pub const INTERACTION_PARENTS: &[&str] = &[
    "sponsor_party_prop",
    "sponsor_terms",
    "committee_seniority",
    "not_maj_on_com",
    "maj_on_com",
    "num_cosponsors",
    "session=second",
    "text_length",
    "text_prob_body",
    "text_prob_title",
];

/// Inversion-model probabilities used as two extra predictors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextScores {
    pub body: f64,
    pub title: f64,
}

/// Column layout fixed on training features and reused at prediction time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignSchema {
    pub columns: Vec<String>,
    pub subject_levels: Vec<String>,
    pub position_codes: Vec<u32>,
    pub with_text: bool,
    pub with_interactions: bool,
    pub reference_levels: BTreeMap<String, String>,
}

/// A numeric matrix with named columns. `NaN` marks a missing value.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub columns: Vec<String>,
    pub row_ids: Vec<String>,
    pub data: Array2<f64>,
    pub reference_levels: BTreeMap<String, String>,
}

impl DesignSchema {
    /// Fixes the factor levels from training rows. Subject levels are data
    /// driven; the withheld subject is "Social Sciences and History" when
    /// present, else the alphabetically first subject.
    pub fn fit(features: &[ContextFeatures], config: &FeatureConfig, with_text: bool, with_interactions: bool) -> Self {
        let subjects: BTreeSet<&str> = features.iter().map(|f| f.subjects_top_term.as_str()).collect();
        let subject_ref = if subjects.contains(SUBJECT_REFERENCE) || subjects.is_empty() {
            SUBJECT_REFERENCE.to_string()
        } else {
            subjects.iter().next().unwrap().to_string()
        };
        let subject_levels: Vec<String> = subjects
            .into_iter()
            .filter(|s| *s != subject_ref)
            .map(str::to_string)
            .collect();
        let mut position_codes = config.leadership_codes.clone();
        position_codes.sort_unstable();
        position_codes.dedup();

        let mut columns = Vec::new();
        for r in Region::ALL.iter().filter(|r| **r != Region::NorthCentral) {
            columns.push(format!("region={}", r.label()));
        }
        columns.extend(["sponsor_party_prop", "sponsor_terms", "committee_seniority"].map(String::from));
        for c in &position_codes {
            columns.push(format!("committee_position={c}"));
        }
        columns.extend(
            [
                "not_maj_on_com",
                "maj_on_com",
                "num_cosponsors",
                "session=second",
                "house",
            ]
            .map(String::from),
        );
        for m in 2..=12 {
            columns.push(format!("month={m}"));
        }
        for s in &subject_levels {
            columns.push(format!("subject={s}"));
        }
        columns.push("text_length".into());
        if with_text {
            columns.push("text_prob_body".into());
            columns.push("text_prob_title".into());
        }
        if with_interactions {
            for p in INTERACTION_PARENTS {
                if columns.iter().any(|c| c == p) {
                    columns.push(format!("house:{p}"));
                }
            }
        }

        let reference_levels = BTreeMap::from([
            ("region".to_string(), Region::NorthCentral.label().to_string()),
            ("month".to_string(), "1".to_string()),
            ("subject".to_string(), subject_ref),
            ("committee_position".to_string(), "none".to_string()),
            ("session".to_string(), "first".to_string()),
        ]);
        DesignSchema {
            columns,
            subject_levels,
            position_codes,
            with_text,
            with_interactions,
            reference_levels,
        }
    }

    /// Expands feature rows. Unseen factor levels become all-zero indicators.
    pub fn expand(&self, features: &[ContextFeatures], text_scores: Option<&[TextScores]>) -> Result<DesignMatrix> {
        if self.with_text {
            match text_scores {
                Some(s) if s.len() == features.len() => {}
                Some(_) => return Err(Error::invalid("text score count differs from feature rows")),
                None => return Err(Error::invalid("schema expects text scores")),
            }
        }
        let index: BTreeMap<&str, usize> = self.columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut data = Array2::<f64>::zeros((features.len(), self.columns.len()));
        let mut warned: BTreeSet<String> = BTreeSet::new();

        for (r, f) in features.iter().enumerate() {
            let mut row = data.row_mut(r);
            let mut set = |name: &str, v: f64| {
                if let Some(&i) = index.get(name) {
                    row[i] = v;
                }
            };
            match f.region {
                Some(region) => {
                    if region != Region::NorthCentral {
                        set(&format!("region={}", region.label()), 1.0);
                    }
                }
                None => {
                    for reg in Region::ALL.iter().filter(|r| **r != Region::NorthCentral) {
                        set(&format!("region={}", reg.label()), f64::NAN);
                    }
                }
            }
            set("sponsor_party_prop", f.sponsor_party_prop.unwrap_or(f64::NAN));
            set("sponsor_terms", f.sponsor_terms as f64);
            set("committee_seniority", f.committee_seniority.unwrap_or(f64::NAN));
            match f.committee_position {
                Some(CommitteePosition::None) => {}
                Some(CommitteePosition::Code(c)) => {
                    if self.position_codes.contains(&c) {
                        set(&format!("committee_position={c}"), 1.0);
                    } else if warned.insert(format!("committee_position={c}")) {
                        log::warn!("unseen committee_position level {c}; encoded as reference");
                    }
                }
                None => {
                    for c in &self.position_codes {
                        set(&format!("committee_position={c}"), f64::NAN);
                    }
                }
            }
            set("not_maj_on_com", opt_bool(f.not_maj_on_com));
            set("maj_on_com", opt_bool(f.maj_on_com));
            set("num_cosponsors", f.num_cosponsors as f64);
            set("session=second", if f.session == Session::Second { 1.0 } else { 0.0 });
            set("house", if f.house { 1.0 } else { 0.0 });
            if (2..=12).contains(&f.month) {
                set(&format!("month={}", f.month), 1.0);
            } else if f.month != 1 && warned.insert(format!("month={}", f.month)) {
                log::warn!("unseen month level {}; encoded as reference", f.month);
            }
            if f.subjects_top_term != self.reference_levels["subject"] {
                if self.subject_levels.contains(&f.subjects_top_term) {
                    set(&format!("subject={}", f.subjects_top_term), 1.0);
                } else if warned.insert(format!("subject={}", f.subjects_top_term)) {
                    log::warn!(
                        "unseen subject level '{}'; encoded as all-zero indicators",
                        f.subjects_top_term
                    );
                }
            }
            set("text_length", f.text_length as f64);
            if let Some(scores) = text_scores.filter(|_| self.with_text) {
                set("text_prob_body", scores[r].body);
                set("text_prob_title", scores[r].title);
            }
        }

        if self.with_interactions {
            let house = index["house"];
            for p in INTERACTION_PARENTS {
                if let (Some(&parent), Some(&col)) = (index.get(p), index.get(format!("house:{p}").as_str())) {
                    for r in 0..features.len() {
                        data[[r, col]] = data[[r, house]] * data[[r, parent]];
                    }
                }
            }
        }

        Ok(DesignMatrix {
            columns: self.columns.clone(),
            row_ids: features.iter().map(|f| f.bill_id.clone()).collect(),
            data,
            reference_levels: self.reference_levels.clone(),
        })
    }
}

fn opt_bool(v: Option<bool>) -> f64 {
    match v {
        Some(true) => 1.0,
        Some(false) => 0.0,
        None => f64::NAN,
    }
}

/// Fits a schema on `features` and expands them in one step.
pub fn expand_design(
    features: &[ContextFeatures],
    text_scores: Option<&[TextScores]>,
    with_interactions: bool,
    config: &FeatureConfig,
) -> Result<DesignMatrix> {
    DesignSchema::fit(features, config, text_scores.is_some(), with_interactions).expand(features, text_scores)
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|i| self.data.column(i).to_vec())
    }

    pub fn has_missing(&self) -> bool {
        self.data.iter().any(|v| v.is_nan())
    }

    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            columns: self.columns.clone(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            data: self.data.select(Axis(0), rows),
            reference_levels: self.reference_levels.clone(),
        }
    }

    /// Writes the matrix as CSV (header: `bill_id` then the columns) and a
    /// `<path>.json` sidecar with the column list and reference levels.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["bill_id".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.row_ids.iter().zip(self.data.rows()) {
            let mut rec = vec![id.clone()];
            rec.extend(
                row.iter()
                    .map(|v| if v.is_nan() { String::new() } else { v.to_string() }),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        let sidecar = serde_json::json!({
            "columns": self.columns,
            "reference_levels": self.reference_levels,
        });
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        std::fs::write(&side, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImputeStrategy {
    /// Remove rows with any missing value.
    Drop,
    /// Fill with training medians and append a missing-indicator column.
    MedianPlusIndicator,
}

/// Median imputation fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub columns: Vec<String>,
    pub medians: Vec<f64>,
    /// Columns that had missing training values and get an indicator.
    pub indicator_columns: Vec<usize>,
}

impl Imputer {
    pub fn fit(matrix: &DesignMatrix) -> Result<Self> {
        check_fully_missing(matrix)?;
        let mut medians = Vec::with_capacity(matrix.n_cols());
        let mut indicator_columns = Vec::new();
        for (j, col) in matrix.data.columns().into_iter().enumerate() {
            let present: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
            if present.len() < col.len() {
                indicator_columns.push(j);
            }
            medians.push(median(&present));
        }
        Ok(Imputer {
            columns: matrix.columns.clone(),
            medians,
            indicator_columns,
        })
    }

    pub fn apply(&self, matrix: &DesignMatrix) -> Result<DesignMatrix> {
        if matrix.columns != self.columns {
            return Err(schema_mismatch(&self.columns, &matrix.columns));
        }
        let n = matrix.n_rows();
        let p = matrix.n_cols();
        let mut data = Array2::<f64>::zeros((n, p + self.indicator_columns.len()));
        for i in 0..n {
            for j in 0..p {
                let v = matrix.data[[i, j]];
                data[[i, j]] = if v.is_nan() { self.medians[j] } else { v };
            }
            for (k, &j) in self.indicator_columns.iter().enumerate() {
                data[[i, p + k]] = if matrix.data[[i, j]].is_nan() { 1.0 } else { 0.0 };
            }
        }
        let mut columns = matrix.columns.clone();
        columns.extend(
            self.indicator_columns
                .iter()
                .map(|&j| format!("{}_missing", self.columns[j])),
        );
        Ok(DesignMatrix {
            columns,
            row_ids: matrix.row_ids.clone(),
            data,
            reference_levels: matrix.reference_levels.clone(),
        })
    }
}

fn check_fully_missing(matrix: &DesignMatrix) -> Result<()> {
    if matrix.n_rows() == 0 {
        return Ok(());
    }
    for (j, col) in matrix.data.columns().into_iter().enumerate() {
        if col.iter().all(|v| v.is_nan()) {
            return Err(Error::invalid(format!(
                "column '{}' is entirely missing",
                matrix.columns[j]
            )));
        }
    }
    Ok(())
}

pub(crate) fn schema_mismatch(expected: &[String], got: &[String]) -> Error {
    let exp: BTreeSet<&String> = expected.iter().collect();
    let have: BTreeSet<&String> = got.iter().collect();
    Error::SchemaMismatch {
        missing: exp.difference(&have).map(|s| s.to_string()).collect(),
        extra: have.difference(&exp).map(|s| s.to_string()).collect(),
    }
}

pub fn impute_missing(matrix: &DesignMatrix, strategy: ImputeStrategy) -> Result<DesignMatrix> {
    match strategy {
        ImputeStrategy::Drop => {
            check_fully_missing(matrix)?;
            let keep: Vec<usize> = (0..matrix.n_rows())
                .filter(|&i| matrix.data.row(i).iter().all(|v| !v.is_nan()))
                .collect();
            Ok(matrix.select_rows(&keep))
        }
        ImputeStrategy::MedianPlusIndicator => Imputer::fit(matrix)?.apply(matrix),
    }
}
