//! Walk-forward training and prediction over congresses.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{BillRecord, Chamber, SnapshotPolicy};
use crate::ensemble::{stacked_fit, StackConfig, StackedEnsemble};
use crate::features::{
    build_features, CommitteeMembership, ContextFeatures, DesignSchema, FeatureConfig, History, Imputer, TextScores,
};
use crate::inversion::{compute_priors, fit_inversion, Channel, InversionClassifier, InversionConfig, PriorTable};
use crate::util::derive_seed;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSpec {
    /// Chamber enactment rate of earlier congresses.
    Null,
    /// Stacked ensemble on contextual predictors.
    Context,
    /// Inverted body-text language models.
    Text,
    /// Inverted title language models.
    Title,
    /// Stacked ensemble on contextual predictors plus both text scores.
    Combined,
}

impl ModelSpec {
    pub const ALL: [ModelSpec; 5] = [
        ModelSpec::Null,
        ModelSpec::Context,
        ModelSpec::Text,
        ModelSpec::Title,
        ModelSpec::Combined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelSpec::Null => "null",
            ModelSpec::Context => "context",
            ModelSpec::Text => "text",
            ModelSpec::Title => "title",
            ModelSpec::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ModelSpec::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn uses_inversion(self) -> bool {
        matches!(self, ModelSpec::Text | ModelSpec::Title | ModelSpec::Combined)
    }

    pub fn uses_ensemble(self) -> bool {
        matches!(self, ModelSpec::Context | ModelSpec::Combined)
    }
}

/// Language models train from `lm_start`, the ensemble from `base_start`,
/// and congresses `test_start..=test_end` are predicted one at a time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardPlan {
    pub lm_start: u32,
    pub base_start: u32,
    pub test_start: u32,
    /// Defaults to the latest congress in the corpus.
    pub test_end: Option<u32>,
}

impl Default for WalkForwardPlan {
    fn default() -> Self {
        WalkForwardPlan {
            lm_start: 103,
            base_start: 104,
            test_start: 107,
            test_end: None,
        }
    }
}

impl WalkForwardPlan {
    /// Test congresses present in `bills`; errors name the first feasible one.
    pub fn test_congresses(&self, bills: &[BillRecord]) -> Result<Vec<u32>> {
        if !(self.lm_start < self.base_start && self.base_start < self.test_start) {
            return Err(Error::invalid("plan needs lm_start < base_start < test_start"));
        }
        let present: BTreeSet<u32> = bills.iter().map(|b| b.congress).collect();
        // The earliest congress with both training ranges non-empty.
        let first_feasible = self.base_start + 1;
        if let Some(missing) = (self.lm_start..self.test_start).find(|c| !present.contains(c)) {
            log::warn!("congress {missing} is missing from the corpus");
            return Err(Error::InsufficientHistory(first_feasible));
        }
        let max = *present.iter().next_back().unwrap();
        let end = self.test_end.unwrap_or(max).min(max);
        let tests: Vec<u32> = (self.test_start..=end).filter(|c| present.contains(c)).collect();
        if tests.is_empty() {
            return Err(Error::InsufficientHistory(first_feasible));
        }
        Ok(tests)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkForwardConfig {
    pub plan: WalkForwardPlan,
    pub inversion: InversionConfig,
    pub stack: StackConfig,
    pub features: FeatureConfig,
    pub interactions: bool,
    pub seed: u64,
}

impl Default for WalkForwardConfig {
    fn default() -> Self {
        WalkForwardConfig {
            plan: WalkForwardPlan::default(),
            inversion: InversionConfig::default(),
            stack: StackConfig::default(),
            features: FeatureConfig::default(),
            interactions: true,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub bill_id: String,
    pub congress: u32,
    pub chamber: Chamber,
    pub subject: String,
    /// 1 for enacted, 0 for failed.
    pub outcome: u8,
    pub model: ModelSpec,
    pub policy: SnapshotPolicy,
    pub probability: f64,
}

/// Bookkeeping of one fitted component: which bills trained it and which
/// congress it predicted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub component: String,
    pub predicted_congress: u32,
    pub train_bill_ids: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct WalkForwardResult {
    pub test_congresses: Vec<u32>,
    pub predictions: Vec<PredictionRow>,
    /// Body-text sentence posteriors of test bills (prior for unscoreable sentences).
    pub sentence_posteriors: Vec<(String, u32, Vec<f64>)>,
    pub fits: Vec<FitRecord>,
}

impl WalkForwardResult {
    pub fn rows_for(&self, model: ModelSpec) -> Vec<&PredictionRow> {
        self.predictions.iter().filter(|r| r.model == model).collect()
    }

    /// Checks that no component was trained on a bill from the congress it predicted or later.
    pub fn check_no_leakage(&self, bills: &[BillRecord]) -> Result<()> {
        let congress: HashMap<&str, u32> = bills.iter().map(|b| (b.bill_id.as_str(), b.congress)).collect();
        for fit in &self.fits {
            for id in &fit.train_bill_ids {
                let c = congress.get(id.as_str()).copied().unwrap_or(0);
                if c >= fit.predicted_congress {
                    return Err(Error::invalid(format!(
                        "{} for congress {} was trained on {id} from congress {c}",
                        fit.component, fit.predicted_congress
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Contextual features for every bill, in input order.
pub fn corpus_features(
    bills: &[BillRecord],
    membership: &CommitteeMembership,
    policy: SnapshotPolicy,
    config: &FeatureConfig,
) -> Vec<ContextFeatures> {
    let history = History::new(membership, bills);
    bills
        .par_iter()
        .map(|b| build_features(b, membership, &history, policy, config))
        .collect()
}

/// Text scores of bills, each from a classifier trained on strictly earlier congresses.
#[derive(Default)]
struct TextCache {
    scores: HashMap<usize, TextScores>,
    body_posteriors: HashMap<usize, Vec<f64>>,
    fits: Vec<FitRecord>,
}

fn classifier_for(
    bills: &[BillRecord],
    congress: u32,
    policy: SnapshotPolicy,
    config: &WalkForwardConfig,
) -> Result<(InversionClassifier, FitRecord)> {
    let train: Vec<BillRecord> = bills
        .iter()
        .filter(|b| b.congress >= config.plan.lm_start && b.congress < congress)
        .cloned()
        .collect();
    let mut inv = config.inversion.clone();
    inv.embedding.seed = derive_seed(config.seed, &format!("walk/inversion/{congress}"));
    let clf = fit_inversion(&train, policy, &inv)?;
    let record = FitRecord {
        component: "inversion".into(),
        predicted_congress: congress,
        train_bill_ids: train.iter().map(|b| b.bill_id.clone()).collect(),
    };
    Ok((clf, record))
}

fn score_congresses(
    bills: &[BillRecord],
    congresses: &BTreeSet<u32>,
    keep_posteriors: &BTreeSet<u32>,
    policy: SnapshotPolicy,
    config: &WalkForwardConfig,
) -> Result<TextCache> {
    type Scored = (Vec<(usize, TextScores, Option<Vec<f64>>)>, FitRecord);
    let per: Vec<Scored> = congresses
        .par_iter()
        .map(|&c| {
            let (clf, record) = classifier_for(bills, c, policy, config)?;
            let idx: Vec<usize> = (0..bills.len()).filter(|&i| bills[i].congress == c).collect();
            let rows = idx
                .par_iter()
                .map(|&i| {
                    let b = &bills[i];
                    let body = clf.bill_probability(b, policy, Channel::Body);
                    let title = clf.bill_probability(b, policy, Channel::Title);
                    let posts = keep_posteriors
                        .contains(&c)
                        .then(|| body.filled_posteriors(clf.priors.prior(b.chamber)));
                    let scores = TextScores {
                        body: body.probability,
                        title: title.probability,
                    };
                    (i, scores, posts)
                })
                .collect();
            Ok((rows, record))
        })
        .collect::<Result<_>>()?;
    let mut cache = TextCache::default();
    for (rows, record) in per {
        for (i, s, posts) in rows {
            cache.scores.insert(i, s);
            if let Some(p) = posts {
                cache.body_posteriors.insert(i, p);
            }
        }
        cache.fits.push(record);
    }
    Ok(cache)
}

/// Column layout, imputer and stacked ensemble fitted together.
#[derive(Clone, Debug)]
pub struct EnsembleStage {
    pub schema: DesignSchema,
    pub imputer: Imputer,
    pub ensemble: StackedEnsemble,
}

impl EnsembleStage {
    pub fn fit(
        features: &[ContextFeatures],
        text: Option<&[TextScores]>,
        y: &[f64],
        config: &WalkForwardConfig,
        stack_seed: u64,
    ) -> Result<Self> {
        let schema = DesignSchema::fit(features, &config.features, text.is_some(), config.interactions);
        let raw = schema.expand(features, text)?;
        let imputer = Imputer::fit(&raw)?;
        let design = imputer.apply(&raw)?;
        let stack = StackConfig {
            seed: stack_seed,
            ..config.stack.clone()
        };
        let ensemble = stacked_fit(&design, y, &stack)?;
        Ok(EnsembleStage {
            schema,
            imputer,
            ensemble,
        })
    }

    pub fn predict(&self, features: &[ContextFeatures], text: Option<&[TextScores]>) -> Result<Vec<f64>> {
        let raw = self.schema.expand(features, text)?;
        let design = self.imputer.apply(&raw)?;
        self.ensemble.predict(&design)
    }
}

fn labels(bills: &[BillRecord], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| bills[i].outcome.as_label()).collect()
}

fn row(bill: &BillRecord, model: ModelSpec, policy: SnapshotPolicy, probability: f64) -> PredictionRow {
    PredictionRow {
        bill_id: bill.bill_id.clone(),
        congress: bill.congress,
        chamber: bill.chamber,
        subject: bill.subjects_top_term.clone(),
        outcome: u8::from(bill.outcome.is_enacted()),
        model,
        policy,
        probability,
    }
}

/// Trains on earlier congresses and predicts each test congress in turn.
pub fn walk_forward(
    bills: &[BillRecord],
    membership: &CommitteeMembership,
    models: &[ModelSpec],
    policy: SnapshotPolicy,
    config: &WalkForwardConfig,
) -> Result<WalkForwardResult> {
    let tests = config.plan.test_congresses(bills)?;
    let last = *tests.last().unwrap();
    let mut result = WalkForwardResult {
        test_congresses: tests.clone(),
        ..WalkForwardResult::default()
    };

    let mut score_set: BTreeSet<u32> = BTreeSet::new();
    if models.iter().any(|m| m.uses_inversion()) {
        score_set.extend(tests.iter().copied());
    }
    if models.contains(&ModelSpec::Combined) {
        score_set.extend(config.plan.base_start..=last);
    }
    let present: BTreeSet<u32> = bills.iter().map(|b| b.congress).collect();
    score_set.retain(|c| present.contains(c));
    let keep: BTreeSet<u32> = if models.contains(&ModelSpec::Text) {
        tests.iter().copied().collect()
    } else {
        BTreeSet::new()
    };
    let cache = score_congresses(bills, &score_set, &keep, policy, config)?;
    let features = if models.iter().any(|m| m.uses_ensemble()) {
        corpus_features(bills, membership, policy, &config.features)
    } else {
        Vec::new()
    };

    let jobs: Vec<(u32, ModelSpec)> = tests
        .iter()
        .flat_map(|&t| models.iter().map(move |&m| (t, m)))
        .collect();
    let outputs: Vec<(Vec<PredictionRow>, Option<FitRecord>)> = jobs
        .par_iter()
        .map(|&(t, model)| -> Result<_> {
            let test_idx: Vec<usize> = (0..bills.len()).filter(|&i| bills[i].congress == t).collect();
            match model {
                ModelSpec::Null => {
                    let history: Vec<BillRecord> = bills
                        .iter()
                        .filter(|b| b.congress >= config.plan.lm_start && b.congress < t)
                        .cloned()
                        .collect();
                    let priors = compute_priors(&history, t)?;
                    let rows = test_idx
                        .iter()
                        .map(|&i| row(&bills[i], model, policy, priors.prior(bills[i].chamber)))
                        .collect();
                    let fit = FitRecord {
                        component: "null".into(),
                        predicted_congress: t,
                        train_bill_ids: history.iter().map(|b| b.bill_id.clone()).collect(),
                    };
                    Ok((rows, Some(fit)))
                }
                ModelSpec::Text | ModelSpec::Title => {
                    let rows = test_idx
                        .iter()
                        .map(|&i| {
                            let s = cache.scores[&i];
                            let p = if model == ModelSpec::Text { s.body } else { s.title };
                            row(&bills[i], model, policy, p)
                        })
                        .collect();
                    Ok((rows, None))
                }
                ModelSpec::Context | ModelSpec::Combined => {
                    let train_idx: Vec<usize> = (0..bills.len())
                        .filter(|&i| bills[i].congress >= config.plan.base_start && bills[i].congress < t)
                        .collect();
                    let with_text = model == ModelSpec::Combined;
                    let pick = |idx: &[usize]| -> (Vec<ContextFeatures>, Option<Vec<TextScores>>) {
                        let f = idx.iter().map(|&i| features[i].clone()).collect();
                        let s = with_text.then(|| idx.iter().map(|&i| cache.scores[&i]).collect());
                        (f, s)
                    };
                    let (train_f, train_s) = pick(&train_idx);
                    let (test_f, test_s) = pick(&test_idx);
                    let seed = derive_seed(config.seed, &format!("walk/stack/{}/{t}", model.as_str()));
                    let stage =
                        EnsembleStage::fit(&train_f, train_s.as_deref(), &labels(bills, &train_idx), config, seed)?;
                    let probs = stage.predict(&test_f, test_s.as_deref())?;
                    let rows = test_idx
                        .iter()
                        .zip(probs)
                        .map(|(&i, p)| row(&bills[i], model, policy, p))
                        .collect();
                    let fit = FitRecord {
                        component: format!("ensemble/{}", model.as_str()),
                        predicted_congress: t,
                        train_bill_ids: train_idx.iter().map(|&i| bills[i].bill_id.clone()).collect(),
                    };
                    Ok((rows, Some(fit)))
                }
            }
        })
        .collect::<Result<_>>()?;

    for (rows, fit) in outputs {
        result.predictions.extend(rows);
        result.fits.extend(fit);
    }
    result.fits.extend(cache.fits);
    let mut posts: Vec<(usize, Vec<f64>)> = cache.body_posteriors.into_iter().collect();
    posts.sort_by_key(|(i, _)| *i);
    result.sentence_posteriors = posts
        .into_iter()
        .map(|(i, p)| (bills[i].bill_id.clone(), bills[i].congress, p))
        .collect();
    Ok(result)
}

/// A deployable model for one target congress, trained on everything before it.
#[derive(Clone, Debug)]
pub struct TrainedSystem {
    pub model: ModelSpec,
    pub policy: SnapshotPolicy,
    pub target_congress: u32,
    pub priors: PriorTable,
    pub classifier: Option<InversionClassifier>,
    pub stage: Option<EnsembleStage>,
    pub features: FeatureConfig,
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    format: String,
    model: ModelSpec,
    policy: SnapshotPolicy,
    target_congress: u32,
    priors: PriorTable,
    features: FeatureConfig,
    schema: Option<DesignSchema>,
    imputer: Option<Imputer>,
}

const SYSTEM_FORMAT: &str = "LAWCAST-SYSTEM v1";

impl TrainedSystem {
    /// Trains exactly what the walk-forward harness would use to predict
    /// `target_congress`.
    pub fn fit(
        bills: &[BillRecord],
        membership: &CommitteeMembership,
        model: ModelSpec,
        policy: SnapshotPolicy,
        target_congress: u32,
        config: &WalkForwardConfig,
    ) -> Result<Self> {
        let plan = &config.plan;
        if target_congress <= plan.base_start {
            return Err(Error::InsufficientHistory(plan.base_start + 1));
        }
        let history: Vec<BillRecord> = bills
            .iter()
            .filter(|b| b.congress >= plan.lm_start && b.congress < target_congress)
            .cloned()
            .collect();
        let priors = compute_priors(&history, target_congress)?;
        let classifier = if model.uses_inversion() {
            Some(classifier_for(bills, target_congress, policy, config)?.0)
        } else {
            None
        };
        let stage = if model.uses_ensemble() {
            let train_idx: Vec<usize> = (0..bills.len())
                .filter(|&i| bills[i].congress >= plan.base_start && bills[i].congress < target_congress)
                .collect();
            let features = corpus_features(bills, membership, policy, &config.features);
            let train_f: Vec<ContextFeatures> = train_idx.iter().map(|&i| features[i].clone()).collect();
            let text = if model == ModelSpec::Combined {
                let congresses: BTreeSet<u32> = train_idx.iter().map(|&i| bills[i].congress).collect();
                let cache = score_congresses(bills, &congresses, &BTreeSet::new(), policy, config)?;
                Some(train_idx.iter().map(|&i| cache.scores[&i]).collect::<Vec<_>>())
            } else {
                None
            };
            let seed = derive_seed(config.seed, &format!("walk/stack/{}/{target_congress}", model.as_str()));
            Some(EnsembleStage::fit(
                &train_f,
                text.as_deref(),
                &labels(bills, &train_idx),
                config,
                seed,
            )?)
        } else {
            None
        };
        Ok(TrainedSystem {
            model,
            policy,
            target_congress,
            priors,
            classifier,
            stage,
            features: config.features.clone(),
        })
    }

    /// Predicts `bills`; `history_bills` supplies sponsorship history for features.
    pub fn predict(
        &self,
        bills: &[BillRecord],
        membership: &CommitteeMembership,
        history_bills: &[BillRecord],
    ) -> Result<Vec<f64>> {
        let text = |channel: Channel| -> Result<Vec<f64>> {
            let clf = self
                .classifier
                .as_ref()
                .ok_or_else(|| Error::invalid("system has no inversion classifier"))?;
            Ok(clf
                .score_bills(bills, self.policy, channel)
                .into_iter()
                .map(|s| s.probability)
                .collect())
        };
        match self.model {
            ModelSpec::Null => Ok(bills.iter().map(|b| self.priors.prior(b.chamber)).collect()),
            ModelSpec::Text => text(Channel::Body),
            ModelSpec::Title => text(Channel::Title),
            ModelSpec::Context | ModelSpec::Combined => {
                let stage = self
                    .stage
                    .as_ref()
                    .ok_or_else(|| Error::invalid("system has no ensemble"))?;
                let history = History::new(membership, history_bills);
                let features: Vec<ContextFeatures> = bills
                    .iter()
                    .map(|b| build_features(b, membership, &history, self.policy, &self.features))
                    .collect();
                let scores = if self.model == ModelSpec::Combined {
                    let body = text(Channel::Body)?;
                    let title = text(Channel::Title)?;
                    Some(
                        body.into_iter()
                            .zip(title)
                            .map(|(body, title)| TextScores { body, title })
                            .collect::<Vec<_>>(),
                    )
                } else {
                    None
                };
                stage.predict(&features, scores.as_deref())
            }
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| Error::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let file = SystemFile {
            format: SYSTEM_FORMAT.into(),
            model: self.model,
            policy: self.policy,
            target_congress: self.target_congress,
            priors: self.priors.clone(),
            features: self.features.clone(),
            schema: self.stage.as_ref().map(|s| s.schema.clone()),
            imputer: self.stage.as_ref().map(|s| s.imputer.clone()),
        };
        fs::write(dir.join("system.json"), serde_json::to_string_pretty(&file)?)?;
        if let Some(clf) = &self.classifier {
            clf.save(&dir.join("inversion"))?;
        }
        if let Some(stage) = &self.stage {
            stage.ensemble.save(&dir.join("ensemble"))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("system.json");
        let text = fs::read_to_string(&path).map_err(|source| Error::Read {
            path: path.clone(),
            source,
        })?;
        let file: SystemFile = serde_json::from_str(&text)?;
        if file.format != SYSTEM_FORMAT {
            return Err(Error::Format {
                path,
                reason: format!("not tagged '{SYSTEM_FORMAT}'"),
            });
        }
        let classifier = if file.model.uses_inversion() {
            Some(InversionClassifier::load(&dir.join("inversion"))?)
        } else {
            None
        };
        let stage = match (file.schema, file.imputer) {
            (Some(schema), Some(imputer)) => Some(EnsembleStage {
                schema,
                imputer,
                ensemble: StackedEnsemble::load(&dir.join("ensemble"))?,
            }),
            _ => None,
        };
        Ok(TrainedSystem {
            model: file.model,
            policy: file.policy,
            target_congress: file.target_congress,
            priors: file.priors,
            classifier,
            stage,
            features: file.features,
        })
    }
}

/// Groups prediction rows by model for reporting.
pub fn by_model(rows: &[PredictionRow]) -> BTreeMap<ModelSpec, Vec<&PredictionRow>> {
    let mut out: BTreeMap<ModelSpec, Vec<&PredictionRow>> = BTreeMap::new();
    for r in rows {
        out.entry(r.model).or_default().push(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, SyntheticSpec};

    #[test]
    fn plan_arithmetic() {
        let spec = SyntheticSpec {
            bills_per_congress: 40,
            ..SyntheticSpec::default()
        };
        let corpus = generate_synthetic_corpus(3, &spec).unwrap();
        let plan = WalkForwardPlan::default();
        assert_eq!(plan.test_congresses(&corpus.bills).unwrap(), vec![107, 108, 109]);
        let short: Vec<BillRecord> = corpus.bills.iter().filter(|b| b.congress <= 105).cloned().collect();
        assert!(matches!(
            plan.test_congresses(&short),
            Err(Error::InsufficientHistory(_))
        ));
        let gap: Vec<BillRecord> = corpus.bills.iter().filter(|b| b.congress != 104).cloned().collect();
        assert!(plan.test_congresses(&gap).is_err());
    }

    #[test]
    fn model_names_round_trip() {
        for m in ModelSpec::ALL {
            assert_eq!(ModelSpec::parse(m.as_str()), Some(m));
        }
        assert_eq!(ModelSpec::parse("glm"), None);
    }
}
