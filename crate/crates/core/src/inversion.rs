//! Bill classification by inverting class-conditional CBOW language models.
//!
//! Each (chamber, outcome) cell gets a body model and a title model. A
//! sentence is scored under the enacted and failed models of the bill's
//! chamber and Bayes' rule with the chamber prior turns the two likelihoods
//! into a posterior. A bill's probability is the mean sentence posterior.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_text, split_sentences, tokenize, BillRecord, Chamber, Outcome, SnapshotPolicy};
use crate::embeddings::{load_model, save_model, train_cbow, EmbeddingConfig, EmbeddingModel};
use crate::util::{derive_seed, logit, sigmoid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Body,
    Title,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Body, Channel::Title];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Body => "body",
            Channel::Title => "title",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "body" => Some(Channel::Body),
            "title" => Some(Channel::Title),
            _ => None,
        }
    }
}

/// Per-chamber enactment priors for one predicted congress.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorTable {
    pub predicted_congress: u32,
    pub house: f64,
    pub senate: f64,
    pub n_house: usize,
    pub n_senate: usize,
}

impl PriorTable {
    pub fn prior(&self, chamber: Chamber) -> f64 {
        match chamber {
            Chamber::House => self.house,
            Chamber::Senate => self.senate,
        }
    }
}

/// Enacted fraction per chamber over bills from congresses before
/// `predicted_congress`; later bills are ignored. Priors are clamped to
/// `[1/(2n), 1 - 1/(2n)]`.
pub fn compute_priors(history: &[BillRecord], predicted_congress: u32) -> Result<PriorTable> {
    let mut tallies = BTreeMap::new();
    for b in history.iter().filter(|b| b.congress < predicted_congress) {
        let e = tallies.entry(b.chamber).or_insert((0usize, 0usize));
        e.0 += 1;
        e.1 += usize::from(b.outcome.is_enacted());
    }
    let prior = |c: Chamber| -> Result<(f64, usize)> {
        let &(n, k) = tallies
            .get(&c)
            .ok_or_else(|| Error::EmptyCell(format!("no {} bills before congress {predicted_congress}", c.as_str())))?;
        let eps = 1.0 / (2.0 * n as f64);
        Ok(((k as f64 / n as f64).clamp(eps, 1.0 - eps), n))
    };
    let (house, n_house) = prior(Chamber::House)?;
    let (senate, n_senate) = prior(Chamber::Senate)?;
    Ok(PriorTable {
        predicted_congress,
        house,
        senate,
        n_house,
        n_senate,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub embedding: EmbeddingConfig,
    /// Divide each sentence log-likelihood by its number of scored positions.
    pub length_normalize: bool,
}

/// Tokenized sentences of the policy-selected snapshot.
pub fn body_sentences(bill: &BillRecord, policy: SnapshotPolicy) -> Vec<Vec<String>> {
    let text = normalize_text(&bill.select_snapshot(policy).raw_text);
    split_sentences(&text).iter().map(|s| tokenize(s)).collect()
}

/// The title is treated as a single sentence.
pub fn title_tokens(bill: &BillRecord) -> Vec<String> {
    tokenize(&normalize_text(&bill.title))
}

pub type CellKey = (Chamber, Outcome);

#[derive(Clone, Debug)]
pub struct InversionClassifier {
    pub config: InversionConfig,
    pub policy: SnapshotPolicy,
    pub priors: PriorTable,
    pub body: BTreeMap<CellKey, EmbeddingModel>,
    pub title: BTreeMap<CellKey, EmbeddingModel>,
}

/// Score of one bill on one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct BillScore {
    pub probability: f64,
    /// `None` marks a sentence with no scoreable position.
    pub sentence_posteriors: Vec<Option<f64>>,
    /// The text was empty after normalization, so the prior was returned.
    pub empty_text: bool,
}

impl BillScore {
    /// Sentence posteriors with the prior substituted for unscoreable sentences.
    pub fn filled_posteriors(&self, prior: f64) -> Vec<f64> {
        self.sentence_posteriors.iter().map(|p| p.unwrap_or(prior)).collect()
    }
}

fn cell_label(chamber: Chamber, outcome: Outcome) -> String {
    format!("{}_{}", chamber.as_str(), outcome.as_str())
}

/// Trains the eight cell models on the policy-selected texts. Priors come
/// from the training bills for the congress after the latest one seen.
pub fn fit_inversion(
    bills: &[BillRecord],
    policy: SnapshotPolicy,
    config: &InversionConfig,
) -> Result<InversionClassifier> {
    let latest = bills
        .iter()
        .map(|b| b.congress)
        .max()
        .ok_or_else(|| Error::invalid("no training bills for the inversion classifier"))?;
    let priors = compute_priors(bills, latest + 1)?;

    let mut jobs = Vec::new();
    for chamber in Chamber::ALL {
        for outcome in Outcome::ALL {
            let cell: Vec<&BillRecord> = bills
                .iter()
                .filter(|b| b.chamber == chamber && b.outcome == outcome)
                .collect();
            if cell.is_empty() {
                return Err(Error::EmptyCell(cell_label(chamber, outcome)));
            }
            for channel in Channel::ALL {
                jobs.push((chamber, outcome, channel, cell.clone()));
            }
        }
    }
    let trained: Vec<(CellKey, Channel, EmbeddingModel)> = jobs
        .into_par_iter()
        .map(|(chamber, outcome, channel, cell)| {
            let sentences: Vec<Vec<String>> = match channel {
                Channel::Body => cell.iter().flat_map(|b| body_sentences(b, policy)).collect(),
                Channel::Title => cell.iter().map(|b| title_tokens(b)).collect(),
            };
            let label = format!("inversion/{}/{}", cell_label(chamber, outcome), channel.as_str());
            let cfg = EmbeddingConfig {
                seed: derive_seed(config.embedding.seed, &label),
                ..config.embedding.clone()
            };
            let model = train_cbow(&sentences, &cfg).map_err(|e| Error::invalid(format!("{label}: {e}")))?;
            Ok(((chamber, outcome), channel, model))
        })
        .collect::<Result<_>>()?;

    let mut body = BTreeMap::new();
    let mut title = BTreeMap::new();
    for (key, channel, model) in trained {
        match channel {
            Channel::Body => body.insert(key, model),
            Channel::Title => title.insert(key, model),
        };
    }
    Ok(InversionClassifier {
        config: config.clone(),
        policy,
        priors,
        body,
        title,
    })
}

/// Bayes' rule in log-odds form.
pub fn posterior_from_likelihoods(prior: f64, ll_enacted: f64, ll_failed: f64) -> f64 {
    let delta = ll_enacted - ll_failed;
    // logit then sigmoid does not round-trip exactly
    if delta == 0.0 {
        return prior;
    }
    sigmoid(logit(prior) + delta)
}

/// Sentence log-likelihoods under two models over their shared vocabulary.
/// Tokens missing from either vocabulary are dropped before contexts are
/// formed; `None` when no position has a context.
pub fn shared_log_likelihoods<S: AsRef<str>>(
    enacted: &EmbeddingModel,
    failed: &EmbeddingModel,
    tokens: &[S],
) -> Option<(f64, f64, usize)> {
    let mut ids_e = Vec::with_capacity(tokens.len());
    let mut ids_f = Vec::with_capacity(tokens.len());
    for t in tokens {
        if let (Some(e), Some(f)) = (enacted.vocab.get(t.as_ref()), failed.vocab.get(t.as_ref())) {
            ids_e.push(e);
            ids_f.push(f);
        }
    }
    let window = enacted.config.window;
    let (mut le, mut lf, mut n) = (0.0, 0.0, 0usize);
    let mut ctx_e = Vec::new();
    let mut ctx_f = Vec::new();
    for pos in 0..ids_e.len() {
        let lo = pos.saturating_sub(window);
        let hi = (pos + window + 1).min(ids_e.len());
        ctx_e.clear();
        ctx_f.clear();
        for j in (lo..hi).filter(|&j| j != pos) {
            ctx_e.push(ids_e[j]);
            ctx_f.push(ids_f[j]);
        }
        if let (Some(a), Some(b)) = (
            enacted.log_prob_ids(&ctx_e, ids_e[pos]),
            failed.log_prob_ids(&ctx_f, ids_f[pos]),
        ) {
            le += a;
            lf += b;
            n += 1;
        }
    }
    (n > 0).then_some((le, lf, n))
}

impl InversionClassifier {
    pub fn models(&self, channel: Channel) -> &BTreeMap<CellKey, EmbeddingModel> {
        match channel {
            Channel::Body => &self.body,
            Channel::Title => &self.title,
        }
    }

    pub fn model(&self, chamber: Chamber, outcome: Outcome, channel: Channel) -> &EmbeddingModel {
        &self.models(channel)[&(chamber, outcome)]
    }

    /// Posterior probability of enactment for one sentence, or `None` when
    /// nothing in it can be scored by both class models.
    pub fn sentence_posterior<S: AsRef<str>>(&self, chamber: Chamber, tokens: &[S], channel: Channel) -> Option<f64> {
        let enacted = self.model(chamber, Outcome::Enacted, channel);
        let failed = self.model(chamber, Outcome::Failed, channel);
        let (mut le, mut lf, n) = shared_log_likelihoods(enacted, failed, tokens)?;
        if self.config.length_normalize {
            le /= n as f64;
            lf /= n as f64;
        }
        Some(posterior_from_likelihoods(self.priors.prior(chamber), le, lf))
    }

    /// Mean sentence posterior; unscoreable sentences contribute the prior.
    pub fn bill_probability(&self, bill: &BillRecord, policy: SnapshotPolicy, channel: Channel) -> BillScore {
        let sentences = match channel {
            Channel::Body => body_sentences(bill, policy),
            Channel::Title => vec![title_tokens(bill)],
        };
        self.score_sentences(bill.chamber, &sentences, channel)
    }

    pub fn score_sentences(&self, chamber: Chamber, sentences: &[Vec<String>], channel: Channel) -> BillScore {
        let prior = self.priors.prior(chamber);
        let sentences: Vec<&Vec<String>> = sentences.iter().filter(|s| !s.is_empty()).collect();
        if sentences.is_empty() {
            return BillScore {
                probability: prior,
                sentence_posteriors: Vec::new(),
                empty_text: true,
            };
        }
        let posts: Vec<Option<f64>> = sentences
            .iter()
            .map(|s| self.sentence_posterior(chamber, s, channel))
            .collect();
        let probability = posts.iter().map(|p| p.unwrap_or(prior)).sum::<f64>() / posts.len() as f64;
        BillScore {
            probability,
            sentence_posteriors: posts,
            empty_text: false,
        }
    }

    /// Scores many bills in parallel; output order follows the input.
    pub fn score_bills(&self, bills: &[BillRecord], policy: SnapshotPolicy, channel: Channel) -> Vec<BillScore> {
        bills
            .par_iter()
            .map(|b| self.bill_probability(b, policy, channel))
            .collect()
    }

    /// Writes the eight models and a JSON description into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| Error::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        for channel in Channel::ALL {
            for ((chamber, outcome), model) in self.models(channel) {
                let name = format!("{}_{}.vec", channel.as_str(), cell_label(*chamber, *outcome));
                save_model(model, &dir.join(name))?;
            }
        }
        let meta = serde_json::json!({
            "format": "LAWCAST-INVERSION v1",
            "config": self.config,
            "policy": self.policy.as_str(),
            "priors": self.priors,
        });
        fs::write(dir.join("inversion.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("inversion.json");
        let text = fs::read_to_string(&path).map_err(|source| Error::Read {
            path: path.clone(),
            source,
        })?;
        let meta: serde_json::Value = serde_json::from_str(&text)?;
        let bad = |reason: &str| Error::Format {
            path: path.clone(),
            reason: reason.to_string(),
        };
        if meta["format"] != "LAWCAST-INVERSION v1" {
            return Err(bad("unknown format tag"));
        }
        let config: InversionConfig = serde_json::from_value(meta["config"].clone())?;
        let priors: PriorTable = serde_json::from_value(meta["priors"].clone())?;
        let policy = meta["policy"]
            .as_str()
            .and_then(SnapshotPolicy::parse)
            .ok_or_else(|| bad("missing snapshot policy"))?;
        let mut body = BTreeMap::new();
        let mut title = BTreeMap::new();
        for channel in Channel::ALL {
            for chamber in Chamber::ALL {
                for outcome in Outcome::ALL {
                    let name = format!("{}_{}.vec", channel.as_str(), cell_label(chamber, outcome));
                    let model = load_model(&dir.join(name))?;
                    match channel {
                        Channel::Body => body.insert((chamber, outcome), model),
                        Channel::Title => title.insert((chamber, outcome), model),
                    };
                }
            }
        }
        Ok(InversionClassifier {
            config,
            policy,
            priors,
            body,
            title,
        })
    }
}

/// Words in both vocabularies of a chamber's class pair.
pub fn shared_vocabulary(a: &EmbeddingModel, b: &EmbeddingModel) -> HashSet<String> {
    a.vocab.words.iter().filter(|w| b.vocab.contains(w)).cloned().collect()
}

/// One row of the per-bill score export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub bill_id: String,
    pub congress: u32,
    pub chamber: Chamber,
    pub channel: Channel,
    pub policy: SnapshotPolicy,
    pub probability: f64,
}

/// Writes `bill_id,congress,chamber,channel,policy,probability` rows and a
/// sentence sidecar `bill_id,sentence_index,posterior`.
pub fn write_scores(path: &Path, sidecar: &Path, rows: &[ScoreRow], sentences: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(sidecar)?;
    w.write_record(["bill_id", "sentence_index", "posterior"])?;
    for (id, posts) in sentences {
        for (i, p) in posts.iter().enumerate() {
            w.write_record([id.as_str(), &i.to_string(), &p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
