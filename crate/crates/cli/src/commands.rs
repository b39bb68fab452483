//! One function per subcommand. Each returns the files it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde::{Deserialize, Serialize};

use lawcast::corpus::{
    generate_synthetic_corpus, ingest_bills, read_bills, write_bills_jsonl, write_rejections, BillFormat, BillRecord,
    Chamber, Outcome, SnapshotPolicy,
};
use lawcast::embeddings::{most_similar, SimilarityQuery};
use lawcast::evaluation::{
    comparison_table, improvement_over_null, metrics_table, probability_distribution, subject_table, walk_forward,
    write_csv, ModelSpec, PredictionRow, TrainedSystem,
};
use lawcast::features::CommitteeMembership;
use lawcast::insights::{sentence_curves, synthetic_summary, BillPosteriors};
use lawcast::inversion::{body_sentences, title_tokens, Channel};
use lawcast::sensitivity::{bootstrap_prcc, build_sensitivity_design};

use crate::config::{usage, RunConfig};

/// Files written plus extra facts for the manifest.
#[derive(Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub notes: BTreeMap<String, serde_json::Value>,
}

fn create_out(config: &RunConfig) -> anyhow::Result<PathBuf> {
    let out = config.out_dir()?;
    fs::create_dir_all(&out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    Ok(out)
}

fn load_bills(config: &RunConfig, key: &str) -> anyhow::Result<Vec<BillRecord>> {
    let path = config.input(key)?;
    Ok(read_bills(&path)?)
}

fn load_membership(config: &RunConfig) -> anyhow::Result<CommitteeMembership> {
    let committees = config.input("committees")?;
    let composition = match config.opt::<String>("composition")? {
        Some(_) => Some(config.input("composition")?),
        None => None,
    };
    Ok(CommitteeMembership::read(&committees, composition.as_deref())?)
}

fn load_system(config: &RunConfig) -> anyhow::Result<TrainedSystem> {
    let dir = config.input("system")?;
    Ok(TrainedSystem::load(&dir)?)
}

pub fn ingest(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let input = config.input("bills")?;
    let out = create_out(config)?;
    let report = ingest_bills(&input, BillFormat::from_path(&input))?;
    let bills_path = out.join("bills.jsonl");
    let rej_path = out.join("rejections.csv");
    write_bills_jsonl(&bills_path, &report.bills)?;
    write_rejections(&rej_path, &report.rejections)?;
    let mut o = RunOutput {
        files: vec![bills_path, rej_path],
        ..Default::default()
    };
    o.notes.insert("accepted".into(), report.bills.len().into());
    o.notes.insert("rejected".into(), report.rejections.len().into());
    Ok(o)
}

pub fn synth(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let spec = config.synthetic_spec()?;
    let out = create_out(config)?;
    let corpus = generate_synthetic_corpus(config.get("seed")?, &spec)?;
    let bills = out.join("bills.jsonl");
    let committees = out.join("committees.csv");
    let composition = out.join("composition.csv");
    write_bills_jsonl(&bills, &corpus.bills)?;
    corpus.committees().write(&committees, &composition)?;
    let mut o = RunOutput {
        files: vec![bills, committees, composition],
        ..Default::default()
    };
    o.notes.insert("bills".into(), corpus.bills.len().into());
    Ok(o)
}

fn target_congress(config: &RunConfig, bills: &[BillRecord]) -> anyhow::Result<u32> {
    match config.opt("target_congress")? {
        Some(t) => Ok(t),
        None => bills
            .iter()
            .map(|b| b.congress + 1)
            .max()
            .ok_or_else(|| usage("the bills file is empty")),
    }
}

pub fn train(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let bills = load_bills(config, "bills")?;
    let membership = load_membership(config)?;
    let out = create_out(config)?;
    let target = target_congress(config, &bills)?;
    let system = TrainedSystem::fit(
        &bills,
        &membership,
        config.model()?,
        config.policy()?,
        target,
        &config.walk_forward()?,
    )?;
    let dir = out.join("system");
    system.save(&dir)?;
    let mut o = RunOutput {
        files: vec![dir],
        ..Default::default()
    };
    o.notes.insert("target_congress".into(), target.into());
    Ok(o)
}

#[derive(Serialize)]
struct PredictOut<'a> {
    bill_id: &'a str,
    congress: u32,
    chamber: Chamber,
    model: ModelSpec,
    policy: SnapshotPolicy,
    probability: f64,
}

pub fn predict(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let system = load_system(config)?;
    let bills = load_bills(config, "bills")?;
    let history = match config.opt::<String>("history")? {
        Some(_) => load_bills(config, "history")?,
        None => bills.clone(),
    };
    let membership = load_membership(config)?;
    let out = create_out(config)?;
    let probs = system.predict(&bills, &membership, &history)?;
    let rows: Vec<PredictOut> = bills
        .iter()
        .zip(probs)
        .map(|(b, probability)| PredictOut {
            bill_id: &b.bill_id,
            congress: b.congress,
            chamber: b.chamber,
            model: system.model,
            policy: system.policy,
            probability,
        })
        .collect();
    let path = out.join("predictions.csv");
    write_csv(&path, &rows)?;
    Ok(RunOutput {
        files: vec![path],
        ..Default::default()
    })
}

#[derive(Serialize, Deserialize)]
struct PosteriorRow {
    bill_id: String,
    congress: u32,
    outcome: Outcome,
    policy: SnapshotPolicy,
    sentence: usize,
    posterior: f64,
}

pub fn walkforward(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let bills = load_bills(config, "bills")?;
    let membership = load_membership(config)?;
    let models = config.models()?;
    let wf = config.walk_forward()?;
    let out = create_out(config)?;
    let outcomes: BTreeMap<&str, Outcome> = bills.iter().map(|b| (b.bill_id.as_str(), b.outcome)).collect();
    let mut o = RunOutput::default();
    let mut all_rows = Vec::new();
    for policy in config.policies()? {
        log::info!("walk-forward with {} snapshots", policy.as_str());
        let result = walk_forward(&bills, &membership, &models, policy, &wf)?;
        result.check_no_leakage(&bills)?;
        let pred_path = out.join(format!("predictions_{}.csv", policy.as_str()));
        write_csv(&pred_path, &result.predictions)?;
        o.files.push(pred_path);
        if !result.sentence_posteriors.is_empty() {
            let rows: Vec<PosteriorRow> = result
                .sentence_posteriors
                .iter()
                .flat_map(|(id, congress, posts)| {
                    let outcome = outcomes[id.as_str()];
                    posts.iter().enumerate().map(move |(i, &posterior)| PosteriorRow {
                        bill_id: id.clone(),
                        congress: *congress,
                        outcome,
                        policy,
                        sentence: i + 1,
                        posterior,
                    })
                })
                .collect();
            let post_path = out.join(format!("sentence_posteriors_{}.csv", policy.as_str()));
            write_csv(&post_path, &rows)?;
            o.files.push(post_path);
        }
        o.notes.insert(
            format!("test_congresses_{}", policy.as_str()),
            serde_json::to_value(&result.test_congresses)?,
        );
        all_rows.extend(result.predictions);
    }
    let metrics_path = out.join("metrics.csv");
    write_csv(&metrics_path, &metrics_table(&all_rows, config.get("eval.clip")?)?)?;
    o.files.push(metrics_path);
    Ok(o)
}

fn files_with_prefix(dir: &Path, prefix: &str) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(prefix) && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| usage(format!("malformed {}: {e}", path.display())))
}

pub fn evaluate(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let dir = config.input("predictions")?;
    let clip: bool = config.get("eval.clip")?;
    let out = create_out(config)?;
    let mut rows: Vec<PredictionRow> = Vec::new();
    let pred_files = files_with_prefix(&dir, "predictions_")?;
    if pred_files.is_empty() {
        return Err(usage(format!("no predictions_*.csv files in {}", dir.display())));
    }
    for f in &pred_files {
        rows.extend(read_rows::<PredictionRow>(f)?);
    }
    let mut o = RunOutput::default();
    let metrics = metrics_table(&rows, clip)?;
    let mut emit = |name: &str, write: &dyn Fn(&Path) -> lawcast::Result<()>| -> anyhow::Result<()> {
        let path = out.join(name);
        write(&path)?;
        o.files.push(path);
        Ok(())
    };
    emit("metrics.csv", &|p| write_csv(p, &metrics))?;
    let comparison = comparison_table(&rows, clip)?;
    emit("comparison.csv", &|p| write_csv(p, &comparison))?;
    emit("improvement.csv", &|p| write_csv(p, &improvement_over_null(&metrics)))?;
    let subjects = subject_table(&rows)?;
    emit("error_by_subject.csv", &|p| write_csv(p, &subjects))?;
    let bins: usize = config.get("eval.bins")?;
    emit("probability_distribution.csv", &|p| {
        write_csv(p, &probability_distribution(&rows, bins))
    })?;

    let post_files = files_with_prefix(&dir, "sentence_posteriors_")?;
    if !post_files.is_empty() {
        let mut bills: Vec<BillPosteriors> = Vec::new();
        for f in &post_files {
            let mut current: Option<(String, BillPosteriors)> = None;
            for r in read_rows::<PosteriorRow>(f)? {
                match &mut current {
                    Some((id, b)) if *id == r.bill_id => b.posteriors.push(r.posterior),
                    _ => {
                        if let Some((_, b)) = current.take() {
                            bills.push(b);
                        }
                        current = Some((
                            r.bill_id,
                            BillPosteriors {
                                outcome: r.outcome,
                                policy: r.policy,
                                posteriors: vec![r.posterior],
                            },
                        ));
                    }
                }
            }
            bills.extend(current.map(|(_, b)| b));
        }
        let curves = sentence_curves(&bills, config.get("curves.n")?, config.get("curves.span")?)?;
        let path = out.join("sentence_curves.csv");
        curves.write_csv(&path)?;
        o.files.push(path);
        o.notes.insert("curve_bills_excluded".into(), curves.excluded.into());
    }
    Ok(o)
}

fn query(config: &RunConfig) -> anyhow::Result<SimilarityQuery> {
    let positives = config.list("similar.positives");
    let negatives = config.list("similar.negatives");
    if positives.is_empty() && negatives.is_empty() {
        return Err(usage(
            "give query words with --similar.positives=a,b and/or --similar.negatives=c",
        ));
    }
    Ok(SimilarityQuery::new(
        positives,
        negatives,
        config.get("similar.n")?,
        config.get("similar.k")?,
    ))
}

fn channel(config: &RunConfig) -> anyhow::Result<Channel> {
    let s = config.raw("similar.channel");
    Channel::parse(s).ok_or_else(|| usage(format!("invalid channel '{s}'; use body or title")))
}

#[derive(Serialize)]
struct SimilarRow {
    rank: usize,
    word: String,
    cosine: f64,
}

pub fn similar(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let system = load_system(config)?;
    let clf = system
        .classifier
        .as_ref()
        .ok_or_else(|| usage("the system has no language models; train a text, title or combined model"))?;
    let chamber = Chamber::parse(config.raw("similar.chamber"))
        .ok_or_else(|| usage(format!("invalid chamber '{}'", config.raw("similar.chamber"))))?;
    let outcome = Outcome::parse(config.raw("similar.outcome"))
        .ok_or_else(|| usage(format!("invalid outcome '{}'", config.raw("similar.outcome"))))?;
    let q = query(config)?;
    let out = create_out(config)?;
    let rows: Vec<SimilarRow> = most_similar(clf.model(chamber, outcome, channel(config)?), &q)?
        .into_iter()
        .enumerate()
        .map(|(i, (word, cosine))| SimilarRow {
            rank: i + 1,
            word,
            cosine,
        })
        .collect();
    let path = out.join("similar.csv");
    write_csv(&path, &rows)?;
    Ok(RunOutput {
        files: vec![path],
        ..Default::default()
    })
}

pub fn summary(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let system = load_system(config)?;
    let clf = system
        .classifier
        .as_ref()
        .ok_or_else(|| usage("the system has no language models; train a text, title or combined model"))?;
    let out = create_out(config)?;
    let s = synthetic_summary(clf, channel(config)?, &query(config)?)?;
    let path = out.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&s)? + "\n")?;
    Ok(RunOutput {
        files: vec![path],
        ..Default::default()
    })
}

pub fn sensitivity(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let system = load_system(config)?;
    let bills = load_bills(config, "bills")?;
    let membership = load_membership(config)?;
    let start = config
        .opt("sensitivity.start")?
        .unwrap_or(config.get("plan.base_start")?);
    let end = config.opt("sensitivity.end")?.unwrap_or(system.target_congress - 1);
    if start > end {
        return Err(usage(format!("sensitivity range {start}-{end} is empty")));
    }
    let out = create_out(config)?;
    let design = build_sensitivity_design(&bills, &membership, &system, start..=end)?;
    let report = bootstrap_prcc(
        &design.matrix,
        &design.output,
        config.get("sensitivity.replicates")?,
        config.get("sensitivity.level")?,
        lawcast::util::derive_seed(config.get("seed")?, "sensitivity"),
    )?;
    let path = out.join("prcc.csv");
    report.write_csv(&path)?;
    let mut o = RunOutput {
        files: vec![path],
        ..Default::default()
    };
    o.notes.insert("n".into(), report.n.into());
    o.notes.insert("n_dropped".into(), design.n_dropped.into());
    o.notes.insert("skipped".into(), serde_json::to_value(&report.skipped)?);
    o.notes
        .insert("degenerate".into(), serde_json::to_value(&report.degenerate)?);
    o.notes.insert("jittered".into(), report.jittered.into());
    Ok(o)
}

#[derive(Serialize)]
struct ProfileRow {
    congress: u32,
    chamber: Chamber,
    n_bills: usize,
    n_enacted: usize,
    enactment_rate: f64,
    mean_sentences: f64,
    mean_tokens: f64,
    mean_title_tokens: f64,
    mean_snapshots: f64,
}

/// Corpus summary by congress and chamber.
pub fn profile(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let bills = load_bills(config, "bills")?;
    let policy = config.policy()?;
    let out = create_out(config)?;
    let mut groups: BTreeMap<(u32, Chamber), Vec<&BillRecord>> = BTreeMap::new();
    for b in &bills {
        groups.entry((b.congress, b.chamber)).or_default().push(b);
    }
    let rows: Vec<ProfileRow> = groups
        .into_iter()
        .map(|((congress, chamber), bs)| {
            let n = bs.len() as f64;
            let n_enacted = bs.iter().filter(|b| b.outcome.is_enacted()).count();
            let sentences: Vec<Vec<Vec<String>>> = bs.iter().map(|b| body_sentences(b, policy)).collect();
            ProfileRow {
                congress,
                chamber,
                n_bills: bs.len(),
                n_enacted,
                enactment_rate: n_enacted as f64 / n,
                mean_sentences: sentences.iter().map(|s| s.len() as f64).sum::<f64>() / n,
                mean_tokens: sentences.iter().flatten().map(|s| s.len() as f64).sum::<f64>() / n,
                mean_title_tokens: bs.iter().map(|b| title_tokens(b).len() as f64).sum::<f64>() / n,
                mean_snapshots: bs.iter().map(|b| b.snapshots.len() as f64).sum::<f64>() / n,
            }
        })
        .collect();
    let path = out.join("profile.csv");
    write_csv(&path, &rows)?;
    let mut o = RunOutput {
        files: vec![path],
        ..Default::default()
    };
    o.notes.insert("bills".into(), bills.len().into());
    Ok(o)
}
