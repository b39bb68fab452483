//! Flat `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lawcast::corpus::{SnapshotPolicy, SyntheticSpec};
use lawcast::embeddings::EmbeddingConfig;
use lawcast::ensemble::{BaseSpec, StackConfig};
use lawcast::evaluation::{ModelSpec, WalkForwardConfig, WalkForwardPlan};
use lawcast::features::FeatureConfig;
use lawcast::inversion::InversionConfig;
use lawcast::learners::{ElasticNetParams, ForestParams, GbmParams};

/// A bad flag, key or value. Reported with exit status 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Every recognised key with its default. An empty default means unset.
pub const KEYS: &[(&str, &str)] = &[
    ("bills", ""),
    ("committees", ""),
    ("composition", ""),
    ("history", ""),
    ("out", "out"),
    ("system", ""),
    ("predictions", ""),
    ("seed", "1"),
    ("threads", "1"),
    ("policy", "oldest"),
    ("model", "combined"),
    ("models", "null,context,text,title,combined"),
    ("target_congress", ""),
    ("synth.congress_start", "103"),
    ("synth.congress_end", "109"),
    ("synth.bills_per_congress", "2000"),
    ("synth.house_rate", "0.05"),
    ("synth.senate_rate", "0.05"),
    ("synth.topic_size", "40"),
    ("synth.overlap", "0.3"),
    ("synth.missing_sponsor_fraction", "0"),
    ("synth.hard_subject", ""),
    ("emb.dim", "100"),
    ("emb.window", "5"),
    ("emb.epochs", "5"),
    ("emb.learning_rate", "0.025"),
    ("emb.min_count", "5"),
    ("inversion.length_normalize", "false"),
    ("plan.lm_start", "103"),
    ("plan.base_start", "104"),
    ("plan.test_start", "107"),
    ("plan.test_end", ""),
    ("features.interactions", "true"),
    ("features.leadership_codes", "1,2,3,4,5,6,7,8,9,10,11"),
    ("stack.k_folds", "5"),
    ("stack.bases", "gbm,forest,elastic_net"),
    ("gbm.n_stages", "200"),
    ("gbm.shrinkage", "0.05"),
    ("gbm.max_depth", "3"),
    ("gbm.min_leaf", "10"),
    ("gbm.subsample", "1"),
    ("forest.n_trees", "300"),
    ("forest.mtry", ""),
    ("forest.max_depth", ""),
    ("forest.min_leaf", "1"),
    ("enet.alpha", "0.5"),
    ("enet.lambda", "0.00001"),
    ("enet.max_iter", "1000"),
    ("enet.tol", "0.0000001"),
    ("meta.alpha", "0.5"),
    ("meta.lambda", "0.00001"),
    ("eval.clip", "false"),
    ("eval.bins", "20"),
    ("curves.n", "10"),
    ("curves.span", "0.75"),
    ("similar.positives", ""),
    ("similar.negatives", ""),
    ("similar.n", "10000"),
    ("similar.k", "10"),
    ("similar.channel", "body"),
    ("similar.chamber", "house"),
    ("similar.outcome", "enacted"),
    ("sensitivity.start", ""),
    ("sensitivity.end", ""),
    ("sensitivity.replicates", "1000"),
    ("sensitivity.level", "0.95"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn check_key(key: &str) -> anyhow::Result<()> {
    if KEYS.iter().any(|(k, _)| *k == key) {
        Ok(())
    } else {
        Err(usage(format!("unknown configuration key '{key}' (see `lawcast keys`)")))
    }
}

/// Parses `key = value` lines; `#` starts a comment. A JSON run manifest is
/// also accepted, in which case its `config` object is used.
fn read_file(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| usage(format!("config file {} is not valid JSON: {e}", path.display())))?;
        let obj = v
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| usage(format!("{} has no \"config\" object", path.display())))?;
        return obj
            .iter()
            .map(|(k, v)| match v.as_str() {
                Some(s) => Ok((k.clone(), s.to_string())),
                None => Err(usage(format!("config value for '{k}' must be a string"))),
            })
            .collect();
    }
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, then the config file, then `--key=value` overrides.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let mut values: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = file {
            for (k, v) in read_file(path)? {
                check_key(&k)?;
                values.insert(k, v);
            }
        }
        for o in overrides {
            let body = o
                .strip_prefix("--")
                .ok_or_else(|| usage(format!("unexpected argument '{o}'; overrides look like --key=value")))?;
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| usage(format!("override '{o}' needs a value: --{body}=...")))?;
            check_key(k)?;
            values.insert(k.to_string(), v.to_string());
        }
        let config = RunConfig { values };
        config.validate()?;
        Ok(config)
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> anyhow::Result<T> {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Err(usage(format!("'{key}' is required; pass --{key}=...")));
        }
        raw.parse()
            .map_err(|_| usage(format!("invalid value '{raw}' for '{key}'")))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> anyhow::Result<Option<T>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    }

    /// A path to an existing input file.
    pub fn input(&self, key: &str) -> anyhow::Result<PathBuf> {
        let p = PathBuf::from(self.get::<String>(key)?);
        if !p.exists() {
            return Err(usage(format!("{key} file {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn out_dir(&self) -> anyhow::Result<PathBuf> {
        Ok(PathBuf::from(self.get::<String>("out")?))
    }

    pub fn policies(&self) -> anyhow::Result<Vec<SnapshotPolicy>> {
        match self.raw("policy") {
            "both" => Ok(vec![SnapshotPolicy::Oldest, SnapshotPolicy::Newest]),
            s => SnapshotPolicy::parse(s)
                .map(|p| vec![p])
                .ok_or_else(|| usage(format!("invalid policy '{s}'; use oldest, newest or both"))),
        }
    }

    pub fn policy(&self) -> anyhow::Result<SnapshotPolicy> {
        match self.policies()?.as_slice() {
            [p] => Ok(*p),
            _ => Err(usage("this command takes a single policy: oldest or newest")),
        }
    }

    pub fn model(&self) -> anyhow::Result<ModelSpec> {
        let s = self.raw("model");
        ModelSpec::parse(s).ok_or_else(|| usage(format!("invalid model '{s}'")))
    }

    pub fn models(&self) -> anyhow::Result<Vec<ModelSpec>> {
        let models = self
            .list("models")
            .iter()
            .map(|s| ModelSpec::parse(s).ok_or_else(|| usage(format!("invalid model '{s}' in 'models'"))))
            .collect::<anyhow::Result<Vec<_>>>()?;
        if models.is_empty() {
            return Err(usage("'models' is empty"));
        }
        Ok(models)
    }

    pub fn synthetic_spec(&self) -> anyhow::Result<SyntheticSpec> {
        let spec = SyntheticSpec {
            congress_start: self.get("synth.congress_start")?,
            congress_end: self.get("synth.congress_end")?,
            bills_per_congress: self.get("synth.bills_per_congress")?,
            house_rate: self.get("synth.house_rate")?,
            senate_rate: self.get("synth.senate_rate")?,
            topic_size: self.get("synth.topic_size")?,
            overlap: self.get("synth.overlap")?,
            missing_sponsor_fraction: self.get("synth.missing_sponsor_fraction")?,
            hard_subject: self.opt("synth.hard_subject")?,
            ..SyntheticSpec::default()
        };
        spec.validate().map_err(|e| usage(e.to_string()))?;
        Ok(spec)
    }

    fn embedding(&self) -> anyhow::Result<EmbeddingConfig> {
        let c = EmbeddingConfig {
            dim: self.get("emb.dim")?,
            window: self.get("emb.window")?,
            epochs: self.get("emb.epochs")?,
            learning_rate: self.get("emb.learning_rate")?,
            min_count: self.get("emb.min_count")?,
            seed: self.get("seed")?,
        };
        c.validate().map_err(|e| usage(e.to_string()))?;
        Ok(c)
    }

    fn stack(&self) -> anyhow::Result<StackConfig> {
        let gbm = GbmParams {
            n_stages: self.get("gbm.n_stages")?,
            shrinkage: self.get("gbm.shrinkage")?,
            max_depth: self.get("gbm.max_depth")?,
            min_leaf: self.get("gbm.min_leaf")?,
            subsample: self.get("gbm.subsample")?,
            ..GbmParams::default()
        };
        let forest = ForestParams {
            n_trees: self.get("forest.n_trees")?,
            mtry: self.opt("forest.mtry")?,
            max_depth: self.opt("forest.max_depth")?,
            min_leaf: self.get("forest.min_leaf")?,
            ..ForestParams::default()
        };
        let enet = ElasticNetParams {
            alpha: self.get("enet.alpha")?,
            lambda: self.get("enet.lambda")?,
            max_iter: self.get("enet.max_iter")?,
            tol: self.get("enet.tol")?,
            ..ElasticNetParams::default()
        };
        let bases = self
            .list("stack.bases")
            .iter()
            .map(|b| match b.as_str() {
                "gbm" => Ok(BaseSpec::Gbm(gbm.clone())),
                "forest" => Ok(BaseSpec::Forest(forest.clone())),
                "elastic_net" => Ok(BaseSpec::ElasticNet(enet.clone())),
                other => Err(usage(format!("unknown base learner '{other}' in 'stack.bases'"))),
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        if bases.is_empty() {
            return Err(usage("'stack.bases' is empty"));
        }
        Ok(StackConfig {
            k_folds: self.get("stack.k_folds")?,
            seed: self.get("seed")?,
            bases,
            meta: ElasticNetParams {
                alpha: self.get("meta.alpha")?,
                lambda: self.get("meta.lambda")?,
                nonnegative: true,
                ..ElasticNetParams::default()
            },
        })
    }

    pub fn walk_forward(&self) -> anyhow::Result<WalkForwardConfig> {
        let codes = self
            .list("features.leadership_codes")
            .iter()
            .map(|c| c.parse().map_err(|_| usage(format!("invalid leadership code '{c}'"))))
            .collect::<anyhow::Result<Vec<u32>>>()?;
        Ok(WalkForwardConfig {
            plan: WalkForwardPlan {
                lm_start: self.get("plan.lm_start")?,
                base_start: self.get("plan.base_start")?,
                test_start: self.get("plan.test_start")?,
                test_end: self.opt("plan.test_end")?,
            },
            inversion: InversionConfig {
                embedding: self.embedding()?,
                length_normalize: self.get("inversion.length_normalize")?,
            },
            stack: self.stack()?,
            features: FeatureConfig {
                leadership_codes: codes,
            },
            interactions: self.get("features.interactions")?,
            seed: self.get("seed")?,
        })
    }

    /// Type-checks every key that has a value.
    fn validate(&self) -> anyhow::Result<()> {
        let threads: usize = self.get("threads")?;
        if threads == 0 {
            return Err(usage("'threads' must be at least 1"));
        }
        self.get::<u64>("seed")?;
        self.policies()?;
        self.model()?;
        self.models()?;
        self.walk_forward()?;
        self.opt::<u32>("target_congress")?;
        self.get::<bool>("eval.clip")?;
        self.get::<usize>("eval.bins")?;
        self.get::<usize>("curves.n")?;
        self.get::<f64>("curves.span")?;
        self.get::<usize>("similar.n")?;
        self.get::<usize>("similar.k")?;
        self.opt::<u32>("sensitivity.start")?;
        self.opt::<u32>("sensitivity.end")?;
        self.get::<usize>("sensitivity.replicates")?;
        self.get::<f64>("sensitivity.level")?;
        Ok(())
    }
}
