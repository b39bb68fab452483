//! Plain-text model files.
//!
//! The main file holds `M d` followed by one `word v1 .. vd` line per word.
//! The companion file (`<path>.tree`) starts with [`EMB_HEADER`] and stores the
//! configuration, counts, Huffman codes and node vectors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{EmbeddingConfig, EmbeddingModel, HuffmanTree, Vocabulary};
use crate::{Error, Result};

pub const EMB_HEADER: &str = "LAWCAST-EMB v1";

pub fn companion_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".tree");
    PathBuf::from(s)
}

fn join(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        // Display for f64 prints the shortest string that parses back exactly.
        write!(out, "{v}").unwrap();
    }
    out
}

pub fn save_model(model: &EmbeddingModel, path: &Path) -> Result<()> {
    let d = model.dim();
    let m = model.vocab.len();
    let mut main = format!("{m} {d}\n");
    for (i, w) in model.vocab.words.iter().enumerate() {
        writeln!(main, "{w} {}", join(model.input_vector(i))).unwrap();
    }
    write_file(path, &main)?;

    let c = &model.config;
    let mut side = format!("{EMB_HEADER}\n");
    writeln!(
        side,
        "config {} {} {} {} {} {}",
        c.dim, c.window, c.epochs, c.learning_rate, c.min_count, c.seed
    )
    .unwrap();
    writeln!(side, "losses {}", join(&model.epoch_losses)).unwrap();
    for (i, w) in model.vocab.words.iter().enumerate() {
        let code: String = model.tree.codes[i].iter().map(|b| char::from(b'0' + b)).collect();
        let points: Vec<String> = model.tree.points[i].iter().map(usize::to_string).collect();
        writeln!(side, "word {w} {} {code} {}", model.vocab.counts[i], points.join(",")).unwrap();
    }
    for n in 0..model.tree.n_internal() {
        writeln!(side, "node {}", join(model.node_vector(n))).unwrap();
    }
    write_file(&companion_path(path), &side)
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<EmbeddingModel> {
    let bad = |p: &Path, reason: String| Error::Format {
        path: p.to_path_buf(),
        reason,
    };
    let main = read_file(path)?;
    let mut lines = main.lines();
    let head = lines.next().ok_or_else(|| bad(path, "empty file".into()))?;
    let dims: Vec<usize> = head
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| bad(path, format!("header: {e}")))?;
    let [m, d] = dims[..] else {
        return Err(bad(path, "header must be 'M d'".into()));
    };
    let mut words = Vec::with_capacity(m);
    let mut input = Vec::with_capacity(m * d);
    for line in lines.by_ref().take(m) {
        let mut parts = line.split(' ');
        words.push(parts.next().unwrap_or_default().to_string());
        for p in parts {
            input.push(p.parse::<f64>().map_err(|e| bad(path, format!("vector value: {e}")))?);
        }
    }
    if words.len() != m || input.len() != m * d {
        return Err(bad(path, "vector block does not match header".into()));
    }

    let cpath = companion_path(path);
    let side = read_file(&cpath)?;
    let mut lines = side.lines();
    if lines.next() != Some(EMB_HEADER) {
        return Err(bad(&cpath, format!("missing '{EMB_HEADER}' header")));
    }
    let cfg: Vec<&str> = lines
        .next()
        .and_then(|l| l.strip_prefix("config "))
        .ok_or_else(|| bad(&cpath, "missing config line".into()))?
        .split(' ')
        .collect();
    let parse_err = |e: &dyn std::fmt::Display| bad(&cpath, format!("config: {e}"));
    if cfg.len() != 6 {
        return Err(bad(&cpath, "config line needs six fields".into()));
    }
    let config = EmbeddingConfig {
        dim: cfg[0].parse().map_err(|e| parse_err(&e))?,
        window: cfg[1].parse().map_err(|e| parse_err(&e))?,
        epochs: cfg[2].parse().map_err(|e| parse_err(&e))?,
        learning_rate: cfg[3].parse().map_err(|e| parse_err(&e))?,
        min_count: cfg[4].parse().map_err(|e| parse_err(&e))?,
        seed: cfg[5].parse().map_err(|e| parse_err(&e))?,
    };
    if config.dim != d {
        return Err(bad(&cpath, "dimension differs from vector file".into()));
    }
    let losses_line = lines
        .next()
        .and_then(|l| l.strip_prefix("losses"))
        .ok_or_else(|| bad(&cpath, "missing losses line".into()))?;
    let epoch_losses = losses_line
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|e| bad(&cpath, format!("loss: {e}"))))
        .collect::<Result<Vec<_>>>()?;

    let mut counts = Vec::with_capacity(m);
    let mut codes = Vec::with_capacity(m);
    let mut points = Vec::with_capacity(m);
    for (i, line) in lines.by_ref().take(m).enumerate() {
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != 5 || parts[0] != "word" || parts[1] != words[i] {
            return Err(bad(&cpath, format!("bad word line {}", i + 1)));
        }
        counts.push(
            parts[2]
                .parse::<u64>()
                .map_err(|e| bad(&cpath, format!("count: {e}")))?,
        );
        codes.push(parts[3].bytes().map(|b| b - b'0').collect::<Vec<u8>>());
        points.push(
            parts[4]
                .split(',')
                .map(|p| p.parse::<usize>().map_err(|e| bad(&cpath, format!("path: {e}"))))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let mut node_vectors = Vec::with_capacity(m.saturating_sub(1) * d);
    for line in lines {
        let values = line
            .strip_prefix("node ")
            .ok_or_else(|| bad(&cpath, "expected node line".into()))?;
        for v in values.split(' ') {
            node_vectors.push(v.parse::<f64>().map_err(|e| bad(&cpath, format!("node value: {e}")))?);
        }
    }
    if counts.len() != m || node_vectors.len() != m.saturating_sub(1) * d {
        return Err(bad(&cpath, "tree block does not match vocabulary".into()));
    }
    let vocab = Vocabulary::from_parts(words, counts, config.min_count)?;
    let tree = HuffmanTree { codes, points };
    tree.validate(m)?;
    Ok(EmbeddingModel {
        config,
        vocab,
        tree,
        input_vectors: input,
        node_vectors,
        epoch_losses,
    })
}
