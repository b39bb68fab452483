use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::model::dot;
use super::EmbeddingModel;
use crate::{Error, Result};

/// Signed word-vector query. Candidates are limited to the `n` most frequent
/// words and the top `k` are returned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityQuery {
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
    pub n: usize,
    pub k: usize,
}

impl SimilarityQuery {
    pub fn new(positives: Vec<String>, negatives: Vec<String>, n: usize, k: usize) -> Self {
        SimilarityQuery {
            positives,
            negatives,
            n,
            k,
        }
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("cosine of vectors with different dimensions"));
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine of a zero vector"));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Ranks the `n` most frequent non-query words by cosine similarity to the
/// mean of the signed query vectors. Ties keep frequency order.
pub fn most_similar(model: &EmbeddingModel, query: &SimilarityQuery) -> Result<Vec<(String, f64)>> {
    let w = query.positives.len() + query.negatives.len();
    if w == 0 {
        return Err(Error::invalid("similarity query needs at least one word"));
    }
    if query.k < 1 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if query.n > model.vocab.len() {
        return Err(Error::invalid(format!(
            "candidate cutoff {} exceeds vocabulary size {}",
            query.n,
            model.vocab.len()
        )));
    }
    let d = model.dim();
    let mut target = vec![0.0; d];
    let mut exclude = HashSet::new();
    let signed = query
        .positives
        .iter()
        .map(|t| (t, 1.0))
        .chain(query.negatives.iter().map(|t| (t, -1.0)));
    for (word, sign) in signed {
        let id = model
            .vocab
            .get(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.clone()))?;
        exclude.insert(id);
        for (t, v) in target.iter_mut().zip(model.input_vector(id)) {
            *t += sign * v / w as f64;
        }
    }
    let norm = dot(&target, &target).sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("query vectors cancel to zero"));
    }
    let mut scored: Vec<(usize, f64)> = (0..query.n)
        .filter(|id| !exclude.contains(id))
        .filter_map(|id| cosine(&target, model.input_vector(id)).ok().map(|c| (id, c)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(query.k);
    Ok(scored
        .into_iter()
        .map(|(id, c)| (model.vocab.words[id].clone(), c))
        .collect())
}

/// Removes words common to both lists, preserving order.
pub fn differential_lists(a: &[String], b: &[String]) -> (Vec<String>, Vec<String>) {
    let sa: HashSet<&String> = a.iter().collect();
    let sb: HashSet<&String> = b.iter().collect();
    (
        a.iter().filter(|w| !sb.contains(w)).cloned().collect(),
        b.iter().filter(|w| !sa.contains(w)).cloned().collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn cosine_basics() {
        let v = [1.0, 2.0, -3.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), 0.0);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert!((cosine(&v, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(cosine(&v, &[0.0; 3]).is_err());
        assert_eq!(
            cosine(&v, &[4.0, 0.5, 1.0]).unwrap(),
            cosine(&[4.0, 0.5, 1.0], &v).unwrap()
        );
    }

    #[test]
    fn differential_examples() {
        assert_eq!(
            differential_lists(&words("x y z"), &words("y q")),
            (words("x z"), words("q"))
        );
        assert_eq!(differential_lists(&words("a b"), &words("a b")), (vec![], vec![]));
        assert_eq!(differential_lists(&words("a"), &words("b")), (words("a"), words("b")));
    }
}
