use std::collections::HashMap;

use crate::{Error, Result};

/// Retained words, most frequent first.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    pub words: Vec<String>,
    pub counts: Vec<u64>,
    pub min_count: u64,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from words already in the required order.
    pub fn from_parts(words: Vec<String>, counts: Vec<u64>, min_count: u64) -> Result<Self> {
        if words.len() != counts.len() {
            return Err(Error::invalid("word and count lists differ in length"));
        }
        if counts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("vocabulary counts must be nonincreasing"));
        }
        let index: HashMap<String, usize> = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        if index.len() != words.len() {
            return Err(Error::invalid("duplicate word in vocabulary"));
        }
        Ok(Vocabulary {
            words,
            counts,
            min_count,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// In-vocabulary ids of a sentence, dropping unknown tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.get(t.as_ref())).collect()
    }
}

/// Counts words and keeps those seen at least `min_count` times, ordered by
/// count descending with ties in order of first occurrence.
pub fn build_vocab<S: AsRef<str>>(sentences: &[Vec<S>], min_count: u64) -> Result<Vocabulary> {
    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    let mut order: Vec<(&str, u64)> = Vec::new();
    for token in sentences.iter().flatten() {
        let t = token.as_ref();
        match first_seen.get(t) {
            Some(&i) => order[i].1 += 1,
            None => {
                first_seen.insert(t, order.len());
                order.push((t, 1));
            }
        }
    }
    if order.is_empty() {
        return Err(Error::invalid("cannot build a vocabulary from an empty corpus"));
    }
    // The stable sort keeps first-occurrence order among equal counts.
    let mut kept: Vec<(&str, u64)> = order.into_iter().filter(|(_, c)| *c >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::invalid(format!("no word occurs at least {min_count} times")));
    }
    kept.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
    Vocabulary::from_parts(
        kept.iter().map(|(w, _)| w.to_string()).collect(),
        kept.iter().map(|(_, c)| *c).collect(),
        min_count,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(words: &str) -> Vec<Vec<String>> {
        vec![words.split(' ').map(String::from).collect()]
    }

    #[test]
    fn threshold_drops_rare_words() {
        let v = build_vocab(&corpus("a a a a a b b c"), 2).unwrap();
        assert_eq!(v.words, vec!["a", "b"]);
        assert_eq!(v.counts, vec![5, 2]);
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let v = build_vocab(&corpus("x y z y"), 1).unwrap();
        assert_eq!(v.words, vec!["y", "x", "z"]);
    }

    #[test]
    fn ties_follow_first_occurrence() {
        let v = build_vocab(&corpus("q p r p q r"), 1).unwrap();
        assert_eq!(v.words, vec!["q", "p", "r"]);
    }

    #[test]
    fn empty_or_all_rare_is_an_error() {
        assert!(build_vocab::<String>(&[], 1).is_err());
        assert!(build_vocab(&corpus("a b"), 3).is_err());
    }

    #[test]
    fn encode_skips_unknown_tokens() {
        let v = build_vocab(&corpus("a a b"), 1).unwrap();
        assert_eq!(v.encode(&["b", "zzz", "a"]), vec![1, 0]);
    }
}
