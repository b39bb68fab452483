use std::collections::VecDeque;

use super::Vocabulary;
use crate::{Error, Result};

/// Binary Huffman codes over the vocabulary. Internal nodes are numbered
/// `0..M-1` in creation order, so the root is `M-2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanTree {
    /// Branch bits from the root down to each word.
    pub codes: Vec<Vec<u8>>,
    /// Internal node indices from the root down to each word, aligned with `codes`.
    pub points: Vec<Vec<usize>>,
}

impl HuffmanTree {
    pub fn n_internal(&self) -> usize {
        self.codes.len().saturating_sub(1)
    }

    pub fn code_lengths(&self) -> Vec<usize> {
        self.codes.iter().map(Vec::len).collect()
    }

    /// Checks that codes and paths describe a proper tree for `m` words.
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.codes.len() != m || self.points.len() != m || m < 2 {
            return Err(Error::invalid("huffman tree size does not match vocabulary"));
        }
        for (code, path) in self.codes.iter().zip(&self.points) {
            if code.is_empty() || code.len() != path.len() {
                return Err(Error::invalid("huffman code and path lengths differ"));
            }
            if path[0] != m - 2 || path.iter().any(|&p| p >= m - 1) || code.iter().any(|&b| b > 1) {
                return Err(Error::invalid("huffman path leaves the tree"));
            }
        }
        Ok(())
    }
}

/// Two-queue Huffman construction over counts sorted in descending order.
/// When weights tie, leaves are merged before internal nodes.
pub fn build_huffman(vocab: &Vocabulary) -> Result<HuffmanTree> {
    let m = vocab.len();
    if m < 2 {
        return Err(Error::invalid("a Huffman tree needs at least two words"));
    }
    // Node ids: leaves 0..m, internal node k has id m + k.
    let mut parent = vec![0usize; 2 * m - 1];
    let mut bit = vec![0u8; 2 * m - 1];
    let mut weight: Vec<u64> = vocab.counts.clone();
    weight.resize(2 * m - 1, 0);

    let mut leaves: VecDeque<usize> = (0..m).rev().collect();
    let mut internal: VecDeque<usize> = VecDeque::new();
    let take_min = |leaves: &mut VecDeque<usize>, internal: &mut VecDeque<usize>, weight: &[u64]| -> usize {
        match (leaves.front(), internal.front()) {
            (Some(&l), Some(&i)) if weight[i] < weight[l] => internal.pop_front().unwrap(),
            (Some(_), _) => leaves.pop_front().unwrap(),
            (None, _) => internal.pop_front().unwrap(),
        }
    };
    for k in 0..m - 1 {
        let a = take_min(&mut leaves, &mut internal, &weight);
        let b = take_min(&mut leaves, &mut internal, &weight);
        let id = m + k;
        weight[id] = weight[a] + weight[b];
        parent[a] = id;
        parent[b] = id;
        bit[a] = 0;
        bit[b] = 1;
        internal.push_back(id);
    }

    let root = 2 * m - 2;
    let mut codes = Vec::with_capacity(m);
    let mut points = Vec::with_capacity(m);
    for w in 0..m {
        let mut code = Vec::new();
        let mut path = Vec::new();
        let mut node = w;
        while node != root {
            code.push(bit[node]);
            node = parent[node];
            path.push(node - m);
        }
        code.reverse();
        path.reverse();
        codes.push(code);
        points.push(path);
    }
    Ok(HuffmanTree { codes, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(counts: &[u64]) -> Vocabulary {
        let words = (0..counts.len()).map(|i| format!("w{i}")).collect();
        Vocabulary::from_parts(words, counts.to_vec(), 1).unwrap()
    }

    #[test]
    fn hand_worked_lengths() {
        let t = build_huffman(&vocab(&[4, 2, 1, 1])).unwrap();
        assert_eq!(t.code_lengths(), vec![1, 2, 3, 3]);
        t.validate(4).unwrap();
    }

    #[test]
    fn two_words_get_single_bits() {
        let t = build_huffman(&vocab(&[9, 3])).unwrap();
        assert_eq!(t.code_lengths(), vec![1, 1]);
        assert_ne!(t.codes[0], t.codes[1]);
        assert_eq!(t.points, vec![vec![0], vec![0]]);
    }

    #[test]
    fn uniform_counts_balance() {
        let t = build_huffman(&vocab(&[5, 5, 5, 5])).unwrap();
        assert_eq!(t.code_lengths(), vec![2, 2, 2, 2]);
    }

    #[test]
    fn single_word_is_an_error() {
        assert!(build_huffman(&vocab(&[3])).is_err());
    }

    #[test]
    fn codes_are_prefix_free() {
        let t = build_huffman(&vocab(&[10, 7, 7, 3, 2, 2, 1])).unwrap();
        for (i, a) in t.codes.iter().enumerate() {
            for (j, b) in t.codes.iter().enumerate() {
                if i != j {
                    assert!(!b.starts_with(a), "{a:?} prefixes {b:?}");
                }
            }
        }
    }
}
