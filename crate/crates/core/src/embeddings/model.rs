use rand::Rng as _;

use super::{build_huffman, build_vocab, EmbeddingConfig, HuffmanTree, Vocabulary};
use crate::util::{log_sigmoid, rng_from_seed, sigmoid};
use crate::{Error, Result};

/// A trained (or freshly initialized) CBOW model. Vectors are stored
/// row-major: word `i` occupies `input_vectors[i*dim..(i+1)*dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub config: EmbeddingConfig,
    pub vocab: Vocabulary,
    pub tree: HuffmanTree,
    pub input_vectors: Vec<f64>,
    pub node_vectors: Vec<f64>,
    /// Mean per-pair loss (negative log probability) of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Gradient of one pair's loss `-ln p(target | context)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    /// Per distinct context word id.
    pub inputs: Vec<(usize, Vec<f64>)>,
    /// Per internal node on the target's path.
    pub nodes: Vec<(usize, Vec<f64>)>,
}

impl EmbeddingModel {
    /// Random input vectors in [-0.5/d, 0.5/d], zero node vectors.
    pub fn initialize(vocab: Vocabulary, tree: HuffmanTree, config: EmbeddingConfig) -> Result<Self> {
        config.validate()?;
        tree.validate(vocab.len())?;
        let d = config.dim;
        let mut rng = rng_from_seed(config.seed);
        let half = 0.5 / d as f64;
        let input_vectors = (0..vocab.len() * d).map(|_| rng.random_range(-half..=half)).collect();
        let node_vectors = vec![0.0; (vocab.len() - 1) * d];
        Ok(EmbeddingModel {
            config,
            vocab,
            tree,
            input_vectors,
            node_vectors,
            epoch_losses: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn input_vector(&self, id: usize) -> &[f64] {
        let d = self.dim();
        &self.input_vectors[id * d..(id + 1) * d]
    }

    pub fn node_vector(&self, node: usize) -> &[f64] {
        let d = self.dim();
        &self.node_vectors[node * d..(node + 1) * d]
    }

    pub fn word_vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.get(word).map(|i| self.input_vector(i))
    }

    pub fn context_mean(&self, context: &[usize]) -> Vec<f64> {
        let d = self.dim();
        let mut h = vec![0.0; d];
        for &c in context {
            for (hk, vk) in h.iter_mut().zip(self.input_vector(c)) {
                *hk += vk;
            }
        }
        let scale = 1.0 / context.len() as f64;
        h.iter_mut().for_each(|x| *x *= scale);
        h
    }

    /// ln p(target | context) over word ids; `None` for an empty context.
    pub fn log_prob_ids(&self, context: &[usize], target: usize) -> Option<f64> {
        if context.is_empty() {
            return None;
        }
        let h = self.context_mean(context);
        let mut lp = 0.0;
        for (&node, &b) in self.tree.points[target].iter().zip(&self.tree.codes[target]) {
            let x = dot(&h, self.node_vector(node));
            lp += log_sigmoid(if b == 0 { x } else { -x });
        }
        Some(lp)
    }

    /// Probability of `target` given the mean of the in-vocabulary context
    /// vectors. `Ok(None)` when no context word is in the vocabulary.
    pub fn predict_word_prob<S: AsRef<str>>(&self, context: &[S], target: &str) -> Result<Option<f64>> {
        let t = self
            .vocab
            .get(target)
            .ok_or_else(|| Error::OutOfVocabulary(target.to_string()))?;
        Ok(self.log_prob_ids(&self.vocab.encode(context), t).map(f64::exp))
    }

    /// Loss and analytic gradient for a single (context, target) pair.
    pub fn pair_gradient(&self, context: &[usize], target: usize) -> Option<PairGradient> {
        if context.is_empty() {
            return None;
        }
        let d = self.dim();
        let h = self.context_mean(context);
        let mut dh = vec![0.0; d];
        let mut loss = 0.0;
        let mut nodes = Vec::new();
        for (&node, &b) in self.tree.points[target].iter().zip(&self.tree.codes[target]) {
            let v = self.node_vector(node);
            let x = dot(&h, v);
            loss -= log_sigmoid(if b == 0 { x } else { -x });
            // d(-ln σ((1-2b)x))/dx = σ(x) - (1 - b)
            let g = sigmoid(x) - (1.0 - f64::from(b));
            nodes.push((node, h.iter().map(|hk| g * hk).collect()));
            for (dk, vk) in dh.iter_mut().zip(v) {
                *dk += g * vk;
            }
        }
        let mut ids: Vec<usize> = context.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let inputs = ids
            .into_iter()
            .map(|id| {
                let share = context.iter().filter(|&&c| c == id).count() as f64 / context.len() as f64;
                (id, dh.iter().map(|x| x * share).collect())
            })
            .collect();
        Some(PairGradient { loss, inputs, nodes })
    }

    /// One stochastic gradient step on a pair; returns the pre-update loss.
    fn step(&mut self, context: &[usize], target: usize, lr: f64, h: &mut [f64], dh: &mut [f64]) -> f64 {
        let d = self.dim();
        h.iter_mut().for_each(|x| *x = 0.0);
        dh.iter_mut().for_each(|x| *x = 0.0);
        for &c in context {
            for (hk, vk) in h.iter_mut().zip(&self.input_vectors[c * d..(c + 1) * d]) {
                *hk += vk;
            }
        }
        let inv = 1.0 / context.len() as f64;
        h.iter_mut().for_each(|x| *x *= inv);
        let mut loss = 0.0;
        for i in 0..self.tree.points[target].len() {
            let node = self.tree.points[target][i];
            let b = self.tree.codes[target][i];
            let v = &mut self.node_vectors[node * d..(node + 1) * d];
            let x = dot(h, v);
            loss -= log_sigmoid(if b == 0 { x } else { -x });
            let g = sigmoid(x) - (1.0 - f64::from(b));
            for k in 0..d {
                dh[k] += g * v[k];
                v[k] -= lr * g * h[k];
            }
        }
        for &c in context {
            for (vk, gk) in self.input_vectors[c * d..(c + 1) * d].iter_mut().zip(dh.iter()) {
                *vk -= lr * gk * inv;
            }
        }
        loss
    }

    fn train(&mut self, sentences: &[Vec<usize>]) {
        let window = self.config.window;
        let epochs = self.config.epochs;
        let lr0 = self.config.learning_rate;
        let floor = lr0 * 1e-4;
        let pairs_per_epoch: usize = sentences.iter().filter(|s| s.len() > 1).map(Vec::len).sum();
        let total = (pairs_per_epoch * epochs).max(1) as f64;
        let d = self.dim();
        let mut h = vec![0.0; d];
        let mut dh = vec![0.0; d];
        let mut context = Vec::with_capacity(2 * window);
        let mut processed = 0usize;
        for _ in 0..epochs {
            let mut epoch_loss = 0.0;
            let mut pairs = 0usize;
            for s in sentences {
                for pos in 0..s.len() {
                    context_ids(s, pos, window, &mut context);
                    if context.is_empty() {
                        continue;
                    }
                    let lr = (lr0 * (1.0 - processed as f64 / total)).max(floor);
                    epoch_loss += self.step(&context, s[pos], lr, &mut h, &mut dh);
                    processed += 1;
                    pairs += 1;
                }
            }
            self.epoch_losses
                .push(if pairs > 0 { epoch_loss / pairs as f64 } else { f64::NAN });
        }
    }
}

/// Word ids within `window` of `pos` in the same sentence, excluding `pos`.
pub(crate) fn context_ids(sentence: &[usize], pos: usize, window: usize, out: &mut Vec<usize>) {
    out.clear();
    let lo = pos.saturating_sub(window);
    let hi = (pos + window + 1).min(sentence.len());
    out.extend(sentence[lo..pos].iter().chain(&sentence[pos + 1..hi]));
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds the vocabulary and tree from `sentences` and trains sequentially.
/// Out-of-vocabulary tokens are removed before contexts are formed.
pub fn train_cbow<S: AsRef<str>>(sentences: &[Vec<S>], config: &EmbeddingConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    let vocab = build_vocab(sentences, config.min_count)?;
    let tree = build_huffman(&vocab)?;
    let mut model = EmbeddingModel::initialize(vocab, tree, config.clone())?;
    let encoded: Vec<Vec<usize>> = sentences.iter().map(|s| model.vocab.encode(s)).collect();
    model.train(&encoded);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_corpus() -> Vec<Vec<String>> {
        ["the cat sat on the mat", "the dog sat on the log", "a cat and a dog"]
            .iter()
            .map(|s| s.split(' ').map(String::from).collect())
            .collect()
    }

    fn config(epochs: usize) -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 6,
            window: 2,
            epochs,
            learning_rate: 0.05,
            min_count: 1,
            seed: 3,
        }
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let m = train_cbow(&tiny_corpus(), &config(0)).unwrap();
        let fresh = EmbeddingModel::initialize(m.vocab.clone(), m.tree.clone(), config(0)).unwrap();
        assert_eq!(m, fresh);
        let half = 0.5 / 6.0;
        assert!(m.input_vectors.iter().all(|v| v.abs() <= half));
        assert!(m.node_vectors.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_node_vectors_give_dyadic_probabilities() {
        let m = train_cbow(&tiny_corpus(), &config(0)).unwrap();
        for w in 0..m.vocab.len() {
            let p = m.log_prob_ids(&[0, 1], w).unwrap().exp();
            assert!((p - 0.5f64.powi(m.tree.codes[w].len() as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_normalize() {
        let m = train_cbow(&tiny_corpus(), &config(3)).unwrap();
        let total: f64 = (0..m.vocab.len())
            .map(|w| m.log_prob_ids(&[2, 4, 5], w).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_context_is_unusable() {
        let m = train_cbow(&tiny_corpus(), &config(1)).unwrap();
        assert_eq!(m.predict_word_prob(&["zebra"], "cat").unwrap(), None);
        assert!(m.predict_word_prob(&["the"], "zebra").is_err());
        let p = m.predict_word_prob(&["the", "zebra"], "cat").unwrap().unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn context_is_truncated_at_sentence_edges() {
        let mut out = Vec::new();
        context_ids(&[10, 11, 12, 13], 0, 2, &mut out);
        assert_eq!(out, vec![11, 12]);
        context_ids(&[10, 11, 12, 13], 3, 5, &mut out);
        assert_eq!(out, vec![10, 11, 12]);
        context_ids(&[10], 0, 5, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn single_step_follows_the_gradient() {
        let corpus = vec![
            vec!["a".to_string(), "b".to_string()],
            vec!["c".into(), "a".into(), "b".into()],
        ];
        let mut m = train_cbow(&corpus, &config(0)).unwrap();
        // Give node vectors non-zero values so the input gradient is non-trivial.
        for (i, v) in m.node_vectors.iter_mut().enumerate() {
            *v = 0.1 * ((i % 5) as f64 - 2.0);
        }
        let ctx = [1usize, 2];
        let target = 0usize;
        let grad = m.pair_gradient(&ctx, target).unwrap();
        let before = m.clone();
        let d = m.dim();
        let (mut h, mut dh) = (vec![0.0; d], vec![0.0; d]);
        let lr = 0.3;
        let loss = m.step(&ctx, target, lr, &mut h, &mut dh);
        assert!((loss - grad.loss).abs() < 1e-12);
        for (node, g) in &grad.nodes {
            for ((after, old), gk) in m.node_vector(*node).iter().zip(before.node_vector(*node)).zip(g) {
                assert!((after - (old - lr * gk)).abs() < 1e-12);
            }
        }
        for (id, g) in &grad.inputs {
            for ((after, old), gk) in m.input_vector(*id).iter().zip(before.input_vector(*id)).zip(g) {
                assert!((after - (old - lr * gk)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_inputs_give_identical_models() {
        let a = train_cbow(&tiny_corpus(), &config(2)).unwrap();
        let b = train_cbow(&tiny_corpus(), &config(2)).unwrap();
        assert_eq!(a, b);
    }
}
