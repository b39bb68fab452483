//! CBOW word vectors trained with hierarchical softmax over a Huffman tree.

mod huffman;
mod io;
mod model;
mod similarity;
mod vocab;

use serde::{Deserialize, Serialize};

pub use huffman::{build_huffman, HuffmanTree};
pub use io::{companion_path, load_model, save_model, EMB_HEADER};
pub use model::{train_cbow, EmbeddingModel, PairGradient};
pub use similarity::{cosine, differential_lists, most_similar, SimilarityQuery};
pub use vocab::{build_vocab, Vocabulary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub dim: usize,
    /// Context radius in words on each side of the target.
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 100,
            window: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 5,
            seed: 1,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.dim < 1 {
            return Err(crate::Error::invalid("embedding dimension must be at least 1"));
        }
        if self.window < 1 {
            return Err(crate::Error::invalid("window must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(crate::Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }
}
