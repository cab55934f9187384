//! Domain-specific word embedding channels and the per-token 3-row stack.
//!
//! Three channels are trained on the same corpus: skip-gram with negative
//! sampling, co-occurrence weighted least squares, and the subword variant
//! of skip-gram. OOV tokens get zeros on the first two channels and a
//! subword-composed vector on the third when any trained n-gram overlaps.

mod fasttext;
mod glove;
mod word2vec;

pub use fasttext::{extract_ngrams, train_fasttext, FastTextConfig, SubwordTable};
pub use glove::{build_cooccurrence, train_glove, GloveConfig};
pub use word2vec::{train_word2vec, Word2VecConfig};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{TokenizedTweet, PAD_TOKEN};

/// Vocabulary over a tokenized corpus. Index 0 is reserved for padding;
/// real tokens get indices 1.. assigned by (count desc, token asc).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    counts: Vec<u64>,
}

impl Vocabulary {
    /// Count tokens and keep those with frequency >= `min_count`.
    pub fn build(corpus: &[TokenizedTweet], min_count: u64) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus("vocabulary from empty corpus".into()));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for tweet in corpus {
            for token in &tweet.tokens {
                *freq.entry(token.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = freq
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        if kept.is_empty() {
            return Err(Error::config(format!(
                "no token reaches min_count={min_count}"
            )));
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut index = HashMap::with_capacity(kept.len());
        let mut tokens = Vec::with_capacity(kept.len() + 1);
        let mut counts = Vec::with_capacity(kept.len() + 1);
        tokens.push(PAD_TOKEN.to_string());
        counts.push(0);
        for (i, (token, count)) in kept.into_iter().enumerate() {
            index.insert(token.to_string(), i + 1);
            tokens.push(token.to_string());
            counts.push(count);
        }
        Ok(Vocabulary {
            index,
            tokens,
            counts,
        })
    }

    /// Number of rows including the padding row.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 1
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    /// Real tokens, padding excluded.
    pub fn iter_tokens(&self) -> impl Iterator<Item = (usize, &str)> {
        self.tokens
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, t)| (i, t.as_str()))
    }

    /// Fill a tweet's `indices`; OOV tokens map to 0.
    pub fn bind(&self, tweet: &mut TokenizedTweet) {
        tweet.indices = tweet
            .tokens
            .iter()
            .map(|t| self.get(t).unwrap_or(0))
            .collect();
    }

    /// Token indices of a tweet with OOV tokens dropped.
    pub fn encode_known(&self, tweet: &TokenizedTweet) -> Vec<usize> {
        tweet.tokens.iter().filter_map(|t| self.get(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Word2Vec,
    Glove,
    FastText,
}

impl Channel {
    pub fn tag(&self) -> &'static str {
        match self {
            Channel::Word2Vec => "word2vec",
            Channel::Glove => "glove",
            Channel::FastText => "fasttext",
        }
    }
}

/// V x D embedding matrix for one channel. Row 0 belongs to the padding
/// token: all zeros, never updated.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub channel: Channel,
    pub dim: usize,
    rows: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(channel: Channel, rows: usize, dim: usize) -> Self {
        EmbeddingTable {
            channel,
            dim,
            rows,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        debug_assert!(i != 0, "padding row is read-only");
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn from_data(channel: Channel, rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::shape(
                "embedding table",
                format!("{rows}x{dim}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(EmbeddingTable {
            channel,
            dim,
            rows,
            data,
        })
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A trained channel plus its per-iteration objective trace.
#[derive(Debug, Clone)]
pub struct TrainedEmbedding {
    pub table: EmbeddingTable,
    pub loss_trace: Vec<f64>,
}

/// The 3 x D channel stack for one token: rows ordered word2vec, glove,
/// fasttext.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenStack {
    pub dim: usize,
    pub rows: [Vec<f64>; 3],
}

impl TokenStack {
    pub fn zeros(dim: usize) -> Self {
        TokenStack {
            dim,
            rows: [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|&v| v == 0.0))
    }

    /// Flat 3*D view, channel-major.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.dim);
        for row in &self.rows {
            out.extend_from_slice(row);
        }
        out
    }
}

/// All three trained channels over one shared vocabulary.
#[derive(Debug, Clone)]
pub struct EmbeddingChannels {
    pub vocab: Vocabulary,
    pub word2vec: EmbeddingTable,
    pub glove: EmbeddingTable,
    pub fasttext: EmbeddingTable,
    pub subwords: SubwordTable,
}

impl EmbeddingChannels {
    pub fn dim(&self) -> usize {
        self.word2vec.dim
    }

    /// Serve the 3 x D stack for any token. Total: never fails. The padding
    /// token and tokens with no channel signal get zero rows.
    pub fn lookup_stack(&self, token: &str) -> TokenStack {
        let dim = self.dim();
        if token == PAD_TOKEN {
            return TokenStack::zeros(dim);
        }
        let mut stack = TokenStack::zeros(dim);
        if let Some(idx) = self.vocab.get(token) {
            stack.rows[0].copy_from_slice(self.word2vec.row(idx));
            stack.rows[1].copy_from_slice(self.glove.row(idx));
        }
        if let Some(vec) = self
            .subwords
            .compose(token, self.vocab.get(token), &self.fasttext)
        {
            stack.rows[2] = vec;
        }
        stack
    }
}
