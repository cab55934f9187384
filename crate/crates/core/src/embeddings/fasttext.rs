//! Subword-enriched skip-gram: word vectors plus hashed character n-gram
//! vectors, which is what serves out-of-vocabulary tokens downstream.

use std::collections::{HashMap, HashSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::text::TokenizedTweet;

use super::word2vec::{validate_sgns, UnigramSampler};
use super::{Channel, EmbeddingTable, TrainedEmbedding, Vocabulary};

#[derive(Debug, Clone)]
pub struct FastTextConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub alpha: f64,
    pub iters: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub buckets: u64,
    pub seed: u64,
}

impl FastTextConfig {
    pub fn desk_scale(mut self) -> Self {
        self.buckets = 1 << 16;
        self
    }
}

impl Default for FastTextConfig {
    fn default() -> Self {
        FastTextConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            alpha: 0.025,
            iters: 5,
            min_n: 3,
            max_n: 6,
            buckets: 1 << 21,
            seed: 1,
        }
    }
}

/// Character n-grams of the boundary-marked form `<token>`.
pub fn extract_ngrams(token: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let marked: Vec<char> = std::iter::once('<')
        .chain(token.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut grams = Vec::new();
    for n in min_n..=max_n {
        if marked.len() < n {
            break;
        }
        for window in marked.windows(n) {
            grams.push(window.iter().collect());
        }
    }
    grams
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u32 = 2166136261;
    for &b in bytes {
        h ^= u32::from(b);
        h = h.wrapping_mul(16777619);
    }
    u64::from(h)
}

fn bucket_of(gram: &str, buckets: u64) -> u64 {
    fnv1a(gram.as_bytes()) % buckets
}

/// Hashed n-gram vectors. Only buckets observed during training are stored;
/// composing a token with no known n-gram yields `None`.
#[derive(Debug, Clone)]
pub struct SubwordTable {
    pub dim: usize,
    pub buckets: u64,
    pub min_n: usize,
    pub max_n: usize,
    bucket_rows: HashMap<u64, usize>,
    rows: Vec<f64>,
}

impl SubwordTable {
    fn new(dim: usize, buckets: u64, min_n: usize, max_n: usize) -> Self {
        SubwordTable {
            dim,
            buckets,
            min_n,
            max_n,
            bucket_rows: HashMap::new(),
            rows: Vec::new(),
        }
    }

    pub fn known_ngrams(&self) -> usize {
        self.bucket_rows.len()
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.dim..(r + 1) * self.dim]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.rows[r * self.dim..(r + 1) * self.dim]
    }

    /// Row indices for a token's n-grams, skipping unknown buckets.
    fn known_rows(&self, token: &str) -> Vec<usize> {
        extract_ngrams(token, self.min_n, self.max_n)
            .iter()
            .filter_map(|g| self.bucket_rows.get(&bucket_of(g, self.buckets)).copied())
            .collect()
    }

    /// Served vector: mean of the word vector (when in vocabulary) and the
    /// token's known n-gram vectors. `None` when nothing is known.
    pub fn compose(
        &self,
        token: &str,
        vocab_index: Option<usize>,
        word_table: &EmbeddingTable,
    ) -> Option<Vec<f64>> {
        let rows = self.known_rows(token);
        let mut count = rows.len();
        let mut sum = vec![0.0f64; self.dim];
        for &r in &rows {
            for (d, v) in self.row(r).iter().enumerate() {
                sum[d] += v;
            }
        }
        if let Some(idx) = vocab_index {
            if idx != 0 {
                for (d, v) in word_table.row(idx).iter().enumerate() {
                    sum[d] += v;
                }
                count += 1;
            }
        }
        if count == 0 {
            return None;
        }
        for v in &mut sum {
            *v /= count as f64;
        }
        Some(sum)
    }

    pub fn raw(&self) -> (&HashMap<u64, usize>, &[f64]) {
        (&self.bucket_rows, &self.rows)
    }

    pub fn from_raw(
        dim: usize,
        buckets: u64,
        min_n: usize,
        max_n: usize,
        bucket_rows: HashMap<u64, usize>,
        rows: Vec<f64>,
    ) -> Self {
        SubwordTable {
            dim,
            buckets,
            min_n,
            max_n,
            bucket_rows,
            rows,
        }
    }
}

/// Train subword skip-gram vectors: the input representation of a word is
/// the mean of its word vector and its n-gram bucket vectors.
pub fn train_fasttext(
    corpus: &[TokenizedTweet],
    vocab: &Vocabulary,
    config: &FastTextConfig,
) -> Result<(TrainedEmbedding, SubwordTable)> {
    validate_sgns(config.window, config.iters, config.alpha)?;
    if config.min_n < 1 || config.min_n > config.max_n {
        return Err(Error::config("need 1 <= min_n <= max_n"));
    }
    let negatives = if config.negatives == 0 {
        log::warn!("negatives=0 requested; clamping to 1");
        1
    } else {
        config.negatives
    };

    let sentences: Vec<Vec<usize>> = corpus.iter().map(|t| vocab.encode_known(t)).collect();
    let total_words: usize = sentences.iter().map(|s| s.len()).sum();
    if total_words == 0 {
        return Err(Error::data("corpus has no in-vocabulary tokens"));
    }

    let dim = config.dim;
    let mut gen = rng::seeded(config.seed);

    // Collect the buckets present in the vocabulary, in deterministic order.
    let mut subwords = SubwordTable::new(dim, config.buckets, config.min_n, config.max_n);
    let mut word_ngram_rows: Vec<Vec<usize>> = vec![Vec::new(); vocab.len()];
    {
        let mut seen: HashSet<u64> = HashSet::new();
        let mut ordered_buckets: Vec<u64> = Vec::new();
        for (_, token) in vocab.iter_tokens() {
            for gram in extract_ngrams(token, config.min_n, config.max_n) {
                let b = bucket_of(&gram, config.buckets);
                if seen.insert(b) {
                    ordered_buckets.push(b);
                }
            }
        }
        for (r, b) in ordered_buckets.iter().enumerate() {
            subwords.bucket_rows.insert(*b, r);
        }
        subwords.rows = vec![0.0; subwords.bucket_rows.len() * dim];
        for v in subwords.rows.iter_mut() {
            *v = (gen.gen_range(0.0..1.0) - 0.5) / dim as f64;
        }
        for (idx, token) in vocab.iter_tokens() {
            word_ngram_rows[idx] = extract_ngrams(token, config.min_n, config.max_n)
                .iter()
                .map(|g| subwords.bucket_rows[&bucket_of(g, config.buckets)])
                .collect();
        }
    }

    let mut input = EmbeddingTable::zeros(Channel::FastText, vocab.len(), dim);
    for i in 1..vocab.len() {
        for v in input.row_mut(i) {
            *v = (gen.gen_range(0.0..1.0) - 0.5) / dim as f64;
        }
    }
    let mut output = vec![0.0f64; vocab.len() * dim];
    let sampler = UnigramSampler::new(vocab);

    let total_schedule = (total_words * config.iters) as f64;
    let mut processed = 0usize;
    let mut loss_trace = Vec::with_capacity(config.iters);
    let mut hidden = vec![0.0f64; dim];
    let mut hidden_grad = vec![0.0f64; dim];

    for _iter in 0..config.iters {
        let mut iter_loss = 0.0;
        let mut iter_pairs = 0usize;
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let lr = config.alpha
                    * (1.0 - processed as f64 / (total_schedule + 1.0)).max(1e-4);
                processed += 1;
                let reduced = gen.gen_range(0..config.window);
                let span = config.window - reduced;
                for offset in 1..=span {
                    for context_pos in [pos.checked_sub(offset), Some(pos + offset)] {
                        let Some(cp) = context_pos else { continue };
                        if cp >= sentence.len() || cp == pos {
                            continue;
                        }
                        let input_word = sentence[cp];
                        let grams = &word_ngram_rows[input_word];
                        let parts = (grams.len() + 1) as f64;

                        // hidden = mean(word vector, n-gram vectors)
                        hidden.copy_from_slice(input.row(input_word));
                        for &r in grams {
                            let row = subwords.row(r);
                            for d in 0..dim {
                                hidden[d] += row[d];
                            }
                        }
                        for d in 0..dim {
                            hidden[d] /= parts;
                        }

                        hidden_grad.fill(0.0);
                        for k in 0..=negatives {
                            let (target, label) = if k == 0 {
                                (center, 1.0)
                            } else {
                                let mut t = sampler.sample(&mut gen);
                                if t == center {
                                    t = sampler.sample(&mut gen);
                                }
                                if t == center {
                                    continue;
                                }
                                (t, 0.0)
                            };
                            let out_off = target * dim;
                            let mut f = 0.0;
                            for d in 0..dim {
                                f += hidden[d] * output[out_off + d];
                            }
                            let y = 1.0 / (1.0 + (-f).exp());
                            iter_loss -= if label == 1.0 {
                                y.max(1e-12).ln()
                            } else {
                                (1.0 - y).max(1e-12).ln()
                            };
                            let g = (label - y) * lr;
                            for d in 0..dim {
                                hidden_grad[d] += g * output[out_off + d];
                            }
                            for d in 0..dim {
                                output[out_off + d] += g * hidden[d];
                            }
                        }
                        iter_pairs += 1;

                        // distribute the hidden gradient over the mean's parts
                        let row = input.row_mut(input_word);
                        for d in 0..dim {
                            row[d] += hidden_grad[d] / parts;
                        }
                        for &r in grams {
                            let row = subwords.row_mut(r);
                            for d in 0..dim {
                                row[d] += hidden_grad[d] / parts;
                            }
                        }
                    }
                }
            }
        }
        loss_trace.push(if iter_pairs > 0 {
            iter_loss / iter_pairs as f64
        } else {
            0.0
        });
    }

    Ok((
        TrainedEmbedding {
            table: input,
            loss_trace,
        },
        subwords,
    ))
}
