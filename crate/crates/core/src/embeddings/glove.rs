//! Co-occurrence weighted least-squares embeddings with AdaGrad updates.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::text::TokenizedTweet;

use super::{Channel, EmbeddingTable, TrainedEmbedding, Vocabulary};

#[derive(Debug, Clone)]
pub struct GloveConfig {
    pub dim: usize,
    pub window: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub x_max: f64,
    pub weight_alpha: f64,
    pub seed: u64,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            dim: 100,
            window: 5,
            learning_rate: 0.01,
            epochs: 10,
            x_max: 100.0,
            weight_alpha: 0.75,
            seed: 1,
        }
    }
}

/// Symmetric co-occurrence counts with 1/distance weighting. Both (i,j) and
/// (j,i) are stored, so `X[(i,j)] == X[(j,i)]` by construction.
pub fn build_cooccurrence(
    corpus: &[TokenizedTweet],
    vocab: &Vocabulary,
    window: usize,
) -> HashMap<(usize, usize), f64> {
    let mut counts: HashMap<(usize, usize), f64> = HashMap::new();
    for tweet in corpus {
        let ids = vocab.encode_known(tweet);
        for i in 0..ids.len() {
            let hi = (i + window).min(ids.len().saturating_sub(1));
            for j in (i + 1)..=hi {
                if j >= ids.len() {
                    break;
                }
                let w = 1.0 / (j - i) as f64;
                *counts.entry((ids[i], ids[j])).or_insert(0.0) += w;
                *counts.entry((ids[j], ids[i])).or_insert(0.0) += w;
            }
        }
    }
    counts
}

/// Train co-occurrence factorization vectors. The returned table is the sum
/// of word and context vectors. Deterministic given the seed.
pub fn train_glove(
    corpus: &[TokenizedTweet],
    vocab: &Vocabulary,
    config: &GloveConfig,
) -> Result<TrainedEmbedding> {
    if config.window == 0 {
        return Err(Error::config("window must be >= 1"));
    }
    if config.learning_rate <= 0.0 {
        return Err(Error::config("learning_rate must be positive"));
    }

    let cooc = build_cooccurrence(corpus, vocab, config.window);
    let mut pairs: Vec<(usize, usize, f64)> = cooc
        .iter()
        .filter(|&(_, &x)| x > 0.0)
        .map(|(&(i, j), &x)| (i, j, x))
        .collect();
    if pairs.is_empty() {
        return Err(Error::data("co-occurrence matrix is all zero"));
    }
    pairs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    let dim = config.dim;
    let v = vocab.len();
    let mut gen = rng::seeded(config.seed);
    let mut w_main = vec![0.0f64; v * dim];
    let mut w_ctx = vec![0.0f64; v * dim];
    let mut b_main = vec![0.0f64; v];
    let mut b_ctx = vec![0.0f64; v];
    for row in 1..v {
        for d in 0..dim {
            w_main[row * dim + d] = (gen.gen_range(0.0..1.0) - 0.5) / dim as f64;
            w_ctx[row * dim + d] = (gen.gen_range(0.0..1.0) - 0.5) / dim as f64;
        }
        b_main[row] = (gen.gen_range(0.0..1.0) - 0.5) / dim as f64;
        b_ctx[row] = (gen.gen_range(0.0..1.0) - 0.5) / dim as f64;
    }

    if config.epochs == 0 {
        log::warn!("epochs=0: returning the randomly initialized table");
        return Ok(TrainedEmbedding {
            table: summed_table(vocab, dim, &w_main, &w_ctx),
            loss_trace: Vec::new(),
        });
    }

    // AdaGrad accumulators
    let mut g_main = vec![1.0f64; v * dim];
    let mut g_ctx = vec![1.0f64; v * dim];
    let mut gb_main = vec![1.0f64; v];
    let mut gb_ctx = vec![1.0f64; v];

    let lr = config.learning_rate;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for _epoch in 0..config.epochs {
        rng::shuffle(&mut order, &mut gen);
        let mut epoch_loss = 0.0;
        for &p in &order {
            let (i, j, x) = pairs[p];
            let oi = i * dim;
            let oj = j * dim;
            let mut dot = b_main[i] + b_ctx[j];
            for d in 0..dim {
                dot += w_main[oi + d] * w_ctx[oj + d];
            }
            let diff = dot - x.ln();
            let fx = if x < config.x_max {
                (x / config.x_max).powf(config.weight_alpha)
            } else {
                1.0
            };
            epoch_loss += 0.5 * fx * diff * diff;
            let fdiff = fx * diff;

            for d in 0..dim {
                let grad_main = fdiff * w_ctx[oj + d];
                let grad_ctx = fdiff * w_main[oi + d];
                w_main[oi + d] -= lr * grad_main / g_main[oi + d].sqrt();
                w_ctx[oj + d] -= lr * grad_ctx / g_ctx[oj + d].sqrt();
                g_main[oi + d] += grad_main * grad_main;
                g_ctx[oj + d] += grad_ctx * grad_ctx;
            }
            b_main[i] -= lr * fdiff / gb_main[i].sqrt();
            b_ctx[j] -= lr * fdiff / gb_ctx[j].sqrt();
            gb_main[i] += fdiff * fdiff;
            gb_ctx[j] += fdiff * fdiff;
        }
        loss_trace.push(epoch_loss / pairs.len() as f64);
    }

    Ok(TrainedEmbedding {
        table: summed_table(vocab, dim, &w_main, &w_ctx),
        loss_trace,
    })
}

fn summed_table(vocab: &Vocabulary, dim: usize, w_main: &[f64], w_ctx: &[f64]) -> EmbeddingTable {
    let mut table = EmbeddingTable::zeros(Channel::Glove, vocab.len(), dim);
    for i in 1..vocab.len() {
        let row = table.row_mut(i);
        for d in 0..dim {
            row[d] = w_main[i * dim + d] + w_ctx[i * dim + d];
        }
    }
    table
}
