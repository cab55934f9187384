//! Skip-gram with negative sampling, trained single-threaded from a seed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};
use crate::text::TokenizedTweet;

use super::{Channel, EmbeddingTable, TrainedEmbedding, Vocabulary};

#[derive(Debug, Clone)]
pub struct Word2VecConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub alpha: f64,
    pub iters: usize,
    pub seed: u64,
}

impl Default for Word2VecConfig {
    fn default() -> Self {
        Word2VecConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            alpha: 0.025,
            iters: 5,
            seed: 1,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cumulative unigram distribution with the 3/4-power smoothing, over
/// vocabulary indices 1..V. Sampling is a binary search over it.
pub(crate) struct UnigramSampler {
    cumulative: Vec<f64>,
}

impl UnigramSampler {
    pub(crate) fn new(vocab: &Vocabulary) -> Self {
        let mut cumulative = Vec::with_capacity(vocab.len() - 1);
        let mut acc = 0.0;
        for (idx, _) in vocab.iter_tokens() {
            acc += (vocab.count(idx) as f64).powf(0.75);
            cumulative.push(acc);
        }
        UnigramSampler { cumulative }
    }

    pub(crate) fn sample(&self, rng: &mut SeededRng) -> usize {
        let total = *self.cumulative.last().expect("nonempty vocab");
        let u = rng.gen_range(0.0..total);
        // prefix index + 1 converts back to vocabulary indices
        self.cumulative.partition_point(|&c| c <= u) + 1
    }
}

fn init_table(channel: Channel, vocab_len: usize, dim: usize, rng: &mut SeededRng) -> EmbeddingTable {
    let mut table = EmbeddingTable::zeros(channel, vocab_len, dim);
    for i in 1..vocab_len {
        for v in table.row_mut(i) {
            *v = (rng.gen_range(0.0..1.0) - 0.5) / dim as f64;
        }
    }
    table
}

pub(crate) fn validate_sgns(window: usize, iters: usize, alpha: f64) -> Result<()> {
    if iters == 0 {
        return Err(Error::config("iters must be >= 1"));
    }
    if window == 0 {
        return Err(Error::config("window must be >= 1"));
    }
    if alpha <= 0.0 {
        return Err(Error::config("alpha must be positive"));
    }
    Ok(())
}

/// Train skip-gram negative-sampling vectors. Deterministic given the seed.
pub fn train_word2vec(
    corpus: &[TokenizedTweet],
    vocab: &Vocabulary,
    config: &Word2VecConfig,
) -> Result<TrainedEmbedding> {
    validate_sgns(config.window, config.iters, config.alpha)?;
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
    let mut input = init_table(Channel::Word2Vec, vocab.len(), dim, &mut gen);
    let mut output = vec![0.0f64; vocab.len() * dim];
    let sampler = UnigramSampler::new(vocab);

    let total_schedule = (total_words * config.iters) as f64;
    let mut processed = 0usize;
    let mut loss_trace = Vec::with_capacity(config.iters);
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
                        hidden_grad.fill(0.0);
                        let in_off = input_word * dim;
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
                                f += input.data()[in_off + d] * output[out_off + d];
                            }
                            let y = sigmoid(f);
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
                                output[out_off + d] += g * input.data()[in_off + d];
                            }
                        }
                        iter_pairs += 1;
                        let row = input.row_mut(input_word);
                        for d in 0..dim {
                            row[d] += hidden_grad[d];
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

    Ok(TrainedEmbedding {
        table: input,
        loss_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    /// Corpus where tokens A and B appear in identical contexts and a set of
    /// filler tokens appear in unrelated ones.
    fn interchangeable_corpus(seed: u64) -> Vec<TokenizedTweet> {
        use rand::Rng;
        let mut gen = rng::seeded(seed);
        let mut tweets = Vec::new();
        for i in 0..300 {
            let subject = if gen.gen_bool(0.5) { "aaa" } else { "bbb" };
            tweets.push(TokenizedTweet {
                original_id: format!("c{i}"),
                tokens: vec![
                    "the".into(),
                    subject.into(),
                    "runs".into(),
                    "fast".into(),
                    "today".into(),
                ],
                indices: Vec::new(),
            });
            tweets.push(TokenizedTweet {
                original_id: format!("f{i}"),
                tokens: vec![
                    "stock".into(),
                    "market".into(),
                    "going".into(),
                    "up".into(),
                    "again".into(),
                ],
                indices: Vec::new(),
            });
        }
        tweets
    }

    #[test]
    fn interchangeable_tokens_end_up_close() {
        // Oracle: controlled distributional test; tokens in identical
        // contexts should be closer to each other than to an unrelated one.
        let mut wins = 0;
        for seed in 0..20u64 {
            let corpus = interchangeable_corpus(seed);
            let vocab = Vocabulary::build(&corpus, 1).unwrap();
            let cfg = Word2VecConfig {
                dim: 24,
                window: 2,
                negatives: 5,
                alpha: 0.05,
                iters: 8,
                seed,
            };
            let trained = train_word2vec(&corpus, &vocab, &cfg).unwrap();
            let a = trained.table.row(vocab.get("aaa").unwrap());
            let b = trained.table.row(vocab.get("bbb").unwrap());
            let unrelated = trained.table.row(vocab.get("market").unwrap());
            if cosine(a, b) > cosine(a, unrelated) {
                wins += 1;
            }
        }
        assert!(wins >= 18, "only {wins}/20 seeds placed the pair closer");
    }

    #[test]
    fn loss_decreases_over_iterations() {
        let corpus = interchangeable_corpus(3);
        let vocab = Vocabulary::build(&corpus, 1).unwrap();
        let cfg = Word2VecConfig {
            dim: 24,
            window: 2,
            negatives: 5,
            alpha: 0.05,
            iters: 5,
            seed: 3,
        };
        let trained = train_word2vec(&corpus, &vocab, &cfg).unwrap();
        assert_eq!(trained.loss_trace.len(), 5);
        assert!(
            trained.loss_trace[4] < trained.loss_trace[0],
            "loss trace {:?} did not improve",
            trained.loss_trace
        );
    }

    #[test]
    fn zero_negatives_clamped() {
        let corpus = interchangeable_corpus(1);
        let vocab = Vocabulary::build(&corpus, 1).unwrap();
        let cfg = Word2VecConfig {
            dim: 8,
            window: 2,
            negatives: 0,
            alpha: 0.025,
            iters: 1,
            seed: 1,
        };
        // must not fail; the floor of one negative keeps the objective defined
        assert!(train_word2vec(&corpus, &vocab, &cfg).is_ok());
    }

    #[test]
    fn invalid_config_rejected() {
        let corpus = interchangeable_corpus(1);
        let vocab = Vocabulary::build(&corpus, 1).unwrap();
        for (window, iters) in [(0usize, 5usize), (5, 0)] {
            let cfg = Word2VecConfig {
                dim: 8,
                window,
                negatives: 5,
                alpha: 0.025,
                iters,
                seed: 1,
            };
            assert!(train_word2vec(&corpus, &vocab, &cfg).is_err());
        }
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = interchangeable_corpus(2);
        let vocab = Vocabulary::build(&corpus, 1).unwrap();
        let cfg = Word2VecConfig {
            dim: 16,
            window: 2,
            negatives: 5,
            alpha: 0.025,
            iters: 2,
            seed: 42,
        };
        let a = train_word2vec(&corpus, &vocab, &cfg).unwrap();
        let b = train_word2vec(&corpus, &vocab, &cfg).unwrap();
        assert_eq!(a.table.data(), b.table.data());
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn entries_finite_and_padding_zero() {
        let corpus = interchangeable_corpus(9);
        let vocab = Vocabulary::build(&corpus, 1).unwrap();
        for seed in 0..10u64 {
            let cfg = Word2VecConfig {
                dim: 12,
                window: 2,
                negatives: 3,
                alpha: 0.05,
                iters: 2,
                seed,
            };
            let trained = train_word2vec(&corpus, &vocab, &cfg).unwrap();
            assert!(trained.table.all_finite());
            assert!(trained.table.row(0).iter().all(|&v| v == 0.0));
        }
    }
}
