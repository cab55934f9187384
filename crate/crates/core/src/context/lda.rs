//! Topic model trained by collapsed Gibbs sampling.

use rand::Rng;

use crate::embeddings::Vocabulary;
use crate::error::{Error, Result};
use crate::rng;
use crate::text::TokenizedTweet;

#[derive(Debug, Clone)]
pub struct LdaConfig {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 40,
            alpha: 0.1,
            beta: 0.01,
            sweeps: 50,
            seed: 1,
        }
    }
}

/// Trained topic model: normalized topic-word and document-topic
/// distributions plus the per-sweep corpus log-likelihood trace.
#[derive(Debug, Clone)]
pub struct TopicModel {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    vocab_size: usize,
    topic_word: Vec<f64>,
    doc_topic: Vec<f64>,
    pub log_likelihood: Vec<f64>,
}

/// Lanczos approximation (g = 7, n = 9), good to ~15 significant digits for
/// the positive arguments the sampler produces.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = COEFFS[0];
        for (i, c) in COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

impl TopicModel {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// phi row of a topic (probabilities over vocabulary indices 1..=V).
    pub fn topic_word_row(&self, k: usize) -> &[f64] {
        &self.topic_word[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    /// theta row of a training document.
    pub fn doc_topic_row(&self, d: usize) -> &[f64] {
        &self.doc_topic[d * self.topics..(d + 1) * self.topics]
    }

    pub fn num_docs(&self) -> usize {
        self.doc_topic.len() / self.topics
    }

    /// Deterministic fold-in inference of topic proportions for a document
    /// given as vocabulary indices (1-based; callers drop OOV tokens).
    pub fn infer_doc(&self, token_ids: &[usize]) -> Vec<f64> {
        let k = self.topics;
        let mut theta = vec![1.0 / k as f64; k];
        if token_ids.is_empty() {
            return theta;
        }
        for _ in 0..20 {
            let mut gamma = vec![self.alpha; k];
            for &w in token_ids {
                let mut q = vec![0.0; k];
                let mut qsum = 0.0;
                for t in 0..k {
                    let v = theta[t] * self.topic_word_row(t)[w - 1];
                    q[t] = v;
                    qsum += v;
                }
                if qsum <= 0.0 {
                    continue;
                }
                for t in 0..k {
                    gamma[t] += q[t] / qsum;
                }
            }
            let gsum: f64 = gamma.iter().sum();
            for t in 0..k {
                theta[t] = gamma[t] / gsum;
            }
        }
        theta
    }

    /// Argmax topic; ties break to the lowest index.
    pub fn dominant_topic(&self, proportions: &[f64]) -> usize {
        let mut best = 0;
        for (i, &p) in proportions.iter().enumerate() {
            if p > proportions[best] {
                best = i;
            }
        }
        best
    }

    /// Highest-probability vocabulary index of a topic (1-based); ties break
    /// to the lowest index.
    pub fn top_word(&self, topic: usize) -> usize {
        let row = self.topic_word_row(topic);
        let mut best = 0;
        for (i, &p) in row.iter().enumerate() {
            if p > row[best] {
                best = i;
            }
        }
        best + 1
    }

    pub fn from_parts(
        topics: usize,
        alpha: f64,
        beta: f64,
        vocab_size: usize,
        topic_word: Vec<f64>,
        doc_topic: Vec<f64>,
    ) -> Self {
        TopicModel {
            topics,
            alpha,
            beta,
            vocab_size,
            topic_word,
            doc_topic,
            log_likelihood: Vec::new(),
        }
    }

    pub fn raw(&self) -> (&[f64], &[f64]) {
        (&self.topic_word, &self.doc_topic)
    }
}

/// Train by collapsed Gibbs sampling; deterministic under the seed.
pub fn train_lda(
    corpus: &[TokenizedTweet],
    vocab: &Vocabulary,
    config: &LdaConfig,
) -> Result<TopicModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("lda training corpus".into()));
    }
    let v = vocab.len() - 1; // real vocabulary types
    let k = config.topics;
    if k == 0 {
        return Err(Error::config("num_topics must be >= 1"));
    }
    if k > v {
        return Err(Error::config(format!(
            "num_topics {k} exceeds vocabulary size {v}"
        )));
    }
    if config.sweeps == 0 {
        return Err(Error::config("sweeps must be >= 1"));
    }

    // Documents as 0-based word ids (vocab index - 1), OOV dropped.
    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|t| vocab.encode_known(t).iter().map(|&i| i - 1).collect())
        .collect();
    let n_docs = docs.len();

    let mut gen = rng::seeded(config.seed);
    let mut assignments: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().map(|_| gen.gen_range(0..k)).collect())
        .collect();

    let mut n_dk = vec![0u32; n_docs * k];
    let mut n_kv = vec![0u32; k * v];
    let mut n_k = vec![0u32; k];
    for (d, doc) in docs.iter().enumerate() {
        for (i, &w) in doc.iter().enumerate() {
            let z = assignments[d][i];
            n_dk[d * k + z] += 1;
            n_kv[z * v + w] += 1;
            n_k[z] += 1;
        }
    }

    let alpha = config.alpha;
    let beta = config.beta;
    let v_beta = v as f64 * beta;
    let mut weights = vec![0.0f64; k];
    let mut log_likelihood = Vec::with_capacity(config.sweeps);

    for _sweep in 0..config.sweeps {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = assignments[d][i];
                n_dk[d * k + old] -= 1;
                n_kv[old * v + w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (f64::from(n_dk[d * k + t]) + alpha)
                        * (f64::from(n_kv[t * v + w]) + beta)
                        / (f64::from(n_k[t]) + v_beta);
                    weights[t] = p;
                    total += p;
                }
                let mut u = gen.gen_range(0.0..total);
                let mut new = k - 1;
                for (t, &p) in weights.iter().enumerate() {
                    if u < p {
                        new = t;
                        break;
                    }
                    u -= p;
                }

                assignments[d][i] = new;
                n_dk[d * k + new] += 1;
                n_kv[new * v + w] += 1;
                n_k[new] += 1;
            }
        }

        // collapsed corpus log-likelihood of the word assignments
        let mut ll = k as f64 * (ln_gamma(v_beta) - v as f64 * ln_gamma(beta));
        for t in 0..k {
            for w in 0..v {
                ll += ln_gamma(f64::from(n_kv[t * v + w]) + beta);
            }
            ll -= ln_gamma(f64::from(n_k[t]) + v_beta);
        }
        log_likelihood.push(ll);
    }

    // point estimates
    let mut topic_word = vec![0.0f64; k * v];
    for t in 0..k {
        let denom = f64::from(n_k[t]) + v_beta;
        for w in 0..v {
            topic_word[t * v + w] = (f64::from(n_kv[t * v + w]) + beta) / denom;
        }
    }
    let mut doc_topic = vec![0.0f64; n_docs * k];
    for (d, doc) in docs.iter().enumerate() {
        let denom = doc.len() as f64 + k as f64 * alpha;
        for t in 0..k {
            doc_topic[d * k + t] = (f64::from(n_dk[d * k + t]) + alpha) / denom;
        }
    }

    Ok(TopicModel {
        topics: k,
        alpha,
        beta,
        vocab_size: v,
        topic_word,
        doc_topic,
        log_likelihood,
    })
}

/// The Eq.-1 topic term: the top word of a tweet's dominant topic, or None
/// when the tweet has no in-vocabulary token (null token, zero vector).
pub fn lda_topic_token(
    tweet: &TokenizedTweet,
    model: &TopicModel,
    vocab: &Vocabulary,
) -> Option<String> {
    let ids = vocab.encode_known(tweet);
    if ids.is_empty() {
        return None;
    }
    let theta = model.infer_doc(&ids);
    let topic = model.dominant_topic(&theta);
    let word = model.top_word(topic);
    Some(vocab.token(word).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted_corpus(n_docs: usize, seed: u64) -> (Vec<TokenizedTweet>, Vec<usize>) {
        // two disjoint vocabularies
        let topic_a = ["kernel", "exploit", "patch", "server", "breach"];
        let topic_b = ["coffee", "sunrise", "garden", "picnic", "melody"];
        let mut gen = rng::seeded(seed);
        let mut docs = Vec::with_capacity(n_docs);
        let mut labels = Vec::with_capacity(n_docs);
        for i in 0..n_docs {
            let is_a = i % 2 == 0;
            let words = if is_a { &topic_a } else { &topic_b };
            let len = gen.gen_range(6..12);
            let tokens: Vec<String> = (0..len)
                .map(|_| words[gen.gen_range(0..words.len())].to_string())
                .collect();
            docs.push(TokenizedTweet {
                original_id: format!("d{i}"),
                tokens,
                indices: Vec::new(),
            });
            labels.push(if is_a { 0 } else { 1 });
        }
        (docs, labels)
    }

    /// Fraction of documents whose dominant learned topic agrees with the
    /// best one-to-one mapping onto planted topics.
    pub(crate) fn topic_purity(model: &TopicModel, labels: &[usize]) -> f64 {
        let n = labels.len();
        let mut confusion = [[0usize; 2]; 2];
        for (d, &lab) in labels.iter().enumerate() {
            let theta = model.doc_topic_row(d);
            let dominant = model.dominant_topic(theta);
            confusion[lab][dominant.min(1)] += 1;
        }
        let direct = confusion[0][0] + confusion[1][1];
        let swapped = confusion[0][1] + confusion[1][0];
        direct.max(swapped) as f64 / n as f64
    }

    #[test]
    fn planted_topics_recovered() {
        // Oracle: planted-partition purity.
        let (docs, labels) = planted_corpus(400, 3);
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let cfg = LdaConfig {
            topics: 2,
            sweeps: 50,
            seed: 3,
            ..Default::default()
        };
        let model = train_lda(&docs, &vocab, &cfg).unwrap();
        let purity = topic_purity(&model, &labels);
        assert!(purity >= 0.9, "purity {purity} < 0.9");
    }

    #[test]
    fn log_likelihood_trend_improves() {
        let (docs, _) = planted_corpus(200, 5);
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let cfg = LdaConfig {
            topics: 2,
            sweeps: 30,
            seed: 5,
            ..Default::default()
        };
        let model = train_lda(&docs, &vocab, &cfg).unwrap();
        assert_eq!(model.log_likelihood.len(), 30);
        assert!(
            model.log_likelihood[29] >= model.log_likelihood[0],
            "ll trace did not improve: first {} last {}",
            model.log_likelihood[0],
            model.log_likelihood[29]
        );
    }

    #[test]
    fn topic_word_rows_normalized() {
        let (docs, _) = planted_corpus(100, 7);
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let cfg = LdaConfig {
            topics: 4,
            sweeps: 10,
            seed: 7,
            ..Default::default()
        };
        let model = train_lda(&docs, &vocab, &cfg).unwrap();
        for t in 0..model.topics {
            let sum: f64 = model.topic_word_row(t).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "topic {t} sums to {sum}");
        }
        for d in 0..model.num_docs() {
            let sum: f64 = model.doc_topic_row(d).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "doc {d} sums to {sum}");
        }
    }

    #[test]
    fn single_topic_is_degenerate() {
        let (docs, _) = planted_corpus(50, 9);
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let cfg = LdaConfig {
            topics: 1,
            sweeps: 5,
            seed: 9,
            ..Default::default()
        };
        let model = train_lda(&docs, &vocab, &cfg).unwrap();
        for d in 0..model.num_docs() {
            assert!((model.doc_topic_row(d)[0] - 1.0).abs() < 1e-9);
        }
        let theta = model.infer_doc(&[1, 2]);
        assert_eq!(theta, vec![1.0]);
    }

    #[test]
    fn too_many_topics_is_config_error() {
        let (docs, _) = planted_corpus(20, 1);
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let cfg = LdaConfig {
            topics: 1000,
            ..Default::default()
        };
        assert!(train_lda(&docs, &vocab, &cfg).is_err());
    }

    #[test]
    fn topic_token_from_planted_corpus() {
        // Oracle: planted topics; a pure topic-A tweet must surface one of
        // the topic-A words.
        let (docs, _) = planted_corpus(400, 11);
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let cfg = LdaConfig {
            topics: 2,
            sweeps: 50,
            seed: 11,
            ..Default::default()
        };
        let model = train_lda(&docs, &vocab, &cfg).unwrap();
        let tweet = TokenizedTweet {
            original_id: "probe".into(),
            tokens: vec!["exploit".into(), "patch".into(), "server".into()],
            indices: Vec::new(),
        };
        let token = lda_topic_token(&tweet, &model, &vocab).unwrap();
        let topic_a = ["kernel", "exploit", "patch", "server", "breach"];
        assert!(
            topic_a.contains(&token.as_str()),
            "{token} is not a planted topic-A word"
        );

        // determinism
        let again = lda_topic_token(&tweet, &model, &vocab).unwrap();
        assert_eq!(token, again);
    }

    #[test]
    fn all_oov_tweet_yields_null() {
        let (docs, _) = planted_corpus(50, 13);
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let cfg = LdaConfig {
            topics: 2,
            sweeps: 5,
            seed: 13,
            ..Default::default()
        };
        let model = train_lda(&docs, &vocab, &cfg).unwrap();
        let tweet = TokenizedTweet {
            original_id: "oov".into(),
            tokens: vec!["zzzzz".into(), "qqqqq".into()],
            indices: Vec::new(),
        };
        assert!(lda_topic_token(&tweet, &model, &vocab).is_none());
    }

    #[test]
    fn ln_gamma_matches_known_values() {
        // Gamma(1)=1, Gamma(2)=1, Gamma(5)=24, Gamma(0.5)=sqrt(pi)
        assert!((ln_gamma(1.0)).abs() < 1e-12);
        assert!((ln_gamma(2.0)).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-10);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-10);
    }
}
