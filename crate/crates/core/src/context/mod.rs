//! Task-specific contextual embedding of a tweet: the meta-embeddings of
//! its topic token, entity tokens and relation tokens, averaged with a
//! denominator of N + M + 1.

pub mod crf;
pub mod ie;
pub mod lda;

pub use crf::{
    read_bio, train_crf_ner, validate_bio, write_bio, CrfConfig, CrfModel, LabeledSequence,
    NerModel, NER_TAGS,
};
pub use ie::{ie_extract, pos_tag, relation_tokens, PosTag, RelationTriple};
pub use lda::{lda_topic_token, train_lda, LdaConfig, TopicModel};

use std::collections::{HashMap, HashSet};

use crate::data::SeedKeywordSet;
use crate::embeddings::EmbeddingChannels;
use crate::error::Result;
use crate::meta::MetaEncoder;
use crate::text::TokenizedTweet;

/// Which contextual channels participate; disabled channels contribute
/// zero vectors and zero counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextChannels {
    pub lda: bool,
    pub ner: bool,
    pub ie: bool,
}

impl ContextChannels {
    pub fn all() -> Self {
        ContextChannels {
            lda: true,
            ner: true,
            ie: true,
        }
    }

    pub fn none() -> Self {
        ContextChannels {
            lda: false,
            ner: false,
            ie: false,
        }
    }
}

impl Default for ContextChannels {
    fn default() -> Self {
        Self::all()
    }
}

/// The contextual vector plus the entity / relation token counts that
/// entered the denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualEmbedding {
    pub vector: Vec<f64>,
    pub ner_count: usize,
    pub ie_count: usize,
}

/// Combine topic, entity and relation tokens through the meta-encoder:
/// the topic term, the sum over N entity tokens and the sum over M relation
/// tokens, divided by N + M + 1. Channels that produce nothing contribute
/// the zero vector without incrementing a count.
pub fn contextual_encode(
    tweet: &TokenizedTweet,
    topic: &TopicModel,
    ner: &NerModel,
    channels: ContextChannels,
    embeddings: &EmbeddingChannels,
    encoder: &MetaEncoder,
) -> Result<ContextualEmbedding> {
    let dim = encoder.dim;
    let mut sum = vec![0.0f64; dim];
    let embed = |token: &str| -> Result<Vec<f64>> {
        encoder.encode_token(&embeddings.lookup_stack(token))
    };

    if channels.lda {
        if let Some(token) = lda_topic_token(tweet, topic, &embeddings.vocab) {
            let v = embed(&token)?;
            for (s, x) in sum.iter_mut().zip(&v) {
                *s += x;
            }
        }
    }

    let mut ner_count = 0usize;
    if channels.ner {
        for token in ner.entity_tokens(tweet) {
            let v = embed(&token)?;
            for (s, x) in sum.iter_mut().zip(&v) {
                *s += x;
            }
            ner_count += 1;
        }
    }

    let mut ie_count = 0usize;
    if channels.ie {
        let triples = ie_extract(tweet);
        for token in relation_tokens(&triples) {
            let v = embed(&token)?;
            for (s, x) in sum.iter_mut().zip(&v) {
                *s += x;
            }
            ie_count += 1;
        }
    }

    let denom = (ner_count + ie_count + 1) as f64;
    for s in sum.iter_mut() {
        *s /= denom;
    }
    Ok(ContextualEmbedding {
        vector: sum,
        ner_count,
        ie_count,
    })
}

/// Build an entity gazetteer from the seed phrases plus corpus collocates:
/// non-stopword tokens that occur mostly inside seed-matched tweets.
pub fn build_gazetteer(
    corpus: &[TokenizedTweet],
    raw_texts: &HashMap<String, String>,
    seeds: &SeedKeywordSet,
    max_collocates: usize,
) -> HashSet<String> {
    let mut gazetteer: HashSet<String> = HashSet::new();
    for phrase in seeds.keywords() {
        for word in phrase.split(' ') {
            gazetteer.insert(word.to_string());
        }
    }

    let stop: HashSet<&str> = [
        "the", "a", "an", "of", "in", "on", "at", "to", "and", "or", "is", "was", "are", "for",
        "with", "this", "that", "it", "as", "by", "from", "be", "has", "have",
    ]
    .into_iter()
    .collect();

    let mut inside: HashMap<&str, u32> = HashMap::new();
    let mut outside: HashMap<&str, u32> = HashMap::new();
    for tweet in corpus {
        let matched = raw_texts
            .get(&tweet.original_id)
            .map(|text| seeds.matches(text))
            .unwrap_or(false);
        for token in &tweet.tokens {
            if stop.contains(token.as_str()) || token.len() < 3 {
                continue;
            }
            if matched {
                *inside.entry(token.as_str()).or_insert(0) += 1;
            } else {
                *outside.entry(token.as_str()).or_insert(0) += 1;
            }
        }
    }

    let mut candidates: Vec<(&str, u32)> = inside
        .iter()
        .filter(|(tok, &n_in)| {
            let n_out = outside.get(*tok).copied().unwrap_or(0);
            n_in >= 3 && n_in as f64 / (n_in + n_out) as f64 >= 0.8
        })
        .map(|(&tok, &n)| (tok, n))
        .collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    for (tok, _) in candidates.into_iter().take(max_collocates) {
        gazetteer.insert(tok.to_string());
    }
    gazetteer
}

/// Project a gazetteer onto tweets to produce BIO training data: greedy
/// longest match over gazetteer tokens, everything else O.
pub fn distant_labels(
    corpus: &[TokenizedTweet],
    gazetteer: &HashSet<String>,
) -> Vec<LabeledSequence> {
    corpus
        .iter()
        .filter(|t| !t.tokens.is_empty())
        .map(|tweet| {
            let mut tags = Vec::with_capacity(tweet.tokens.len());
            let mut prev_hit = false;
            for token in &tweet.tokens {
                if gazetteer.contains(token.as_str()) {
                    tags.push(if prev_hit { "I-ENT" } else { "B-ENT" }.to_string());
                    prev_hit = true;
                } else {
                    tags.push("O".to_string());
                    prev_hit = false;
                }
            }
            LabeledSequence {
                tokens: tweet.tokens.clone(),
                tags,
            }
        })
        .collect()
}
