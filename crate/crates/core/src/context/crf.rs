//! Linear-chain CRF with log-space forward/backward, Viterbi decoding and
//! L2-regularized maximum-likelihood training, plus the entity tagger built
//! on it.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::text::{TokenizedTweet, NUM_TOKEN, URL_TOKEN, USER_TOKEN};

pub const NER_TAGS: [&str; 3] = ["O", "B-ENT", "I-ENT"];

#[derive(Debug, Clone)]
pub struct CrfConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
}

impl Default for CrfConfig {
    fn default() -> Self {
        CrfConfig {
            learning_rate: 0.01,
            l2: 1e-2,
            epochs: 50,
        }
    }
}

/// Chain CRF over binary position features. Scores:
/// start[y0] + sum_t emit(t, yt) + sum_t transition[y(t-1)][yt], where
/// emit(t, y) sums `emission[f][y]` over the active features f at t.
/// Forbidden transitions and start tags score -inf.
#[derive(Debug, Clone)]
pub struct CrfModel {
    pub tags: Vec<String>,
    n_features: usize,
    emission: Vec<f64>,   // n_features x n_tags
    transition: Vec<f64>, // n_tags x n_tags
    start: Vec<f64>,      // n_tags
    forbidden_transition: Vec<(usize, usize)>,
    forbidden_start: Vec<usize>,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

impl CrfModel {
    pub fn new(tags: Vec<String>, n_features: usize) -> Self {
        let n = tags.len();
        CrfModel {
            tags,
            n_features,
            emission: vec![0.0; n_features * n],
            transition: vec![0.0; n * n],
            start: vec![0.0; n],
            forbidden_transition: Vec::new(),
            forbidden_start: Vec::new(),
        }
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn forbid_transition(&mut self, from: usize, to: usize) {
        self.forbidden_transition.push((from, to));
    }

    pub fn forbid_start(&mut self, tag: usize) {
        self.forbidden_start.push(tag);
    }

    pub fn set_weights(&mut self, emission: Vec<f64>, transition: Vec<f64>, start: Vec<f64>) {
        assert_eq!(emission.len(), self.emission.len());
        assert_eq!(transition.len(), self.transition.len());
        assert_eq!(start.len(), self.start.len());
        self.emission = emission;
        self.transition = transition;
        self.start = start;
    }

    pub fn weights(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.emission, &self.transition, &self.start)
    }

    fn start_score(&self, y: usize) -> f64 {
        if self.forbidden_start.contains(&y) {
            f64::NEG_INFINITY
        } else {
            self.start[y]
        }
    }

    fn transition_score(&self, from: usize, to: usize) -> f64 {
        if self.forbidden_transition.contains(&(from, to)) {
            f64::NEG_INFINITY
        } else {
            self.transition[from * self.n_tags() + to]
        }
    }

    fn emit_score(&self, feats: &[usize], y: usize) -> f64 {
        let n = self.n_tags();
        feats.iter().map(|&f| self.emission[f * n + y]).sum()
    }

    /// Unnormalized log-score of one tag sequence.
    pub fn sequence_score(&self, feats: &[Vec<usize>], tags: &[usize]) -> f64 {
        assert_eq!(feats.len(), tags.len());
        if tags.is_empty() {
            return 0.0;
        }
        let mut score = self.start_score(tags[0]) + self.emit_score(&feats[0], tags[0]);
        for t in 1..tags.len() {
            score += self.transition_score(tags[t - 1], tags[t]);
            score += self.emit_score(&feats[t], tags[t]);
        }
        score
    }

    /// Log partition function by the forward algorithm.
    pub fn log_partition(&self, feats: &[Vec<usize>]) -> f64 {
        let n = self.n_tags();
        if feats.is_empty() {
            return 0.0;
        }
        let mut alpha: Vec<f64> = (0..n)
            .map(|y| self.start_score(y) + self.emit_score(&feats[0], y))
            .collect();
        let mut scratch = vec![0.0f64; n];
        for t in 1..feats.len() {
            let mut next = vec![f64::NEG_INFINITY; n];
            for (y, slot) in next.iter_mut().enumerate() {
                for (prev, val) in scratch.iter_mut().enumerate() {
                    *val = alpha[prev] + self.transition_score(prev, y);
                }
                *slot = log_sum_exp(&scratch) + self.emit_score(&feats[t], y);
            }
            alpha = next;
        }
        log_sum_exp(&alpha)
    }

    /// Most likely tag sequence. Ties break toward the lower tag index.
    pub fn viterbi(&self, feats: &[Vec<usize>]) -> Vec<usize> {
        let n = self.n_tags();
        if feats.is_empty() {
            return Vec::new();
        }
        let len = feats.len();
        let mut delta: Vec<f64> = (0..n)
            .map(|y| self.start_score(y) + self.emit_score(&feats[0], y))
            .collect();
        let mut backptr = vec![0usize; len * n];
        for t in 1..len {
            let mut next = vec![f64::NEG_INFINITY; n];
            for y in 0..n {
                let mut best_prev = 0usize;
                let mut best = f64::NEG_INFINITY;
                for prev in 0..n {
                    let s = delta[prev] + self.transition_score(prev, y);
                    if s > best {
                        best = s;
                        best_prev = prev;
                    }
                }
                next[y] = best + self.emit_score(&feats[t], y);
                backptr[t * n + y] = best_prev;
            }
            delta = next;
        }
        let mut last = 0usize;
        for y in 1..n {
            if delta[y] > delta[last] {
                last = y;
            }
        }
        let mut path = vec![0usize; len];
        path[len - 1] = last;
        for t in (1..len).rev() {
            path[t - 1] = backptr[t * n + path[t]];
        }
        path
    }

    /// Conditional log-likelihood of a labeled sequence.
    pub fn log_likelihood(&self, feats: &[Vec<usize>], tags: &[usize]) -> f64 {
        self.sequence_score(feats, tags) - self.log_partition(feats)
    }

    /// Log-likelihood and gradient (same layout as `flat_weights`) for one
    /// sequence, via forward-backward marginals.
    pub fn log_likelihood_and_grad(
        &self,
        feats: &[Vec<usize>],
        tags: &[usize],
        grad: &mut [f64],
    ) -> f64 {
        let n = self.n_tags();
        let len = feats.len();
        debug_assert_eq!(grad.len(), self.flat_len());
        if len == 0 {
            return 0.0;
        }

        // forward
        let mut alpha = vec![f64::NEG_INFINITY; len * n];
        for y in 0..n {
            alpha[y] = self.start_score(y) + self.emit_score(&feats[0], y);
        }
        let mut scratch = vec![0.0f64; n];
        for t in 1..len {
            for y in 0..n {
                for prev in 0..n {
                    scratch[prev] = alpha[(t - 1) * n + prev] + self.transition_score(prev, y);
                }
                alpha[t * n + y] = log_sum_exp(&scratch) + self.emit_score(&feats[t], y);
            }
        }
        let log_z = log_sum_exp(&alpha[(len - 1) * n..len * n]);

        // backward
        let mut beta = vec![f64::NEG_INFINITY; len * n];
        for y in 0..n {
            beta[(len - 1) * n + y] = 0.0;
        }
        for t in (0..len - 1).rev() {
            for y in 0..n {
                for (next_tag, val) in scratch.iter_mut().enumerate() {
                    *val = self.transition_score(y, next_tag)
                        + self.emit_score(&feats[t + 1], next_tag)
                        + beta[(t + 1) * n + next_tag];
                }
                beta[t * n + y] = log_sum_exp(&scratch);
            }
        }

        let (emit_off, trans_off, start_off) = self.offsets();

        // observed minus expected
        for t in 0..len {
            for y in 0..n {
                let marginal = (alpha[t * n + y] + beta[t * n + y] - log_z).exp();
                let observed = if tags[t] == y { 1.0 } else { 0.0 };
                let delta = observed - marginal;
                for &f in &feats[t] {
                    grad[emit_off + f * n + y] += delta;
                }
                if t == 0 {
                    grad[start_off + y] += delta;
                }
            }
        }
        for t in 1..len {
            for prev in 0..n {
                for y in 0..n {
                    let ts = self.transition_score(prev, y);
                    let marginal = if ts == f64::NEG_INFINITY {
                        0.0
                    } else {
                        (alpha[(t - 1) * n + prev]
                            + ts
                            + self.emit_score(&feats[t], y)
                            + beta[t * n + y]
                            - log_z)
                            .exp()
                    };
                    let observed = if tags[t - 1] == prev && tags[t] == y {
                        1.0
                    } else {
                        0.0
                    };
                    grad[trans_off + prev * n + y] += observed - marginal;
                }
            }
        }

        self.sequence_score(feats, tags) - log_z
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let emit = 0;
        let trans = self.emission.len();
        let start = trans + self.transition.len();
        (emit, trans, start)
    }

    pub fn flat_len(&self) -> usize {
        self.emission.len() + self.transition.len() + self.start.len()
    }

    pub fn flat_weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        out.extend_from_slice(&self.emission);
        out.extend_from_slice(&self.transition);
        out.extend_from_slice(&self.start);
        out
    }

    pub fn set_flat_weights(&mut self, w: &[f64]) {
        let (_, trans_off, start_off) = self.offsets();
        self.emission.copy_from_slice(&w[..trans_off]);
        self.transition.copy_from_slice(&w[trans_off..start_off]);
        self.start.copy_from_slice(&w[start_off..]);
    }

    /// L2-regularized gradient-ascent training on feature-index sequences.
    /// Returns the per-epoch objective (mean log-likelihood minus penalty).
    pub fn train(
        &mut self,
        dataset: &[(Vec<Vec<usize>>, Vec<usize>)],
        config: &CrfConfig,
    ) -> Result<Vec<f64>> {
        if dataset.is_empty() {
            return Err(Error::InsufficientData("no labeled sequences".into()));
        }
        if config.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        let n = dataset.len() as f64;
        let mut weights = self.flat_weights();
        let mut trace = Vec::with_capacity(config.epochs);

        for _ in 0..config.epochs {
            let mut grad = vec![0.0f64; self.flat_len()];
            let mut objective = 0.0;
            for (feats, tags) in dataset {
                objective += self.log_likelihood_and_grad(feats, tags, &mut grad);
            }
            objective /= n;
            for g in grad.iter_mut() {
                *g /= n;
            }
            let mut penalty = 0.0;
            for (g, w) in grad.iter_mut().zip(&weights) {
                *g -= config.l2 * w;
                penalty += 0.5 * config.l2 * w * w;
            }
            objective -= penalty;
            trace.push(objective);

            for (w, g) in weights.iter_mut().zip(&grad) {
                *w += config.learning_rate * g;
            }
            self.set_flat_weights(&weights);
        }
        Ok(trace)
    }
}

/// A token sequence with BIO tags, used for tagger training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSequence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

/// BIO validity: I-ENT may only follow B-ENT or I-ENT.
pub fn validate_bio(tags: &[String]) -> bool {
    let mut prev_entity = false;
    for tag in tags {
        match tag.as_str() {
            "O" => prev_entity = false,
            "B-ENT" => prev_entity = true,
            "I-ENT" => {
                if !prev_entity {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

fn token_shape(token: &str) -> String {
    let mut shape = String::new();
    let mut last = ' ';
    for c in token.chars() {
        let s = if c.is_ascii_digit() {
            'd'
        } else if c.is_alphabetic() {
            'x'
        } else {
            'p'
        };
        if s != last {
            shape.push(s);
            last = s;
        }
    }
    shape
}

fn is_placeholder(token: &str) -> bool {
    token == URL_TOKEN || token == USER_TOKEN || token == NUM_TOKEN
}

/// Feature strings for one position. The gazetteer feeds a lookup feature.
fn token_features(tokens: &[String], pos: usize, gazetteer: &HashSet<String>) -> Vec<String> {
    let token = &tokens[pos];
    let mut feats = vec![
        format!("w={token}"),
        format!("shape={}", token_shape(token)),
    ];
    let chars: Vec<char> = token.chars().collect();
    for k in 1..=3usize {
        if chars.len() >= k {
            let prefix: String = chars[..k].iter().collect();
            let suffix: String = chars[chars.len() - k..].iter().collect();
            feats.push(format!("pre{k}={prefix}"));
            feats.push(format!("suf{k}={suffix}"));
        }
    }
    if is_placeholder(token) {
        feats.push("placeholder".into());
    }
    if gazetteer.contains(token.as_str()) {
        feats.push("gazetteer".into());
    }
    if pos == 0 {
        feats.push("bos".into());
    } else {
        feats.push(format!("prev_w={}", tokens[pos - 1]));
    }
    if pos + 1 == tokens.len() {
        feats.push("eos".into());
    } else {
        feats.push(format!("next_w={}", tokens[pos + 1]));
    }
    feats
}

/// Entity tagger: CRF plus the frozen feature dictionary and gazetteer.
#[derive(Debug, Clone)]
pub struct NerModel {
    crf: CrfModel,
    feature_index: HashMap<String, usize>,
    gazetteer: HashSet<String>,
    pub objective_trace: Vec<f64>,
}

impl NerModel {
    fn encode_features(&self, tokens: &[String]) -> Vec<Vec<usize>> {
        (0..tokens.len())
            .map(|pos| {
                token_features(tokens, pos, &self.gazetteer)
                    .iter()
                    .filter_map(|f| self.feature_index.get(f).copied())
                    .collect()
            })
            .collect()
    }

    pub fn crf(&self) -> &CrfModel {
        &self.crf
    }

    pub fn parts(&self) -> (&CrfModel, &HashMap<String, usize>, &HashSet<String>) {
        (&self.crf, &self.feature_index, &self.gazetteer)
    }

    pub fn from_parts(
        crf: CrfModel,
        feature_index: HashMap<String, usize>,
        gazetteer: HashSet<String>,
    ) -> Self {
        NerModel {
            crf,
            feature_index,
            gazetteer,
            objective_trace: Vec::new(),
        }
    }

    /// Decode a tweet and return the tokens tagged as entities, in order.
    pub fn entity_tokens(&self, tweet: &TokenizedTweet) -> Vec<String> {
        if tweet.tokens.is_empty() {
            return Vec::new();
        }
        let feats = self.encode_features(&tweet.tokens);
        let path = self.crf.viterbi(&feats);
        path.iter()
            .zip(&tweet.tokens)
            .filter(|(&tag, _)| self.crf.tags[tag] != "O")
            .map(|(_, tok)| tok.clone())
            .collect()
    }

    /// Decoded tag names for a token sequence.
    pub fn decode_tags(&self, tokens: &[String]) -> Vec<String> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let feats = self.encode_features(tokens);
        self.crf
            .viterbi(&feats)
            .iter()
            .map(|&t| self.crf.tags[t].clone())
            .collect()
    }
}

/// Train the BIO entity tagger. Sequences must be BIO-consistent; the error
/// names the offending sequence.
pub fn train_crf_ner(
    sequences: &[LabeledSequence],
    gazetteer: &HashSet<String>,
    config: &CrfConfig,
) -> Result<NerModel> {
    if sequences.is_empty() {
        return Err(Error::InsufficientData("no labeled sequences".into()));
    }
    for (i, seq) in sequences.iter().enumerate() {
        if seq.tokens.len() != seq.tags.len() {
            return Err(Error::data(format!(
                "sequence {i}: {} tokens vs {} tags",
                seq.tokens.len(),
                seq.tags.len()
            )));
        }
        if !validate_bio(&seq.tags) {
            return Err(Error::data(format!(
                "sequence {i} ({:?}...) has invalid BIO tags",
                seq.tokens.first()
            )));
        }
    }

    // freeze the feature dictionary over the training data
    let mut feature_index: HashMap<String, usize> = HashMap::new();
    for seq in sequences {
        for pos in 0..seq.tokens.len() {
            for f in token_features(&seq.tokens, pos, gazetteer) {
                let next = feature_index.len();
                feature_index.entry(f).or_insert(next);
            }
        }
    }

    let tag_index: HashMap<&str, usize> = NER_TAGS
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, i))
        .collect();
    let dataset: Vec<(Vec<Vec<usize>>, Vec<usize>)> = sequences
        .iter()
        .map(|seq| {
            let feats = (0..seq.tokens.len())
                .map(|pos| {
                    token_features(&seq.tokens, pos, gazetteer)
                        .iter()
                        .map(|f| feature_index[f])
                        .collect()
                })
                .collect();
            let tags = seq.tags.iter().map(|t| tag_index[t.as_str()]).collect();
            (feats, tags)
        })
        .collect();

    let mut crf = CrfModel::new(
        NER_TAGS.iter().map(|s| s.to_string()).collect(),
        feature_index.len(),
    );
    // BIO structure: I-ENT cannot start a sequence or follow O
    let o = tag_index["O"];
    let i_ent = tag_index["I-ENT"];
    crf.forbid_start(i_ent);
    crf.forbid_transition(o, i_ent);

    let trace = crf.train(&dataset, config)?;
    Ok(NerModel {
        crf,
        feature_index,
        gazetteer: gazetteer.clone(),
        objective_trace: trace,
    })
}

/// Read BIO files: one `token<TAB>tag` (or space-separated) per line, blank
/// line between sequences.
pub fn read_bio(content: &str) -> Result<Vec<LabeledSequence>> {
    let mut sequences = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !tokens.is_empty() {
                sequences.push(LabeledSequence {
                    tokens: std::mem::take(&mut tokens),
                    tags: std::mem::take(&mut tags),
                });
            }
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let (Some(tok), Some(tag)) = (parts.next(), parts.next()) else {
            return Err(Error::data(format!(
                "line {}: expected 'token tag'",
                lineno + 1
            )));
        };
        tokens.push(tok.to_string());
        tags.push(tag.to_string());
    }
    if !tokens.is_empty() {
        sequences.push(LabeledSequence { tokens, tags });
    }
    Ok(sequences)
}

pub fn write_bio(sequences: &[LabeledSequence]) -> String {
    let mut out = String::new();
    for seq in sequences {
        for (tok, tag) in seq.tokens.iter().zip(&seq.tags) {
            out.push_str(tok);
            out.push('\t');
            out.push_str(tag);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    /// All tag sequences of the given length over n tags.
    fn enumerate_sequences(len: usize, n_tags: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..len {
            let mut next = Vec::new();
            for seq in &out {
                for t in 0..n_tags {
                    let mut s = seq.clone();
                    s.push(t);
                    next.push(s);
                }
            }
            out = next;
        }
        out
    }

    fn random_model(
        n_tags: usize,
        n_features: usize,
        gen: &mut rng::SeededRng,
    ) -> CrfModel {
        let tags = (0..n_tags).map(|i| format!("T{i}")).collect();
        let mut model = CrfModel::new(tags, n_features);
        let emission = (0..n_features * n_tags)
            .map(|_| gen.gen_range(-1.0..1.0))
            .collect();
        let transition = (0..n_tags * n_tags)
            .map(|_| gen.gen_range(-1.0..1.0))
            .collect();
        let start = (0..n_tags).map(|_| gen.gen_range(-1.0..1.0)).collect();
        model.set_weights(emission, transition, start);
        model
    }

    fn random_feats(
        len: usize,
        n_features: usize,
        gen: &mut rng::SeededRng,
    ) -> Vec<Vec<usize>> {
        (0..len)
            .map(|_| {
                let k = gen.gen_range(1..=3.min(n_features));
                (0..k).map(|_| gen.gen_range(0..n_features)).collect()
            })
            .collect()
    }

    #[test]
    fn partition_matches_enumeration() {
        // Oracle: exhaustive sum over all tag sequences.
        let mut gen = rng::seeded(21);
        for _case in 0..50 {
            let n_tags = gen.gen_range(2..=4);
            let n_features = gen.gen_range(2..=6);
            let len = gen.gen_range(1..=6);
            let model = random_model(n_tags, n_features, &mut gen);
            let feats = random_feats(len, n_features, &mut gen);

            let brute: f64 = log_sum_exp(
                &enumerate_sequences(len, n_tags)
                    .iter()
                    .map(|tags| model.sequence_score(&feats, tags))
                    .collect::<Vec<_>>(),
            );
            let forward = model.log_partition(&feats);
            let rel = (forward - brute).abs() / brute.abs().max(1e-12);
            assert!(rel < 1e-10, "forward {forward} vs brute {brute}");
        }
    }

    #[test]
    fn viterbi_matches_enumeration() {
        // Oracle: exhaustive argmax.
        let mut gen = rng::seeded(22);
        for _case in 0..50 {
            let n_tags = gen.gen_range(2..=4);
            let n_features = gen.gen_range(2..=6);
            let len = gen.gen_range(1..=6);
            let model = random_model(n_tags, n_features, &mut gen);
            let feats = random_feats(len, n_features, &mut gen);

            let best_brute = enumerate_sequences(len, n_tags)
                .into_iter()
                .max_by(|a, b| {
                    model
                        .sequence_score(&feats, a)
                        .partial_cmp(&model.sequence_score(&feats, b))
                        .unwrap()
                })
                .unwrap();
            let vit = model.viterbi(&feats);
            let diff = (model.sequence_score(&feats, &vit)
                - model.sequence_score(&feats, &best_brute))
            .abs();
            assert!(diff < 1e-9, "viterbi {vit:?} vs brute {best_brute:?}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Oracle: central finite differences on the log-likelihood.
        let mut gen = rng::seeded(23);
        let model = random_model(3, 5, &mut gen);
        let feats = random_feats(5, 5, &mut gen);
        let tags = vec![0usize, 1, 2, 1, 0];

        let mut grad = vec![0.0; model.flat_len()];
        model.log_likelihood_and_grad(&feats, &tags, &mut grad);

        let base = model.flat_weights();
        let eps = 1e-5;
        let mut probe = model.clone();
        let mut checked = 0;
        let mut genp = rng::seeded(24);
        for _ in 0..40 {
            let idx = genp.gen_range(0..base.len());
            let mut w = base.clone();
            w[idx] += eps;
            probe.set_flat_weights(&w);
            let up = probe.log_likelihood(&feats, &tags);
            w[idx] = base[idx] - eps;
            probe.set_flat_weights(&w);
            let down = probe.log_likelihood(&feats, &tags);
            let numerical = (up - down) / (2.0 * eps);
            let scale = (numerical.abs() + grad[idx].abs()).max(1e-8);
            let rel = (numerical - grad[idx]).abs() / scale;
            if numerical.abs() + grad[idx].abs() > 1e-10 {
                assert!(
                    rel < 1e-4,
                    "param {idx}: numerical {numerical} vs analytic {}",
                    grad[idx]
                );
            }
            checked += 1;
        }
        assert!(checked > 0);
    }

    fn synthetic_ner_set(n: usize, seed: u64) -> Vec<LabeledSequence> {
        let products = ["acme", "windows", "chrome", "openssl"];
        let fillers = ["the", "a", "team", "fixed", "bug", "in", "yesterday", "quick"];
        let mut gen = rng::seeded(seed);
        (0..n)
            .map(|_| {
                let mut tokens = Vec::new();
                let mut tags = Vec::new();
                let len = gen.gen_range(3..8);
                let ent_pos = gen.gen_range(0..len);
                for p in 0..len {
                    if p == ent_pos {
                        tokens.push(products[gen.gen_range(0..products.len())].to_string());
                        tags.push("B-ENT".to_string());
                    } else {
                        tokens.push(fillers[gen.gen_range(0..fillers.len())].to_string());
                        tags.push("O".to_string());
                    }
                }
                LabeledSequence { tokens, tags }
            })
            .collect()
    }

    #[test]
    fn objective_increases_monotonically_early() {
        let data = synthetic_ner_set(50, 31);
        let gaz: HashSet<String> = ["acme", "windows"].iter().map(|s| s.to_string()).collect();
        let cfg = CrfConfig {
            epochs: 10,
            ..Default::default()
        };
        let model = train_crf_ner(&data, &gaz, &cfg).unwrap();
        let trace = &model.objective_trace;
        for i in 1..trace.len() {
            assert!(
                trace[i] >= trace[i - 1] - 1e-12,
                "objective dipped at epoch {i}: {:?}",
                trace
            );
        }
    }

    #[test]
    fn learns_planted_entities() {
        let data = synthetic_ner_set(200, 33);
        let gaz: HashSet<String> = ["acme", "windows", "chrome", "openssl"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let cfg = CrfConfig {
            epochs: 150,
            learning_rate: 0.1,
            ..Default::default()
        };
        let model = train_crf_ner(&data, &gaz, &cfg).unwrap();
        let tweet = TokenizedTweet {
            original_id: "t".into(),
            tokens: vec![
                "the".into(),
                "team".into(),
                "fixed".into(),
                "openssl".into(),
                "yesterday".into(),
            ],
            indices: Vec::new(),
        };
        let ents = model.entity_tokens(&tweet);
        assert_eq!(ents, vec!["openssl".to_string()]);
    }

    #[test]
    fn single_label_collapses_to_all_o() {
        let data = vec![LabeledSequence {
            tokens: vec!["just".into(), "words".into(), "here".into()],
            tags: vec!["O".into(), "O".into(), "O".into()],
        }];
        let cfg = CrfConfig {
            epochs: 30,
            ..Default::default()
        };
        let model = train_crf_ner(&data, &HashSet::new(), &cfg).unwrap();
        let tags = model.decode_tags(&["other".into(), "words".into()]);
        assert!(tags.iter().all(|t| t == "O"), "{tags:?}");
    }

    #[test]
    fn invalid_bio_is_data_error() {
        let data = vec![LabeledSequence {
            tokens: vec!["a".into(), "b".into()],
            tags: vec!["O".into(), "I-ENT".into()],
        }];
        assert!(matches!(
            train_crf_ner(&data, &HashSet::new(), &CrfConfig::default()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn decoded_tags_always_bio_valid() {
        let data = synthetic_ner_set(60, 35);
        let gaz = HashSet::new();
        let cfg = CrfConfig {
            epochs: 20,
            ..Default::default()
        };
        let model = train_crf_ner(&data, &gaz, &cfg).unwrap();
        let mut gen = rng::seeded(36);
        let words = ["acme", "the", "bug", "windows", "in", "fast"];
        for _ in 0..100 {
            let len = gen.gen_range(1..7);
            let tokens: Vec<String> = (0..len)
                .map(|_| words[gen.gen_range(0..words.len())].to_string())
                .collect();
            let tags = model.decode_tags(&tokens);
            assert!(validate_bio(&tags), "invalid decode {tags:?} for {tokens:?}");
        }
    }

    #[test]
    fn bio_roundtrip() {
        let seqs = synthetic_ner_set(5, 40);
        let text = write_bio(&seqs);
        let back = read_bio(&text).unwrap();
        assert_eq!(seqs, back);
    }
}
