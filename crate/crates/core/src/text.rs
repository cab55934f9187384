//! Tweet normalization, tokenization and fixed-length padding.
//!
//! Normalization rules: lowercase, URLs -> `<url>`, user handles -> `<user>`,
//! standalone numbers -> `<num>`, hashtag marker stripped (body kept),
//! character runs longer than 3 collapsed to 3, punctuation separated from
//! words, whitespace collapsed. The three placeholder tokens are atomic and
//! survive re-normalization, which is what makes `normalize` idempotent.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved padding token. Never produced by the normalizer; always maps to
/// vocabulary index 0 and the all-zero embedding.
pub const PAD_TOKEN: &str = "<pad>";

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";
pub const NUM_TOKEN: &str = "<num>";

const PLACEHOLDERS: [&str; 3] = [URL_TOKEN, USER_TOKEN, NUM_TOKEN];

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S+").expect("url regex"));
static USER_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").expect("user regex"));
static HASHTAG_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"#+(\w+)").expect("hashtag regex"));

/// A tweet after normalization and tokenization. `indices` are vocabulary
/// indices (0 for padding and for out-of-vocabulary tokens; the mask in
/// `PaddedSequence` distinguishes the two) and are filled in when a
/// vocabulary is bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedTweet {
    pub original_id: String,
    pub tokens: Vec<String>,
    pub indices: Vec<usize>,
}

impl TokenizedTweet {
    pub fn from_text(id: &str, text: &str) -> Self {
        let tokens = tokenize(&normalize(text));
        TokenizedTweet {
            original_id: id.to_string(),
            tokens,
            indices: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Fixed-length token-index sequence. Index 0 is the reserved padding index;
/// `mask[t]` is true exactly at the real-token positions. `tokens` keeps the
/// padded token strings so the subword channel can serve OOV tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedSequence {
    pub indices: Vec<usize>,
    pub mask: Vec<bool>,
    pub tokens: Vec<String>,
}

impl PaddedSequence {
    pub fn real_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn max_len(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Word,
    Punct,
    Space,
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphanumeric() || c == '_' || c == '\'' {
        CharClass::Word
    } else {
        CharClass::Punct
    }
}

/// Split a whitespace-free chunk into segments: placeholder tokens are
/// atomic, otherwise split at word/punctuation boundaries. Punctuation runs
/// stay together ("!!!" is one segment).
fn segment_chunk(chunk: &str) -> Vec<String> {
    let mut segments = Vec::new();
    let mut current = String::new();
    let mut current_class: Option<CharClass> = None;
    let mut rest = chunk;

    'outer: while !rest.is_empty() {
        if rest.starts_with('<') {
            for ph in PLACEHOLDERS {
                if rest.starts_with(ph) {
                    if !current.is_empty() {
                        segments.push(std::mem::take(&mut current));
                        current_class = None;
                    }
                    segments.push(ph.to_string());
                    rest = &rest[ph.len()..];
                    continue 'outer;
                }
            }
        }
        let c = rest.chars().next().unwrap();
        let class = classify(c);
        if current_class != Some(class) && !current.is_empty() {
            segments.push(std::mem::take(&mut current));
        }
        current_class = Some(class);
        current.push(c);
        rest = &rest[c.len_utf8()..];
    }
    if !current.is_empty() {
        segments.push(current);
    }
    segments
}

fn is_number_segment(seg: &str) -> bool {
    !seg.is_empty() && seg.chars().all(|c| c.is_ascii_digit())
}

/// Collapse runs of the same character longer than 3 down to 3.
fn collapse_elongation(seg: &str) -> String {
    let mut out = String::with_capacity(seg.len());
    let mut prev: Option<char> = None;
    let mut run = 0usize;
    for c in seg.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= 3 {
            out.push(c);
        }
    }
    out
}

/// Normalize raw tweet text. Idempotent.
pub fn normalize(text: &str) -> String {
    let lowered = text.to_lowercase();
    let replaced = URL_RE.replace_all(&lowered, URL_TOKEN);
    let replaced = HASHTAG_RE.replace_all(&replaced, "$1");
    let replaced = USER_RE.replace_all(&replaced, USER_TOKEN);

    let mut out: Vec<String> = Vec::new();
    for chunk in replaced.split_whitespace() {
        for seg in segment_chunk(chunk) {
            if PLACEHOLDERS.contains(&seg.as_str()) {
                out.push(seg);
            } else if is_number_segment(&seg) {
                out.push(NUM_TOKEN.to_string());
            } else {
                out.push(collapse_elongation(&seg));
            }
        }
    }
    out.join(" ")
}

/// Tokenize normalized text: split on whitespace, then split any chunk that
/// still mixes word and punctuation characters. On normalizer output this is
/// a plain whitespace split.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        tokens.extend(segment_chunk(chunk));
    }
    tokens
}

/// Right-pad a tokenized tweet to `max_len` with the reserved padding index.
/// Longer inputs are an error; truncation is never silent.
pub fn pad_to_max(tweet: &TokenizedTweet, max_len: usize) -> Result<PaddedSequence> {
    if tweet.tokens.len() > max_len {
        return Err(Error::LengthExceeded {
            len: tweet.tokens.len(),
            max: max_len,
        });
    }
    let n = tweet.tokens.len();
    let mut indices = Vec::with_capacity(max_len);
    let mut mask = Vec::with_capacity(max_len);
    let mut tokens = Vec::with_capacity(max_len);
    for t in 0..max_len {
        if t < n {
            indices.push(tweet.indices.get(t).copied().unwrap_or(0));
            mask.push(true);
            tokens.push(tweet.tokens[t].clone());
        } else {
            indices.push(0);
            mask.push(false);
            tokens.push(PAD_TOKEN.to_string());
        }
    }
    Ok(PaddedSequence {
        indices,
        mask,
        tokens,
    })
}

/// Padding for evaluation-time inputs: tweets longer than `max_len` are
/// truncated with a logged warning instead of failing the run.
pub fn pad_or_truncate(tweet: &TokenizedTweet, max_len: usize) -> PaddedSequence {
    if tweet.tokens.len() > max_len {
        log::warn!(
            "tweet {} has {} tokens, truncating to {}",
            tweet.original_id,
            tweet.tokens.len(),
            max_len
        );
        let truncated = TokenizedTweet {
            original_id: tweet.original_id.clone(),
            tokens: tweet.tokens[..max_len].to_vec(),
            indices: if tweet.indices.len() >= max_len {
                tweet.indices[..max_len].to_vec()
            } else {
                Vec::new()
            },
        };
        pad_to_max(&truncated, max_len).expect("truncated sequence fits")
    } else {
        pad_to_max(tweet, max_len).expect("length checked")
    }
}

/// Maximum token count over a corpus; the training split defines this.
pub fn max_tweet_len(corpus: &[TokenizedTweet]) -> usize {
    corpus.iter().map(|t| t.tokens.len()).max().unwrap_or(0)
}
