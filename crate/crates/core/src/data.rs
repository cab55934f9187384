//! Corpus ingestion: JSONL loading, seed-keyword filtering, language
//! filtering and reproducible splits.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::langid::LanguageDetector;
use crate::rng;

/// Binary event annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "event")]
    Event,
    #[serde(rename = "non_event")]
    NonEvent,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Event => "event",
            Label::NonEvent => "non_event",
        }
    }
}

/// One short-text record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl RawTweet {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawTweet {
            id: id.into(),
            text: text.into(),
            timestamp: None,
            label: None,
        }
    }

    pub fn labeled(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        RawTweet {
            id: id.into(),
            text: text.into(),
            timestamp: None,
            label: Some(label),
        }
    }

    fn is_valid(&self) -> bool {
        !self.id.is_empty() && !self.text.trim().is_empty()
    }
}

/// Result of loading a JSONL corpus; malformed lines are skipped and counted.
#[derive(Debug)]
pub struct LoadedCorpus {
    pub tweets: Vec<RawTweet>,
    pub skipped: usize,
}

/// Load a JSONL corpus: one object per line with at least `id` and `text`.
/// Lines that fail to parse, fail validation, or repeat an id are skipped
/// and counted. Zero parseable lines is an error.
pub fn load_jsonl(path: &Path) -> Result<LoadedCorpus> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut tweets = Vec::new();
    let mut skipped = 0usize;
    let mut seen_ids: HashSet<String> = HashSet::new();

    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawTweet>(&line) {
            Ok(tweet) if tweet.is_valid() && seen_ids.insert(tweet.id.clone()) => {
                tweets.push(tweet);
            }
            _ => skipped += 1,
        }
    }

    if tweets.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "{}: no parseable records ({skipped} lines skipped)",
            path.display()
        )));
    }
    Ok(LoadedCorpus { tweets, skipped })
}

/// Write a corpus as JSONL, one object per line.
pub fn write_jsonl(path: &Path, tweets: &[RawTweet]) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    for tweet in tweets {
        serde_json::to_writer(&mut writer, tweet).map_err(|e| Error::data(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Lowercased seed phrases used to filter the raw stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedKeywordSet {
    keywords: Vec<String>,
}

impl SeedKeywordSet {
    pub fn new<I, S>(phrases: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut keywords = Vec::new();
        for phrase in phrases {
            let norm = phrase
                .as_ref()
                .to_lowercase()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            if !norm.is_empty() {
                keywords.push(norm);
            }
        }
        if keywords.is_empty() {
            return Err(Error::config("seed keyword set must be nonempty"));
        }
        Ok(SeedKeywordSet { keywords })
    }

    /// The six default cyber-security seed phrases.
    pub fn default_seeds() -> Self {
        Self::new([
            "denial of service",
            "botnet",
            "malware",
            "vulnerability",
            "phishing",
            "data breach",
        ])
        .expect("defaults are nonempty")
    }

    /// Load from a plain-text file, one phrase per line.
    pub fn from_file(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let reader = BufReader::new(file);
        let mut phrases = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                phrases.push(trimmed.to_string());
            }
        }
        Self::new(phrases)
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    /// True iff the text contains a seed phrase on token boundaries
    /// (characters adjacent to the match must not be alphanumeric).
    pub fn matches(&self, text: &str) -> bool {
        let lowered = text
            .to_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        let chars: Vec<char> = lowered.chars().collect();
        for seed in &self.keywords {
            let seed_chars: Vec<char> = seed.chars().collect();
            if seed_chars.is_empty() || seed_chars.len() > chars.len() {
                continue;
            }
            for start in 0..=(chars.len() - seed_chars.len()) {
                if chars[start..start + seed_chars.len()] != seed_chars[..] {
                    continue;
                }
                let left_ok = start == 0 || !chars[start - 1].is_alphanumeric();
                let end = start + seed_chars.len();
                let right_ok = end == chars.len() || !chars[end].is_alphanumeric();
                if left_ok && right_ok {
                    return true;
                }
            }
        }
        false
    }
}

/// Keep exactly the tweets containing at least one seed phrase.
pub fn filter_seed_keywords(corpus: &[RawTweet], seeds: &SeedKeywordSet) -> Vec<RawTweet> {
    corpus
        .iter()
        .filter(|t| seeds.matches(&t.text))
        .cloned()
        .collect()
}

/// True iff the trigram model scores English highest. Empty text (after
/// trimming) violates the precondition.
pub fn detect_english(detector: &LanguageDetector, tweet: &RawTweet) -> Result<bool> {
    if tweet.text.trim().is_empty() {
        return Err(Error::DegenerateInput(format!(
            "tweet {} has empty text",
            tweet.id
        )));
    }
    Ok(detector.is_english(&tweet.text))
}

/// Keep only tweets the detector classifies as English.
pub fn filter_english(corpus: &[RawTweet], detector: &LanguageDetector) -> Vec<RawTweet> {
    corpus
        .iter()
        .filter(|t| detector.is_english(&t.text))
        .cloned()
        .collect()
}

/// Disjoint train/validation/test split.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<RawTweet>,
    pub validation: Vec<RawTweet>,
    pub test: Vec<RawTweet>,
    pub seed: u64,
}

/// Deterministic seeded split. Ratios must be positive and sum to 1; the
/// resulting sizes are within one element of the requested proportions.
pub fn split_dataset(
    corpus: &[RawTweet],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetSplit> {
    let (r_train, r_val, r_test) = ratios;
    if r_train <= 0.0 || r_val <= 0.0 || r_test <= 0.0 {
        return Err(Error::config("split ratios must be positive"));
    }
    if (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::config("split ratios must sum to 1"));
    }
    if corpus.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 tweets to split, got {}",
            corpus.len()
        )));
    }

    let n = corpus.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut gen = rng::seeded(seed);
    rng::shuffle(&mut order, &mut gen);

    let mut n_train = (n as f64 * r_train).round() as usize;
    let mut n_val = (n as f64 * r_val).round() as usize;
    // Rounding may overshoot; shave from the largest part, then make sure
    // every part keeps at least one element.
    while n_train + n_val > n - 1 {
        if n_train >= n_val {
            n_train -= 1;
        } else {
            n_val -= 1;
        }
    }
    if n_train == 0 {
        n_train = 1;
    }
    if n_val == 0 && n_train > 1 {
        n_train -= 1;
        n_val = 1;
    } else if n_val == 0 {
        n_val = 1;
    }

    let train = order[..n_train].iter().map(|&i| corpus[i].clone()).collect();
    let validation = order[n_train..n_train + n_val]
        .iter()
        .map(|&i| corpus[i].clone())
        .collect();
    let test = order[n_train + n_val..]
        .iter()
        .map(|&i| corpus[i].clone())
        .collect();

    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn temp_jsonl(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        f
    }

    #[test]
    fn load_valid_lines_in_order() {
        let f = temp_jsonl(&[
            r#"{"id":"1","text":"first tweet"}"#,
            r#"{"id":"2","text":"second tweet"}"#,
            r#"{"id":"3","text":"third tweet","label":"event"}"#,
        ]);
        let loaded = load_jsonl(f.path()).unwrap();
        assert_eq!(loaded.tweets.len(), 3);
        assert_eq!(loaded.skipped, 0);
        assert_eq!(loaded.tweets[0].id, "1");
        assert_eq!(loaded.tweets[2].label, Some(Label::Event));
    }

    #[test]
    fn malformed_lines_skipped_and_counted() {
        let f = temp_jsonl(&[
            r#"{"id":"1","text":"ok"}"#,
            r#"{"id":"2","text":"#,
            r#"{"id":"3","text":"also ok"}"#,
        ]);
        let loaded = load_jsonl(f.path()).unwrap();
        assert_eq!(loaded.tweets.len(), 2);
        assert_eq!(loaded.skipped, 1);
    }

    #[test]
    fn empty_text_and_duplicate_ids_skipped() {
        let f = temp_jsonl(&[
            r#"{"id":"1","text":"ok"}"#,
            r#"{"id":"1","text":"duplicate id"}"#,
            r#"{"id":"2","text":"   "}"#,
        ]);
        let loaded = load_jsonl(f.path()).unwrap();
        assert_eq!(loaded.tweets.len(), 1);
        assert_eq!(loaded.skipped, 2);
    }

    #[test]
    fn zero_parseable_lines_is_error() {
        let f = temp_jsonl(&["not json", "{broken"]);
        assert!(matches!(load_jsonl(f.path()), Err(Error::EmptyCorpus(_))));
    }

    #[test]
    fn load_count_matches_independent_validator() {
        // Oracle: a separate single-pass validator over the same lines.
        let lines: Vec<String> = (0..60)
            .map(|i| {
                if i % 7 == 3 {
                    "not valid json at all".to_string()
                } else if i % 11 == 5 {
                    format!(r#"{{"id":"","text":"missing id {i}"}}"#)
                } else {
                    format!(r#"{{"id":"t{i}","text":"tweet number {i}"}}"#)
                }
            })
            .collect();
        let refs: Vec<&str> = lines.iter().map(|s| s.as_str()).collect();
        let f = temp_jsonl(&refs);

        let oracle_valid = lines
            .iter()
            .filter(|l| {
                serde_json::from_str::<RawTweet>(l)
                    .map(|t| !t.id.is_empty() && !t.text.trim().is_empty())
                    .unwrap_or(false)
            })
            .count();

        let loaded = load_jsonl(f.path()).unwrap();
        assert_eq!(loaded.tweets.len(), oracle_valid);
        assert_eq!(loaded.skipped, lines.len() - oracle_valid);
    }

    #[test]
    fn jsonl_roundtrip() {
        let tweets = vec![
            RawTweet::new("a", "first"),
            RawTweet::labeled("b", "second", Label::NonEvent),
            RawTweet {
                id: "c".into(),
                text: "third".into(),
                timestamp: Some("2017-06-01T12:00:00Z".into()),
                label: Some(Label::Event),
            },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_jsonl(f.path(), &tweets).unwrap();
        let loaded = load_jsonl(f.path()).unwrap();
        assert_eq!(loaded.tweets, tweets);
    }

    #[test]
    fn seed_filter_retains_and_drops() {
        let seeds = SeedKeywordSet::default_seeds();
        let corpus = vec![
            RawTweet::new("1", "new botnet discovered in the wild"),
            RawTweet::new("2", "lovely weather today"),
            RawTweet::new("3", "massive data breach at the bank"),
            RawTweet::new("4", "my supermalwarez mixtape dropped"),
        ];
        let kept = filter_seed_keywords(&corpus, &seeds);
        let ids: Vec<&str> = kept.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, vec!["1", "3"]);
    }

    #[test]
    fn seed_match_respects_token_boundaries() {
        let seeds = SeedKeywordSet::new(["malware"]).unwrap();
        assert!(seeds.matches("malware detected"));
        assert!(seeds.matches("new MALWARE, beware"));
        assert!(!seeds.matches("supermalware detected"));
        assert!(!seeds.matches("malwarez everywhere"));
    }

    #[test]
    fn multiword_seed_matches_across_spaces() {
        let seeds = SeedKeywordSet::new(["denial of service"]).unwrap();
        assert!(seeds.matches("a denial   of  service attack"));
        assert!(!seeds.matches("denial of serviceful"));
    }

    #[test]
    fn seed_filter_matches_bruteforce_scan_on_synthetic_corpus() {
        // Oracle: naive scan over all (tweet, seed) pairs with a regex-free
        // boundary check done character by character.
        let seeds = SeedKeywordSet::default_seeds();
        let vocab = [
            "botnet", "weather", "malware", "coffee", "breach", "data", "phishing", "cat",
            "vulnerability", "service", "of", "denial", "the", "a", "new", "old",
        ];
        let mut gen = rng::seeded(99);
        let corpus: Vec<RawTweet> = (0..500)
            .map(|i| {
                use rand::Rng;
                let len = gen.gen_range(3..10);
                let words: Vec<&str> = (0..len)
                    .map(|_| vocab[gen.gen_range(0..vocab.len())])
                    .collect();
                RawTweet::new(format!("s{i}"), words.join(" "))
            })
            .collect();

        let oracle: Vec<&RawTweet> = corpus
            .iter()
            .filter(|t| {
                let padded = format!(" {} ", t.text.to_lowercase());
                seeds
                    .keywords()
                    .iter()
                    .any(|s| padded.contains(&format!(" {s} ")))
            })
            .collect();

        let kept = filter_seed_keywords(&corpus, &seeds);
        assert_eq!(
            kept.iter().map(|t| &t.id).collect::<Vec<_>>(),
            oracle.iter().map(|t| &t.id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn detect_english_rejects_empty() {
        let det = LanguageDetector::bundled();
        let tweet = RawTweet::new("1", "   ");
        assert!(detect_english(&det, &tweet).is_err());
        let ok = RawTweet::new("2", "the server was breached last night");
        assert!(detect_english(&det, &ok).unwrap());
    }

    #[test]
    fn split_sizes_follow_rounding() {
        let corpus: Vec<RawTweet> = (0..10)
            .map(|i| RawTweet::new(format!("t{i}"), format!("text {i}")))
            .collect();
        let split = split_dataset(&corpus, (0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!(split.train.len(), 8);
        assert_eq!(split.validation.len(), 1);
        assert_eq!(split.test.len(), 1);
    }

    #[test]
    fn split_is_deterministic() {
        let corpus: Vec<RawTweet> = (0..37)
            .map(|i| RawTweet::new(format!("t{i}"), format!("text {i}")))
            .collect();
        let a = split_dataset(&corpus, (0.6, 0.2, 0.2), 11).unwrap();
        let b = split_dataset(&corpus, (0.6, 0.2, 0.2), 11).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.validation, b.validation);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn split_too_small_is_error() {
        let corpus = vec![RawTweet::new("a", "x"), RawTweet::new("b", "y")];
        assert!(matches!(
            split_dataset(&corpus, (0.8, 0.1, 0.1), 1),
            Err(Error::InsufficientData(_))
        ));
    }

    proptest! {
        #[test]
        fn split_partitions_corpus(n in 3usize..200, seed in 0u64..1000) {
            // Oracle: set algebra over ids.
            let corpus: Vec<RawTweet> = (0..n)
                .map(|i| RawTweet::new(format!("t{i}"), format!("text {i}")))
                .collect();
            let split = split_dataset(&corpus, (0.6, 0.2, 0.2), seed).unwrap();
            let train: HashSet<&String> = split.train.iter().map(|t| &t.id).collect();
            let val: HashSet<&String> = split.validation.iter().map(|t| &t.id).collect();
            let test: HashSet<&String> = split.test.iter().map(|t| &t.id).collect();
            prop_assert!(train.is_disjoint(&val));
            prop_assert!(train.is_disjoint(&test));
            prop_assert!(val.is_disjoint(&test));
            prop_assert_eq!(
                split.train.len() + split.validation.len() + split.test.len(),
                n
            );
            let mut all: HashSet<&String> = HashSet::new();
            all.extend(&train); all.extend(&val); all.extend(&test);
            let input: HashSet<&String> = corpus.iter().map(|t| &t.id).collect();
            prop_assert_eq!(all, input);
        }

        #[test]
        fn seed_filter_is_idempotent_subset(n in 0usize..60) {
            let seeds = SeedKeywordSet::default_seeds();
            let corpus: Vec<RawTweet> = (0..n)
                .map(|i| {
                    let text = if i % 3 == 0 {
                        format!("alert {i} malware found")
                    } else {
                        format!("nothing here {i}")
                    };
                    RawTweet::new(format!("t{i}"), text)
                })
                .collect();
            let once = filter_seed_keywords(&corpus, &seeds);
            let twice = filter_seed_keywords(&once, &seeds);
            prop_assert_eq!(&once, &twice);
            let ids: HashSet<&String> = corpus.iter().map(|t| &t.id).collect();
            prop_assert!(once.iter().all(|t| ids.contains(&t.id)));
        }
    }
}
