//! Character-trigram Naive Bayes language identifier.
//!
//! Trained on small bundled corpora (English plus three decoy languages) so
//! the English filter has no external dependency. Tie scores or inputs with
//! no alphabetic content classify as non-English: a conservative drop.

use std::collections::HashMap;

use crate::error::{Error, Result};

const ENGLISH: &str = include_str!("langid_data/en.txt");
const SPANISH: &str = include_str!("langid_data/es.txt");
const FRENCH: &str = include_str!("langid_data/fr.txt");
const GERMAN: &str = include_str!("langid_data/de.txt");

pub struct LanguageDetector {
    languages: Vec<String>,
    // per-language trigram log-probabilities with add-one smoothing
    log_probs: Vec<HashMap<[char; 3], f64>>,
    // log P(unseen trigram) per language
    log_unseen: Vec<f64>,
    english_index: usize,
}

fn trigrams(text: &str) -> Vec<[char; 3]> {
    let mut padded: Vec<char> = Vec::new();
    padded.push(' ');
    for c in text.to_lowercase().chars() {
        if c.is_alphabetic() || c.is_whitespace() {
            padded.push(if c.is_whitespace() { ' ' } else { c });
        }
    }
    padded.push(' ');
    if padded.len() < 3 {
        return Vec::new();
    }
    padded.windows(3).map(|w| [w[0], w[1], w[2]]).collect()
}

impl LanguageDetector {
    /// Train from (language name, corpus text) pairs.
    pub fn train(corpora: &[(&str, &str)]) -> Result<Self> {
        if corpora.is_empty() {
            return Err(Error::config("language detector needs at least one corpus"));
        }
        let mut languages = Vec::new();
        let mut log_probs = Vec::new();
        let mut log_unseen = Vec::new();
        let mut vocab: std::collections::HashSet<[char; 3]> = std::collections::HashSet::new();
        let mut counts_per_lang: Vec<HashMap<[char; 3], u64>> = Vec::new();

        for (name, corpus) in corpora {
            let mut counts: HashMap<[char; 3], u64> = HashMap::new();
            for tri in trigrams(corpus) {
                *counts.entry(tri).or_insert(0) += 1;
                vocab.insert(tri);
            }
            if counts.is_empty() {
                return Err(Error::config(format!("corpus for '{name}' has no trigrams")));
            }
            languages.push(name.to_string());
            counts_per_lang.push(counts);
        }

        let vocab_size = vocab.len() as f64;
        for counts in &counts_per_lang {
            let total: u64 = counts.values().sum();
            let denom = total as f64 + vocab_size + 1.0;
            let mut lp = HashMap::with_capacity(counts.len());
            for (tri, &c) in counts {
                lp.insert(*tri, ((c as f64 + 1.0) / denom).ln());
            }
            log_probs.push(lp);
            log_unseen.push((1.0 / denom).ln());
        }

        let english_index = languages
            .iter()
            .position(|l| l == "en")
            .ok_or_else(|| Error::config("no 'en' corpus given"))?;

        Ok(LanguageDetector {
            languages,
            log_probs,
            log_unseen,
            english_index,
        })
    }

    /// Detector trained on the bundled mini-corpora.
    pub fn bundled() -> Self {
        Self::train(&[
            ("en", ENGLISH),
            ("es", SPANISH),
            ("fr", FRENCH),
            ("de", GERMAN),
        ])
        .expect("bundled corpora are valid")
    }

    fn scores(&self, text: &str) -> Vec<f64> {
        let tris = trigrams(text);
        self.log_probs
            .iter()
            .zip(&self.log_unseen)
            .map(|(lp, &unseen)| {
                tris.iter()
                    .map(|t| lp.get(t).copied().unwrap_or(unseen))
                    .sum()
            })
            .collect()
    }

    /// Best-scoring language name, or None when the input has no alphabetic
    /// content or the top two scores tie.
    pub fn classify(&self, text: &str) -> Option<&str> {
        if !text.chars().any(|c| c.is_alphabetic()) {
            return None;
        }
        let scores = self.scores(text);
        let mut best = 0usize;
        for i in 1..scores.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        let tied = scores
            .iter()
            .enumerate()
            .any(|(i, &s)| i != best && s == scores[best]);
        if tied {
            None
        } else {
            Some(&self.languages[best])
        }
    }

    /// True iff English scores strictly highest. Ties and non-alphabetic
    /// inputs are non-English.
    pub fn is_english(&self, text: &str) -> bool {
        match self.classify(text) {
            Some(lang) => lang == self.languages[self.english_index],
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_text_detected() {
        let det = LanguageDetector::bundled();
        assert!(det.is_english("the server was breached last night"));
        assert!(det.is_english("anyone can login as root with empty password"));
    }

    #[test]
    fn decoy_languages_rejected() {
        let det = LanguageDetector::bundled();
        assert!(!det.is_english("el servidor fue atacado durante la noche"));
        assert!(!det.is_english("le serveur a été compromis pendant la nuit"));
        assert!(!det.is_english("der server wurde in der nacht angegriffen"));
    }

    #[test]
    fn digits_and_punctuation_are_non_english() {
        let det = LanguageDetector::bundled();
        assert!(!det.is_english("12345 !!! ??? 67"));
        assert!(!det.is_english(""));
    }

    #[test]
    fn heldout_accuracy_on_labeled_minicorpus() {
        // Oracle for the trigram model: a small labeled held-out set, none of
        // which appears in the bundled training corpora.
        let det = LanguageDetector::bundled();
        let heldout: &[(&str, bool)] = &[
            ("a new vulnerability was reported this morning", true),
            ("we should patch the firewall before monday", true),
            ("the attackers stole thousands of customer records", true),
            ("please restart the machine after the update", true),
            ("security researchers found a flaw in the protocol", true),
            ("los atacantes robaron miles de registros", false),
            ("una nueva vulnerabilidad fue reportada esta mañana", false),
            ("les chercheurs ont trouvé une faille dans le protocole", false),
            ("veuillez redémarrer la machine après la mise à jour", false),
            ("die angreifer stahlen tausende von kundendaten", false),
            ("eine neue schwachstelle wurde heute morgen gemeldet", false),
            ("wir sollten die firewall vor montag aktualisieren", false),
        ];
        let correct = heldout
            .iter()
            .filter(|(text, is_en)| det.is_english(text) == *is_en)
            .count();
        let accuracy = correct as f64 / heldout.len() as f64;
        assert!(
            accuracy >= 0.9,
            "held-out language-id accuracy {accuracy} below 0.9"
        );
    }

    #[test]
    fn empty_training_set_is_config_error() {
        assert!(LanguageDetector::train(&[]).is_err());
    }
}
