//! Pattern-based open relation extraction over a rule-based POS tagging:
//! noun phrase - verb group - noun phrase.

use crate::text::{TokenizedTweet, NUM_TOKEN, URL_TOKEN, USER_TOKEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Det,
    Prep,
    Pron,
    Conj,
    Num,
    Punct,
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "its", "their", "his", "her", "my",
    "your", "our", "some", "any", "no", "every", "each", "all",
];

const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "from", "to", "into", "onto", "over", "under",
    "after", "before", "about", "against", "through", "during", "via",
];

const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "them", "us", "who", "what",
    "someone", "anyone", "everyone",
];

const CONJUNCTIONS: &[&str] = &["and", "or", "but", "so", "because", "if", "while", "when"];

// auxiliaries plus common (including irregular) verbs seen in security chatter
const VERBS: &[&str] = &[
    "is", "am", "are", "was", "were", "be", "been", "being", "has", "have", "had", "do", "does",
    "did", "will", "would", "can", "could", "may", "might", "must", "shall", "should", "stole",
    "steal", "broke", "break", "hit", "took", "take", "found", "find", "got", "get", "made",
    "make", "sent", "send", "let", "lets", "put", "ran", "run", "runs", "said", "say", "says",
    "saw", "see", "goes", "go", "went", "came", "come", "keep", "keeps", "kept", "left",
    "leave", "hold", "held", "knew", "know", "knows", "show", "shows", "showed", "hack",
    "hacks", "leak", "leaks", "breach", "attack", "attacks", "login", "spread", "spreads",
    "warn", "warns", "report", "reports", "announce", "announces", "release", "releases",
    "discover", "discovers", "patch", "fix", "fixes", "expose", "exposes", "exploit",
    "exploits", "target", "targets", "infect", "infects", "steals", "grows", "blocks",
];

const ADJECTIVES: &[&str] = &[
    "new", "old", "big", "small", "huge", "major", "minor", "critical", "severe", "malicious",
    "secure", "insecure", "vulnerable", "massive", "fast", "slow", "good", "bad", "empty",
    "several", "many", "few", "recent", "latest", "unknown", "suspicious",
];

fn is_all_digits(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c.is_ascii_digit())
}

fn is_punct(token: &str) -> bool {
    token.chars().all(|c| !c.is_alphanumeric())
}

fn tag_token(token: &str) -> PosTag {
    if token == NUM_TOKEN || is_all_digits(token) {
        return PosTag::Num;
    }
    if token == URL_TOKEN || token == USER_TOKEN {
        return PosTag::Noun;
    }
    if is_punct(token) {
        return PosTag::Punct;
    }
    if DETERMINERS.contains(&token) {
        return PosTag::Det;
    }
    if PREPOSITIONS.contains(&token) {
        return PosTag::Prep;
    }
    if PRONOUNS.contains(&token) {
        return PosTag::Pron;
    }
    if CONJUNCTIONS.contains(&token) {
        return PosTag::Conj;
    }
    if VERBS.contains(&token) {
        return PosTag::Verb;
    }
    if ADJECTIVES.contains(&token) {
        return PosTag::Adj;
    }
    if token.len() > 3 && token.ends_with("ly") {
        return PosTag::Adv;
    }
    if token.len() > 4 && (token.ends_with("ed") || token.ends_with("ing")) {
        return PosTag::Verb;
    }
    PosTag::Noun
}

pub fn pos_tag(tokens: &[String]) -> Vec<PosTag> {
    tokens.iter().map(|t| tag_token(t)).collect()
}

/// A (subject, relation, object) token triple; all tokens occur in the
/// source tweet in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationTriple {
    pub subject: Vec<String>,
    pub relation: Vec<String>,
    pub object: Vec<String>,
}

impl RelationTriple {
    pub fn token_count(&self) -> usize {
        self.subject.len() + self.relation.len() + self.object.len()
    }

    /// Subject, relation and object tokens flattened in tweet order.
    pub fn tokens(&self) -> impl Iterator<Item = &String> {
        self.subject
            .iter()
            .chain(self.relation.iter())
            .chain(self.object.iter())
    }
}

fn np_allowed(tag: PosTag) -> bool {
    matches!(
        tag,
        PosTag::Det | PosTag::Adj | PosTag::Noun | PosTag::Num | PosTag::Pron
    )
}

fn np_head(tag: PosTag) -> bool {
    matches!(tag, PosTag::Noun | PosTag::Pron)
}

/// Extract noun-phrase / verb-group / noun-phrase triples.
pub fn ie_extract(tweet: &TokenizedTweet) -> Vec<RelationTriple> {
    let tokens = &tweet.tokens;
    let tags = pos_tag(tokens);
    let mut triples = Vec::new();
    let mut pos = 0usize;

    while pos < tokens.len() {
        if tags[pos] != PosTag::Verb {
            pos += 1;
            continue;
        }
        // verb group: consecutive verbs, optionally one trailing preposition
        let verb_start = pos;
        let mut verb_end = pos + 1;
        while verb_end < tokens.len() && tags[verb_end] == PosTag::Verb {
            verb_end += 1;
        }
        let mut rel_end = verb_end;
        if rel_end < tokens.len()
            && tags[rel_end] == PosTag::Prep
            && rel_end + 1 < tokens.len()
            && np_allowed(tags[rel_end + 1])
        {
            rel_end += 1;
        }

        // subject: maximal NP run ending right before the verb group
        let mut subj_start = verb_start;
        while subj_start > 0 && np_allowed(tags[subj_start - 1]) {
            subj_start -= 1;
        }
        let subject_ok = (subj_start..verb_start).any(|i| np_head(tags[i]));

        // object: maximal NP run starting right after the relation
        let mut obj_end = rel_end;
        while obj_end < tokens.len() && np_allowed(tags[obj_end]) {
            obj_end += 1;
        }
        let object_ok = (rel_end..obj_end).any(|i| np_head(tags[i]));

        if subject_ok && object_ok {
            triples.push(RelationTriple {
                subject: tokens[subj_start..verb_start].to_vec(),
                relation: tokens[verb_start..rel_end].to_vec(),
                object: tokens[rel_end..obj_end].to_vec(),
            });
            pos = obj_end;
        } else {
            pos = verb_end;
        }
    }
    triples
}

/// All triple tokens flattened; its length is the M of the contextual
/// combination.
pub fn relation_tokens(triples: &[RelationTriple]) -> Vec<String> {
    triples
        .iter()
        .flat_map(|t| t.tokens().cloned())
        .collect()
}
