//! Caption cleanup: bracketed annotation removal, lowercasing, filler-word
//! removal, and the short-caption eligibility mask.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::transcript::Transcript;

pub const DEFAULT_MIN_CHARS: usize = 20;

const DEFAULT_FILLERS: &str = include_str!("../data/fillers.txt");

/// Reads a term file: one term per line, `#` starts a comment, blank lines
/// are ignored. Terms are lowercased and inner whitespace collapsed.
pub fn parse_term_list(src: &str) -> Vec<String> {
    src.lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .map(|line| {
            line.split_whitespace()
                .map(str::to_lowercase)
                .collect::<Vec<_>>()
                .join(" ")
        })
        .filter(|term| !term.is_empty())
        .collect()
}

/// Lowercase filler terms. Multi-word terms ("you know") match consecutive
/// tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillerLexicon {
    phrases: Vec<Vec<String>>,
}

impl FillerLexicon {
    pub fn new<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for term in terms {
            let phrase: Vec<String> = term
                .as_ref()
                .split_whitespace()
                .map(str::to_lowercase)
                .collect();
            if !phrase.is_empty() {
                set.insert(phrase);
            }
        }
        if set.is_empty() {
            return Err(Error::validation("filler lexicon is empty"));
        }
        let mut phrases: Vec<_> = set.into_iter().collect();
        // longest phrases first so "i mean" wins over a hypothetical "i"
        phrases.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Ok(Self { phrases })
    }

    /// A lexicon that removes nothing; only lowercasing and annotation
    /// stripping apply.
    pub fn disabled() -> Self {
        Self {
            phrases: Vec::new(),
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(parse_term_list(src))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = String> + '_ {
        self.phrases.iter().map(|p| p.join(" "))
    }

    fn match_len(&self, keys: &[&str]) -> Option<usize> {
        self.phrases.iter().find_map(|phrase| {
            (phrase.len() <= keys.len() && phrase.iter().zip(keys).all(|(a, b)| a == b))
                .then_some(phrase.len())
        })
    }
}

impl Default for FillerLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_FILLERS).expect("built-in filler lexicon is non-empty")
    }
}

/// Matching key of a token: the token with leading and trailing
/// non-alphanumeric characters removed.
pub fn token_key(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

fn strip_bracketed(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut removed = vec![false; chars.len()];
    let mut open = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '[' => open.push(i),
            ']' => {
                if let Some(start) = open.pop() {
                    removed[start..=i].iter_mut().for_each(|r| *r = true);
                }
            }
            _ => {}
        }
    }
    chars
        .into_iter()
        .zip(removed)
        .filter_map(|(c, r)| (!r).then_some(c))
        .collect()
}

/// Lowercases, drops `[...]` annotations and removes filler tokens. Trailing
/// punctuation of a removed filler is carried over to the preceding kept
/// token, so "finishing uh, we" becomes "finishing, we". Removal repeats
/// until no filler remains, since dropping one phrase can join another
/// ("you i mean know").
pub fn normalize_text(text: &str, lex: &FillerLexicon) -> String {
    let lowered = strip_bracketed(text).to_lowercase();
    let mut tokens: Vec<String> = lowered.split_whitespace().map(str::to_string).collect();
    while let Some(next) = remove_fillers(&tokens, lex) {
        tokens = next;
    }
    tokens.join(" ")
}

/// One left-to-right removal pass, or `None` when nothing matched.
fn remove_fillers(tokens: &[String], lex: &FillerLexicon) -> Option<Vec<String>> {
    let keys: Vec<&str> = tokens.iter().map(|t| token_key(t)).collect();
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    let mut changed = false;
    let mut i = 0;
    while i < tokens.len() {
        let matched = if keys[i].is_empty() {
            None
        } else {
            lex.match_len(&keys[i..])
        };
        match matched {
            Some(n) => {
                changed = true;
                let last = &tokens[i + n - 1];
                let key = keys[i + n - 1];
                // key is a substring of last, so this split is on a char boundary
                let tail_start = last.rfind(key).map_or(last.len(), |p| p + key.len());
                let tail = &last[tail_start..];
                if let Some(prev) = out.last_mut() {
                    if !tail.is_empty() && !prev.ends_with(tail) {
                        prev.push_str(tail);
                    }
                }
                i += n;
            }
            None => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    changed.then_some(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EligibilityMask {
    eligible: Vec<bool>,
    kept: Vec<usize>,
}

impl EligibilityMask {
    pub fn from_flags(eligible: Vec<bool>) -> Self {
        let kept = eligible
            .iter()
            .enumerate()
            .filter_map(|(i, &e)| e.then_some(i))
            .collect();
        Self { eligible, kept }
    }

    pub fn all(m: usize) -> Self {
        Self::from_flags(vec![true; m])
    }

    pub fn eligible(&self) -> &[bool] {
        &self.eligible
    }

    pub fn kept_indices(&self) -> &[usize] {
        &self.kept
    }

    pub fn len(&self) -> usize {
        self.eligible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eligible.is_empty()
    }

    pub fn is_eligible(&self, i: usize) -> bool {
        self.eligible.get(i).copied().unwrap_or(false)
    }
}

/// Marks utterances whose normalized text has at least `min_chars`
/// characters (spaces and punctuation included).
pub fn eligibility_mask(t: &Transcript, lex: &FillerLexicon, min_chars: usize) -> EligibilityMask {
    EligibilityMask::from_flags(
        t.utterances()
            .iter()
            .map(|u| normalize_text(&u.text, lex).chars().count() >= min_chars)
            .collect(),
    )
}
