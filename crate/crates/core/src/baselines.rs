//! Comparison segmenters: random and evenly spaced boundaries, and a
//! TextTiling-style scorer that compares word-count vectors of adjacent
//! blocks and feeds the same threshold rule as the embedding scorer.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::preprocess::{
    normalize_text, parse_term_list, token_key, EligibilityMask, FillerLexicon,
};
use crate::segmenter::{
    detect_boundaries, gap_blocks, labels_from_gaps, mean_and_std, GapScorer, SimilarityProfile,
};
use crate::transcript::{boundaries_to_labels, BoundaryLabels, Transcript};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// `b` distinct boundaries drawn uniformly from positions `1..m`.
pub fn random_baseline(m: usize, b: usize, seed: u64) -> Result<BoundaryLabels> {
    let slots = m.saturating_sub(1);
    if b > slots {
        return Err(Error::validation(format!(
            "cannot place {b} boundaries among {slots} interior positions"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: BTreeSet<usize> = rand::seq::index::sample(&mut rng, slots, b)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    boundaries_to_labels(&picked, m)
}

/// Boundaries at `n, 2n, 3n, ...` below `m`.
pub fn even_baseline(m: usize, n: usize) -> Result<BoundaryLabels> {
    if n == 0 {
        return Err(Error::validation("even baseline period must be at least 1"));
    }
    let picked: BTreeSet<usize> = (1..).map(|k| k * n).take_while(|&i| i < m).collect();
    boundaries_to_labels(&picked, m)
}

/// Boundary count used by the random baseline when none is given.
pub fn default_boundary_count(m: usize, reference: Option<&BoundaryLabels>) -> usize {
    match reference {
        Some(r) => r.boundaries().into_iter().filter(|&i| i > 0).count(),
        None => m / 30,
    }
}

/// Period whose even-baseline boundary count `(m - 1) / n` is closest to
/// `b`. Among equally close periods the one nearest the mean segment length
/// `m / (b + 1)` wins.
pub fn even_period_for_count(m: usize, b: usize) -> usize {
    let slots = m.saturating_sub(1);
    (1..=m.max(1))
        .min_by_key(|&n| ((slots / n).abs_diff(b), (n * (b + 1)).abs_diff(m)))
        .unwrap_or(1)
}

/// Sparse bag of words. Zero counts are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermVector {
    counts: HashMap<String, u32>,
}

impl TermVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: &str) {
        *self.counts.entry(term.to_string()).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &TermVector) {
        for (t, &c) in &other.counts {
            *self.counts.entry(t.clone()).or_insert(0) += c;
        }
    }

    pub fn get(&self, term: &str) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// Cosine of the two count vectors, or `None` when either is empty.
    pub fn cosine(&self, other: &TermVector) -> Option<f64> {
        if self.is_empty() || other.is_empty() {
            return None;
        }
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let dot: u64 = small
            .counts
            .iter()
            .map(|(t, &c)| c as u64 * large.get(t) as u64)
            .sum();
        let norm =
            |v: &TermVector| v.counts.values().map(|&c| (c as u64).pow(2)).sum::<u64>() as f64;
        Some((dot as f64 / (norm(self).sqrt() * norm(other).sqrt())).clamp(-1.0, 1.0))
    }
}

impl<S: AsRef<str>> FromIterator<S> for TermVector {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut v = TermVector::new();
        for t in iter {
            v.add(t.as_ref());
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        )
    }

    pub fn none() -> Self {
        Self(BTreeSet::new())
    }

    pub fn parse(src: &str) -> Self {
        Self::new(parse_term_list(src))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

/// Normalized, punctuation-stripped, non-stopword tokens of a caption.
pub fn content_terms(text: &str, lex: &FillerLexicon, stopwords: &Stopwords) -> TermVector {
    normalize_text(text, lex)
        .split_whitespace()
        .map(token_key)
        .filter(|k| !k.is_empty() && !stopwords.contains(k))
        .collect()
}

/// Word-frequency gap scorer. A gap next to a block without any content
/// terms scores 0.
#[derive(Debug, Clone, Default)]
pub struct TermFrequencyScorer {
    pub lexicon: FillerLexicon,
    pub stopwords: Stopwords,
}

impl TermFrequencyScorer {
    pub fn new(lexicon: FillerLexicon, stopwords: Stopwords) -> Self {
        Self { lexicon, stopwords }
    }
}

impl GapScorer for TermFrequencyScorer {
    fn profile(
        &self,
        t: &Transcript,
        mask: &EligibilityMask,
        window: usize,
    ) -> Result<SimilarityProfile> {
        texttiling_profile(t, mask, window, &self.lexicon, &self.stopwords)
    }
}

pub fn texttiling_profile(
    t: &Transcript,
    mask: &EligibilityMask,
    window: usize,
    lex: &FillerLexicon,
    stopwords: &Stopwords,
) -> Result<SimilarityProfile> {
    if mask.len() != t.len() {
        return Err(Error::validation(format!(
            "eligibility mask covers {} utterances, transcript has {}",
            mask.len(),
            t.len()
        )));
    }
    if window == 0 {
        return Err(Error::validation("block window must be at least 1"));
    }
    let kept = mask.kept_indices();
    let n = kept.len();
    if n < 2 {
        return Err(Error::TooShort(n));
    }
    let terms: Vec<TermVector> = kept
        .iter()
        .map(|&i| content_terms(&t.utterances()[i].text, lex, stopwords))
        .collect();
    let block = |lo: usize, hi: usize| {
        let mut v = TermVector::new();
        terms[lo..=hi].iter().for_each(|x| v.merge(x));
        v
    };
    let mut empty_gaps = 0;
    let sims = (0..n - 1)
        .map(|g| {
            let ((ll, lh), (rl, rh)) = gap_blocks(g, n, window);
            block(ll, lh).cosine(&block(rl, rh)).unwrap_or_else(|| {
                empty_gaps += 1;
                0.0
            })
        })
        .collect();
    if empty_gaps > 0 {
        log::debug!("{empty_gaps} gaps had an empty term block and scored 0");
    }
    SimilarityProfile::new(sims, kept[1..].to_vec())
}

#[derive(
    Debug,
    Clone,
    Copy,
    Default,
    PartialEq,
    Eq,
    serde::Serialize,
    serde::Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum TilingMode {
    /// Mean-minus-spread threshold shared with the embedding segmenter.
    #[default]
    Threshold,
    /// Hearst depth scores with the mean - std/2 cutoff.
    Depth,
}

pub fn texttiling_baseline(
    t: &Transcript,
    mask: &EligibilityMask,
    window: usize,
    lex: &FillerLexicon,
    stopwords: &Stopwords,
    multiplier: f64,
    mode: TilingMode,
) -> Result<(BoundaryLabels, SimilarityProfile)> {
    let profile = texttiling_profile(t, mask, window, lex, stopwords)?;
    let labels = match mode {
        TilingMode::Threshold => detect_boundaries(&profile, multiplier, t.len())?,
        TilingMode::Depth => {
            labels_from_gaps(&profile, &depth_boundary_gaps(profile.sims()), t.len())?
        }
    };
    Ok((labels, profile))
}

/// Depth of each gap: how far the score sits below the nearest peak on
/// each side, found by climbing while scores keep rising.
pub fn depth_scores(sims: &[f64]) -> Vec<f64> {
    (0..sims.len())
        .map(|g| {
            let mut left = sims[g];
            for &s in sims[..g].iter().rev() {
                if s < left {
                    break;
                }
                left = s;
            }
            let mut right = sims[g];
            for &s in &sims[g + 1..] {
                if s < right {
                    break;
                }
                right = s;
            }
            (left - sims[g]) + (right - sims[g])
        })
        .collect()
}

/// Gaps whose depth exceeds `mean - std / 2` of all depth scores, among gaps
/// with positive depth.
pub fn depth_boundary_gaps(sims: &[f64]) -> Vec<usize> {
    if sims.is_empty() {
        return Vec::new();
    }
    let depths = depth_scores(sims);
    let (mean, std) = mean_and_std(&depths);
    let cutoff = mean - std / 2.0;
    depths
        .iter()
        .enumerate()
        .filter_map(|(g, &d)| (d > 0.0 && d > cutoff).then_some(g))
        .collect()
}
