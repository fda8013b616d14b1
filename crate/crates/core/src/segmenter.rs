//! Similarity-profile segmentation.
//!
//! Every gap between consecutive eligible utterances gets a score: the
//! utterances up to `window` positions on each side are max-pooled into one
//! block vector per side, and the gap scores the cosine similarity of the
//! two block vectors. A gap becomes a topic boundary when its score falls
//! strictly below `mean - multiplier * std` of the whole profile.

use serde::{Deserialize, Serialize};

use crate::baselines::TermFrequencyScorer;
use crate::embedding::{utterance_vectors, EmbeddingBundle, Pooling, UtteranceVector};
use crate::error::{Error, Result};
use crate::preprocess::{eligibility_mask, EligibilityMask, FillerLexicon, DEFAULT_MIN_CHARS};
use crate::transcript::{BoundaryLabels, Transcript};

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_MULTIPLIER: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    #[default]
    Embedding,
    TermFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    /// Eligible utterances per side of a gap.
    pub window: usize,
    pub multiplier: f64,
    pub pooling: Pooling,
    pub scorer: ScorerKind,
    pub min_chars: usize,
    /// Half-width of an optional moving-average smoothing of the profile.
    pub smoothing: Option<usize>,
    /// Optional minimum distance, in gaps, between two reported boundaries.
    pub min_gap: Option<usize>,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            multiplier: DEFAULT_MULTIPLIER,
            pooling: Pooling::Max,
            scorer: ScorerKind::Embedding,
            min_chars: DEFAULT_MIN_CHARS,
            smoothing: None,
            min_gap: None,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::validation("block window must be at least 1"));
        }
        if !(self.multiplier >= 0.0 && self.multiplier.is_finite()) {
            return Err(Error::validation(format!(
                "threshold multiplier must be a finite value >= 0, got {}",
                self.multiplier
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityProfile {
    sims: Vec<f64>,
    gap_index_map: Vec<usize>,
    mean: f64,
    std: f64,
}

impl SimilarityProfile {
    /// `gap_index_map[g]` is the transcript index of the first utterance to
    /// the right of gap `g`.
    pub fn new(sims: Vec<f64>, gap_index_map: Vec<usize>) -> Result<Self> {
        if sims.is_empty() {
            return Err(Error::TooShort(sims.len() + 1));
        }
        if sims.len() != gap_index_map.len() {
            return Err(Error::validation(format!(
                "{} similarities but {} gap positions",
                sims.len(),
                gap_index_map.len()
            )));
        }
        if let Some(bad) = sims.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
            return Err(Error::validation(format!(
                "similarity {bad} outside [-1, 1]"
            )));
        }
        if gap_index_map.first() == Some(&0) || gap_index_map.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(
                "gap positions must be strictly increasing and start after utterance 0",
            ));
        }
        let (mean, std) = mean_and_std(&sims);
        Ok(Self {
            sims,
            gap_index_map,
            mean,
            std,
        })
    }

    pub fn sims(&self) -> &[f64] {
        &self.sims
    }

    pub fn gap_index_map(&self) -> &[usize] {
        &self.gap_index_map
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population standard deviation of the scores.
    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn len(&self) -> usize {
        self.sims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sims.is_empty()
    }

    pub fn threshold(&self, multiplier: f64) -> f64 {
        self.mean - multiplier * self.std
    }

    /// Centered moving average with half-width `half`, clipped at the ends.
    pub fn smoothed(&self, half: usize) -> Self {
        if half == 0 {
            return self.clone();
        }
        let n = self.sims.len();
        let sims = (0..n)
            .map(|g| {
                let lo = g.saturating_sub(half);
                let hi = (g + half).min(n - 1);
                let s: f64 = self.sims[lo..=hi].iter().sum();
                (s / (hi - lo + 1) as f64).clamp(-1.0, 1.0)
            })
            .collect::<Vec<_>>();
        let (mean, std) = mean_and_std(&sims);
        Self {
            sims,
            gap_index_map: self.gap_index_map.clone(),
            mean,
            std,
        }
    }
}

/// Mean and population standard deviation. A constant sequence yields
/// exactly its value and zero spread.
pub(crate) fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let first = xs[0];
    if xs.iter().all(|&x| x == first) {
        return (first, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "cosine of vectors with different widths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Elementwise max over `vectors[lo..=hi]`.
pub fn block_embedding(vectors: &[UtteranceVector], lo: usize, hi: usize) -> Result<Vec<f64>> {
    if lo > hi || hi >= vectors.len() {
        return Err(Error::validation(format!(
            "invalid block range {lo}..={hi} over {} vectors",
            vectors.len()
        )));
    }
    let mut out = vectors[lo].values.clone();
    for v in &vectors[lo + 1..=hi] {
        if v.values.len() != out.len() {
            return Err(Error::validation("utterance vectors differ in width"));
        }
        for (o, &x) in out.iter_mut().zip(&v.values) {
            if x > *o {
                *o = x;
            }
        }
    }
    Ok(out)
}

/// Inclusive left and right block ranges around gap `g` (between items `g`
/// and `g + 1`) over `n` items.
pub fn gap_blocks(g: usize, n: usize, window: usize) -> ((usize, usize), (usize, usize)) {
    let left = ((g + 1).saturating_sub(window), g);
    let right = (g + 1, (g + window).min(n - 1));
    (left, right)
}

pub fn similarity_profile(vectors: &[UtteranceVector], window: usize) -> Result<SimilarityProfile> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::TooShort(n));
    }
    if window == 0 {
        return Err(Error::validation("block window must be at least 1"));
    }
    let sims = (0..n - 1)
        .map(|g| {
            let ((ll, lh), (rl, rh)) = gap_blocks(g, n, window);
            let left = block_embedding(vectors, ll, lh)?;
            let right = block_embedding(vectors, rl, rh)?;
            cosine_similarity(&left, &right)
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps = vectors[1..].iter().map(|v| v.source_index).collect();
    SimilarityProfile::new(sims, gaps)
}

/// Gaps whose score is strictly below `mean - multiplier * std`.
pub fn boundary_gaps(p: &SimilarityProfile, multiplier: f64) -> Vec<usize> {
    let threshold = p.threshold(multiplier);
    p.sims()
        .iter()
        .enumerate()
        .filter_map(|(g, &s)| (s < threshold).then_some(g))
        .collect()
}

/// Labels of length `m` with a boundary at the first utterance right of
/// every gap scoring strictly below the threshold.
pub fn detect_boundaries(
    p: &SimilarityProfile,
    multiplier: f64,
    m: usize,
) -> Result<BoundaryLabels> {
    labels_from_gaps(p, &boundary_gaps(p, multiplier), m)
}

pub(crate) fn labels_from_gaps(
    p: &SimilarityProfile,
    gaps: &[usize],
    m: usize,
) -> Result<BoundaryLabels> {
    let mut labels = BoundaryLabels::zeros(m);
    for &g in gaps {
        let idx = p.gap_index_map()[g];
        if idx >= m {
            return Err(Error::validation(format!(
                "gap maps to utterance {idx} but transcript has {m}"
            )));
        }
        labels.set(idx, true);
    }
    if m > 0 {
        labels.set(0, false);
    }
    Ok(labels)
}

/// Keeps the lowest-scoring boundaries first and drops any later candidate
/// closer than `min_gap` gaps to one already kept.
pub fn suppress_close(p: &SimilarityProfile, gaps: &[usize], min_gap: usize) -> Vec<usize> {
    let mut order = gaps.to_vec();
    order.sort_by(|&a, &b| p.sims()[a].total_cmp(&p.sims()[b]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for g in order {
        if kept.iter().all(|&k| k.abs_diff(g) >= min_gap) {
            kept.push(g);
        }
    }
    kept.sort_unstable();
    kept
}

/// Produces a similarity profile for the eligible utterances of a transcript.
pub trait GapScorer {
    fn profile(
        &self,
        t: &Transcript,
        mask: &EligibilityMask,
        window: usize,
    ) -> Result<SimilarityProfile>;
}

pub struct EmbeddingScorer<'a> {
    pub bundle: &'a EmbeddingBundle,
    pub pooling: Pooling,
}

impl GapScorer for EmbeddingScorer<'_> {
    fn profile(
        &self,
        t: &Transcript,
        mask: &EligibilityMask,
        window: usize,
    ) -> Result<SimilarityProfile> {
        let vectors = utterance_vectors(self.bundle, t, mask, self.pooling)?;
        similarity_profile(&vectors, window)
    }
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub labels: BoundaryLabels,
    /// Profile the threshold was applied to (smoothed when configured).
    pub profile: SimilarityProfile,
    pub mask: EligibilityMask,
}

/// Profile, threshold and optional post-processing shared by every scorer.
pub fn run_pipeline(
    t: &Transcript,
    scorer: &dyn GapScorer,
    cfg: &SegmenterConfig,
    lex: &FillerLexicon,
) -> Result<Segmentation> {
    cfg.validate()?;
    let mask = eligibility_mask(t, lex, cfg.min_chars);
    let mut profile = scorer.profile(t, &mask, cfg.window)?;
    if let Some(half) = cfg.smoothing {
        profile = profile.smoothed(half);
    }
    let mut gaps = boundary_gaps(&profile, cfg.multiplier);
    if let Some(min_gap) = cfg.min_gap {
        gaps = suppress_close(&profile, &gaps, min_gap);
    }
    let labels = labels_from_gaps(&profile, &gaps, t.len())?;
    Ok(Segmentation {
        labels,
        profile,
        mask,
    })
}

/// Full embedding pipeline: eligibility masking, pooling, profile and
/// threshold. A term-frequency config runs the word-count scorer with the
/// default stopwords instead and ignores the bundle.
pub fn segment(
    t: &Transcript,
    bundle: &EmbeddingBundle,
    cfg: &SegmenterConfig,
    lex: &FillerLexicon,
) -> Result<Segmentation> {
    match cfg.scorer {
        ScorerKind::Embedding => {
            let scorer = EmbeddingScorer {
                bundle,
                pooling: cfg.pooling,
            };
            run_pipeline(t, &scorer, cfg, lex)
        }
        ScorerKind::TermFrequency => {
            let scorer = TermFrequencyScorer::new(lex.clone(), Default::default());
            run_pipeline(t, &scorer, cfg, lex)
        }
    }
}
