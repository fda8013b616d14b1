//! Planted-boundary corpora: transcripts whose segment structure is known by
//! construction, with matching embedding bundles and vocabulary.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use segtile::embedding::{BundleMode, EmbeddingBundle};
use segtile::transcript::{boundaries_to_labels, BoundaryLabels, Transcript, Utterance};

pub const DIM: usize = 96;
/// Dimensions carrying each topic's own signal.
pub const TOPIC_SUPPORT: usize = 10;
/// Dimensions shared by every topic, used to dial in cross-topic similarity.
pub const SHARED_SUPPORT: usize = 16;
pub const MIN_SEGMENT: usize = 10;

#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub min_len: usize,
    pub max_len: usize,
    pub min_segments: usize,
    pub max_segments: usize,
    /// Cosine between any two segment centroids.
    pub cross_cosine: f64,
    /// Expected noise norm relative to the centroid norm.
    pub noise: f64,
    /// Dirichlet concentration of how the length beyond `MIN_SEGMENT` is
    /// shared between segments; 1 is uniform, larger is more regular.
    pub length_concentration: f64,
}

impl PlantedSpec {
    pub fn separated() -> Self {
        Self {
            min_len: 60,
            max_len: 200,
            min_segments: 2,
            max_segments: 6,
            cross_cosine: 0.0,
            noise: 0.3,
            length_concentration: 4.0,
        }
    }
}

pub struct Planted {
    pub transcript: Transcript,
    pub bundle: EmbeddingBundle,
    pub reference: BoundaryLabels,
    /// Segment id of every utterance.
    pub segment_of: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub vectors: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

/// Nonnegative unit centroids: topic `s` is `sqrt(rho) * shared + sqrt(1 - rho) * own_s`
/// where `shared` and every `own_s` are unit vectors on disjoint supports, so
/// any two centroids have cosine exactly `rho`.
pub fn centroids(k: usize, rho: f64) -> Vec<Vec<f64>> {
    assert!(SHARED_SUPPORT + k * TOPIC_SUPPORT <= DIM);
    let (shared, own) = (
        rho.sqrt() / (SHARED_SUPPORT as f64).sqrt(),
        (1.0 - rho).sqrt() / (TOPIC_SUPPORT as f64).sqrt(),
    );
    (0..k)
        .map(|s| {
            let mut c = vec![0.0; DIM];
            c[..SHARED_SUPPORT].iter_mut().for_each(|x| *x = shared);
            let lo = SHARED_SUPPORT + s * TOPIC_SUPPORT;
            c[lo..lo + TOPIC_SUPPORT].iter_mut().for_each(|x| *x = own);
            c
        })
        .collect()
}

/// Segment lengths summing to `n`, each at least `MIN_SEGMENT`.
pub fn segment_lengths(rng: &mut ChaCha8Rng, n: usize, k: usize, concentration: f64) -> Vec<usize> {
    let slack = n - MIN_SEGMENT * k;
    let gamma = Gamma::new(concentration, 1.0).unwrap();
    let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let shares: Vec<f64> = draws.into_iter().map(|d| d / total).collect();
    // largest-remainder rounding keeps the total exact
    let raw: Vec<f64> = shares.iter().map(|s| s * slack as f64).collect();
    let mut lens: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())));
    let missing = slack - lens.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        lens[i] += 1;
    }
    lens.into_iter().map(|l| l + MIN_SEGMENT).collect()
}

pub fn caption(i: usize) -> String {
    format!("planted utterance number {i:05}")
}

pub fn planted(seed: u64, spec: &PlantedSpec) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(spec.min_len..=spec.max_len);
    let k = rng.random_range(spec.min_segments..=spec.max_segments);
    let lens = segment_lengths(&mut rng, n, k, spec.length_concentration);
    let cents = centroids(k, spec.cross_cosine);

    let segment_of: Vec<usize> = lens
        .iter()
        .enumerate()
        .flat_map(|(s, &l)| std::iter::repeat_n(s, l))
        .collect();
    let sigma = spec.noise / (DIM as f64).sqrt();
    let mut bundle = EmbeddingBundle::new(DIM, BundleMode::Pooled, "planted").unwrap();
    let mut utterances = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for (i, &s) in segment_of.iter().enumerate() {
        let v: Vec<f64> = cents[s]
            .iter()
            .map(|c| {
                let z: f64 = StandardNormal.sample(&mut rng);
                c + sigma * z
            })
            .collect();
        let id = format!("u{i}");
        bundle.insert_pooled(id.clone(), v.clone()).unwrap();
        vectors.push(v);
        let start = i > 0 && segment_of[i - 1] != s;
        utterances.push(Utterance::new(id, caption(i)).with_topic_change(start));
    }
    let starts: BTreeSet<usize> = (1..n)
        .filter(|&i| segment_of[i] != segment_of[i - 1])
        .collect();
    Planted {
        transcript: Transcript::new(utterances).unwrap(),
        bundle,
        reference: boundaries_to_labels(&starts, n).unwrap(),
        segment_of,
        centroids: cents,
        vectors,
    }
}

/// Replaces every caption with words drawn from a per-segment topic
/// vocabulary mixed with a shared vocabulary. `shared_mass` is the
/// probability that a word comes from the shared pool; with equal pool
/// sizes the expected word distributions of two topics have cosine
/// `m^2 / (m^2 + (1 - m)^2)` for `m = shared_mass`.
pub fn with_vocabulary(
    p: &Planted,
    seed: u64,
    words_per_utterance: usize,
    shared_mass: f64,
) -> Transcript {
    const TOPIC_WORDS: usize = 25;
    const SHARED_WORDS: usize = 25;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_7e47);
    let utterances = p
        .transcript
        .utterances()
        .iter()
        .zip(&p.segment_of)
        .map(|(u, &s)| {
            let words: Vec<String> = (0..words_per_utterance)
                .map(|_| {
                    if rng.random_bool(shared_mass) {
                        format!("common{}", rng.random_range(0..SHARED_WORDS))
                    } else {
                        format!("topic{s}word{}", rng.random_range(0..TOPIC_WORDS))
                    }
                })
                .collect();
            let mut v = u.clone();
            v.text = words.join(" ");
            v
        })
        .collect();
    Transcript::new(utterances).unwrap()
}

/// Shared-word probability whose expected topic word distributions have
/// cosine `rho` (inverse of the formula on [`with_vocabulary`]).
pub fn shared_mass_for(rho: f64) -> f64 {
    let r = (rho / (1.0 - rho)).sqrt();
    r / (1.0 + r)
}

/// Writes a transcript as JSONL, including reference flags when present.
pub fn write_transcript(t: &Transcript, path: &std::path::Path) {
    let mut out = String::new();
    for u in t.utterances() {
        let mut rec = serde_json::json!({"id": u.id, "text": u.text});
        if let Some(s) = &u.speaker {
            rec["speaker"] = s.clone().into();
        }
        if let Some(c) = u.ref_topic_change {
            rec["topic_change"] = (c as u8).into();
        }
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

pub fn write_bundle(b: &EmbeddingBundle, path: &std::path::Path) {
    let mut buf = Vec::new();
    b.write(&mut buf).unwrap();
    std::fs::write(path, buf).unwrap();
}
