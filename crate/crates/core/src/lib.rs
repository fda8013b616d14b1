//! Unsupervised topic segmentation of meeting transcripts.
//!
//! Utterance embeddings are max-pooled over sliding blocks on either side of
//! every gap between utterances; the cosine similarity of the two block
//! vectors forms a profile, and gaps scoring below `mean - c * std` of that
//! profile become topic boundaries. Random, even and TextTiling baselines
//! and the Pk and WinDiff metrics are included for comparison.

pub mod baselines;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod preprocess;
pub mod segmenter;
pub mod transcript;

pub use embedding::{read_bundle, EmbeddingBundle, Pooling, UtteranceVector};
pub use error::{Error, Result};
pub use metrics::{default_window, pk, windiff, MetricResult};
pub use preprocess::{eligibility_mask, normalize_text, EligibilityMask, FillerLexicon};
pub use segmenter::{
    detect_boundaries, segment, similarity_profile, SegmenterConfig, SimilarityProfile,
};
pub use transcript::{parse_transcript, reference_labels, BoundaryLabels, Transcript, Utterance};
