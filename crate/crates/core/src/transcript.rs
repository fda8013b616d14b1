//! Transcript data model and boundary-label conversions.
//!
//! Transcripts are read from line-delimited JSON records:
//!
//! ```text
//! {"id":"u0","speaker":"C","text":"Yeah, since ...","topic_change":0,"topic_label":"What to do for next meeting"}
//! ```
//!
//! Only `id` and `text` are required. Unknown keys are ignored and blank
//! lines are skipped.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub id: String,
    pub speaker: Option<String>,
    pub text: String,
    pub ref_topic_change: Option<bool>,
    pub ref_topic_label: Option<String>,
}

impl Utterance {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            speaker: None,
            text: text.into(),
            ref_topic_change: None,
            ref_topic_label: None,
        }
    }

    pub fn with_topic_change(mut self, change: bool) -> Self {
        self.ref_topic_change = Some(change);
        self
    }
}

/// An ordered, non-empty list of utterances with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    utterances: Vec<Utterance>,
}

impl Transcript {
    pub fn new(utterances: Vec<Utterance>) -> Result<Self> {
        if utterances.is_empty() {
            return Err(Error::EmptyInput("transcript has no utterances".into()));
        }
        let mut seen = HashSet::with_capacity(utterances.len());
        for u in &utterances {
            if !seen.insert(u.id.as_str()) {
                return Err(Error::DuplicateId(u.id.clone()));
            }
        }
        Ok(Self { utterances })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        parse_transcript(BufReader::new(file))
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn has_complete_reference(&self) -> bool {
        self.utterances.iter().all(|u| u.ref_topic_change.is_some())
    }
}

#[derive(Deserialize)]
struct Record {
    id: String,
    text: String,
    #[serde(default)]
    speaker: Option<String>,
    #[serde(default)]
    topic_change: Option<u8>,
    #[serde(default)]
    topic_label: Option<String>,
}

pub fn parse_transcript<R: BufRead>(reader: R) -> Result<Transcript> {
    let mut utterances = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let ref_topic_change = match record.topic_change {
            None => None,
            Some(0) => Some(false),
            Some(1) => Some(true),
            Some(other) => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("topic_change must be 0 or 1, got {other}"),
                })
            }
        };
        utterances.push(Utterance {
            id: record.id,
            speaker: record.speaker,
            text: record.text,
            ref_topic_change,
            ref_topic_label: record.topic_label,
        });
    }
    if utterances.is_empty() {
        return Err(Error::EmptyInput("no transcript records".into()));
    }
    Transcript::new(utterances)
}

/// Per-utterance binary labels; `true` marks the start of a new topic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundaryLabels(Vec<bool>);

impl BoundaryLabels {
    pub fn zeros(m: usize) -> Self {
        Self(vec![false; m])
    }

    pub fn from_bools(labels: Vec<bool>) -> Self {
        Self(labels)
    }

    /// Parses a string over `{0,1}`.
    pub fn from_boundary_string(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::validation(format!(
                    "boundary string may only contain '0' and '1', found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub(crate) fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Positions carrying a boundary, in increasing order.
    pub fn boundaries(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn to_boundary_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BoundaryLabels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn reference_labels(t: &Transcript) -> Result<BoundaryLabels> {
    t.utterances()
        .iter()
        .enumerate()
        .map(|(index, u)| {
            u.ref_topic_change
                .ok_or_else(|| Error::IncompleteReference {
                    index,
                    id: u.id.clone(),
                })
        })
        .collect::<Result<Vec<_>>>()
        .map(BoundaryLabels)
}

pub fn labels_to_boundary_string(labels: &BoundaryLabels) -> String {
    labels.to_boundary_string()
}

/// Builds labels of length `m` from boundary positions. Position 0 is
/// never a boundary.
pub fn boundaries_to_labels(indices: &BTreeSet<usize>, m: usize) -> Result<BoundaryLabels> {
    let mut labels = BoundaryLabels::zeros(m);
    for &i in indices {
        if i == 0 {
            return Err(Error::validation("position 0 cannot carry a boundary"));
        }
        if i >= m {
            return Err(Error::validation(format!(
                "boundary position {i} out of range for {m} utterances"
            )));
        }
        labels.set(i, true);
    }
    Ok(labels)
}
