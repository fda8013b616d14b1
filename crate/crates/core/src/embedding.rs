//! Embedding bundles and token pooling.
//!
//! A bundle is line-delimited JSON. The first line is a header
//! `{"dim": H, "mode": "token"|"pooled", "model": "..."}`; every further
//! line carries one utterance, either `{"id": .., "tokens": [[..H..], ..]}`
//! or `{"id": .., "pooled": [..H..]}` depending on the mode.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::EligibilityMask;
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BundleMode {
    Token,
    Pooled,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Max,
    Mean,
}

/// Row-major `rows × dim` matrix of token vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TokenMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::validation(format!(
                "ragged token matrix: rows of width {dim} and {}",
                bad.len()
            )));
        }
        Ok(Self {
            dim,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Tokens(TokenMatrix),
    Pooled(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBundle {
    dim: usize,
    mode: BundleMode,
    model_tag: String,
    ids: Vec<String>,
    entries: HashMap<String, Entry>,
}

#[derive(Deserialize, Serialize)]
struct Header {
    dim: usize,
    mode: BundleMode,
    #[serde(default)]
    model: String,
}

#[derive(Deserialize)]
struct RawEntry {
    id: String,
    #[serde(default)]
    tokens: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pooled: Option<Vec<f64>>,
}

impl EmbeddingBundle {
    pub fn new(dim: usize, mode: BundleMode, model_tag: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("dim must be positive".into()));
        }
        Ok(Self {
            dim,
            mode,
            model_tag: model_tag.into(),
            ids: Vec::new(),
            entries: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> BundleMode {
        self.mode
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Entry ids in insertion order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&Entry> {
        self.entries.get(id)
    }

    pub fn insert_tokens(&mut self, id: impl Into<String>, rows: &[Vec<f64>]) -> Result<()> {
        let id = id.into();
        if self.mode != BundleMode::Token {
            return Err(Error::Format(format!(
                "entry {id:?} has tokens but bundle mode is pooled"
            )));
        }
        if rows.is_empty() {
            return Err(Error::Format(format!("entry {id:?} has no tokens")));
        }
        for row in rows {
            self.check_vector(&id, row)?;
        }
        let matrix = TokenMatrix::from_rows(rows)?;
        self.push(id, Entry::Tokens(matrix))
    }

    pub fn insert_pooled(&mut self, id: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let id = id.into();
        if self.mode != BundleMode::Pooled {
            return Err(Error::Format(format!(
                "entry {id:?} is pooled but bundle mode is token"
            )));
        }
        self.check_vector(&id, &values)?;
        self.push(id, Entry::Pooled(values))
    }

    fn check_vector(&self, id: &str, values: &[f64]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::Dimension {
                id: id.to_string(),
                expected: self.dim,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(id.to_string()));
        }
        Ok(())
    }

    fn push(&mut self, id: String, entry: Entry) -> Result<()> {
        if self.entries.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.ids.push(id.clone());
        self.entries.insert(id, entry);
        Ok(())
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        read_bundle(BufReader::new(File::open(path)?))
    }

    /// Writes the bundle in the line format read by [`read_bundle`].
    /// Values are printed with shortest round-trip precision.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            dim: self.dim,
            mode: self.mode,
            model: self.model_tag.clone(),
        };
        serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        for id in &self.ids {
            let line = match &self.entries[id] {
                Entry::Tokens(m) => {
                    let rows: Vec<&[f64]> = m.rows().collect();
                    serde_json::json!({ "id": id, "tokens": rows })
                }
                Entry::Pooled(v) => serde_json::json!({ "id": id, "pooled": v }),
            };
            serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn read_bundle<R: BufRead>(reader: R) -> Result<EmbeddingBundle> {
    let mut bundle: Option<EmbeddingBundle> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let Some(bundle) = bundle.as_mut() else {
            let header: Header = serde_json::from_str(trimmed).map_err(|e| {
                Error::Format(format!(
                    "line {}: missing or invalid header: {e}",
                    lineno + 1
                ))
            })?;
            bundle = Some(EmbeddingBundle::new(header.dim, header.mode, header.model)?);
            continue;
        };
        let raw: RawEntry = serde_json::from_str(trimmed)
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        match (raw.tokens, raw.pooled) {
            (Some(rows), None) => bundle.insert_tokens(raw.id, &rows)?,
            (None, Some(values)) => bundle.insert_pooled(raw.id, values)?,
            _ => {
                return Err(Error::Format(format!(
                    "line {}: entry {:?} needs exactly one of \"tokens\" or \"pooled\"",
                    lineno + 1,
                    raw.id
                )))
            }
        }
    }
    bundle.ok_or_else(|| Error::Format("missing header line".into()))
}

/// A fixed-size utterance embedding tied to its transcript position.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceVector {
    pub values: Vec<f64>,
    pub source_index: usize,
}

impl UtteranceVector {
    pub fn new(values: Vec<f64>, source_index: usize) -> Self {
        Self {
            values,
            source_index,
        }
    }
}

/// Elementwise maximum over token rows.
pub fn max_pool_tokens(m: &TokenMatrix) -> Result<Vec<f64>> {
    let mut rows = m.rows();
    let first = rows
        .next()
        .ok_or_else(|| Error::EmptyInput("token matrix has no rows".into()))?;
    let mut out = first.to_vec();
    for row in rows {
        for (o, &v) in out.iter_mut().zip(row) {
            if v > *o {
                *o = v;
            }
        }
    }
    Ok(out)
}

/// Elementwise arithmetic mean over token rows.
pub fn mean_pool_tokens(m: &TokenMatrix) -> Result<Vec<f64>> {
    let n = m.n_rows();
    if n == 0 {
        return Err(Error::EmptyInput("token matrix has no rows".into()));
    }
    if n == 1 {
        return Ok(m.rows().next().unwrap().to_vec());
    }
    let mut sums = vec![0.0; m.dim()];
    for row in m.rows() {
        for (s, &v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    Ok(sums.into_iter().map(|s| s / n as f64).collect())
}

pub fn pool(m: &TokenMatrix, pooling: Pooling) -> Result<Vec<f64>> {
    match pooling {
        Pooling::Max => max_pool_tokens(m),
        Pooling::Mean => mean_pool_tokens(m),
    }
}

/// One vector per eligible utterance, in transcript order.
pub fn utterance_vectors(
    b: &EmbeddingBundle,
    t: &Transcript,
    mask: &EligibilityMask,
    pooling: Pooling,
) -> Result<Vec<UtteranceVector>> {
    if mask.len() != t.len() {
        return Err(Error::validation(format!(
            "eligibility mask covers {} utterances, transcript has {}",
            mask.len(),
            t.len()
        )));
    }
    if b.mode() == BundleMode::Pooled {
        log::warn!("bundle is pre-pooled; ignoring requested {pooling:?} pooling");
    }
    mask.kept_indices()
        .iter()
        .map(|&i| {
            let id = &t.utterances()[i].id;
            let values = match b.get(id) {
                None => return Err(Error::Alignment(id.clone())),
                Some(Entry::Pooled(v)) => v.clone(),
                Some(Entry::Tokens(m)) => pool(m, pooling)?,
            };
            Ok(UtteranceVector::new(values, i))
        })
        .collect()
}
