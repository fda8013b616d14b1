//! Window-based segmentation error metrics.
//!
//! Both metrics slide a window of `k` consecutive positions over boundary
//! strings (`'1'` marks a boundary) and report the fraction of the
//! `len - k + 1` placements where reference and hypothesis disagree. Pk
//! compares whether each window holds any boundary at all; WinDiff compares
//! the number of boundaries in each window. These are the semantics of the
//! NLTK `pk` and `windowdiff` functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub value: f64,
    pub window_k: usize,
    pub windows_evaluated: usize,
    pub mismatches: usize,
}

impl MetricResult {
    fn new(mismatches: usize, window_k: usize, windows_evaluated: usize) -> Self {
        Self {
            value: mismatches as f64 / windows_evaluated as f64,
            window_k,
            windows_evaluated,
            mismatches,
        }
    }
}

fn parse_boundaries(s: &str) -> Result<Vec<bool>> {
    s.bytes()
        .map(|b| match b {
            b'0' => Ok(false),
            b'1' => Ok(true),
            _ => Err(Error::validation(format!(
                "boundary string may only contain '0' and '1': {s:?}"
            ))),
        })
        .collect()
}

/// Half of the mean reference segment length, rounded half-to-even, at
/// least 1.
pub fn default_window(reference: &str) -> Result<usize> {
    let bits = parse_boundaries(reference)?;
    let count = bits.iter().filter(|&&b| b).count();
    if count == 0 {
        return Err(Error::UndefinedWindow);
    }
    let (num, den) = (bits.len(), 2 * count);
    let (q, r) = (num / den, num % den);
    let k = match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q % 2),
    };
    Ok(k.max(1))
}

fn prepare(reference: &str, hypothesis: &str, k: usize) -> Result<(Vec<u32>, Vec<u32>)> {
    let r = parse_boundaries(reference)?;
    let h = parse_boundaries(hypothesis)?;
    if r.len() != h.len() {
        return Err(Error::validation(format!(
            "reference has {} positions, hypothesis has {}",
            r.len(),
            h.len()
        )));
    }
    if k == 0 || k >= r.len() {
        return Err(Error::validation(format!(
            "window k={k} must satisfy 1 <= k < {}",
            r.len()
        )));
    }
    Ok((window_counts(&r, k), window_counts(&h, k)))
}

/// Boundary count of each length-`k` window, via a running sum.
fn window_counts(bits: &[bool], k: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(bits.len() - k + 1);
    let mut count: u32 = bits[..k].iter().map(|&b| b as u32).sum();
    out.push(count);
    for i in k..bits.len() {
        count += bits[i] as u32;
        count -= bits[i - k] as u32;
        out.push(count);
    }
    out
}

pub fn pk(reference: &str, hypothesis: &str, k: usize) -> Result<MetricResult> {
    let (r, h) = prepare(reference, hypothesis, k)?;
    let mismatches = r
        .iter()
        .zip(&h)
        .filter(|(a, b)| (**a > 0) != (**b > 0))
        .count();
    Ok(MetricResult::new(mismatches, k, r.len()))
}

pub fn windiff(reference: &str, hypothesis: &str, k: usize) -> Result<MetricResult> {
    let (r, h) = prepare(reference, hypothesis, k)?;
    let mismatches = r.iter().zip(&h).filter(|(a, b)| a != b).count();
    Ok(MetricResult::new(mismatches, k, r.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub pk: f64,
    pub windiff: f64,
    pub k: usize,
}

/// Pk and WinDiff at `k`, or at the reference's default window when `k` is
/// `None`.
pub fn evaluate(reference: &str, hypothesis: &str, k: Option<usize>) -> Result<Evaluation> {
    let k = match k {
        Some(k) => k,
        None => default_window(reference)?,
    };
    Ok(Evaluation {
        pk: pk(reference, hypothesis, k)?.value,
        windiff: windiff(reference, hypothesis, k)?.value,
        k,
    })
}

/// Unweighted mean over meetings.
pub fn mean_evaluation(evals: &[Evaluation]) -> Option<(f64, f64)> {
    if evals.is_empty() {
        return None;
    }
    let n = evals.len() as f64;
    Some((
        evals.iter().map(|e| e.pk).sum::<f64>() / n,
        evals.iter().map(|e| e.windiff).sum::<f64>() / n,
    ))
}
