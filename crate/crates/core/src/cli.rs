//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage, validation and format errors, 2
//! for I/O errors. Configuration flags fall back to `SEGTILE_<FLAG>`
//! environment variables, then to built-in defaults.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::baselines::{
    default_boundary_count, even_baseline, even_period_for_count, random_baseline,
    texttiling_baseline, Stopwords, TilingMode,
};
use crate::embedding::{EmbeddingBundle, Pooling};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, mean_evaluation, Evaluation};
use crate::preprocess::{eligibility_mask, FillerLexicon, DEFAULT_MIN_CHARS};
use crate::segmenter::{
    segment, ScorerKind, SegmenterConfig, SimilarityProfile, DEFAULT_MULTIPLIER, DEFAULT_WINDOW,
};
use crate::transcript::{reference_labels, BoundaryLabels, Transcript};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "segtile",
    version,
    about = "Unsupervised topic segmentation of meeting transcripts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment transcripts with precomputed utterance embeddings.
    Segment(SegmentArgs),
    /// Run a comparison baseline (random, even or texttiling).
    Baseline(BaselineArgs),
    /// Score a hypothesis segmentation against a reference with Pk and WinDiff.
    Evaluate(EvaluateArgs),
    /// Export a similarity profile as CSV for plotting.
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
struct TextArgs {
    /// Minimum caption length, in characters after normalization.
    #[arg(long, env = "SEGTILE_MIN_CHARS", default_value_t = DEFAULT_MIN_CHARS)]
    min_chars: usize,
    /// Filler lexicon file (one term per line, `#` comments).
    #[arg(long, env = "SEGTILE_FILLERS")]
    fillers: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file, or directory in batch mode. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Manifest path. Defaults to `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SegmentArgs {
    /// Transcript file, or a directory of `*.jsonl` transcripts.
    #[arg(long)]
    transcript: PathBuf,
    /// Embedding bundle, or a directory holding one bundle per transcript file name.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, env = "SEGTILE_WINDOW", default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, env = "SEGTILE_MULTIPLIER", default_value_t = DEFAULT_MULTIPLIER)]
    multiplier: f64,
    #[arg(long, env = "SEGTILE_POOLING", value_enum, default_value_t = Pooling::Max)]
    pooling: Pooling,
    /// Moving-average half-width applied to the profile before thresholding.
    #[arg(long, env = "SEGTILE_SMOOTHING")]
    smoothing: Option<usize>,
    /// Minimum distance in gaps between two boundaries.
    #[arg(long, env = "SEGTILE_MIN_GAP")]
    min_gap: Option<usize>,
    #[command(flatten)]
    text: TextArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Random,
    Even,
    Texttiling,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    transcript: PathBuf,
    /// Random: number of boundaries. Defaults to the reference count, else M/30.
    #[arg(long, env = "SEGTILE_COUNT")]
    count: Option<usize>,
    /// Random: generator seed (required).
    #[arg(long, env = "SEGTILE_SEED")]
    seed: Option<u64>,
    /// Even: boundary period. Defaults to matching the random default count.
    #[arg(long, env = "SEGTILE_PERIOD")]
    period: Option<usize>,
    #[arg(long, env = "SEGTILE_WINDOW", default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, env = "SEGTILE_MULTIPLIER", default_value_t = DEFAULT_MULTIPLIER)]
    multiplier: f64,
    /// Stopword file for the texttiling scorer.
    #[arg(long, env = "SEGTILE_STOPWORDS")]
    stopwords: Option<PathBuf>,
    #[arg(long, env = "SEGTILE_TILING", value_enum, default_value_t = TilingMode::Threshold)]
    tiling: TilingMode,
    #[command(flatten)]
    text: TextArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Segmentation output, transcript with topic_change flags, boundary string, or directory.
    #[arg(long)]
    reference: String,
    /// Same forms as --reference.
    #[arg(long)]
    hypothesis: String,
    /// Window size. Defaults to half the mean reference segment length.
    #[arg(long, env = "SEGTILE_K")]
    k: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// Segmentation output file containing a profile.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Segmentation output file written by `segment` and `baseline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationOutput {
    pub boundaries: Vec<usize>,
    pub labels: String,
    pub profile: Option<Vec<f64>>,
    /// Transcript index right of each profile gap.
    pub gaps: Option<Vec<usize>>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub config: Value,
}

impl SegmentationOutput {
    pub fn new(
        labels: &BoundaryLabels,
        profile: Option<&SimilarityProfile>,
        config: Value,
    ) -> Self {
        Self {
            boundaries: labels.boundaries(),
            labels: labels.to_boundary_string(),
            profile: profile.map(|p| p.sims().to_vec()),
            gaps: profile.map(|p| p.gap_index_map().to_vec()),
            mu: profile.map(SimilarityProfile::mean),
            sigma: profile.map(SimilarityProfile::std),
            config,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("output serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Value,
    pub inputs: BTreeMap<String, String>,
    pub version: String,
    pub duration_ms: u128,
}

struct Run {
    subcommand: &'static str,
    config: Value,
    inputs: BTreeMap<String, String>,
    started: Instant,
}

impl Run {
    fn new(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            config: Value::Null,
            inputs: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    fn digest(&mut self, path: &Path) -> Result<()> {
        if path.is_dir() {
            for file in list_files(path, None)? {
                self.digest(&file)?;
            }
            return Ok(());
        }
        let bytes = fs::read(path)?;
        self.inputs.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        Ok(())
    }

    fn finish(self, output: &OutputArgs, batch_dir: Option<&Path>) -> Result<()> {
        let manifest = RunManifest {
            subcommand: self.subcommand.to_string(),
            config: self.config,
            inputs: self.inputs,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_ms: self.started.elapsed().as_millis(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = match (&output.manifest, batch_dir, &output.out) {
            (Some(p), _, _) => Some(p.clone()),
            (None, Some(dir), _) => Some(dir.join("manifest.json")),
            (None, None, Some(out)) => Some(sibling(out, ".manifest.json")),
            (None, None, None) => None,
        };
        match path {
            Some(p) => write_atomic(&p, text.as_bytes()),
            None => {
                io::stderr().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let tmp = sibling(path, ".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Regular files in `dir`, sorted by name, optionally filtered by extension.
fn list_files(dir: &Path, ext: Option<&str>) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && ext.is_none_or(|e| path.extension().is_some_and(|x| x == e)) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn load_lexicon(path: Option<&Path>) -> Result<FillerLexicon> {
    path.map_or_else(|| Ok(FillerLexicon::default()), FillerLexicon::from_path)
}

/// Parses `args` and runs the selected subcommand, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Segment(a) => cmd_segment(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Curve(a) => cmd_curve(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_USER
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct MeetingScore {
    meeting: String,
    #[serde(flatten)]
    eval: Evaluation,
}

#[derive(Debug, Serialize)]
struct BatchSummary {
    meetings: usize,
    scored: Vec<MeetingScore>,
    unscored: Vec<String>,
    mean_pk: Option<f64>,
    mean_windiff: Option<f64>,
}

/// Runs `job` over every transcript in `dir`, writes `<stem>.json` per
/// meeting into `out_dir`, and a `summary.json` scoring each meeting whose
/// transcript carries a complete reference.
fn run_batch<F>(dir: &Path, out_dir: &Path, job: F) -> Result<()>
where
    F: Fn(&Path, &Transcript) -> Result<SegmentationOutput> + Sync,
{
    let files = list_files(dir, Some("jsonl"))?;
    if files.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no *.jsonl transcripts in {}",
            dir.display()
        )));
    }
    fs::create_dir_all(out_dir)?;
    let results = files
        .par_iter()
        .map(|path| {
            let t = Transcript::from_path(path)?;
            let output = job(path, &t)?;
            write_atomic(
                &out_dir.join(format!("{}.json", stem(path))),
                output.to_json().as_bytes(),
            )?;
            let eval = match reference_labels(&t) {
                Ok(r) => Some(evaluate(&r.to_boundary_string(), &output.labels, None)),
                Err(_) => None,
            };
            Ok((stem(path), eval))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = BatchSummary {
        meetings: results.len(),
        scored: Vec::new(),
        unscored: Vec::new(),
        mean_pk: None,
        mean_windiff: None,
    };
    for (meeting, eval) in results {
        match eval {
            Some(Ok(eval)) => summary.scored.push(MeetingScore { meeting, eval }),
            _ => summary.unscored.push(meeting),
        }
    }
    let evals: Vec<Evaluation> = summary.scored.iter().map(|s| s.eval).collect();
    if let Some((pk, wd)) = mean_evaluation(&evals) {
        summary.mean_pk = Some(pk);
        summary.mean_windiff = Some(wd);
    }
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_atomic(&out_dir.join("summary.json"), text.as_bytes())
}

fn cmd_segment(a: SegmentArgs) -> Result<()> {
    let mut run = Run::new("segment");
    let cfg = SegmenterConfig {
        window: a.window,
        multiplier: a.multiplier,
        pooling: a.pooling,
        scorer: ScorerKind::Embedding,
        min_chars: a.text.min_chars,
        smoothing: a.smoothing,
        min_gap: a.min_gap,
    };
    cfg.validate()?;
    let lex = load_lexicon(a.text.fillers.as_deref())?;
    let config = json!({
        "method": "embedding",
        "segmenter": cfg,
        "fillers": a.text.fillers.as_ref().map(|p| p.display().to_string()),
    });
    run.config = config.clone();
    run.digest(&a.transcript)?;
    run.digest(&a.embeddings)?;

    let segment_one = |t: &Transcript, bundle_path: &Path| -> Result<SegmentationOutput> {
        let bundle = EmbeddingBundle::from_path(bundle_path)?;
        let seg = segment(t, &bundle, &cfg, &lex)?;
        Ok(SegmentationOutput::new(
            &seg.labels,
            Some(&seg.profile),
            config.clone(),
        ))
    };

    if a.transcript.is_dir() {
        let out_dir = batch_out(&a.output)?;
        if !a.embeddings.is_dir() {
            return Err(Error::validation(
                "batch mode needs --embeddings to be a directory",
            ));
        }
        run_batch(&a.transcript, &out_dir, |path, t| {
            let bundle_path = a.embeddings.join(path.file_name().unwrap_or_default());
            segment_one(t, &bundle_path)
        })?;
        run.finish(&a.output, Some(&out_dir))
    } else {
        let t = Transcript::from_path(&a.transcript)?;
        let output = segment_one(&t, &a.embeddings)?;
        emit(a.output.out.as_deref(), &output.to_json())?;
        run.finish(&a.output, None)
    }
}

fn batch_out(output: &OutputArgs) -> Result<PathBuf> {
    output
        .out
        .clone()
        .ok_or_else(|| Error::validation("batch mode needs --out DIR"))
}

fn cmd_baseline(a: BaselineArgs) -> Result<()> {
    let mut run = Run::new("baseline");
    if a.method == Method::Random && a.seed.is_none() {
        return Err(Error::validation("--method random requires --seed"));
    }
    let lex = load_lexicon(a.text.fillers.as_deref())?;
    let stopwords = match &a.stopwords {
        Some(p) => Stopwords::from_path(p)?,
        None => Stopwords::default(),
    };
    run.config = json!({
        "method": a.method,
        "count": a.count,
        "seed": a.seed,
        "period": a.period,
        "window": a.window,
        "multiplier": a.multiplier,
        "tiling": a.tiling,
        "min_chars": a.text.min_chars,
        "fillers": a.text.fillers.as_ref().map(|p| p.display().to_string()),
        "stopwords": a.stopwords.as_ref().map(|p| p.display().to_string()),
    });
    run.digest(&a.transcript)?;

    let baseline_one = |t: &Transcript| -> Result<SegmentationOutput> {
        let m = t.len();
        let reference = reference_labels(t).ok();
        let default_count = default_boundary_count(m, reference.as_ref());
        let (labels, profile, config) = match a.method {
            Method::Random => {
                let count = a.count.unwrap_or(default_count);
                let seed = a.seed.expect("checked above");
                let labels = random_baseline(m, count, seed)?;
                (
                    labels,
                    None,
                    json!({"method": "random", "count": count, "seed": seed}),
                )
            }
            Method::Even => {
                let period = a
                    .period
                    .unwrap_or_else(|| even_period_for_count(m, default_count));
                let labels = even_baseline(m, period)?;
                (labels, None, json!({"method": "even", "period": period}))
            }
            Method::Texttiling => {
                if a.window == 0 {
                    return Err(Error::validation("block window must be at least 1"));
                }
                let mask = eligibility_mask(t, &lex, a.text.min_chars);
                let (labels, profile) = texttiling_baseline(
                    t,
                    &mask,
                    a.window,
                    &lex,
                    &stopwords,
                    a.multiplier,
                    a.tiling,
                )?;
                let config = json!({
                    "method": "texttiling",
                    "window": a.window,
                    "multiplier": a.multiplier,
                    "tiling": a.tiling,
                    "min_chars": a.text.min_chars,
                });
                (labels, Some(profile), config)
            }
        };
        Ok(SegmentationOutput::new(&labels, profile.as_ref(), config))
    };

    if a.transcript.is_dir() {
        let out_dir = batch_out(&a.output)?;
        run_batch(&a.transcript, &out_dir, |_, t| baseline_one(t))?;
        run.finish(&a.output, Some(&out_dir))
    } else {
        let t = Transcript::from_path(&a.transcript)?;
        emit(a.output.out.as_deref(), &baseline_one(&t)?.to_json())?;
        run.finish(&a.output, None)
    }
}

/// Boundary string from a segmentation output, a transcript's reference
/// flags, or a literal `0/1` string.
pub fn load_boundary_string(spec: &str) -> Result<String> {
    let path = Path::new(spec);
    if !path.exists() {
        if !spec.is_empty() && spec.bytes().all(|b| b == b'0' || b == b'1') {
            return Ok(spec.to_string());
        }
        return Err(Error::Io(io::Error::new(
            io::ErrorKind::NotFound,
            format!("{spec}: no such file, and not a boundary string"),
        )));
    }
    let text = fs::read_to_string(path)?;
    if let Ok(output) = serde_json::from_str::<SegmentationOutput>(&text) {
        BoundaryLabels::from_boundary_string(&output.labels)?;
        return Ok(output.labels);
    }
    let t = crate::transcript::parse_transcript(text.as_bytes())?;
    Ok(reference_labels(&t)?.to_boundary_string())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut run = Run::new("evaluate");
    run.config = json!({ "k": a.k });
    let (rp, hp) = (Path::new(&a.reference), Path::new(&a.hypothesis));
    let text = if rp.is_dir() && hp.is_dir() {
        run.digest(rp)?;
        run.digest(hp)?;
        let mut scored = Vec::new();
        for r in list_files(rp, Some("jsonl"))? {
            let h = hp.join(format!("{}.json", stem(&r)));
            let reference = load_boundary_string(&r.display().to_string())?;
            let hypothesis = load_boundary_string(&h.display().to_string())?;
            let eval = evaluate(&reference, &hypothesis, a.k)?;
            scored.push(MeetingScore {
                meeting: stem(&r),
                eval,
            });
        }
        let evals: Vec<Evaluation> = scored.iter().map(|s| s.eval).collect();
        let (pk, windiff) = mean_evaluation(&evals).ok_or_else(|| {
            Error::EmptyInput(format!("no *.jsonl references in {}", rp.display()))
        })?;
        serde_json::to_string(&json!({"pk": pk, "windiff": windiff, "meetings": scored}))
    } else {
        for p in [rp, hp] {
            if p.is_file() {
                run.digest(p)?;
            }
        }
        let reference = load_boundary_string(&a.reference)?;
        let hypothesis = load_boundary_string(&a.hypothesis)?;
        serde_json::to_string(&evaluate(&reference, &hypothesis, a.k)?)
    }
    .expect("evaluation serializes");
    emit(a.output.out.as_deref(), &(text + "\n"))?;
    if a.output.out.is_some() || a.output.manifest.is_some() {
        run.finish(&a.output, None)?;
    }
    Ok(())
}

/// CSV rows `gap_index,sim,is_boundary` preceded by two `#` comment lines.
pub fn curve_csv(output: &SegmentationOutput) -> Result<String> {
    let profile = output
        .profile
        .as_ref()
        .filter(|p| !p.is_empty())
        .ok_or_else(|| Error::validation("segmentation output has no similarity profile"))?;
    let gaps = output
        .gaps
        .clone()
        .unwrap_or_else(|| (1..=profile.len()).collect());
    if gaps.len() != profile.len() {
        return Err(Error::validation("profile and gap list differ in length"));
    }
    let labels = output.labels.as_bytes();
    let mut csv = String::new();
    writeln!(
        csv,
        "# mu={},sigma={}",
        output.mu.unwrap_or(f64::NAN),
        output.sigma.unwrap_or(f64::NAN)
    )
    .unwrap();
    writeln!(csv, "# gap_index,sim,is_boundary").unwrap();
    for (g, (sim, idx)) in profile.iter().zip(&gaps).enumerate() {
        let is_boundary = labels.get(*idx).is_some_and(|&c| c == b'1') as u8;
        writeln!(csv, "{g},{sim},{is_boundary}").unwrap();
    }
    Ok(csv)
}

fn cmd_curve(a: CurveArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input)?;
    let output: SegmentationOutput = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", a.input.display())))?;
    emit(a.out.as_deref(), &curve_csv(&output)?)
}
