use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use semf1_core::continuous::{continuous_sef1_with, DistanceSpec, NeighborSearch};
use semf1_core::io as formats;
use semf1_core::similarity::{from_correlation, from_cosine, from_euclidean, from_hierarchy, ring_similarity};
use semf1_core::stats::threshold_sweep;
use semf1_core::study::{run_study, write_records_csv, RunOptions, StudyConfig, StudyKind};
use semf1_core::{evaluate, Error, LabelUniverse, SimilarityMatrix};

use crate::{EvalArgs, Format, Search, SimmatKind, StudyArgs, SweepArgs};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            kind: "validation",
            message: message.into(),
            field: None,
        }
    }

    pub fn from_core(e: Error) -> Self {
        let field = match &e {
            Error::InvalidParameter { field, .. } => Some(field.clone()),
            _ => None,
        };
        let (code, kind) = if e.is_validation() {
            (EXIT_VALIDATION, "validation")
        } else {
            (EXIT_INTERNAL, "internal")
        };
        Self {
            code,
            kind,
            message: e.to_string(),
            field,
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        let mut err = Self::from_core(Error::Io(e));
        err.message = format!("{}: {}", path.display(), err.message);
        err
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({ "error": self.kind, "code": self.code, "message": self.message });
        if let Some(f) = &self.field {
            v["field"] = json!(f);
        }
        v.to_string()
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Writes to `path`, or to stdout when no path is given.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> CliResult) -> CliResult {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush().map_err(|e| CliError::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush().map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn write_json(w: &mut dyn Write, value: &impl Serialize) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::from_core(Error::Internal(e.to_string())))?;
    writeln!(w, "{text}").map_err(|e| CliError::from_core(e.into()))
}

fn load_matrix(spec: &str) -> CliResult<Option<SimilarityMatrix>> {
    if spec == "identity" {
        return Ok(None);
    }
    Ok(Some(formats::read_matrix_csv(open(Path::new(spec))?)?))
}

pub fn eval(args: &EvalArgs) -> CliResult {
    if args.continuous {
        return eval_continuous(args);
    }
    let file = formats::read_predictions(open(&args.predictions)?)?;
    let matrix = load_matrix(&args.matrix)?;
    let batch = file.to_batch(matrix.as_ref().map(|m| m.universe().clone()))?;
    let s = matrix.unwrap_or_else(|| SimilarityMatrix::identity(batch.universe().clone()));
    let report = evaluate(&batch, &s)?;
    with_output(args.out.as_deref(), |w| match args.format {
        Format::Json => write_json(w, &report),
        Format::Csv => {
            let mut csv = String::from("metric,value\n");
            for (name, v) in report.named_values() {
                csv.push_str(&format!("{name},{v}\n"));
            }
            w.write_all(csv.as_bytes()).map_err(|e| CliError::from_core(e.into()))
        }
    })
}

fn eval_continuous(args: &EvalArgs) -> CliResult {
    let examples = formats::read_continuous(open(&args.predictions)?)?;
    let dist = DistanceSpec::p_norm(args.p_norm, args.beta)?;
    let search = match args.search {
        Search::Auto => NeighborSearch::Auto,
        Search::Brute => NeighborSearch::BruteForce,
        Search::Kdtree => NeighborSearch::KdTree,
    };
    let scores = continuous_sef1_with(&examples, &dist, search)?;
    with_output(args.out.as_deref(), |w| match args.format {
        Format::Json => write_json(w, &scores),
        Format::Csv => {
            let rows = [
                ("sample_precision", scores.sample.precision),
                ("sample_recall", scores.sample.recall),
                ("sample_f1", scores.sample.f1),
                ("micro_precision", scores.micro.precision),
                ("micro_recall", scores.micro.recall),
                ("micro_f1", scores.micro.f1),
            ];
            let mut csv = String::from("metric,value\n");
            for (name, v) in rows {
                csv.push_str(&format!("{name},{v}\n"));
            }
            w.write_all(csv.as_bytes()).map_err(|e| CliError::from_core(e.into()))
        }
    })
}

pub fn simmat(kind: &SimmatKind, out: Option<&Path>) -> CliResult {
    let s = match kind {
        SimmatKind::Euclidean { embeddings, beta } => from_euclidean(&formats::read_embeddings_csv(open(embeddings)?)?, *beta)?,
        SimmatKind::Cosine { embeddings, power } => from_cosine(&formats::read_embeddings_csv(open(embeddings)?)?, *power)?,
        SimmatKind::Correlation { input } => {
            let (universe, values) = formats::read_labelled_square(open(input)?)?;
            from_correlation(universe, values)?
        }
        SimmatKind::Hierarchy { edges, beta } => from_hierarchy(&formats::read_edge_list(open(edges)?, None)?, *beta)?,
        SimmatKind::Ring { n } => ring_similarity(*n)?,
    };
    with_output(out, |w| Ok(formats::write_matrix_csv(&s, w)?))
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let grid: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| {
                let mut e = CliError::validation(format!("`{t}` is not a threshold"));
                e.field = Some("grid".into());
                e
            })
        })
        .collect::<CliResult<_>>()?;
    if grid.is_empty() {
        let mut e = CliError::validation("threshold grid is empty");
        e.field = Some("grid".into());
        return Err(e);
    }
    Ok(grid)
}

pub fn sweep(args: &SweepArgs) -> CliResult {
    let grid = parse_grid(&args.grid)?;
    let gold_file = formats::read_gold(open(&args.gold)?)?;
    let s = match load_matrix(&args.matrix)? {
        Some(s) => s,
        None => {
            let labels = match &gold_file.labels {
                Some(l) => l.clone(),
                None => csv_header(&args.scores)?,
            };
            SimilarityMatrix::identity(LabelUniverse::new(labels)?.into())
        }
    };
    let batch = gold_file.to_batch(Some(s.universe().clone()))?;
    let scores = formats::read_scores_csv(open(&args.scores)?, s.universe())?;
    let result = threshold_sweep(&scores, batch.gold(), &s, &grid)?;

    let mut csv = String::from("threshold,metric_name,value\n");
    for (i, t) in result.thresholds.iter().enumerate() {
        for series in &result.series {
            csv.push_str(&format!("{t},{},{}\n", series.metric, series.values[i]));
        }
    }
    let indices: serde_json::Map<String, Value> = result
        .series
        .iter()
        .map(|s| {
            (
                s.metric.clone(),
                json!({ "monotonicity": s.monotonicity, "smoothness": s.smoothness }),
            )
        })
        .collect();

    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            with_output(Some(&dir.join("sweep.csv")), |w| {
                w.write_all(csv.as_bytes()).map_err(|e| CliError::from_core(e.into()))
            })?;
            with_output(Some(&dir.join("indices.json")), |w| write_json(w, &indices))
        }
        None => with_output(None, |w| match args.format {
            Format::Csv => w.write_all(csv.as_bytes()).map_err(|e| CliError::from_core(e.into())),
            Format::Json => write_json(w, &json!({ "thresholds": result.thresholds, "series": result.series })),
        }),
    }
}

fn csv_header(path: &Path) -> CliResult<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(open(path)?);
    let header = reader
        .headers()
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Ok(header.iter().map(str::to_string).collect())
}

fn read_config_value(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    } else {
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        serde_json::to_value(table).map_err(|e| CliError::validation(e.to_string()))
    }
}

fn resolve_study_config(args: &StudyArgs) -> CliResult<StudyConfig> {
    let kind: StudyKind = args.study.parse()?;
    let overrides = match &args.config {
        Some(p) => read_config_value(p)?,
        None => json!({}),
    };
    let seed_in_file = overrides.get("seed").is_some();
    let mut config = StudyConfig::from_overrides(kind, overrides)?;
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    } else if !seed_in_file {
        if let Ok(text) = std::env::var("SEMF1_SEED") {
            let seed = text.trim().parse::<u64>().map_err(|_| {
                let mut e = CliError::validation(format!("SEMF1_SEED `{text}` is not an unsigned integer"));
                e.field = Some("seed".into());
                e
            })?;
            config.set_seed(seed);
        }
    }
    if let Some(n) = args.examples_per_cell {
        config.set_examples_per_cell(n);
    }
    config.validate()?;
    Ok(config)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    study: String,
    seed: u64,
    config_hash: String,
    started_unix: u64,
    finished_unix: u64,
    cells: usize,
    checks_passed: usize,
    checks_total: usize,
    outputs: Vec<OutputDigest>,
}

#[derive(Serialize)]
struct OutputDigest {
    path: String,
    sha256: String,
    bytes: usize,
}

pub fn study(args: &StudyArgs) -> CliResult {
    let started = unix_now();
    let config = resolve_study_config(args)?;
    let output = run_study(
        &config,
        RunOptions {
            workers: args.workers,
            keep_batches: args.export_batches,
        },
    )?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;

    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    let mut cells = Vec::new();
    write_records_csv(config.kind(), &output.records, &mut cells)?;
    files.push(("cells.csv".into(), cells));
    files.push(("summary.json".into(), pretty_json(&output.summary)));
    files.push(("config.json".into(), pretty_json(&config)));
    for b in &output.batches {
        let mut buf = Vec::new();
        formats::write_predictions(&b.batch, &mut buf)?;
        files.push((PathBuf::from("batches").join(format!("cell{:05}_{}.jsonl", b.cell, b.predictor)), buf));
    }

    let mut digests = Vec::with_capacity(files.len());
    for (rel, bytes) in &files {
        let path = args.out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        digests.push(OutputDigest {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
    }
    let summary = &output.summary;
    let manifest = Manifest {
        tool: "semf1",
        version: env!("CARGO_PKG_VERSION"),
        study: config.kind().name().to_string(),
        seed: config.seed(),
        config_hash: sha256_hex(config.canonical_json().as_bytes()),
        started_unix: started,
        finished_unix: unix_now(),
        cells: output.cells.len(),
        checks_passed: summary.checks.iter().filter(|c| c.passed).count(),
        checks_total: summary.checks.len(),
        outputs: digests,
    };
    let path = args.out.join("manifest.json");
    fs::write(&path, pretty_json(&manifest)).map_err(|e| CliError::io(&path, e))?;

    let stderr = io::stderr();
    let mut err = stderr.lock();
    for c in &summary.checks {
        let _ = writeln!(err, "[{}] {} {}", if c.passed { "pass" } else { "FAIL" }, c.id, c.detail);
    }
    Ok(())
}

fn pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("output serializes");
    v.push(b'\n');
    v
}
