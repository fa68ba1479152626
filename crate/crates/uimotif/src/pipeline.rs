//! End-to-end pipeline glue: ingest, mine, emit, evaluate, with reproducible
//! run manifests and a parallel corpus driver.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::emit::{
    audit_tag_balance, audit_type_sinks, emit_bundle, propose_and_filter, CodeBundle, EmitError,
    Framework, FuzzProposer,
};
use crate::ingest::{group_boxes, infer_gap_threshold, IngestError};
use crate::metrics::{evaluate, AggregateReport, EvalReport, MetricsError};
use crate::mine::{mine, MineError, MinerConfig};
use crate::model::{parse_blueprint, parse_box_items, serialize_blueprint, Blueprint, BlueprintError};

/// Pipeline stages, in order; error exit codes follow this numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Parse,
    Mine,
    Emit,
    Eval,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Parse => 1,
            Stage::Mine => 2,
            Stage::Emit => 3,
            Stage::Eval => 4,
        }
    }
}

#[derive(Debug, Error)]
#[error("{stage:?} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    fn new(stage: Stage, message: impl ToString) -> PipelineError {
        PipelineError {
            stage,
            message: message.to_string(),
        }
    }
}

trait StageResult<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> StageResult<T> for Result<T, BlueprintError> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

impl<T> StageResult<T> for Result<T, IngestError> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

impl<T> StageResult<T> for Result<T, MineError> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

impl<T> StageResult<T> for Result<T, EmitError> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

impl<T> StageResult<T> for Result<T, MetricsError> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

impl<T> StageResult<T> for std::io::Result<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

/// Effective pipeline configuration; flags override the config file, which
/// overrides these defaults.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub eta: f64,
    pub min_size: usize,
    pub min_support: usize,
    pub framework: Framework,
    pub gap_threshold: Option<f64>,
    pub fuzz_seed: Option<u64>,
    pub fuzz_fuel: Option<u64>,
    pub strict_labels: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let miner = MinerConfig::default();
        PipelineConfig {
            eta: miner.eta,
            min_size: miner.min_size,
            min_support: miner.min_support,
            framework: Framework::Html,
            gap_threshold: None,
            fuzz_seed: None,
            fuzz_fuel: None,
            strict_labels: false,
        }
    }
}

impl PipelineConfig {
    pub fn miner(&self) -> MinerConfig {
        MinerConfig {
            eta: self.eta,
            min_size: self.min_size,
            min_support: self.min_support,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record written next to every run's outputs; equal inputs
/// and config always reproduce the output hashes.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub stage_ms: BTreeMap<String, u128>,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub mined: Blueprint,
    pub bundle: CodeBundle,
    pub report: EvalReport,
    pub manifest: RunManifest,
}

/// Resolve raw input bytes into a pre-mining blueprint: a JSON array is a box
/// list for ingest, an object is a blueprint document.
pub fn load_input(bytes: &[u8], cfg: &PipelineConfig) -> Result<Blueprint, PipelineError> {
    let first = bytes
        .iter()
        .copied()
        .find(|b| !b.is_ascii_whitespace())
        .unwrap_or(b'{');
    if first == b'[' {
        let items = parse_box_items(bytes).at(Stage::Parse)?;
        let gap = match cfg.gap_threshold {
            Some(g) => g,
            None => infer_gap_threshold(&items).at(Stage::Parse)?,
        };
        let tree = group_boxes(&items, gap).at(Stage::Parse)?;
        Ok(Blueprint::from_tree(tree))
    } else {
        parse_blueprint(bytes).at(Stage::Parse)
    }
}

fn emit_stage(bp: &Blueprint, cfg: &PipelineConfig) -> Result<CodeBundle, PipelineError> {
    let bundle = match cfg.fuzz_seed {
        Some(seed) => {
            let events = crate::emit::dispatch(bp, cfg.framework);
            let default_fuel = events.len() as u64 * 20 + 100;
            let fuel = cfg.fuzz_fuel.unwrap_or(default_fuel);
            let mut proposer = FuzzProposer::new(bp, cfg.framework, seed);
            propose_and_filter(bp, cfg.framework, &mut proposer, fuel)
                .at(Stage::Emit)?
                .0
        }
        None => emit_bundle(bp, cfg.framework).at(Stage::Emit)?,
    };
    audit_tag_balance(&bundle).map_err(|e| PipelineError::new(Stage::Emit, e))?;
    audit_type_sinks(bp, &bundle).map_err(|e| PipelineError::new(Stage::Emit, e))?;
    Ok(bundle)
}

fn write_bundle(dir: &Path, bundle: &CodeBundle) -> std::io::Result<Vec<FileHash>> {
    let mut hashes = Vec::new();
    for (rel, content) in &bundle.files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, content)?;
        hashes.push(FileHash {
            path: rel.clone(),
            sha256: sha256_hex(content.as_bytes()),
        });
    }
    // bundle manifest: paths and content hashes
    let manifest = serde_json::to_string_pretty(&hashes).expect("serializable");
    fs::write(dir.join("manifest.json"), &manifest)?;
    Ok(hashes)
}

/// Full pipeline over one input file: (ingest) -> mine -> emit -> eval, with
/// artifacts and a run manifest under `out_dir`.
pub fn run_pipeline(
    input: &Path,
    out_dir: &Path,
    cfg: &PipelineConfig,
) -> Result<PipelineOutcome, PipelineError> {
    let mut stage_ms = BTreeMap::new();
    let bytes = fs::read(input).at(Stage::Parse)?;
    let input_hash = FileHash {
        path: input.display().to_string(),
        sha256: sha256_hex(&bytes),
    };

    let t = Instant::now();
    let bp = load_input(&bytes, cfg)?;
    stage_ms.insert("parse".to_string(), t.elapsed().as_millis());

    let t = Instant::now();
    let mined = mine(&bp.tree, &cfg.miner()).at(Stage::Mine)?;
    stage_ms.insert("mine".to_string(), t.elapsed().as_millis());

    let t = Instant::now();
    let bundle = emit_stage(&mined, cfg)?;
    stage_ms.insert("emit".to_string(), t.elapsed().as_millis());

    let t = Instant::now();
    let report = evaluate(&mined, &bundle, cfg.strict_labels).at(Stage::Eval)?;
    stage_ms.insert("eval".to_string(), t.elapsed().as_millis());

    fs::create_dir_all(out_dir).at(Stage::Emit)?;
    let mined_json = serialize_blueprint(&mined);
    fs::write(out_dir.join("mined.json"), &mined_json).at(Stage::Mine)?;
    let bundle_dir = out_dir.join("bundle");
    fs::create_dir_all(&bundle_dir).at(Stage::Emit)?;
    let mut outputs = vec![FileHash {
        path: "mined.json".into(),
        sha256: sha256_hex(mined_json.as_bytes()),
    }];
    outputs.extend(
        write_bundle(&bundle_dir, &bundle)
            .at(Stage::Emit)?
            .into_iter()
            .map(|fh| FileHash {
                path: format!("bundle/{}", fh.path),
                sha256: fh.sha256,
            }),
    );
    let report_json = serde_json::to_string_pretty(&report).expect("serializable");
    fs::write(out_dir.join("report.json"), &report_json).at(Stage::Eval)?;
    outputs.push(FileHash {
        path: "report.json".into(),
        sha256: sha256_hex(report_json.as_bytes()),
    });

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        inputs: vec![input_hash],
        outputs,
        stage_ms,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("serializable");
    fs::write(out_dir.join("run_manifest.json"), manifest_json).at(Stage::Eval)?;

    Ok(PipelineOutcome {
        mined,
        bundle,
        report,
        manifest,
    })
}

#[derive(Debug, Serialize)]
pub struct CorpusDocResult {
    pub name: String,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CorpusOutcome {
    pub aggregate: AggregateReport,
    pub documents: Vec<CorpusDocResult>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus directory {0} contains no .json documents")]
    EmptyCorpus(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-document pipelines over a directory of `.json` inputs, in parallel.
/// Results are sorted by filename before aggregation, so the aggregate is
/// identical for any worker count. Per-document failures are recorded and do
/// not abort the run.
pub fn run_corpus(
    dir: &Path,
    out_dir: &Path,
    cfg: &PipelineConfig,
    workers: usize,
) -> Result<CorpusOutcome, CorpusError> {
    let mut inputs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(CorpusError::EmptyCorpus(dir.to_path_buf()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let mut results: Vec<CorpusDocResult> = pool.install(|| {
        inputs
            .par_iter()
            .map(|path| {
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                let doc_out = out_dir.join(&name);
                match run_pipeline(path, &doc_out, cfg) {
                    Ok(outcome) => CorpusDocResult {
                        name,
                        report: Some(outcome.report),
                        error: None,
                    },
                    Err(e) => CorpusDocResult {
                        name,
                        report: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    results.sort_by(|a, b| a.name.cmp(&b.name));
    let reports: Vec<EvalReport> = results.iter().filter_map(|r| r.report.clone()).collect();
    let failures = results.iter().filter(|r| r.error.is_some()).count();
    let aggregate = crate::metrics::aggregate(&reports, failures);
    let outcome = CorpusOutcome {
        aggregate,
        documents: results,
    };
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("aggregate.json"),
        serde_json::to_string_pretty(&outcome).expect("serializable"),
    )?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    #[test]
    fn pipeline_on_demo_document_scores_clean() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("demo.json");
        let bp = Blueprint::from_tree(demo::demo_document());
        fs::write(&input, serialize_blueprint(&bp)).unwrap();
        let out = dir.path().join("out");
        let cfg = PipelineConfig {
            framework: Framework::React,
            ..Default::default()
        };
        let outcome = run_pipeline(&input, &out, &cfg).unwrap();
        assert_eq!(outcome.report.pc, 1.0);
        assert_eq!(outcome.report.lpa, 1.0);
        assert_eq!(outcome.report.roundtrip_ted, 0);
        assert!(out.join("mined.json").exists());
        assert!(out.join("bundle/manifest.json").exists());
        assert!(out.join("run_manifest.json").exists());
    }

    #[test]
    fn corrupted_input_fails_at_parse() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("bad.json");
        fs::write(&input, b"{\"version\": 1, \"nodes\": [").unwrap();
        let err = run_pipeline(&input, &dir.path().join("out"), &PipelineConfig::default())
            .unwrap_err();
        assert_eq!(err.stage, Stage::Parse);
        assert_eq!(err.stage.exit_code(), 1);
        assert!(err.message.contains("line"), "{}", err.message);
    }

    #[test]
    fn fuel_starved_fuzz_fails_at_emit() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("demo.json");
        let bp = Blueprint::from_tree(demo::repeated_cards(3));
        fs::write(&input, serialize_blueprint(&bp)).unwrap();
        let cfg = PipelineConfig {
            framework: Framework::React,
            fuzz_seed: Some(7),
            fuzz_fuel: Some(1),
            ..Default::default()
        };
        let err = run_pipeline(&input, &dir.path().join("out"), &cfg).unwrap_err();
        assert_eq!(err.stage, Stage::Emit);
        assert_eq!(err.stage.exit_code(), 3);
        assert!(err.message.contains("fuel"), "{}", err.message);
    }

    #[test]
    fn corpus_aggregate_is_worker_count_invariant() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus");
        fs::create_dir_all(&corpus).unwrap();
        for (name, tree) in demo::synthetic_corpus(3, 6) {
            let bp = Blueprint::from_tree(tree);
            fs::write(corpus.join(format!("{name}.json")), serialize_blueprint(&bp)).unwrap();
        }
        let cfg = PipelineConfig {
            framework: Framework::Vue,
            ..Default::default()
        };
        let a = run_corpus(&corpus, &dir.path().join("out1"), &cfg, 1).unwrap();
        let b = run_corpus(&corpus, &dir.path().join("out8"), &cfg, 8).unwrap();
        assert_eq!(
            serde_json::to_string(&a.aggregate).unwrap(),
            serde_json::to_string(&b.aggregate).unwrap()
        );
        assert_eq!(a.aggregate.failures, 0);
    }

    #[test]
    fn corpus_records_per_document_failures() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus");
        fs::create_dir_all(&corpus).unwrap();
        let bp = Blueprint::from_tree(demo::repeated_cards(2));
        fs::write(corpus.join("good.json"), serialize_blueprint(&bp)).unwrap();
        fs::write(corpus.join("bad.json"), "{not json").unwrap();
        let out = run_corpus(
            &corpus,
            &dir.path().join("out"),
            &PipelineConfig::default(),
            2,
        )
        .unwrap();
        assert_eq!(out.aggregate.documents, 1);
        assert_eq!(out.aggregate.failures, 1);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus");
        fs::create_dir_all(&corpus).unwrap();
        assert!(matches!(
            run_corpus(&corpus, &dir.path().join("out"), &PipelineConfig::default(), 1),
            Err(CorpusError::EmptyCorpus(_))
        ));
    }
}
