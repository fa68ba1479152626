//! Thin command-line front end over the library pipeline. All logic lives in
//! the `uimotif` crate; this binary parses arguments, resolves configuration
//! (flags > config file > defaults), and maps stage failures to exit codes
//! (1 parse, 2 mine, 3 emit, 4 eval).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use uimotif::emit::{audit_tag_balance, audit_type_sinks, emit_bundle, Framework};
use uimotif::ingest::{group_boxes, infer_gap_threshold};
use uimotif::metrics::{evaluate, parse_html_bundle, tree_edit_distance_with, LabelMode};
use uimotif::mine::mine;
use uimotif::model::{parse_blueprint, parse_box_items, serialize_blueprint, Blueprint};
use uimotif::pipeline::{
    load_input, run_corpus, run_pipeline, sha256_hex, PipelineConfig, Stage,
};

const OUT_DIR_ENV: &str = "UIMOTIF_OUT_DIR";

#[derive(Parser)]
#[command(name = "uimotif", version, about = "Blueprint-to-component compiler: mine repeated UI motifs and emit constraint-checked multi-framework bundles")]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct MinerFlags {
    /// Near-duplicate merge threshold (normalized tree edit distance).
    #[arg(long)]
    eta: Option<f64>,
    /// Minimum instances per template.
    #[arg(long)]
    min_support: Option<usize>,
    /// Minimum motif size in nodes.
    #[arg(long)]
    min_size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Group a flat box list into a hierarchical blueprint.
    Ingest {
        /// JSON array of {kind, bbox, payload?} records.
        #[arg(long)]
        boxes: PathBuf,
        /// Whitespace-gap split threshold; inferred from the data if absent.
        #[arg(long)]
        gap: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Mine repeated motifs into templates, instances, and loop groups.
    Mine {
        blueprint: PathBuf,
        #[command(flatten)]
        miner: MinerFlags,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Emit a code bundle for one framework.
    Emit {
        mined: PathBuf,
        #[arg(long)]
        framework: Framework,
        /// Bundle directory; defaults under $UIMOTIF_OUT_DIR.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Route emission through the fuzz proposer with this seed.
        #[arg(long)]
        fuzz_seed: Option<u64>,
        /// Proposal budget for the fuzz path.
        #[arg(long)]
        fuzz_fuel: Option<u64>,
        /// Optional external check command run on the bundle directory
        /// (e.g. a TypeScript compiler); reported, never required.
        #[arg(long)]
        check_hook: Option<String>,
    },
    /// Evaluate a bundle against its blueprint.
    Eval {
        #[arg(long)]
        blueprint: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        framework: Framework,
        /// Compare payload values, not just structure, in edit distances.
        #[arg(long)]
        strict_labels: bool,
    },
    /// mine -> emit(html) -> parse -> edit distance against the blueprint.
    Roundtrip {
        blueprint: PathBuf,
        #[command(flatten)]
        miner: MinerFlags,
    },
    /// Full pipeline over one input (box list or blueprint).
    Pipeline {
        input: PathBuf,
        #[arg(long)]
        framework: Framework,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        miner: MinerFlags,
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long)]
        fuzz_seed: Option<u64>,
        #[arg(long)]
        fuzz_fuel: Option<u64>,
    },
    /// Parallel per-document pipelines over a directory of .json inputs.
    Corpus {
        dir: PathBuf,
        #[arg(long)]
        framework: Framework,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        miner: MinerFlags,
    },
}

/// Subset of the pipeline config readable from a TOML file.
#[derive(Deserialize, Default)]
struct FileConfig {
    eta: Option<f64>,
    min_support: Option<usize>,
    min_size: Option<usize>,
    framework: Option<String>,
    gap_threshold: Option<f64>,
    fuzz_seed: Option<u64>,
    fuzz_fuel: Option<u64>,
    strict_labels: Option<bool>,
    out_dir: Option<PathBuf>,
}

struct Resolved {
    cfg: PipelineConfig,
    out_dir: PathBuf,
}

fn resolve(
    file: &FileConfig,
    miner: &MinerFlags,
    framework: Option<Framework>,
    out_flag: Option<&Path>,
) -> Resolved {
    let mut cfg = PipelineConfig::default();
    // config file layer
    if let Some(v) = file.eta {
        cfg.eta = v;
    }
    if let Some(v) = file.min_support {
        cfg.min_support = v;
    }
    if let Some(v) = file.min_size {
        cfg.min_size = v;
    }
    if let Some(f) = &file.framework {
        if let Ok(f) = f.parse() {
            cfg.framework = f;
        }
    }
    cfg.gap_threshold = file.gap_threshold;
    cfg.fuzz_seed = file.fuzz_seed;
    cfg.fuzz_fuel = file.fuzz_fuel;
    cfg.strict_labels = file.strict_labels.unwrap_or(false);
    // flag layer
    if let Some(v) = miner.eta {
        cfg.eta = v;
    }
    if let Some(v) = miner.min_support {
        cfg.min_support = v;
    }
    if let Some(v) = miner.min_size {
        cfg.min_size = v;
    }
    if let Some(f) = framework {
        cfg.framework = f;
    }
    let out_dir = out_flag
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("uimotif-out"));
    Resolved { cfg, out_dir }
}

fn fail(stage: Stage, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error ({stage:?}): {message}");
    ExitCode::from(stage.exit_code() as u8)
}

fn load_blueprint(path: &Path) -> Result<Blueprint, ExitCode> {
    let bytes = fs::read(path).map_err(|e| fail(Stage::Parse, format!("{}: {e}", path.display())))?;
    parse_blueprint(&bytes).map_err(|e| fail(Stage::Parse, e))
}

fn read_bundle_dir(dir: &Path, framework: Framework) -> std::io::Result<uimotif::emit::CodeBundle> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().map(|n| n != "manifest.json").unwrap_or(false) {
                let rel = path
                    .strip_prefix(dir)
                    .expect("walked under dir")
                    .to_string_lossy()
                    .into_owned();
                files.push((rel, fs::read_to_string(&path)?));
            }
        }
    }
    // components first (alphabetical), entry files last, matching emission order
    files.sort_by(|a, b| {
        let rank = |p: &str| usize::from(!p.starts_with("components/"));
        (rank(&a.0), &a.0).cmp(&(rank(&b.0), &b.0))
    });
    Ok(uimotif::emit::CodeBundle { framework, files })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file_cfg = match &cli.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(text) => match toml::from_str::<FileConfig>(&text) {
                Ok(cfg) => cfg,
                Err(e) => return fail(Stage::Parse, format!("config: {e}")),
            },
            Err(e) => return fail(Stage::Parse, format!("config {}: {e}", path.display())),
        },
        None => FileConfig::default(),
    };

    match cli.command {
        Command::Ingest { boxes, gap, output } => {
            let bytes = match fs::read(&boxes) {
                Ok(b) => b,
                Err(e) => return fail(Stage::Parse, format!("{}: {e}", boxes.display())),
            };
            let items = match parse_box_items(&bytes) {
                Ok(i) => i,
                Err(e) => return fail(Stage::Parse, e),
            };
            let gap = match gap {
                Some(g) => g,
                None => match infer_gap_threshold(&items) {
                    Ok(g) => g,
                    Err(e) => return fail(Stage::Parse, e),
                },
            };
            let tree = match group_boxes(&items, gap) {
                Ok(t) => t,
                Err(e) => return fail(Stage::Parse, e),
            };
            let bp = Blueprint::from_tree(tree);
            let json = serialize_blueprint(&bp);
            if let Err(e) = fs::write(&output, &json) {
                return fail(Stage::Parse, e);
            }
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({"nodes": bp.tree.len(), "gap": gap, "output": output})
                );
            } else {
                println!(
                    "ingested {} boxes into {} nodes (gap {gap:.4}) -> {}",
                    items.len(),
                    bp.tree.len(),
                    output.display()
                );
            }
            ExitCode::SUCCESS
        }
        Command::Mine {
            blueprint,
            miner,
            output,
        } => {
            let resolved = resolve(&file_cfg, &miner, None, None);
            let bp = match load_blueprint(&blueprint) {
                Ok(bp) => bp,
                Err(code) => return code,
            };
            let mined = match mine(&bp.tree, &resolved.cfg.miner()) {
                Ok(m) => m,
                Err(e) => return fail(Stage::Mine, e),
            };
            let json = serialize_blueprint(&mined);
            if let Err(e) = fs::write(&output, &json) {
                return fail(Stage::Mine, e);
            }
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "templates": mined.templates.len(),
                        "instances": mined.instances.len(),
                        "loop_groups": mined.loop_groups.len(),
                        "output": output,
                    })
                );
            } else {
                println!(
                    "mined {} templates, {} instances, {} loop groups -> {}",
                    mined.templates.len(),
                    mined.instances.len(),
                    mined.loop_groups.len(),
                    output.display()
                );
            }
            ExitCode::SUCCESS
        }
        Command::Emit {
            mined,
            framework,
            output,
            fuzz_seed,
            fuzz_fuel,
            check_hook,
        } => {
            let mut resolved = resolve(&file_cfg, &MinerFlags::default(), Some(framework), output.as_deref());
            resolved.cfg.fuzz_seed = fuzz_seed.or(resolved.cfg.fuzz_seed);
            resolved.cfg.fuzz_fuel = fuzz_fuel.or(resolved.cfg.fuzz_fuel);
            let bp = match load_blueprint(&mined) {
                Ok(bp) => bp,
                Err(code) => return code,
            };
            let bundle = match resolved.cfg.fuzz_seed {
                Some(seed) => {
                    let events = uimotif::emit::dispatch(&bp, framework);
                    let fuel = resolved
                        .cfg
                        .fuzz_fuel
                        .unwrap_or(events.len() as u64 * 20 + 100);
                    let mut proposer = uimotif::emit::FuzzProposer::new(&bp, framework, seed);
                    match uimotif::emit::propose_and_filter(&bp, framework, &mut proposer, fuel) {
                        Ok((bundle, stats)) => {
                            if !cli.json {
                                println!(
                                    "fuzz emission: {} proposed, {} rejected",
                                    stats.proposed, stats.rejected
                                );
                            }
                            bundle
                        }
                        Err(e) => return fail(Stage::Emit, e),
                    }
                }
                None => match emit_bundle(&bp, framework) {
                    Ok(b) => b,
                    Err(e) => return fail(Stage::Emit, e),
                },
            };
            if let Err(e) = audit_tag_balance(&bundle).and_then(|_| audit_type_sinks(&bp, &bundle))
            {
                return fail(Stage::Emit, e);
            }
            let dir = &resolved.out_dir;
            if let Err(e) = fs::create_dir_all(dir) {
                return fail(Stage::Emit, e);
            }
            let mut hashes = Vec::new();
            for (rel, content) in &bundle.files {
                let path = dir.join(rel);
                if let Some(parent) = path.parent() {
                    if let Err(e) = fs::create_dir_all(parent) {
                        return fail(Stage::Emit, e);
                    }
                }
                if let Err(e) = fs::write(&path, content) {
                    return fail(Stage::Emit, e);
                }
                hashes.push(serde_json::json!({
                    "path": rel,
                    "sha256": sha256_hex(content.as_bytes()),
                }));
            }
            let manifest = serde_json::to_string_pretty(&hashes).expect("serializable");
            if let Err(e) = fs::write(dir.join("manifest.json"), manifest) {
                return fail(Stage::Emit, e);
            }
            let hook_status = check_hook.map(|hook| {
                let status = std::process::Command::new("sh")
                    .arg("-c")
                    .arg(&hook)
                    .arg("sh")
                    .arg(dir)
                    .status();
                match status {
                    Ok(s) => format!("check hook exited with {}", s.code().unwrap_or(-1)),
                    Err(e) => format!("check hook failed to run: {e}"),
                }
            });
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "framework": framework.as_str(),
                        "files": bundle.files.iter().map(|(p, _)| p).collect::<Vec<_>>(),
                        "output": dir,
                        "check_hook": hook_status,
                    })
                );
            } else {
                println!(
                    "emitted {} {} files -> {}",
                    bundle.files.len(),
                    framework,
                    dir.display()
                );
                if let Some(s) = hook_status {
                    println!("{s}");
                }
            }
            ExitCode::SUCCESS
        }
        Command::Eval {
            blueprint,
            bundle,
            framework,
            strict_labels,
        } => {
            let bp = match load_blueprint(&blueprint) {
                Ok(bp) => bp,
                Err(code) => return code,
            };
            let bundle = match read_bundle_dir(&bundle, framework) {
                Ok(b) => b,
                Err(e) => return fail(Stage::Eval, e),
            };
            match evaluate(&bp, &bundle, strict_labels) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(Stage::Eval, e),
            }
        }
        Command::Roundtrip { blueprint, miner } => {
            let resolved = resolve(&file_cfg, &miner, None, None);
            let bp = match load_blueprint(&blueprint) {
                Ok(bp) => bp,
                Err(code) => return code,
            };
            let mined = match mine(&bp.tree, &resolved.cfg.miner()) {
                Ok(m) => m,
                Err(e) => return fail(Stage::Mine, e),
            };
            let bundle = match emit_bundle(&mined, Framework::Html) {
                Ok(b) => b,
                Err(e) => return fail(Stage::Emit, e),
            };
            let parsed = match parse_html_bundle(&bundle) {
                Ok(t) => t,
                Err(e) => return fail(Stage::Eval, e),
            };
            let expanded = match mined.expanded_tree() {
                Ok(t) => t,
                Err(e) => return fail(Stage::Eval, e),
            };
            let roundtrip_ted = tree_edit_distance_with(&parsed, &expanded, LabelMode::Strict);
            if cli.json {
                println!("{}", serde_json::json!({ "roundtrip_ted": roundtrip_ted }));
            } else {
                println!("roundtrip_ted = {roundtrip_ted}");
            }
            if roundtrip_ted == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Command::Pipeline {
            input,
            framework,
            output,
            miner,
            gap,
            fuzz_seed,
            fuzz_fuel,
        } => {
            let mut resolved = resolve(&file_cfg, &miner, Some(framework), output.as_deref());
            resolved.cfg.gap_threshold = gap.or(resolved.cfg.gap_threshold);
            resolved.cfg.fuzz_seed = fuzz_seed.or(resolved.cfg.fuzz_seed);
            resolved.cfg.fuzz_fuel = fuzz_fuel.or(resolved.cfg.fuzz_fuel);
            match run_pipeline(&input, &resolved.out_dir, &resolved.cfg) {
                Ok(outcome) => {
                    if cli.json {
                        println!(
                            "{}",
                            serde_json::json!({
                                "report": outcome.report,
                                "manifest": outcome.manifest,
                            })
                        );
                    } else {
                        println!(
                            "pipeline ok: templates={} pc={:.3} lpa={:.3} roundtrip_ted={} -> {}",
                            outcome.mined.templates.len(),
                            outcome.report.pc,
                            outcome.report.lpa,
                            outcome.report.roundtrip_ted,
                            resolved.out_dir.display()
                        );
                    }
                    if outcome.report.pc == 1.0 {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(4)
                    }
                }
                Err(e) => fail(e.stage, e),
            }
        }
        Command::Corpus {
            dir,
            framework,
            workers,
            output,
            miner,
        } => {
            let resolved = resolve(&file_cfg, &miner, Some(framework), output.as_deref());
            match run_corpus(&dir, &resolved.out_dir, &resolved.cfg, workers) {
                Ok(outcome) => {
                    if cli.json {
                        println!("{}", serde_json::to_string_pretty(&outcome).expect("serializable"));
                    } else {
                        println!(
                            "corpus: {} documents, {} failures, mean pc {:.3}, mean lpa {:.3}, mean afc {:.2}",
                            outcome.aggregate.documents,
                            outcome.aggregate.failures,
                            outcome.aggregate.mean_pc,
                            outcome.aggregate.mean_lpa,
                            outcome.aggregate.mean_afc
                        );
                    }
                    if outcome.aggregate.failures == 0 {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(4)
                    }
                }
                Err(e) => fail(Stage::Parse, e),
            }
        }
    }
}
