//! The `posterkit` command line.
//!
//! Every subcommand that works on a run directory first writes the resolved
//! configuration to `<run_dir>/config.json`. Outputs go to `predictions/`,
//! `reports/`, `renders/`, `prompts/` and `constraints/` below it.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand};
use posterkit_core::codec::{self, RepairLog};
use posterkit_core::constraints::{self, ConstraintSet, Verdict};
use posterkit_core::metrics::{self, similarity, MetricReport};
use posterkit_core::render::{self, RenderSpec};
use posterkit_core::{Canvas, CategoryVocabulary, Element, LayoutRecord, RgbaImage};
use serde_json::{json, Value};
use thiserror::Error;

use crate::assets::{self, AssetStore};
use crate::config::{ConfigError, RunConfig};
use crate::data::{self, Adapter, DataError, IngestOptions, LabelTable, Manifest, Split};
use crate::eval::{self, EvalInputs, Family};
use crate::gateway::{self, Attachments, BackendKind, GatewayError};
use crate::io::{self, IoError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "posterkit",
    version,
    about = "Content-aware poster layout toolkit"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by all subcommands. Each also reads `POSTERKIT_<KEY>`.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Key-value settings file (or a previous run's config.json).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub manifest: Option<String>,
    /// Root for relative asset paths (defaults to the manifest's directory).
    #[arg(long, global = true)]
    pub assets: Option<String>,
    #[arg(long, global = true)]
    pub run_dir: Option<String>,
    /// `mock` or `remote`.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub max_tokens: Option<String>,
    #[arg(long, global = true)]
    pub temperature: Option<String>,
    /// Request timeout in seconds.
    #[arg(long, global = true)]
    pub timeout: Option<String>,
    /// Re-prompts after an unusable reply.
    #[arg(long, global = true)]
    pub retries: Option<String>,
    /// Environment variable holding the API token.
    #[arg(long, global = true)]
    pub token_env: Option<String>,
    /// Log request and response bodies (token redacted).
    #[arg(long, global = true)]
    pub debug: bool,
    /// Metric families: geometry, content, similarity, constraints or all.
    #[arg(long, global = true)]
    pub metrics: Option<String>,
    /// Decimal places kept in wire-format coordinates.
    #[arg(long, short = 'k', global = true)]
    pub precision: Option<String>,
    /// Saliency threshold for Occ and Uti.
    #[arg(long, global = true)]
    pub threshold: Option<String>,
    #[arg(long, short = 'j', global = true)]
    pub jobs: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Records to process: train, test or all.
    #[arg(long, global = true)]
    pub split: Option<String>,
    /// Directory of `<id>.txt` constraint files.
    #[arg(long, global = true)]
    pub constraints_dir: Option<String>,
    /// JSON render style file.
    #[arg(long, global = true)]
    pub style: Option<String>,
}

impl GlobalArgs {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let pairs: [(&str, &Option<String>); 19] = [
            ("manifest", &self.manifest),
            ("assets", &self.assets),
            ("run_dir", &self.run_dir),
            ("backend", &self.backend),
            ("endpoint", &self.endpoint),
            ("model", &self.model),
            ("max_tokens", &self.max_tokens),
            ("temperature", &self.temperature),
            ("timeout", &self.timeout),
            ("retries", &self.retries),
            ("token_env", &self.token_env),
            ("metrics", &self.metrics),
            ("precision", &self.precision),
            ("threshold", &self.threshold),
            ("jobs", &self.jobs),
            ("seed", &self.seed),
            ("split", &self.split),
            ("constraints_dir", &self.constraints_dir),
            ("style", &self.style),
        ];
        let mut out: Vec<(&'static str, String)> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if self.debug {
            out.push(("debug", "true".into()));
        }
        out
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert an annotation file into a canonical JSONL manifest.
    Ingest(IngestArgs),
    /// Print dataset statistics for a manifest.
    Stats {
        /// Print JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Tag manifest records train/test with a seeded shuffle.
    Split {
        #[arg(long, default_value_t = 0.9)]
        ratio: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write the instruction prompt of every selected record.
    Prompt,
    /// Ask the backend for a layout per selected record.
    Generate,
    /// Score predicted layouts.
    Eval(EvalArgs),
    /// Draw layouts over their backgrounds.
    Render(RenderArgs),
    /// Derive constraints that the ground-truth layouts satisfy.
    ConstraintsSynth {
        /// Constraints per record.
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Defaults to `<run_dir>/constraints`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check layouts against constraint files and report Vio.
    ConstraintsCheck {
        /// Prediction directory; ground truth is checked when omitted.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// generic-jsonl, cgl-style, posterlayout-style or banner-style.
    #[arg(long)]
    pub adapter: String,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Built-in vocabulary: posterlayout, cgl or qb-poster.
    #[arg(long)]
    pub vocab: Option<String>,
    /// `key=label` lines mapping raw categories to labels.
    #[arg(long)]
    pub label_table: Option<PathBuf>,
    /// Skip whole rows on element-level problems; exit 1 if any row fails.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub domain: Option<String>,
    /// Canvas as WIDTHxHEIGHT for adapters without per-row sizes.
    #[arg(long)]
    pub canvas: Option<String>,
    /// Directory of saliency maps named like the backgrounds.
    #[arg(long)]
    pub saliency_dir: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Defaults to `<run_dir>/predictions`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Embeddings of real images, for the Fréchet distance.
    #[arg(long, requires = "fid_fake")]
    pub fid_real: Option<PathBuf>,
    /// Embeddings of generated images.
    #[arg(long, requires = "fid_real")]
    pub fid_fake: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Defaults to `<run_dir>/predictions`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Render the manifest's own layouts instead of predictions.
    #[arg(long, conflicts_with = "transplant")]
    pub ground_truth: bool,
    /// Move ground-truth patches of the background poster to predicted boxes.
    #[arg(long)]
    pub transplant: bool,
    /// Skip records whose background or assets are missing.
    #[arg(long)]
    pub skip_missing: bool,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn execute(cli: Cli) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(
        cli.global.config.as_deref(),
        std::env::vars(),
        &cli.global.flags(),
    )?;
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&cfg, a),
        Command::Stats { json } => cmd_stats(&cfg, json),
        Command::Split { ratio, output } => cmd_split(&cfg, ratio, &output),
        Command::Prompt => cmd_prompt(&cfg),
        Command::Generate => cmd_generate(&cfg),
        Command::Eval(a) => cmd_eval(&cfg, a),
        Command::Render(a) => cmd_render(&cfg, a),
        Command::ConstraintsSynth { count, output_dir } => {
            cmd_constraints_synth(&cfg, count, output_dir)
        }
        Command::ConstraintsCheck { predictions } => cmd_constraints_check(&cfg, predictions),
    }
}

fn load_manifest(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let path = cfg.manifest.as_deref().ok_or_else(|| {
        CliError::Input("no manifest given (--manifest or `manifest` setting)".into())
    })?;
    let mut m = Manifest::load(path)?;
    if let Some(root) = &cfg.assets {
        m.root = root.clone();
    }
    Ok(m)
}

fn split_filter(cfg: &RunConfig) -> Option<Split> {
    cfg.split.parse().ok()
}

fn start_run(cfg: &RunConfig) -> Result<(), CliError> {
    io::write_atomic(&cfg.run_dir.join("config.json"), cfg.to_json().as_bytes())?;
    Ok(())
}

/// File-name-safe form of a record id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Runs `f` over `items` on up to `jobs` threads; results keep input order.
pub fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break done;
                        }
                        done.push((i, f(&items[i])));
                    }
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every index visited"))
        .collect()
}

fn write_json(path: &Path, v: &Value) -> Result<(), IoError> {
    io::write_atomic(
        path,
        (serde_json::to_string_pretty(v).expect("json") + "\n").as_bytes(),
    )
}

fn write_jsonl(path: &Path, rows: &[Value]) -> Result<(), IoError> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    io::write_atomic(path, text.as_bytes())
}

fn parse_canvas(s: &str) -> Result<Canvas, CliError> {
    let bad = || CliError::Input(format!("canvas must look like 513x750, got `{s}`"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h) = (
        w.trim().parse().map_err(|_| bad())?,
        h.trim().parse().map_err(|_| bad())?,
    );
    Canvas::new(w, h).map_err(|e| CliError::Input(e.to_string()))
}

fn cmd_ingest(cfg: &RunConfig, a: IngestArgs) -> Result<i32, CliError> {
    let adapter: Adapter = a.adapter.parse().map_err(CliError::Input)?;
    let vocabulary = match &a.vocab {
        Some(v) => Some(
            CategoryVocabulary::by_name(v)
                .ok_or_else(|| CliError::Input(format!("unknown vocabulary `{v}`")))?,
        ),
        None => None,
    };
    let label_table = match &a.label_table {
        Some(p) => Some(
            LabelTable::parse(&io::read_text(p)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    let options = IngestOptions {
        name: a.name,
        vocabulary,
        label_table,
        strict: a.strict,
        domain: a.domain,
        canvas: a.canvas.as_deref().map(parse_canvas).transpose()?,
        saliency_dir: a.saliency_dir,
    };
    let (manifest, report) = data::ingest(&a.input, adapter, &options)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    for e in &report.errors {
        eprintln!("skipped {e}");
    }
    for (id, p) in manifest.missing_files() {
        log::warn!("{id}: referenced file {} not found", p.display());
    }
    if !manifest.is_empty() {
        manifest.save(&a.output, cfg.precision)?;
    }
    eprintln!(
        "{}: {} of {} rows ingested, {} skipped, {} repaired",
        a.input.display(),
        manifest.len(),
        report.rows_read,
        report.errors.len(),
        report.warnings.len()
    );
    if manifest.is_empty() {
        return Err(CliError::Input("no usable rows".into()));
    }
    Ok(if a.strict && !report.errors.is_empty() {
        EXIT_INPUT
    } else {
        EXIT_OK
    })
}

fn cmd_stats(cfg: &RunConfig, as_json: bool) -> Result<i32, CliError> {
    let s = data::stats(&load_manifest(cfg)?)?;
    if as_json {
        println!(
            "{}",
            serde_json::to_string_pretty(&s.to_json()).expect("json")
        );
    } else {
        print!("{}", s.to_table());
    }
    Ok(EXIT_OK)
}

fn cmd_split(cfg: &RunConfig, ratio: f64, output: &Path) -> Result<i32, CliError> {
    let m = data::split(&load_manifest(cfg)?, ratio, cfg.seed)?;
    m.save(output, cfg.precision)?;
    let train = m
        .entries
        .iter()
        .filter(|e| e.split == Some(Split::Train))
        .count();
    eprintln!(
        "{} train / {} test (seed {})",
        train,
        m.len() - train,
        cfg.seed
    );
    Ok(EXIT_OK)
}

fn constraint_text(cfg: &RunConfig, id: &str) -> Result<Option<ConstraintSet>, CliError> {
    let Some(dir) = &cfg.constraints_dir else {
        return Ok(None);
    };
    let p = dir.join(format!("{}.txt", file_stem(id)));
    if !p.exists() {
        return Ok(None);
    }
    let set = ConstraintSet::parse(&io::read_text(&p)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    Ok(Some(set))
}

fn prompt_for(cfg: &RunConfig, record: &LayoutRecord) -> Result<codec::PromptBundle, CliError> {
    let set = constraint_text(cfg, &record.id)?;
    let text = set.as_ref().and_then(ConstraintSet::prompt_text);
    Ok(codec::build_prompt(record, text.as_deref()))
}

fn cmd_prompt(cfg: &RunConfig) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    start_run(cfg)?;
    let selected = m.select(split_filter(cfg));
    for e in &selected {
        let bundle = prompt_for(cfg, &e.record)?;
        let p = cfg
            .run_dir
            .join("prompts")
            .join(format!("{}.txt", file_stem(&e.record.id)));
        io::write_atomic(&p, bundle.text.as_bytes())?;
    }
    eprintln!("{} prompts written", selected.len());
    Ok(EXIT_OK)
}

struct Generated {
    id: String,
    outcome: Result<(u32, RepairLog), String>,
}

fn cmd_generate(cfg: &RunConfig) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    let backend_cfg = cfg.backend_config();
    let backend = gateway::backend_for(&backend_cfg)?;
    start_run(cfg)?;
    let selected = m.select(split_filter(cfg));
    let pred_dir = cfg.run_dir.join("predictions");

    let one = |e: &&data::ManifestEntry| -> Generated {
        let r = &e.record;
        let stem = file_stem(&r.id);
        let outcome = (|| -> Result<(u32, RepairLog), String> {
            let bundle = prompt_for(cfg, r).map_err(|e| e.to_string())?;
            io::write_atomic(
                &cfg.run_dir.join("prompts").join(format!("{stem}.txt")),
                bundle.text.as_bytes(),
            )
            .map_err(|e| e.to_string())?;
            let mut att = Attachments::default();
            match backend_cfg.kind {
                BackendKind::Remote => {
                    if let Some(bg) = &r.background_ref {
                        att.image = Some(
                            Attachments::load_image(&m.resolve(bg)).map_err(|e| e.to_string())?,
                        );
                    }
                }
                BackendKind::Mock => {
                    if let Some(s) = &r.saliency_ref {
                        match io::load_saliency(&m.resolve(s), None) {
                            Ok(mask) => att.saliency = Some(mask),
                            Err(e) => log::warn!("{}: {e}; stacking over the whole canvas", r.id),
                        }
                    }
                }
            }
            let result =
                gateway::generate(&bundle, backend.as_ref(), &backend_cfg, &att).map_err(|e| {
                    if let GatewayError::AllAttemptsFailed { last_raw, .. } = &e {
                        log::debug!("{}: last reply {last_raw:?}", r.id);
                    }
                    e.to_string()
                })?;
            let text = codec::serialize(&result.fragment.elements, cfg.precision);
            io::write_atomic(
                &pred_dir.join(format!("{stem}.json")),
                (text + "\n").as_bytes(),
            )
            .map_err(|e| e.to_string())?;
            let repair = json!({
                "id": r.id,
                "attempts": result.attempts,
                "repair_log": result.repair_log.to_json(),
                "warnings": result.fragment.warnings,
            });
            write_json(&pred_dir.join(format!("{stem}.repair.json")), &repair)
                .map_err(|e| e.to_string())?;
            log::info!(
                "{}: {} attempt(s), {} ms",
                r.id,
                result.attempts,
                result.latency_ms
            );
            Ok((result.attempts, result.repair_log))
        })();
        Generated {
            id: r.id.clone(),
            outcome,
        }
    };
    let results = parallel_map(&selected, cfg.jobs, one);

    let mut failures = Vec::new();
    let mut attempts = Vec::new();
    for g in &results {
        match &g.outcome {
            Ok((a, _)) => attempts.push(*a),
            Err(msg) => {
                eprintln!("{}: generation failed: {msg}", g.id);
                failures.push(json!({"id": g.id, "error": msg}));
            }
        }
    }
    let n = results.len();
    let succeeded = attempts.len();
    let summary = json!({
        "records": n,
        "succeeded": succeeded,
        "failed": failures.len(),
        "success_rate": if n == 0 { 1.0 } else { succeeded as f64 / n as f64 },
        "mean_attempts": if succeeded == 0 { 0.0 } else { attempts.iter().sum::<u32>() as f64 / succeeded as f64 },
        "failures": failures,
    });
    write_json(
        &cfg.run_dir.join("reports").join("generation.json"),
        &summary,
    )?;
    println!(
        "generated {succeeded}/{n} layouts (success rate {:.4})",
        summary["success_rate"].as_f64().unwrap_or(0.0)
    );
    Ok(if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

fn load_prediction(dir: &Path, id: &str) -> Result<Vec<Element>, IoError> {
    Ok(io::load_layout(&dir.join(format!("{}.json", file_stem(id))))?.elements)
}

struct Scored {
    id: String,
    report: Result<MetricReport, String>,
}

fn cmd_eval(cfg: &RunConfig, a: EvalArgs) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    let families: BTreeSet<Family> = eval::parse_families(&cfg.metrics).map_err(CliError::Input)?;
    let pred_dir = a
        .predictions
        .clone()
        .unwrap_or_else(|| cfg.run_dir.join("predictions"));
    if !pred_dir.is_dir() {
        return Err(CliError::Input(format!(
            "prediction directory {} not found",
            pred_dir.display()
        )));
    }
    start_run(cfg)?;
    let selected = m.select(split_filter(cfg));
    let want_content = families.contains(&Family::Content);

    let one = |e: &&data::ManifestEntry| -> Scored {
        let r = &e.record;
        let report = (|| -> Result<MetricReport, String> {
            let pred = load_prediction(&pred_dir, &r.id).map_err(|e| e.to_string())?;
            let size = Some((r.canvas.width_px, r.canvas.height_px));
            let mut notes = Vec::new();
            let mut load = |kind: &str, rel: &Option<String>| -> Option<PathBuf> {
                let p = m.resolve(rel.as_ref()?);
                if p.exists() {
                    Some(p)
                } else {
                    notes.push(format!("{kind} {} not found", p.display()));
                    None
                }
            };
            let (mask, bg) = if want_content {
                let mask = load("saliency", &r.saliency_ref)
                    .map(|p| io::load_saliency(&p, size))
                    .transpose()
                    .map_err(|e| e.to_string())?;
                let bg = load("background", &r.background_ref)
                    .map(|p| io::load_background(&p, size))
                    .transpose()
                    .map_err(|e| e.to_string())?;
                (mask, bg)
            } else {
                (None, None)
            };
            let set = constraint_text(cfg, &r.id).map_err(|e| e.to_string())?;
            let gt = (!r.elements.is_empty()).then_some(r.elements.as_slice());
            let inputs = EvalInputs {
                vocabulary: &m.vocabulary,
                canvas: r.canvas,
                predicted: &pred,
                ground_truth: gt,
                saliency: mask.as_ref(),
                background: bg.as_ref(),
                constraints: set.as_ref(),
                threshold: cfg.threshold,
            };
            let mut rep = eval::evaluate(&inputs, &families).map_err(|e| e.to_string())?;
            rep.diagnostics.extend(notes);
            Ok(rep)
        })();
        Scored {
            id: r.id.clone(),
            report,
        }
    };
    let scored = parallel_map(&selected, cfg.jobs, one);

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for s in &scored {
        match &s.report {
            Ok(rep) => {
                rows.push(
                    json!({"id": s.id, "metrics": rep.to_json(), "diagnostics": rep.diagnostics}),
                );
                reports.push(rep);
            }
            Err(msg) => {
                eprintln!("{}: not evaluated: {msg}", s.id);
                skipped.push(json!({"id": s.id, "error": msg}));
            }
        }
    }
    if reports.is_empty() {
        return Err(CliError::Input("no prediction could be evaluated".into()));
    }
    let reports_dir = cfg.run_dir.join("reports");
    write_jsonl(&reports_dir.join("metrics.jsonl"), &rows)?;
    let agg = metrics::aggregate(reports.iter().copied());
    let omitted = eval::omitted(&families, &agg);
    let mut summary = json!({
        "records": reports.len(),
        "means": agg,
        "omitted": omitted,
        "skipped": skipped,
    });
    if let (Some(real), Some(fake)) = (&a.fid_real, &a.fid_fake) {
        let ga = similarity::gaussian_summary(&io::load_embeddings(real)?)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let gb = similarity::gaussian_summary(&io::load_embeddings(fake)?)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let d =
            similarity::frechet_distance(&ga, &gb).map_err(|e| CliError::Input(e.to_string()))?;
        summary["FID"] = json!(d);
    }
    let table = eval::format_table(&agg);
    write_json(&reports_dir.join("aggregate.json"), &summary)?;
    io::write_atomic(&reports_dir.join("aggregate.txt"), table.as_bytes())?;
    print!("{table}");
    if let Some(fid) = summary["FID"].as_f64() {
        println!("FID  {fid:.4}");
    }
    if !omitted.is_empty() {
        println!("omitted (inputs missing): {}", omitted.join(", "));
    }
    Ok(EXIT_OK)
}

enum RenderOutcome {
    Done(Vec<String>),
    Skipped(String),
}

fn cmd_render(cfg: &RunConfig, a: RenderArgs) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    let mut spec = match &cfg.style {
        Some(p) => assets::load_render_spec(p)?,
        None => RenderSpec::default(),
    };
    for u in &m.vocabulary.underlay_labels {
        if !spec.underlays.contains(u) {
            spec.underlays.push(u.clone());
        }
    }
    let pred_dir = a
        .predictions
        .clone()
        .unwrap_or_else(|| cfg.run_dir.join("predictions"));
    start_run(cfg)?;
    let selected = m.select(split_filter(cfg));
    let out_dir = cfg.run_dir.join("renders");

    let one = |e: &&data::ManifestEntry| -> Result<RenderOutcome, String> {
        let r = &e.record;
        let missing = |msg: String| {
            if a.skip_missing {
                Ok(RenderOutcome::Skipped(msg))
            } else {
                Err(msg)
            }
        };
        let background = match &r.background_ref {
            Some(rel) => match io::load_rgba(&m.resolve(rel)) {
                Ok(img) => Some(img),
                Err(err) => return missing(err.to_string()),
            },
            None => None,
        };
        let image = if a.transplant {
            let Some(poster) = background else {
                return missing("transplant needs the record's background poster".into());
            };
            let pred = load_prediction(&pred_dir, &r.id).map_err(|e| e.to_string())?;
            let poster = fit(&poster, r.canvas);
            render::patch_transplant(&poster, &r.elements, &pred).map_err(|e| e.to_string())?
        } else {
            let elements = if a.ground_truth {
                r.elements.clone()
            } else {
                load_prediction(&pred_dir, &r.id).map_err(|e| e.to_string())?
            };
            let layout = LayoutRecord {
                elements,
                ..r.clone()
            };
            let mut store = AssetStore::new(m.root.clone());
            if let Some((id, err)) = store.load_for(&layout).into_iter().next() {
                return missing(format!("asset `{id}`: {err}"));
            }
            render::render(&layout, background.as_ref(), &store, &spec)
                .map_err(|e| e.to_string())?
        };
        io::save_png(
            &out_dir.join(format!("{}.png", file_stem(&r.id))),
            &image.image,
        )
        .map_err(|e| e.to_string())?;
        Ok(RenderOutcome::Done(image.warnings))
    };
    let results = parallel_map(&selected, cfg.jobs, one);

    let mut failed = false;
    let mut rendered = 0;
    for (e, res) in selected.iter().zip(results) {
        match res {
            Ok(RenderOutcome::Done(warnings)) => {
                rendered += 1;
                for w in warnings {
                    log::warn!("{}: {w}", e.record.id);
                }
            }
            Ok(RenderOutcome::Skipped(msg)) => eprintln!("{}: skipped: {msg}", e.record.id),
            Err(msg) => {
                eprintln!("{}: {msg}", e.record.id);
                failed = true;
            }
        }
    }
    eprintln!("{rendered} image(s) written to {}", out_dir.display());
    Ok(if failed { EXIT_INPUT } else { EXIT_OK })
}

fn fit(img: &RgbaImage, canvas: Canvas) -> RgbaImage {
    if (img.width, img.height) == (canvas.width_px, canvas.height_px) {
        img.clone()
    } else {
        img.resize_bilinear(canvas.width_px, canvas.height_px)
    }
}

/// Seed for one record: the run seed mixed with an FNV-1a hash of the id,
/// so results do not depend on record order.
pub fn record_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed
}

fn cmd_constraints_synth(
    cfg: &RunConfig,
    count: usize,
    output_dir: Option<PathBuf>,
) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    start_run(cfg)?;
    let dir = output_dir.unwrap_or_else(|| cfg.run_dir.join("constraints"));
    let selected = m.select(split_filter(cfg));
    let mut short = 0;
    for e in &selected {
        let syn = constraints::synthesize(
            &e.record.elements,
            record_seed(cfg.seed, &e.record.id),
            count,
        );
        if syn.short {
            short += 1;
            log::warn!(
                "{}: only {} constraint(s) available",
                e.record.id,
                syn.set.len()
            );
        }
        io::write_atomic(
            &dir.join(format!("{}.txt", file_stem(&e.record.id))),
            syn.set.to_text().as_bytes(),
        )?;
    }
    eprintln!(
        "{} constraint files written to {} ({short} short)",
        selected.len(),
        dir.display()
    );
    Ok(EXIT_OK)
}

fn cmd_constraints_check(cfg: &RunConfig, predictions: Option<PathBuf>) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    if cfg.constraints_dir.is_none() {
        return Err(CliError::Input(
            "constraints-check needs --constraints-dir".into(),
        ));
    }
    start_run(cfg)?;
    let mut rows = Vec::new();
    let mut vios = Vec::new();
    for e in m.select(split_filter(cfg)) {
        let r = &e.record;
        let Some(set) = constraint_text(cfg, &r.id)? else {
            continue;
        };
        let elements = match &predictions {
            Some(dir) => load_prediction(dir, &r.id)?,
            None => r.elements.clone(),
        };
        let report = constraints::check(&elements, &set);
        let outcomes: Vec<Value> = report
            .outcomes
            .iter()
            .zip(&set.constraints)
            .map(|(o, c)| {
                let verdict = match o.verdict {
                    Verdict::Satisfied => "satisfied",
                    Verdict::Violated => "violated",
                    Verdict::Inapplicable => "inapplicable",
                };
                json!({"constraint": c.surface_text, "verdict": verdict, "explanation": o.explanation})
            })
            .collect();
        rows.push(json!({"id": r.id, "vio": report.vio, "outcomes": outcomes}));
        vios.push(report.vio);
    }
    if vios.is_empty() {
        return Err(CliError::Input(
            "no constraint files matched the selected records".into(),
        ));
    }
    write_jsonl(
        &cfg.run_dir.join("reports").join("constraints.jsonl"),
        &rows,
    )?;
    println!(
        "Vio  {:.4}  ({} records)",
        vios.iter().sum::<f64>() / vios.len() as f64,
        vios.len()
    );
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u32> = (0..50).collect();
        assert_eq!(
            parallel_map(&items, 4, |x| x * 2),
            items.iter().map(|x| x * 2).collect::<Vec<_>>()
        );
        assert!(parallel_map(&Vec::<u32>::new(), 4, |x| *x).is_empty());
    }

    #[test]
    fn file_stems_are_safe() {
        assert_eq!(file_stem("a/b c.png"), "a_b_c.png");
    }

    #[test]
    fn canvas_flag() {
        assert_eq!(
            parse_canvas("513x750").unwrap(),
            Canvas::new(513, 750).unwrap()
        );
        assert!(parse_canvas("513").is_err());
    }

    #[test]
    fn record_seed_depends_on_id() {
        assert_ne!(record_seed(1, "a"), record_seed(1, "b"));
        assert_eq!(record_seed(1, "a"), record_seed(1, "a"));
    }
}
