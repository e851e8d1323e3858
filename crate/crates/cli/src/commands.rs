use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde_json::{json, Value};

use hallu_core::backends::{BackendError, Capability};
use hallu_core::corrupt::{
    augment_irrelevant, build_detection_set, build_quant_set, corrupt_longer_texts, corrupt_missing_triples,
    fuse_test_set, read_detection_set, write_detection_set, CorruptError, DeletionPolicy, SeededPipelineConfig,
};
use hallu_core::detect::{detect_batch, read_verdicts_from, write_verdicts_to, DetectError, DetectionInput, Method, TextRole};
use hallu_core::eval::{
    sample_balanced, score_quantifier, score_verdict_lines, threshold_sweep, to_json_report, write_sweep_csv, EvalError,
    SweepGrid, TripleMatch,
};
use hallu_core::ingest::{
    corpus_stats, manifest_path, parse_docred_json, parse_webnlg_xml, read_canonical, write_canonical, write_manifest,
    IngestError, Manifest,
};
use hallu_core::model::{Dataset, ModelError, RelationSchema, Split};
use hallu_core::quantify::{quantify_dataset, read_quant_report, write_quant_report, QuantifyError};

use crate::args::*;
use crate::backend;

/// Where a command runs: the directory relative paths resolve against, the
/// seed used when `--seed` is absent, and the argv recorded in manifests.
pub struct Context {
    pub base: Option<PathBuf>,
    pub default_seed: u64,
    pub argv: Vec<String>,
}

impl Context {
    pub fn standalone() -> Self {
        Context {
            base: None,
            default_seed: 0,
            argv: std::env::args().skip(1).collect(),
        }
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        match &self.base {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn seed(&self, seed: Option<u64>) -> u64 {
        seed.unwrap_or(self.default_seed)
    }

    fn run_record(&self, step: &str, seed: Option<u64>, extra: Value) -> Value {
        let mut record = json!({
            "args": self.argv,
            "step": step,
            "tool": "hallu-audit",
            "version": env!("CARGO_PKG_VERSION"),
        });
        if let Some(seed) = seed {
            record["seed"] = json!(seed);
        }
        if let (Value::Object(record), Value::Object(extra)) = (&mut record, extra) {
            record.extend(extra);
        }
        record
    }
}

fn load(ctx: &Context, path: &Path) -> Result<Dataset> {
    let path = ctx.path(path);
    read_canonical(&path).with_context(|| format!("reading {}", path.display()))
}

fn save(ctx: &Context, path: &Path, ds: &Dataset, run: Value) -> Result<()> {
    let path = ctx.path(path);
    write_canonical(&path, ds).with_context(|| format!("writing {}", path.display()))?;
    let manifest = Manifest {
        run: Some(run),
        ..Manifest::for_dataset(ds)
    };
    write_manifest(&manifest_path(&path), &manifest)?;
    Ok(())
}

fn save_run_manifest(path: &Path, run: Value) -> Result<()> {
    let body = to_json_report(&json!({ "run": run }));
    fs::write(manifest_path(path), body)?;
    Ok(())
}

/// Writes to `out` (plus a manifest) or, without `out`, to standard output.
fn emit(ctx: &Context, out: Option<&Path>, body: &str, run: Value) -> Result<()> {
    match out {
        Some(out) => {
            let out = ctx.path(out);
            fs::write(&out, body).with_context(|| format!("writing {}", out.display()))?;
            save_run_manifest(&out, run)
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn seeded(ctx: &Context, io: &SeededIo, step: &str, f: impl FnOnce(&Dataset, &SeededPipelineConfig) -> Result<Dataset, CorruptError>) -> Result<()> {
    let seed = ctx.seed(io.seed);
    let ds = load(ctx, &io.input)?;
    let out = f(&ds, &SeededPipelineConfig::new(step, seed))?;
    save(ctx, &io.out, &out, ctx.run_record(step, Some(seed), json!({})))
}

/// Whether a JSONL file holds detection samples rather than data points.
fn is_detection_set(path: &Path) -> Result<bool> {
    let reader = BufReader::new(File::open(path).with_context(|| format!("reading {}", path.display()))?);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| IngestError::SchemaViolation {
            line: 1,
            message: e.to_string(),
        })?;
        return Ok(value.get("clean_texts").is_some());
    }
    Ok(false)
}

pub fn run(command: Command, ctx: &Context) -> Result<()> {
    match command {
        Command::Ingest(args) => {
            let input = ctx.path(&args.input);
            let raw = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let name = args.name.unwrap_or_else(|| {
                input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            let split = match args.split {
                SplitArg::Train => Split::Train,
                SplitArg::Test => Split::Test,
            };
            let ds = match args.format {
                SourceFormat::Webnlg => parse_webnlg_xml(&raw, &name, split)?,
                SourceFormat::Docred => parse_docred_json(&raw, &name, split)?,
            };
            save(ctx, &args.out, &ds, ctx.run_record("ingest", None, json!({})))
        }
        Command::Stats(args) => {
            let stats = corpus_stats(&load(ctx, &args.input)?)?;
            emit(ctx, args.out.as_deref(), &to_json_report(&stats), ctx.run_record("stats", None, json!({})))
        }
        Command::Corrupt(CorruptCommand::MissingTriples(io)) => seeded(ctx, &io, "corrupt:missing-triples", corrupt_missing_triples),
        Command::Corrupt(CorruptCommand::LongerTexts(io)) => seeded(ctx, &io, "corrupt:longer-texts", corrupt_longer_texts),
        Command::Corrupt(CorruptCommand::FuseTest(io)) => seeded(ctx, &io, "corrupt:fuse-test", fuse_test_set),
        Command::Augment(args) => {
            let suite = backend::suite(&args.backend, ctx, &[Capability::Augment])?;
            let seed = ctx.seed(args.io.seed);
            let ds = load(ctx, &args.io.input)?;
            let out = augment_irrelevant(&ds, &args.prompt, &*suite.augmenter, &SeededPipelineConfig::new("augment", seed))?;
            let run = ctx.run_record("augment", Some(seed), json!({ "backends": suite.describe(), "prompt_id": args.prompt }));
            save(ctx, &args.io.out, &out, run)
        }
        Command::Build(BuildCommand::DetectionSet { input, out }) => {
            let samples = build_detection_set(&load(ctx, &input)?);
            let out = ctx.path(&out);
            write_detection_set(&out, &samples)?;
            save_run_manifest(&out, ctx.run_record("build:detection-set", None, json!({ "samples": samples.len() })))
        }
        Command::Build(BuildCommand::QuantSet { io, fraction }) => {
            let policy = fraction.map_or(DeletionPolicy::OnePerPoint, DeletionPolicy::Fraction);
            seeded(ctx, &io, "build:quant-set", |ds, cfg| build_quant_set(ds, policy, cfg))
        }
        Command::Build(BuildCommand::BalancedSet { io, n }) => {
            let seed = ctx.seed(io.seed);
            let input = ctx.path(&io.input);
            let samples = read_detection_set(&input).with_context(|| format!("reading {}", input.display()))?;
            let chosen = sample_balanced(&samples, n, seed)?;
            let out = ctx.path(&io.out);
            write_detection_set(&out, &chosen)?;
            save_run_manifest(&out, ctx.run_record("build:balanced-set", Some(seed), json!({ "n": n })))
        }
        Command::Detect(args) => {
            let (method, required) = match args.method {
                MethodArg::Ner => (
                    Method::Ner {
                        threshold: args.threshold.expect("clap requires a threshold for ner"),
                    },
                    vec![Capability::Ner, Capability::Similarity],
                ),
                MethodArg::Nli => (Method::Nli, vec![Capability::Nli]),
            };
            let suite = backend::suite(&args.backend, ctx, &required)?;
            let input = ctx.path(&args.input);
            let records = if is_detection_set(&input)? {
                let samples = read_detection_set(&input)?;
                detect_batch(DetectionInput::Samples(&samples), method, &suite)?
            } else {
                let ds = load(ctx, &args.input)?;
                detect_batch(DetectionInput::Dataset(&ds), method, &suite)?
            };
            let out = ctx.path(&args.out);
            write_verdicts_to(BufWriter::new(File::create(&out)?), &records)?;
            let run = ctx.run_record(
                "detect",
                None,
                json!({ "backends": suite.describe(), "method": format!("{method:?}") }),
            );
            save_run_manifest(&out, run)
        }
        Command::Sweep(args) => {
            let suite = backend::suite(&args.backend, ctx, &[Capability::Ner, Capability::Similarity])?;
            let input = ctx.path(&args.input);
            let samples = read_detection_set(&input).with_context(|| format!("reading {}", input.display()))?;
            let grid = SweepGrid::new(args.lo, args.hi, args.step)?;
            let sweep = threshold_sweep(&samples, &suite, grid)?;
            let body = match args.format {
                ReportFormat::Json => to_json_report(&sweep),
                ReportFormat::Csv => {
                    let mut buf = Vec::new();
                    write_sweep_csv(&mut buf, &sweep)?;
                    String::from_utf8(buf).expect("csv is utf-8")
                }
            };
            let run = ctx.run_record("sweep", None, json!({ "backends": suite.describe(), "grid": grid }));
            emit(ctx, args.out.as_deref(), &body, run)
        }
        Command::Quantify(QuantifyCommand::Ener { relations, input, out, backend: backend_args }) => {
            let schema = RelationSchema::new(relations.iter().map(|r| r.trim().to_owned()).filter(|r| !r.is_empty()))?;
            let suite = backend::suite(&backend_args, ctx, &[Capability::Ner, Capability::Nli])?;
            let ds = load(ctx, &input)?;
            let report = quantify_dataset(&ds, &schema, &suite)?;
            let out = ctx.path(&out);
            write_quant_report(&out, &report)?;
            let run = ctx.run_record("quantify:ener", None, json!({ "backends": suite.describe(), "relations": relations }));
            save_run_manifest(&out, run)
        }
        Command::Evaluate(EvaluateCommand::Detection { gold, verdicts, out }) => {
            let gold_path = ctx.path(&gold);
            let samples = read_detection_set(&gold_path).with_context(|| format!("reading {}", gold_path.display()))?;
            let verdicts_path = ctx.path(&verdicts);
            let lines = read_verdicts_from(BufReader::new(
                File::open(&verdicts_path).with_context(|| format!("reading {}", verdicts_path.display()))?,
            ))?;
            let mut known = HashSet::new();
            for sample in &samples {
                for i in 0..sample.clean_texts.len() {
                    known.insert((sample.id.as_str(), TextRole::Clean, i));
                }
                for i in 0..sample.hallucinated_texts.len() {
                    known.insert((sample.id.as_str(), TextRole::Hallucinated, i));
                }
            }
            for line in &lines {
                if !known.contains(&(line.id.as_str(), line.role, line.index)) {
                    return Err(EvalError::IdMismatch(format!(
                        "verdict for `{}` ({:?} #{}) has no text in the gold set",
                        line.id, line.role, line.index
                    ))
                    .into());
                }
            }
            let metrics = score_verdict_lines(&lines)?;
            emit(ctx, out.as_deref(), &to_json_report(&metrics), ctx.run_record("evaluate:detection", None, json!({})))
        }
        Command::Evaluate(EvaluateCommand::Quant { gold, report, r#match, threshold, out, backend: backend_args }) => {
            let gold = load(ctx, &gold)?;
            let report_path = ctx.path(&report);
            let report = read_quant_report(&report_path).with_context(|| format!("reading {}", report_path.display()))?;
            let metrics = match r#match {
                MatchArg::Exact => score_quantifier(&report, &gold, TripleMatch::Exact)?,
                MatchArg::Similar => {
                    let suite = backend::suite(&backend_args, ctx, &[Capability::Similarity])?;
                    score_quantifier(&report, &gold, TripleMatch::Similar { scorer: &*suite.similarity, threshold })?
                }
            };
            let run = ctx.run_record("evaluate:quant", None, json!({ "match": format!("{match:?}").to_lowercase() }));
            emit(ctx, out.as_deref(), &to_json_report(&metrics), run)
        }
        Command::Pipeline(args) => crate::pipeline::run(&ctx.path(&args.config)),
    }
}

/// Name of the most specific known error variant in the chain.
pub fn error_kind(err: &anyhow::Error) -> String {
    const WRAPPERS: [&str; 4] = ["Backend", "Model", "Ingest", "Detect"];
    for cause in err.chain() {
        let debug = if let Some(e) = cause.downcast_ref::<BackendError>() {
            format!("{e:?}")
        } else if let Some(e) = cause.downcast_ref::<IngestError>() {
            format!("{e:?}")
        } else if let Some(e) = cause.downcast_ref::<CorruptError>() {
            format!("{e:?}")
        } else if let Some(e) = cause.downcast_ref::<DetectError>() {
            format!("{e:?}")
        } else if let Some(e) = cause.downcast_ref::<QuantifyError>() {
            format!("{e:?}")
        } else if let Some(e) = cause.downcast_ref::<EvalError>() {
            format!("{e:?}")
        } else if let Some(e) = cause.downcast_ref::<ModelError>() {
            format!("{e:?}")
        } else {
            continue;
        };
        let mut rest = debug.as_str();
        loop {
            let end = rest
                .find(|c: char| !(c.is_alphanumeric() || c == '_'))
                .unwrap_or(rest.len());
            let (name, tail) = rest.split_at(end);
            if WRAPPERS.contains(&name) && tail.starts_with('(') {
                rest = &tail[1..];
                continue;
            }
            return name.to_owned();
        }
    }
    if err.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) {
        return "Io".into();
    }
    "Error".into()
}
