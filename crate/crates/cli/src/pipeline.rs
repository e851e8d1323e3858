//! Ordered step lists.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "steps": [
//!     ["corrupt", "missing-triples", "--in", "clean.jsonl", "--out", "mt.jsonl"],
//!     ["build", "detection-set", "--in", "clean.jsonl", "--out", "d.jsonl"]
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the config file's directory. A step
//! without `--seed` gets one derived from the pipeline seed and its index.
//! The first failing step stops the run; earlier outputs stay on disk.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use clap::Parser;
use serde::Deserialize;

use hallu_core::rng::derive_seed;

use crate::args::{Cli, Command};
use crate::commands::{self, Context};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineConfig {
    #[serde(default)]
    seed: u64,
    steps: Vec<Vec<String>>,
}

pub fn run(config: &Path) -> Result<()> {
    let raw = fs::read_to_string(config).with_context(|| format!("reading pipeline {}", config.display()))?;
    let parsed: PipelineConfig =
        serde_json::from_str(&raw).with_context(|| format!("parsing pipeline {}", config.display()))?;
    let base = config.parent().map(Path::to_path_buf).unwrap_or_default();

    for (index, argv) in parsed.steps.iter().enumerate() {
        let label = format!("step {index} ({})", argv.iter().take(2).cloned().collect::<Vec<_>>().join(" "));
        let cli = match Cli::try_parse_from(std::iter::once("hallu-audit".to_owned()).chain(argv.iter().cloned())) {
            Ok(cli) => cli,
            Err(err) => bail!("{label}: {}", err.render().to_string().trim()),
        };
        if matches!(cli.command, Command::Pipeline(_)) {
            bail!("{label}: pipelines cannot nest");
        }
        let ctx = Context {
            base: Some(base.clone()),
            default_seed: derive_seed(parsed.seed, index as u64),
            argv: argv.clone(),
        };
        log::info!("{label}");
        commands::run(cli.command, &ctx).with_context(|| label.clone())?;
    }
    Ok(())
}
