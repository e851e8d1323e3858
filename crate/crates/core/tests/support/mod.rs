#![allow(dead_code)]

pub mod conformance;
pub mod stub;

use std::time::{Duration, Instant};

use hallu_core::backends::mock::{OracleNer, OracleNli, OracleSimilarity, TemplateAugmenter};
use hallu_core::backends::BackendSuite;
use hallu_core::model::Dataset;

/// Oracle suite whose tables come from a dataset's expressed triples.
pub fn oracle_suite(ds: &Dataset) -> BackendSuite {
    BackendSuite::default()
        .with_extractor(OracleNer::from_dataset(ds))
        .with_similarity(OracleSimilarity::new())
        .with_entailment(OracleNli::from_dataset(ds))
        .with_augmenter(TemplateAugmenter)
}

/// Runs one acceptance criterion: prints a single `PASS`/`FAIL` line with the
/// elapsed time, then fails the test on a failed check or a blown budget.
pub fn criterion(name: &str, budget: Duration, check: impl FnOnce() -> Result<String, String>) {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
        .unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
    let elapsed = start.elapsed();
    let outcome = match outcome {
        Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
        other => other,
    };
    match outcome {
        Ok(detail) => report(format_args!("PASS  {name}  [{elapsed:.2?}]  {detail}")),
        Err(detail) => {
            report(format_args!("FAIL  {name}  [{elapsed:.2?}]  {detail}"));
            panic!("{name}: {detail}");
        }
    }
}

/// `Err` with a message unless `cond` holds.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// straight to the stream so the line survives libtest's output capture
fn report(line: std::fmt::Arguments<'_>) {
    use std::io::Write;
    let _ = writeln!(std::io::stderr(), "{line}");
}
