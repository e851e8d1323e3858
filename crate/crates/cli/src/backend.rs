use anyhow::{bail, Context as _, Result};
use hallu_core::backends::mock::{HeuristicNer, JaccardSimilarity, OracleNer, OracleNli, OracleSimilarity, TemplateAugmenter};
use hallu_core::backends::remote::RemoteConfig;
use hallu_core::backends::{BackendSuite, Capability};
use hallu_core::ingest::read_canonical;

use crate::args::BackendArgs;
use crate::commands::Context;

/// Builds the backend suite and checks that every required role is served.
pub fn suite(args: &BackendArgs, ctx: &Context, required: &[Capability]) -> Result<BackendSuite> {
    let suite = if let Some(path) = &args.oracle {
        let path = ctx.path(path);
        let ds = read_canonical(&path).with_context(|| format!("reading oracle table {}", path.display()))?;
        BackendSuite::default()
            .with_extractor(OracleNer::from_dataset(&ds))
            .with_similarity(OracleSimilarity::new())
            .with_entailment(OracleNli::from_dataset(&ds))
            .with_augmenter(TemplateAugmenter)
    } else if args.mock {
        BackendSuite::default()
            .with_extractor(HeuristicNer)
            .with_similarity(JaccardSimilarity)
            .with_augmenter(TemplateAugmenter)
    } else if let Some(url) = &args.backend_url {
        BackendSuite::remote(RemoteConfig::new(url.as_str()))
    } else {
        bail!("no backend configured: pass --backend-url, set HALLU_BACKEND_URL, or use --oracle or --mock");
    };
    suite.check_health(required)?;
    Ok(suite)
}
