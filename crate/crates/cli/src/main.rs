use std::process::ExitCode;

use clap::Parser;

mod args;
mod backend;
mod commands;
mod pipeline;

use args::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not size the worker pool: {err}");
        }
    }

    let json_errors = cli.json_errors;
    let ctx = commands::Context::standalone();
    match commands::run(cli.command, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            report(&err, json_errors);
            ExitCode::from(1)
        }
    }
}

fn report(err: &anyhow::Error, json: bool) {
    if json {
        let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
        let body = serde_json::json!({
            "error": {
                "kind": commands::error_kind(err),
                "message": format!("{err:#}"),
                "chain": chain,
            }
        });
        eprintln!("{body}");
    } else {
        eprintln!("error: {err:#}");
    }
}
