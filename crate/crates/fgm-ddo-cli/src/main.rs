use std::path::PathBuf;
use std::process::ExitCode;

use fgm_ddo_cli::config::{help_text, parse_config};
use fgm_ddo_cli::pipeline::run_pipeline;
use fgm_ddo_cli::report::write_outputs;

struct Args {
    config_path: PathBuf,
    out: Option<PathBuf>,
    workers: usize,
    seed_offset: u64,
    dry_run: bool,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut it = argv.iter();
    match it.next().map(String::as_str) {
        Some("run") => {}
        Some("help") | Some("--help") | Some("-h") => return Err(help_text()),
        other => {
            return Err(format!(
                "expected 'run <config>' (got {other:?}); see 'fgm-ddo --help'"
            ))
        }
    }
    let mut config_path = None;
    let mut out = None;
    let mut workers = 0;
    let mut seed_offset = 0;
    let mut dry_run = false;
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out" => {
                out = Some(PathBuf::from(it.next().ok_or("--out needs a directory")?));
            }
            "--workers" => {
                workers = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or("--workers needs a nonnegative integer")?;
            }
            "--seed-offset" => {
                seed_offset = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or("--seed-offset needs a nonnegative integer")?;
            }
            "--dry-run" => dry_run = true,
            other if config_path.is_none() && !other.starts_with('-') => {
                config_path = Some(PathBuf::from(other));
            }
            other => return Err(format!("unexpected argument {other:?}")),
        }
    }
    Ok(Args {
        config_path: config_path.ok_or("missing config path: 'fgm-ddo run <config>'")?,
        out,
        workers,
        seed_offset,
        dry_run,
    })
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    let text = match std::fs::read_to_string(&args.config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config_path.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    for s in config.seeds.iter_mut() {
        *s += args.seed_offset;
    }
    let out_dir = args.out.unwrap_or_else(|| PathBuf::from(&config.out));

    if args.dry_run {
        println!("experiment: {}", config.kind.name());
        println!("d = {}, n = {}", config.d, config.n);
        println!("seeds: {:?}", config.seeds);
        let methods: Vec<&str> = config.methods.iter().map(|m| m.name()).collect();
        println!("methods: {methods:?}");
        println!("output: {}", out_dir.display());
        println!(
            "cells: {}",
            config.seeds.len() * config.methods.len().max(1)
        );
        return ExitCode::SUCCESS;
    }

    let outcome = run_pipeline(&config, args.workers);
    if let Err(e) = write_outputs(&outcome, &out_dir) {
        eprintln!("cannot write outputs to {}: {e}", out_dir.display());
        return ExitCode::from(2);
    }
    println!(
        "{} rows -> {} ({:.1}s)",
        outcome.rows.len(),
        out_dir.join("results.csv").display(),
        outcome.total_seconds
    );
    if outcome.any_error {
        eprintln!("some cells failed; see error rows in results.csv");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
