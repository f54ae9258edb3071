//! `srlab` — scenario runner for the sub-Riemannian integral-geometry
//! laboratory.
//!
//! Exit codes: 0 all checks pass, 1 a check failed (or `--compare`
//! mismatched), 2 configuration error, 3 numeric error.

use clap::{Parser, Subcommand};
use srlab_cli::report::strip_volatile;
use srlab_cli::runner::{run_scenario, RunError};
use srlab_cli::scenario::Scenario;
use srlab_cli::GOLDEN_SCENARIOS;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "srlab",
    version,
    about = "Numerical laboratory for sub-Riemannian integral geometry"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and write a JSON report.
    Run {
        /// Path to the scenario TOML.
        config: PathBuf,
        /// Output directory (default: $SRLAB_OUT_DIR, then ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Rayon thread-pool size (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Compare the fresh report against a previous one, ignoring
        /// timestamps, wall times, and the host fingerprint.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Write the bundled golden scenario files to a directory.
    EmitGoldens {
        /// Output directory (default: $SRLAB_OUT_DIR, then ./scenarios).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite existing files.
        #[arg(long)]
        force: bool,
        /// List the bundled scenario names and exit.
        #[arg(long)]
        list: bool,
    },
}

fn out_dir(flag: Option<PathBuf>, fallback: &str) -> PathBuf {
    flag.or_else(|| std::env::var_os("SRLAB_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(fallback))
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("srlab: {msg}");
    ExitCode::from(code)
}

fn cmd_run(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    compare: Option<PathBuf>,
) -> ExitCode {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => return fail(2, format!("cannot read {}: {e}", config.display())),
    };
    let sc = match Scenario::parse(&text) {
        Ok(s) => s,
        Err(e) => return fail(2, e),
    };
    let n_threads = threads.unwrap_or_else(rayon::current_num_threads);
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return fail(2, format!("cannot size thread pool: {e}"));
        }
    }

    let report = match run_scenario(&sc, seed, n_threads) {
        Ok(r) => r,
        Err(RunError::Config(msg)) => return fail(2, format!("config error: {msg}")),
        Err(RunError::Numeric(e)) => return fail(3, format!("numeric error: {e}")),
    };

    let dir = out_dir(out, "out");
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return fail(2, format!("cannot create {}: {e}", dir.display()));
    }
    let path = dir.join(format!("{}.json", report.scenario));
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(e) = std::fs::write(&path, json.as_bytes()) {
        return fail(2, format!("cannot write {}: {e}", path.display()));
    }
    println!("report: {}", path.display());

    if let Some(prev_path) = compare {
        let prev = match std::fs::read_to_string(&prev_path) {
            Ok(t) => t,
            Err(e) => return fail(2, format!("cannot read {}: {e}", prev_path.display())),
        };
        let mut prev: serde_json::Value = match serde_json::from_str(&prev) {
            Ok(v) => v,
            Err(e) => return fail(2, format!("cannot parse {}: {e}", prev_path.display())),
        };
        // Round-trip through the serialized text so both sides see the same
        // number normalization.
        let mut fresh: serde_json::Value = serde_json::from_str(&json).expect("report round-trips");
        strip_volatile(&mut prev);
        strip_volatile(&mut fresh);
        if prev == fresh {
            println!("compare: reports match");
        } else {
            eprintln!("compare: reports differ from {}", prev_path.display());
            return ExitCode::from(1);
        }
    }

    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_emit_goldens(out: Option<PathBuf>, force: bool, list: bool) -> ExitCode {
    if list {
        for (name, _) in GOLDEN_SCENARIOS {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let dir = out_dir(out, "scenarios");
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return fail(2, format!("cannot create {}: {e}", dir.display()));
    }
    for (name, text) in GOLDEN_SCENARIOS {
        let path = dir.join(format!("{name}.toml"));
        if path.exists() && !force {
            return fail(2, format!("{} exists (use --force to overwrite)", path.display()));
        }
        if let Err(e) = std::fs::write(&path, text) {
            return fail(2, format!("cannot write {}: {e}", path.display()));
        }
        println!("wrote {}", path.display());
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { config, out, seed, threads, compare } => {
            cmd_run(&config, out, seed, threads, compare)
        }
        Cmd::EmitGoldens { out, force, list } => cmd_emit_goldens(out, force, list),
    }
}
