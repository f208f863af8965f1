//! `elgrow` — batch front end for the elliptic-growth laboratory.
//!
//! One scenario per invocation: a JSON config names the command, grid,
//! domain, operator and outputs; artifacts (CSV, P2 PGM, JSON) land in
//! the output directory together with a manifest echoing the inputs and
//! the pass/fail state of every check.  Exit codes: 0 success, 1 config
//! error, 2 solver failure, 3 a check failed.

mod commands;
mod config;
mod expr;

use clap::Parser;
use config::ScenarioConfig;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(
    name = "elgrow",
    about = "Laplacian and elliptic growth: Green functions, perturbation laws, balayage and growth runs"
)]
struct Args {
    /// Subcommand: green | dirichlet | perturb | balayage | grow | rates
    /// | dtn | reproduce-paper.
    command: String,

    /// Scenario config (JSON).  Optional for reproduce-paper.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override the grid to N x N nodes over the same box.
    #[arg(long, value_name = "N")]
    grid_n: Option<usize>,

    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,

    /// Document determinism: every algorithm here is seed-free (there is
    /// no RNG to seed).  Accepted for scripting symmetry; changes
    /// nothing.
    #[arg(long)]
    seedless: bool,
}

#[derive(serde::Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: Option<&'a ScenarioConfig>,
    version: &'a str,
    grid_n_override: Option<usize>,
    wall_time_s: f64,
    checks: &'a [commands::Check],
    artifacts: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let _ = args.seedless;

    // Load or synthesize the scenario.
    let cfg = match (&args.config, args.command.as_str()) {
        (Some(path), _) => match ScenarioConfig::from_path(path) {
            Ok(mut cfg) => {
                if cfg.command != args.command {
                    eprintln!(
                        "config error: config names command {:?} but {:?} was invoked",
                        cfg.command, args.command
                    );
                    return ExitCode::from(1);
                }
                cfg.command = args.command.clone();
                cfg
            }
            Err(e) => {
                eprintln!("config error: {e:#}");
                return ExitCode::from(1);
            }
        },
        (None, "reproduce-paper") => ScenarioConfig {
            command: "reproduce-paper".into(),
            grid: Default::default(),
            domain: None,
            operator: None,
            source: None,
            run: None,
            boundary_data: None,
            variation: None,
            measure: None,
            rates: None,
            dtn: None,
            output: None,
        },
        (None, _) => {
            eprintln!("config error: --config is required for {:?}", args.command);
            return ExitCode::from(1);
        }
    };

    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let started = Instant::now();
    let outcome = match commands::run(&cfg, args.grid_n, &dir, args.quiet) {
        Ok(o) => o,
        Err(e) => {
            // Configuration-shaped problems exit 1, numerical ones 2.
            let text = format!("{e:#}");
            eprintln!("error: {text}");
            let config_error = e.downcast_ref::<serde_json::Error>().is_some()
                || text.contains("config")
                || text.contains("unknown")
                || text.contains("expression")
                || text.contains("required");
            return ExitCode::from(if config_error { 1 } else { 2 });
        }
    };

    let manifest = Manifest {
        command: &args.command,
        config: args.config.as_ref().map(|_| &cfg),
        version: env!("CARGO_PKG_VERSION"),
        grid_n_override: args.grid_n,
        wall_time_s: started.elapsed().as_secs_f64(),
        checks: &outcome.checks,
        artifacts: outcome
            .artifacts
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
    };
    if let Err(e) = std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    ) {
        eprintln!("error writing manifest: {e}");
        return ExitCode::from(2);
    }

    let failed: Vec<_> = outcome.checks.iter().filter(|c| !c.passed).collect();
    if !args.quiet {
        for c in &outcome.checks {
            println!(
                "{} {} — {}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        println!(
            "wrote {} artifacts to {} in {:.1}s",
            outcome.artifacts.len() + 1,
            dir.display(),
            manifest.wall_time_s
        );
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
