//! `gop`: scenario runner for the G-operator workbench.
//!
//! Exit codes: 0 when every criterion passes, 2 when any fails, 1 on usage
//! errors (bad flags, unreadable or invalid scenario files).

mod builtin;
mod experiments;
mod report;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use report::{slug, write_atomic, ExperimentSummary, Summary};
use scenario::Scenario;

#[derive(Parser, Debug)]
#[command(
    name = "gop",
    version,
    about = "Run G-operator experiments from scenario files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file (or a builtin scenario by name).
    Run {
        scenario: String,
        /// Run independent experiments concurrently.
        #[arg(long)]
        parallel: bool,
        /// Output directory; defaults to `gop-out/<scenario name>`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the builtin scenarios.
    List {
        /// Also list each scenario's experiments.
        #[arg(long)]
        verbose: bool,
    },
}

const EXIT_FAIL: u8 = 2;
const EXIT_USAGE: u8 = 1;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::List { verbose } => {
            print!("{}", builtin::listing(verbose));
            ExitCode::SUCCESS
        }
        Command::Run {
            scenario,
            parallel,
            out_dir,
            seed,
        } => {
            let sc = match load(&scenario) {
                Ok(sc) => sc,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            let out = out_dir.unwrap_or_else(|| Path::new("gop-out").join(slug(&sc.name)));
            match execute(&sc, &out, parallel, seed.unwrap_or(sc.seed)) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(EXIT_FAIL),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_USAGE)
                }
            }
        }
    }
}

fn load(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    let text = if path.exists() {
        std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?
    } else if let Some(text) = builtin::source(arg) {
        text.to_string()
    } else {
        anyhow::bail!("no scenario file or builtin named {arg:?} (see `gop list`)");
    };
    Ok(Scenario::parse(&text)?)
}

/// Runs every experiment, writes its CSV and the summary; returns overall pass.
fn execute(sc: &Scenario, out: &Path, parallel: bool, seed: u64) -> Result<bool> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let run_one = |(k, exp): (usize, &scenario::ExperimentSpec)| -> Result<ExperimentSummary> {
        let name = exp.name();
        let start = Instant::now();
        let result = experiments::run(sc, exp, seed.wrapping_add(k as u64));
        let elapsed_s = start.elapsed().as_secs_f64();
        let summary = match result {
            Ok(o) => {
                let file = format!("{:02}-{}.csv", k + 1, slug(&name));
                write_atomic(&out.join(&file), o.csv.as_bytes())
                    .with_context(|| format!("writing {file}"))?;
                ExperimentSummary {
                    // nothing checked is not a pass
                    pass: !o.criteria.is_empty() && o.criteria.iter().all(|c| c.pass),
                    name,
                    kind: exp.kind(),
                    csv: Some(file),
                    criteria: o.criteria,
                    error: None,
                    elapsed_s,
                }
            }
            Err(e) => ExperimentSummary {
                name,
                kind: exp.kind(),
                pass: false,
                csv: None,
                criteria: Vec::new(),
                error: Some(e.to_string()),
                elapsed_s,
            },
        };
        print_line(&summary);
        Ok(summary)
    };
    let items: Vec<_> = sc.experiments.iter().enumerate().collect();
    let results: Vec<ExperimentSummary> = if parallel {
        items.into_par_iter().map(run_one).collect::<Result<_>>()?
    } else {
        items.into_iter().map(run_one).collect::<Result<_>>()?
    };
    let summary = Summary {
        scenario: sc.name.clone(),
        seed,
        pass: results.iter().all(|r| r.pass),
        experiments: results,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    write_atomic(&out.join("summary.json"), json.as_bytes()).context("writing summary.json")?;
    println!(
        "{}: {} ({})",
        sc.name,
        if summary.pass { "PASS" } else { "FAIL" },
        out.display()
    );
    Ok(summary.pass)
}

fn print_line(e: &ExperimentSummary) {
    let detail = match &e.error {
        Some(err) => format!("error: {err}"),
        None => e
            .criteria
            .iter()
            .map(|c| {
                format!(
                    "{}{} {:.3e} {} {:.3e}",
                    if c.pass { "" } else { "!" },
                    c.name,
                    c.value,
                    c.relation,
                    c.limit
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
    };
    println!(
        "[{}] {} ({}, {:.2} s): {detail}",
        if e.pass { "PASS" } else { "FAIL" },
        e.name,
        e.kind,
        e.elapsed_s
    );
}
