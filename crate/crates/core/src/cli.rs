//! Command-line front end: `run`, `reproduce` and `plot`.
//!
//! Exit status is 0 on success, 1 when a run or a write fails and 2 for
//! invalid arguments or configuration. A malformed configuration is rejected
//! before anything is written.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentFile, Scenario};
use crate::error::{Error, Result};
use crate::experiments::{self, write_comparison_csv, write_discrepancy_histogram, write_mc_result};
use crate::harness::{monte_carlo, monte_carlo_with_baseline, ControllerKind, McResult};
use crate::plot::plot_dir;

pub const SEED_ENV: &str = "SMMPC_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "smmpc",
    version,
    about = "Signal matrix model predictive control experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario(s) of a TOML experiment file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides the file. Falls back to the file, then SMMPC_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Monte Carlo runs per scenario; overrides the file.
        #[arg(long)]
        runs: Option<usize>,
        /// Worker threads (0: one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Reproduce one of the built-in studies (1 to 6).
    Reproduce {
        id: u8,
        #[arg(long)]
        runs: Option<usize>,
        /// Master seed. Falls back to SMMPC_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Render SVG figures for every result file under a directory.
    Plot {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "svg")]
        format: Format,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn env_seed() -> std::result::Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Parse `args` (program name first), execute, and return the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Run(m)) = &f;
            eprintln!("error: {m}");
            f.code()
        }
    }
}

pub fn execute(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Run {
            config,
            seed,
            out,
            runs,
            jobs,
        } => run(&config, seed, &out, runs, jobs),
        Command::Reproduce {
            id,
            runs,
            seed,
            out,
            jobs,
        } => reproduce(id, runs, seed, &out, jobs),
        Command::Plot {
            dir,
            format: Format::Svg,
        } => {
            let files = plot_dir(&dir).map_err(|e| Failure::Run(e.to_string()))?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

struct Outcome {
    scenario: Scenario,
    result: McResult,
}

fn run(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    runs: Option<usize>,
    jobs: usize,
) -> std::result::Result<(), Failure> {
    let text =
        fs::read_to_string(config).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", config.display())))?;
    let file = ExperimentFile::parse(&text)?;
    let seed = match seed.or(file.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let runs = runs.unwrap_or(file.runs());
    if runs == 0 {
        return Err(Failure::Usage("--runs must be at least one".into()));
    }

    // Everything is computed before the first file is written.
    let mut outcomes = Vec::new();
    for scenario in file.scenarios(seed) {
        let cfg = &scenario.config;
        let result = if cfg.controller.kind == ControllerKind::IdealMpc {
            let mc = monte_carlo(cfg, runs, jobs)?;
            monte_carlo_with_baseline(cfg, runs, jobs, Some(&mc.runs))?
        } else {
            let base = monte_carlo(&cfg.clone().with_kind(ControllerKind::IdealMpc), runs, jobs)?;
            monte_carlo_with_baseline(cfg, runs, jobs, Some(&base.runs))?
        };
        outcomes.push(Outcome { scenario, result });
    }

    let resolved = ExperimentFile {
        seed: Some(seed),
        runs: Some(runs),
        ..file
    };
    write_run_outputs(out, &resolved, &outcomes).map_err(|e| Failure::Run(e.to_string()))?;

    let mut failed = 0;
    for o in &outcomes {
        let s = &o.result.summary;
        let name = if o.scenario.label.is_empty() {
            s.label.as_str()
        } else {
            o.scenario.label.as_str()
        };
        let j = s.j_tot.as_ref().map_or("-".to_string(), |j| format!("{:.4}", j.median));
        println!("{name}: {}/{} runs completed, median J_tot {j}", s.completed, s.runs);
        failed += s.failures.len();
    }
    if failed > 0 {
        return Err(Failure::Run(format!("{failed} run(s) failed; see summary.json")));
    }
    Ok(())
}

fn write_run_outputs(out: &Path, file: &ExperimentFile, outcomes: &[Outcome]) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("scenario.toml"), file.to_toml()?)?;
    let single = outcomes.len() == 1;
    for o in outcomes {
        let dir = if single {
            out.to_path_buf()
        } else {
            out.join(&o.scenario.label)
        };
        write_mc_result(&dir, &o.result)?;
        if o.scenario.config.controller.track_discrepancy {
            let e: Vec<f64> = o
                .result
                .runs
                .iter()
                .filter(|r| !r.failed())
                .flat_map(|r| r.discrepancies())
                .collect();
            write_discrepancy_histogram(fs::File::create(dir.join("e_histogram.csv"))?, &e)?;
        }
    }
    if !single {
        let labels: Vec<String> = outcomes.iter().map(|o| o.scenario.label.clone()).collect();
        let sums: Vec<_> = outcomes.iter().map(|o| o.result.summary.clone()).collect();
        write_comparison_csv(fs::File::create(out.join("comparison.csv"))?, &labels, &sums)?;
    }
    Ok(())
}

fn reproduce(
    id: u8,
    runs: Option<usize>,
    seed: Option<u64>,
    out: &Path,
    jobs: usize,
) -> std::result::Result<(), Failure> {
    let runs = match runs {
        Some(0) => return Err(Failure::Usage("--runs must be at least one".into())),
        Some(n) => n,
        None => experiments::default_runs(id)?,
    };
    let seed = match seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let rep = experiments::reproduce(id, runs, seed, jobs)?;
    experiments::write_reproduction(out, &rep).map_err(|e| Failure::Run(e.to_string()))?;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(rep.render().as_bytes());
    let _ = writeln!(
        stdout,
        "{}: {}",
        if rep.report.passed() { "PASS" } else { "FAIL" },
        out.display()
    );
    Ok(())
}
