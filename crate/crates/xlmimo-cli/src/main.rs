use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use xlmimo::codebook::{polar_codebook, PolarSpec};
use xlmimo::experiments::{self, Diagnostics, ParamDefault, ScenarioConfig, EXPERIMENTS};
use xlmimo::geometry::ArrayLayout;
use xlmimo::wavelength;

#[derive(Parser)]
#[command(name = "xlmimo", version, about = "Run near-field XL-MIMO experiments from TOML scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write `<name>.csv`.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output` in the file (default `results`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` in the file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a scenario and list every problem found.
    Validate { config: PathBuf },
    /// List experiments with their parameters and output columns.
    ListExperiments,
    /// Write the polar codebook of a scenario's array as CSV.
    ExportCodebook {
        config: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Invalid(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out, seed } => {
            let mut cfg = load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            check(&cfg)?;
            let table = experiments::run(&cfg).map_err(anyhow::Error::from)?;
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!("{}.csv", file_stem(&cfg.name)));
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut file = std::io::BufWriter::new(file);
            table
                .write_csv(&mut file)
                .and_then(|_| file.flush())
                .with_context(|| format!("writing {}", path.display()))?;
            println!("{} ({} rows)", path.display(), table.rows.len());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            check(&cfg)?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::ListExperiments => {
            list_experiments();
            Ok(())
        }
        Command::ExportCodebook { config, out } => {
            let cfg = load(&config)?;
            check(&cfg)?;
            let layout =
                ArrayLayout::along_y(cfg.layout.clone(), wavelength(cfg.frequency_hz)).map_err(anyhow::Error::from)?;
            let spec = cfg.codebook.clone().unwrap_or_else(|| PolarSpec::non_uniform(0.5));
            let book = polar_codebook(&layout, &spec).map_err(anyhow::Error::from)?;
            match out {
                Some(path) => {
                    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    let mut file = std::io::BufWriter::new(file);
                    book.write_csv(&mut file).and_then(|_| file.flush()).context("writing codebook")?;
                    eprintln!("{} ({} codewords)", path.display(), book.len());
                }
                None => book.write_csv(std::io::stdout().lock()).context("writing codebook")?,
            }
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    experiments::parse_config(&text).map_err(|issue| Failure::Invalid(format!("{}: error: {issue}", path.display())))
}

/// Prints warnings; fails with every error listed.
fn check(cfg: &ScenarioConfig) -> Result<(), Failure> {
    let Diagnostics { errors, warnings } = experiments::validate(cfg);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if errors.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = errors.iter().map(|e| format!("error: {e}")).collect();
    Err(Failure::Invalid(lines.join("\n")))
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect()
}

fn list_experiments() {
    for e in &EXPERIMENTS {
        println!("{}: {}", e.name, e.summary);
        println!("  array: {}", e.layout.describe());
        for p in e.params {
            let default = match p.default {
                ParamDefault::Value(v) => format!("{v}"),
                ParamDefault::Frequency => "frequency_hz".to_string(),
                ParamDefault::Elements => "layout".to_string(),
            };
            println!("  param {} = {} ({}; {})", p.name, default, p.help, p.kind.describe());
        }
        println!("  columns: {}", e.header().join(","));
    }
}
