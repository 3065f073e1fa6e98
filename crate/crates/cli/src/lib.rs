//! `genvi` command line: instance files in, canonical reports out.
//!
//! Exit codes: 0 when every check meets its expectation, 1 on a verdict
//! failure, 2 on usage, parse or resolution errors.

pub mod commands;
pub mod error;
pub mod instance;
pub mod paper;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::Overrides;
pub use error::CliError;
pub use report::Report;

#[derive(Debug, Parser)]
#[command(name = "genvi", version, about = "Maximal elements and equilibria via variational reformulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mid-point, lsc and openness verdicts at sampled profiles.
    Classify { instance: PathBuf },
    /// Maximal elements of a single decision maker through VI(F, K).
    SolveVi { instance: PathBuf },
    /// Equilibria through the QVI of the product operator.
    SolveQvi { instance: PathBuf },
    /// Check one point: certificate plus maximality or equilibrium.
    Verify {
        instance: PathBuf,
        /// Comma-separated coordinates; overrides the [verify] section.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
    },
    /// Hypothesis audit of every player.
    Audit { instance: PathBuf },
    /// Built-in example suites against the bundled expected results.
    ReproducePaper,
    /// Write a built-in fixture as an instance file.
    ExportFixture { name: String },
}

#[derive(Debug, Args)]
pub struct Flags {
    /// Grid points per axis (solve), sampled points per axis (classify, audit).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the machine report (or the exported fixture) here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Keep fixed-point iterates in certificates.
    #[arg(long, global = true)]
    pub trace: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Machine,
    Human,
}

fn validate_flags(f: &Flags) -> Result<(), CliError> {
    if let Some(t) = f.tol {
        if !t.is_finite() || t < 0.0 {
            return Err(CliError::invalid("--tol", "must be finite and non-negative"));
        }
    }
    Ok(())
}

/// Runs a parsed command and returns its report; `export-fixture` returns
/// the instance text instead.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    validate_flags(&cli.flags)?;
    let f = &cli.flags;
    let mut o = Overrides {
        grid: f.grid,
        tol: f.tol,
        seed: f.seed,
        max_iters: f.max_iters,
        trace: f.trace,
        point: None,
    };
    let load = |p: &PathBuf| instance::load(p);
    let rep = match &cli.command {
        Command::Classify { instance } => commands::classify(&load(instance)?, &o)?,
        Command::SolveVi { instance } => commands::solve_vi(&load(instance)?, &o)?,
        Command::SolveQvi { instance } => commands::solve_qvi(&load(instance)?, &o)?,
        Command::Verify { instance, point } => {
            if let Some(p) = point {
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::invalid("--point", "coordinates must be finite"));
                }
            }
            o.point = point.clone();
            commands::verify(&load(instance)?, &o)?
        }
        Command::Audit { instance } => commands::audit(&load(instance)?, &o)?,
        Command::ReproducePaper => paper::reproduce(f.seed.unwrap_or(0))?,
        Command::ExportFixture { name } => {
            return Ok(Output::Text(instance::to_toml(&instance::export_fixture(name)?)?));
        }
    };
    Ok(Output::Report(Box::new(rep)))
}

pub enum Output {
    Report(Box<Report>),
    Text(String),
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

/// Full run from argv; output goes to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    let result = execute(&cli).and_then(|out| match out {
        Output::Text(t) => {
            match &cli.flags.out {
                Some(p) => write_file(p, &t)?,
                None => {
                    let _ = write!(stdout, "{t}");
                }
            }
            Ok(0)
        }
        Output::Report(rep) => {
            if let Some(p) = &cli.flags.out {
                write_file(p, &rep.machine())?;
            }
            let text = match cli.flags.format {
                Format::Machine => rep.machine(),
                Format::Human => rep.human(),
            };
            let _ = write!(stdout, "{text}");
            Ok(rep.exit_code())
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
