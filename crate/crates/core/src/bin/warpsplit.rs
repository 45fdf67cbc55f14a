//! `warpsplit`: command-line front end of the library.
//!
//! Prints a JSON report on success (exit 0, or 1 when the verdict is
//! `fail`) and a JSON error object otherwise (exit 2 for bad input, 3 for
//! failed computations).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use warpsplit::harness::{Command, ConfigOverrides, HarnessError, RunConfig, Verdict, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "warpsplit", version, about = "s-nullities, splitting of second fundamental forms and warped product decompositions")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration (default: $WARPSPLIT_CONFIG)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Adaptedness tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Relative rank threshold for exact forms
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    /// Seed of every random choice
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// First-derivative finite-difference step
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Grid points per angle on Gr(1,2)
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Random starts of the s-nullity search
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Worker threads (0: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// s-nullities of a form document
    Nullity { file: String },
    /// Splitting lemma on a form and a two-block splitting
    Lemma { file: String },
    /// Randomized search for counterexamples to the splitting lemma
    Falsify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Pullback metric of a warped representation
    RepVerify { file: String },
    /// Warped curvature formula against finite differences
    Curvature { file: String },
    /// Fundamental forms and nullities of an immersion at sample points
    Analyze { file: String },
    /// Warped product decomposition of an immersion
    Decompose { file: String },
    /// Grid oracle for s-nullities against the search
    Oracle {
        file: String,
        #[arg(long)]
        s: Option<usize>,
    },
}

impl Sub {
    fn into_command(self) -> Command {
        match self {
            Sub::Nullity { file } => Command::Nullity { file },
            Sub::Lemma { file } => Command::Lemma { file },
            Sub::Falsify { n, p, trials } => Command::Falsify { n, p, trials },
            Sub::RepVerify { file } => Command::RepVerify { file },
            Sub::Curvature { file } => Command::Curvature { file },
            Sub::Analyze { file } => Command::Analyze { file },
            Sub::Decompose { file } => Command::Decompose { file },
            Sub::Oracle { file, s } => Command::Oracle { file, s },
        }
    }
}

fn run(cli: Cli) -> Result<Verdict, HarnessError> {
    let g = cli.global;
    let flags = ConfigOverrides { tol: g.tol, rank_tol: g.rank_tol, seed: g.seed, h: g.h, grid: g.grid, starts: g.starts, jobs: g.jobs };
    let config = RunConfig::resolve(g.config.as_deref(), |k| std::env::var(k).ok(), &flags)?;
    let report = cli.command.into_command().run(&config)?;
    let text = report.to_json();
    match g.out {
        Some(path) => std::fs::write(&path, text + "\n")
            .map_err(|e| HarnessError::Io { path: path.display().to_string(), message: e.to_string() })?,
        None => println!("{text}"),
    }
    Ok(report.verdict)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let doc = json!({
                "schemaVersion": SCHEMA_VERSION,
                "error": { "kind": "UsageError", "message": e.render().to_string().trim_end() },
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(Verdict::Fail) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            println!("{}", serde_json::to_string_pretty(&e.to_doc()).expect("serializable"));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
