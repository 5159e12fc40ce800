//! Command-line entry points.
//!
//! `tba solve [--all] [--count] [--models] <in> [<out>]` evaluates a script
//! or theory file and writes the solution rows (default `out.txt`);
//! `tba tba <theoryfile>` runs the partitioned counting procedure and
//! prints the per-partition table. Exit codes: 0 success (a solvable input
//! with zero models is success), 1 usage or parse errors, 2 feasibility cap
//! exceeded.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bitengine::{EngineOptions, DEFAULT_CHUNK_LOG2, DEFAULT_MAX_VARS, MAX_SUPPORTED_VARS};
use crate::boolcore::Assignment;
use crate::countlab::tba_count;
use crate::modelkit::decode_model;

use super::script::{expand_script, parse_script};
use super::solve::{Backend, SolvePipeline, SolveSummary};
use super::theory::parse_theory;
use super::{looks_like_theory, ShellError};

#[derive(Parser, Debug)]
#[command(
    name = "tba",
    version,
    about = "Exhaustive Boolean solving and finite model counting"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve a script or theory file for all models.
    Solve(SolveArgs),
    /// Run the partitioned counting procedure on a theory file.
    Tba(TbaArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Write every solution row to the output file (the default action).
    #[arg(long)]
    all: bool,
    /// Print only the model count on stdout.
    #[arg(long)]
    count: bool,
    /// Pretty-print the decoded models (theory files only).
    #[arg(long)]
    models: bool,
    /// Script or theory file to solve.
    input: PathBuf,
    /// Solution file path (defaults to out.txt).
    output: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Debug)]
struct TbaArgs {
    /// Theory file with a partition block.
    input: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Debug)]
struct EngineArgs {
    /// log2 of the chunk size in bits.
    #[arg(long, default_value_t = DEFAULT_CHUNK_LOG2, value_parser = clap::value_parser!(u32).range(0..=28))]
    chunk_bits: u32,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "TBA_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Feasibility cap on free variables.
    #[arg(long, default_value_t = DEFAULT_MAX_VARS, value_parser = clap::value_parser!(u32).range(1..=MAX_SUPPORTED_VARS as i64))]
    max_vars: u32,
    /// Evaluation backend; naive is the slow cross-checking oracle.
    #[arg(long, value_enum, default_value_t = BackendArg::Bitparallel)]
    backend: BackendArg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BackendArg {
    Bitparallel,
    Naive,
}

impl EngineArgs {
    fn options(&self) -> EngineOptions {
        EngineOptions {
            chunk_log2: self.chunk_bits,
            workers: self.jobs,
            max_vars: self.max_vars,
        }
    }

    fn backend(&self) -> Backend {
        match self.backend {
            BackendArg::Bitparallel => Backend::BitParallel,
            BackendArg::Naive => Backend::Naive,
        }
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.cmd {
        Cmd::Solve(args) => run_solve(args),
        Cmd::Tba(args) => run_tba(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_solve(args: SolveArgs) -> Result<(), ShellError> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| ShellError::BadInput(format!("{}: {e}", args.input.display())))?;
    let opts = args.engine.options();
    let backend = args.engine.backend();
    let write_all = args.all || !args.count;

    let (pipeline, theory) = if looks_like_theory(&text) {
        let file = parse_theory(&text)?;
        let (theory, _) = file.ground()?;
        let pipeline = SolvePipeline::new(
            &theory.theta(),
            &theory.assumptions,
            theory.letters().to_vec(),
        )?;
        (pipeline, Some(theory))
    } else {
        if args.models {
            return Err(ShellError::Usage(
                "--models needs a theory file (scripts have no structures to decode)".into(),
            ));
        }
        let script = parse_script(&text)?;
        let (theta, assumptions, namespace) = expand_script(&script)?;
        let pipeline = SolvePipeline::new(&theta, &assumptions, namespace.letters())?;
        (pipeline, None)
    };

    if args.count {
        let (count, _) = pipeline.count(&opts, backend)?;
        println!("{count}");
    }
    if write_all {
        let path = args
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from("out.txt"));
        let file = fs::File::create(&path)?;
        let mut out = std::io::BufWriter::new(file);
        let stdout = std::io::stdout();
        let summary: SolveSummary = pipeline.write_solutions(&opts, backend, &mut out, |ix| {
            if args.models {
                let theory = theory.as_ref().expect("checked above");
                let full = pipeline.full_valuation(ix);
                let model = decode_model(&full, theory)?;
                let mut handle = stdout.lock();
                writeln!(handle, "# model {ix}")?;
                write!(handle, "{model}")?;
                writeln!(handle)?;
            }
            Ok(())
        })?;
        out.flush()?;
        eprintln!(
            "wrote {} solutions over {} free letters to {} ({})",
            summary.count,
            summary.free_count,
            path.display(),
            summary.stats
        );
    }
    Ok(())
}

fn run_tba(args: TbaArgs) -> Result<(), ShellError> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| ShellError::BadInput(format!("{}: {e}", args.input.display())))?;
    let file = parse_theory(&text)?;
    let (theory, spec) = file.ground()?;
    let spec = spec.ok_or_else(|| {
        ShellError::Usage("the tba subcommand needs a theory file with a partition block".into())
    })?;
    let report = tba_count(&theory, &spec, &Assignment::new(), &args.engine.options())?;
    print!("{}", report.render_table());
    Ok(())
}
