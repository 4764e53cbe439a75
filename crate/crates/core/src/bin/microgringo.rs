use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser as _;
use microgringo::engine::{ground_program, GroundError, GroundingOptions, Silent};
use microgringo::trace::{format_stats, TraceWriter};
use microgringo::{Observer, Parser};

/// Ground safe logic programs with recursive aggregates.
#[derive(Debug, clap::Parser)]
#[command(name = "microgringo", version)]
struct RunConfig {
    /// Input files, read in order as one program.
    #[arg(required = true)]
    files: Vec<PathBuf>,

    /// Print the full ground program (default).
    #[arg(long, conflicts_with = "facts_only")]
    text: bool,

    /// Print only bodyless rules.
    #[arg(long)]
    facts_only: bool,

    /// Print component panels and propagation events to stderr.
    #[arg(long)]
    trace: bool,

    /// Print grounding statistics to stderr.
    #[arg(long)]
    stats: bool,

    /// Abort once more than N atoms are derived.
    #[arg(
        long,
        value_name = "N",
        env = "MICROGRINGO_LIMIT",
        default_value_t = microgringo::engine::DEFAULT_ATOM_LIMIT as u64,
        value_parser = clap::value_parser!(u64).range(1..)
    )]
    limit: u64,
}

fn run(config: RunConfig) -> Result<(), (u8, String)> {
    let mut parser = Parser::new();
    for path in &config.files {
        let name = path.display().to_string();
        let src = std::fs::read_to_string(path)
            .map_err(|e| (1, format!("{name}: cannot read file: {e}")))?;
        parser
            .add_source(Some(&name), &src)
            .map_err(|e| (1, e.to_string()))?;
    }
    let program = parser.finish();
    let options = GroundingOptions {
        atom_limit: usize::try_from(config.limit).unwrap_or(usize::MAX),
    };
    let mut tracer = TraceWriter::new(io::stderr().lock());
    let mut silent = Silent;
    let observer: &mut dyn Observer = if config.trace {
        &mut tracer
    } else {
        &mut silent
    };
    let result = ground_program(&program, options, observer).map_err(|e| match e {
        GroundError::LimitExceeded { .. } => (2, e.to_string()),
        _ => (1, e.to_string()),
    })?;
    drop(tracer);

    let mut out = BufWriter::new(io::stdout().lock());
    for rule in &result.rules {
        if config.facts_only && !rule.body.is_empty() {
            continue;
        }
        writeln!(out, "{rule}").map_err(|e| (1, format!("cannot write output: {e}")))?;
    }
    out.flush()
        .map_err(|e| (1, format!("cannot write output: {e}")))?;
    if result.is_inconsistent() {
        eprintln!("microgringo: warning: a constraint holds unconditionally; the program has no stable model");
    }
    if config.stats {
        eprint!("{}", format_stats(&result.stats));
    }
    Ok(())
}

fn main() -> ExitCode {
    let config = match RunConfig::try_parse() {
        Ok(config) => config,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(config) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("microgringo: {message}");
            ExitCode::from(code)
        }
    }
}
