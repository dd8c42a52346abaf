use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use locstab::generate::GeneratorSpec;
use locstab::io::parse_rational;
use locstab::run::{self, Command, Format, Input, RunConfig, EXIT_VALIDATION};
use locstab::Rational;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Analyze,
    Decompose,
    Morley,
    Approx,
    SearchOrder,
    DoubleLimit,
    TwoTree,
    Generate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Analyze => Command::Analyze,
            Cmd::Decompose => Command::Decompose,
            Cmd::Morley => Command::Morley,
            Cmd::Approx => Command::Approx,
            Cmd::SearchOrder => Command::SearchOrder,
            Cmd::DoubleLimit => Command::DoubleLimit,
            Cmd::TwoTree => Command::TwoTree,
            Cmd::Generate => Command::Generate,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fmt {
    Json,
    Csv,
}

/// Local stability analysis of a finite binary relation.
///
/// Set LOCSTAB_THREADS to bound the worker pool.
#[derive(Debug, Parser)]
#[command(name = "locstab", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Relation file (text or JSON).
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    input: Option<PathBuf>,
    /// Generator spec, e.g. `half_graph(6)` or `random_stable(16,16,3)@half`.
    #[arg(long)]
    gen: Option<String>,
    /// Ladder cap, order-array size bound and two-tree depth.
    #[arg(long, default_value_t = 12)]
    cap: usize,
    #[arg(long, default_value = "1/8", value_parser = rational)]
    eps: Rational,
    #[arg(long, default_value = "0", value_parser = rational)]
    r: Rational,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Fmt,
    /// Measure document for decompose, approx and two-tree.
    #[arg(long)]
    measure: Option<PathBuf>,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn config(args: Args) -> Result<RunConfig, locstab::Error> {
    let input = match (args.input, args.gen) {
        (Some(p), None) => Input::File(p),
        (None, Some(g)) => Input::Generator(g.parse::<GeneratorSpec>()?),
        _ => unreachable!("clap enforces exactly one input"),
    };
    let mut cfg = RunConfig::new(args.command.into(), input);
    cfg.cap = args.cap;
    cfg.eps = args.eps;
    cfg.r = args.r;
    cfg.seed = args.seed;
    cfg.out = args.out;
    cfg.measure = args.measure;
    cfg.format = match args.format {
        Fmt::Json => Format::Json,
        Fmt::Csv => Format::Csv,
    };
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = std::env::var("LOCSTAB_THREADS").ok().and_then(|v| v.parse().ok()) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let outcome = config(args).and_then(|cfg| run::run(&cfg).map(|rep| (cfg, rep)));
    let (cfg, report) = match outcome {
        Ok(ok) => ok,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(run::exit_code(&e) as u8);
        }
    };
    let text = report.render(cfg.format);
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_VALIDATION as u8);
    }
    ExitCode::from(report.exit_code as u8)
}
