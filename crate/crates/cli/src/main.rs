//! `nezx`: check, parse, bench and export grammars from the command line.
//!
//! Exit codes: 0 ok, 1 parse failure, 2 grammar error, 3 I/O or usage.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser as ClapParser, Subcommand, ValueEnum};
use nez_core::corpus::{default_corpus_dir, load_corpus, run_corpus, Variant};
use nez_core::dsl::{parse_grammar_syntax, print_grammar};
use nez_core::engine::{EngineError, Mode, ParseOptions, Parser};
use nez_core::grammar::{desugar, has_errors, validate, Diagnostic, Grammar};
use nez_core::packrat::{bench_run, generate_input, generator, to_csv, BenchError};
use nez_core::transforms::{eliminate_conditions_with, prune_unreachable, EliminateOptions};

#[derive(ClapParser)]
#[command(name = "nezx", version, about = "PEG parsing with symbol tables and parsing conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a grammar file.
    Check { grammar: PathBuf },
    /// Parse one input file (`-` reads stdin).
    Parse {
        grammar: PathBuf,
        input: PathBuf,
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value = "naive")]
        mode: Mode,
        /// Initial flag value, `NAME=true|false`. Repeatable.
        #[arg(long = "flag", value_parser = parse_flag)]
        flags: Vec<(String, bool)>,
        #[arg(long, value_enum, default_value = "sexpr")]
        format: Format,
        #[arg(long)]
        require_eof: bool,
        #[arg(long)]
        step_budget: Option<u64>,
    },
    /// Time parses of generated inputs or files; CSV on stdout.
    Bench {
        grammar: PathBuf,
        /// Generator id, used with --sizes.
        #[arg(long = "gen", requires = "sizes", conflicts_with = "files")]
        generator: Option<String>,
        /// Comma-separated byte sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(required_unless_present = "generator")]
        files: Vec<PathBuf>,
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value = "naive")]
        mode: Mode,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        /// Defaults to no limit.
        #[arg(long)]
        step_budget: Option<u64>,
    },
    /// Apply grammar passes and print the result.
    Export {
        grammar: PathBuf,
        /// Comma-separated: desugar, elim-cond, prune.
        #[arg(long = "pass", value_delimiter = ',', required = true)]
        passes: Vec<Pass>,
        /// Start production for elim-cond and prune.
        #[arg(long)]
        start: Option<String>,
        /// Flag preset for elim-cond, `NAME=true|false`.
        #[arg(long = "flag", value_parser = parse_flag)]
        flags: Vec<(String, bool)>,
    },
    /// Run golden fixtures; non-zero exit on any failing case.
    Corpus {
        /// Defaults to the fixtures shipped with nez-core.
        dir: Option<PathBuf>,
        #[arg(long, default_value = "naive")]
        mode: Mode,
        /// Run each case against the condition-eliminated grammar.
        #[arg(long)]
        eliminated: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Sexpr,
    Json,
    Quiet,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pass {
    Desugar,
    ElimCond,
    Prune,
}

fn parse_flag(s: &str) -> Result<(String, bool), String> {
    let (name, value) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let value = match value {
        "true" | "t" | "1" => true,
        "false" | "f" | "0" => false,
        other => return Err(format!("'{other}' is not a boolean")),
    };
    if name.is_empty() {
        return Err("empty flag name".into());
    }
    Ok((name.to_string(), value))
}

/// Non-zero outcomes.
enum Fail {
    Parse,
    Grammar,
    Io,
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Parse => 1,
            Fail::Grammar => 2,
            Fail::Io => 3,
        }
    }
}

type Outcome = Result<(), Fail>;

fn io_error(path: &Path, e: impl std::fmt::Display) -> Fail {
    eprintln!("ERROR E_IO {}: {e}", path.display());
    Fail::Io
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Fail> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf).map_err(|e| io_error(path, e))?;
        return Ok(buf);
    }
    std::fs::read(path).map_err(|e| io_error(path, e))
}

fn report(path: &Path, diags: &[Diagnostic]) {
    for d in diags {
        let (line, col) = d.span.map_or((0, 0), |s| (s.line, s.column));
        eprintln!("{} {} {}:{line}:{col} {}", d.severity, d.code, path.display(), d.message);
    }
}

/// Reads, parses and validates; prints every diagnostic.
fn load_grammar(path: &Path) -> Result<Grammar, Fail> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|e| io_error(path, e))?;
    let grammar = parse_grammar_syntax(&text).map_err(|diags| {
        report(path, &diags);
        Fail::Grammar
    })?;
    let diags = validate(&grammar);
    report(path, &diags);
    if has_errors(&diags) {
        return Err(Fail::Grammar);
    }
    Ok(grammar)
}

fn engine_failure(e: EngineError) -> Fail {
    eprintln!("ERROR {} {e}", e.code());
    match e {
        EngineError::StepLimit(_) => Fail::Parse,
        _ => Fail::Grammar,
    }
}

fn flag_map(g: &Grammar, flags: Vec<(String, bool)>) -> BTreeMap<String, bool> {
    for (name, _) in &flags {
        if !g.flags().contains(name) {
            eprintln!("WARNING W_UNKNOWN_FLAG flag '{name}' does not occur in the grammar");
        }
    }
    flags.into_iter().collect()
}

fn resolve_start(g: &Grammar, start: Option<String>) -> Result<String, Fail> {
    let start = start.unwrap_or_else(|| g.start().to_string());
    if !g.contains(&start) {
        eprintln!("ERROR E_UNDEFINED_START no production named '{start}'");
        return Err(Fail::Grammar);
    }
    Ok(start)
}

fn check(grammar: &Path) -> Outcome {
    load_grammar(grammar).map(|_| ())
}

#[allow(clippy::too_many_arguments)]
fn parse(
    grammar: &Path,
    input: &Path,
    start: Option<String>,
    mode: Mode,
    flags: Vec<(String, bool)>,
    format: Format,
    require_eof: bool,
    step_budget: Option<u64>,
) -> Outcome {
    let g = load_grammar(grammar)?;
    let start = resolve_start(&g, start)?;
    let input = read_bytes(input)?;
    let opts = ParseOptions {
        mode,
        require_eof,
        build_tree: !matches!(format, Format::Quiet),
        step_budget,
        flags: flag_map(&g, flags),
        ..ParseOptions::default()
    };
    let parser = Parser::new(&g).map_err(engine_failure)?;
    let out = parser.parse(&start, &input, &opts).map_err(engine_failure)?;
    let mut stdout = io::stdout().lock();
    if !out.success {
        let _ = writeln!(stdout, "fail at {}", out.furthest_failure.unwrap_or(0));
        return Err(Fail::Parse);
    }
    let tree = out.tree.as_ref();
    let _ = match format {
        Format::Quiet => Ok(()),
        Format::Sexpr => writeln!(stdout, "consumed {}", out.consumed)
            .and_then(|_| tree.map_or(Ok(()), |t| writeln!(stdout, "{}", t.to_sexpr()))),
        Format::Json => writeln!(stdout, "consumed {}", out.consumed)
            .and_then(|_| tree.map_or(Ok(()), |t| writeln!(stdout, "{}", t.to_json()))),
    };
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    grammar: &Path,
    gen: Option<String>,
    sizes: Vec<usize>,
    files: Vec<PathBuf>,
    start: Option<String>,
    mode: Mode,
    repetitions: usize,
    step_budget: Option<u64>,
) -> Outcome {
    let g = load_grammar(grammar)?;
    let mut inputs = Vec::new();
    let mut default_start = None;
    if let Some(id) = gen {
        let info = generator(&id).ok_or_else(|| {
            eprintln!("ERROR E_UNKNOWN_GENERATOR unknown generator '{id}'");
            Fail::Io
        })?;
        if g.contains(info.start) {
            default_start = Some(info.start.to_string());
        }
        for size in sizes {
            let input = generate_input(&id, size).map_err(|e| {
                eprintln!("ERROR {} {e}", e.code());
                Fail::Io
            })?;
            inputs.push((format!("{id}-{size}"), input));
        }
    }
    for f in files {
        inputs.push((f.display().to_string(), read_bytes(&f)?));
    }
    let start = resolve_start(&g, start.or(default_start))?;
    let parser = Parser::new(&g).map_err(engine_failure)?;
    let opts = ParseOptions { mode, step_budget: Some(step_budget.unwrap_or(u64::MAX)), ..ParseOptions::default() };
    match bench_run(&parser, &start, &inputs, &opts, repetitions) {
        Ok(records) => {
            print!("{}", to_csv(&records));
            Ok(())
        }
        Err(BenchError::Engine(e)) => Err(engine_failure(e)),
        Err(e) => {
            eprintln!("ERROR {} {e}", e.code());
            Err(Fail::Parse)
        }
    }
}

fn export(grammar: &Path, passes: Vec<Pass>, start: Option<String>, flags: Vec<(String, bool)>) -> Outcome {
    let mut g = load_grammar(grammar)?;
    let start = start.map(|s| resolve_start(&g, Some(s))).transpose()?;
    let presets = flag_map(&g, flags);
    if let Some(s) = &start {
        g = g.with_start(s);
    }
    for pass in passes {
        g = match pass {
            Pass::Desugar => desugar(&g),
            Pass::ElimCond => {
                let opts =
                    EliminateOptions { start: start.clone(), presets: presets.clone(), ..EliminateOptions::default() };
                eliminate_conditions_with(&g, &opts).map_err(|e| {
                    eprintln!("ERROR {} {}: {e}", e.code(), grammar.display());
                    Fail::Grammar
                })?
            }
            Pass::Prune => prune_unreachable(&g),
        };
    }
    print!("{}", print_grammar(&g));
    Ok(())
}

fn corpus(dir: Option<PathBuf>, mode: Mode, eliminated: bool) -> Outcome {
    let dir = dir.unwrap_or_else(default_corpus_dir);
    let corpus = load_corpus(&dir).map_err(|e| {
        eprintln!("ERROR {} {e}", e.code());
        Fail::Io
    })?;
    let variant = if eliminated { Variant::Eliminated } else { Variant::Original };
    let report = run_corpus(&corpus, mode, variant);
    let mut stdout = io::stdout().lock();
    for r in &report.results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(stdout, "{verdict} {} {}: {}", r.grammar_file, r.case, r.detail);
    }
    let failed = report.failures().count();
    let _ = writeln!(stdout, "{} cases, {failed} failed", report.results.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(Fail::Parse)
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Check { grammar } => check(&grammar),
        Command::Parse { grammar, input, start, mode, flags, format, require_eof, step_budget } => {
            parse(&grammar, &input, start, mode, flags, format, require_eof, step_budget)
        }
        Command::Bench { grammar, generator, sizes, files, start, mode, repetitions, step_budget } => {
            bench(&grammar, generator, sizes, files, start, mode, repetitions, step_budget)
        }
        Command::Export { grammar, passes, start, flags } => export(&grammar, passes, start, flags),
        Command::Corpus { dir, mode, eliminated } => corpus(dir, mode, eliminated),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    // Deeply nested inputs recurse deeply.
    let worker = std::thread::Builder::new().stack_size(1 << 30).spawn(move || run(cli));
    match worker.map(|h| h.join()) {
        Ok(Ok(Ok(()))) => ExitCode::SUCCESS,
        Ok(Ok(Err(fail))) => ExitCode::from(fail.code()),
        _ => ExitCode::from(3),
    }
}
