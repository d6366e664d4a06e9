//! `rewlang`: check, lower and run rewrite programs.
//!
//! Exit codes: 0 success, 1 parse or check errors (or bad usage),
//! 2 runtime error, 3 step or depth limit exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rewlang_core::checks::has_errors;
use rewlang_core::desugar::runtime_program;
use rewlang_core::syntax::print_program;
use rewlang_core::trace::to_json_lines;
use rewlang_core::{
    check_program, flatten_program, lower_loops, parse_program, parse_query, ArgOrder, BindingMode, Engine,
    EvalOptions, Program,
};

const SEED_VAR: &str = "REWLANG_SEED";

#[derive(Parser)]
#[command(name = "rewlang", version, about = "Term rewriting with assignments, loops and destructive updates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report constructor, linearity, overlap, binding and coverage problems.
    Check {
        file: PathBuf,
        #[arg(long)]
        strict_single_assignment: bool,
    },
    /// Print the loop-free program and the equivalent rewrite rules.
    Desugar {
        file: PathBuf,
        /// Only the program with loops lowered.
        #[arg(long, conflicts_with = "rules_only")]
        lowered_only: bool,
        /// Only the rewrite rules.
        #[arg(long)]
        rules_only: bool,
    },
    /// Evaluate a query and print its normal form.
    Run(RunArgs),
    /// Check every `.trs` file in a directory.
    Corpus { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long)]
    query: String,
    /// Write one JSON record per step to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: u64,
    #[arg(long, default_value_t = 10_000)]
    max_depth: usize,
    #[arg(long)]
    occurs_check: bool,
    #[arg(long)]
    strict_single_assignment: bool,
    /// Argument evaluation order, for testing.
    #[arg(long, value_enum, default_value_t = Order::LeftToRight, hide = true)]
    order: Order,
    /// Seed for `--order random`.
    #[arg(long, default_value_t = 0, hide = true)]
    order_seed: u64,
}

#[derive(Copy, Clone, ValueEnum)]
enum Order {
    LeftToRight,
    RightToLeft,
    Random,
}

impl From<Order> for ArgOrder {
    fn from(o: Order) -> ArgOrder {
        match o {
            Order::LeftToRight => ArgOrder::LeftToRight,
            Order::RightToLeft => ArgOrder::RightToLeft,
            Order::Random => ArgOrder::Random,
        }
    }
}

const CHECK_FAILED: u8 = 1;
const RUNTIME_ERROR: u8 = 2;
const LIMIT_EXCEEDED: u8 = 3;

type Exit = Result<(), u8>;

fn mode(strict: bool) -> BindingMode {
    if strict {
        BindingMode::SingleAssignment
    } else {
        BindingMode::MultiAssignment
    }
}

fn load(path: &Path) -> Result<Program, u8> {
    let name = path.display();
    let src = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {name}: {e}");
        CHECK_FAILED
    })?;
    parse_program(&src).map_err(|e| {
        eprintln!("error parse {name}:{}", e);
        CHECK_FAILED
    })
}

/// Parses and checks `path`, printing diagnostics to stderr.
fn load_checked(path: &Path, mode: BindingMode) -> Result<Program, u8> {
    let p = load(path)?;
    let diags = check_program(&p, mode);
    for d in &diags {
        eprintln!("{}", d.render(&path.display().to_string()));
    }
    if has_errors(&diags) {
        return Err(CHECK_FAILED);
    }
    Ok(p)
}

fn cmd_desugar(file: &Path, lowered_only: bool, rules_only: bool) -> Exit {
    let p = load_checked(file, BindingMode::MultiAssignment)?;
    let lowered = print_program(&lower_loops(&p).program);
    let rules = print_program(&flatten_program(&p).to_program());
    if lowered_only {
        print!("{lowered}");
    } else if rules_only {
        print!("{rules}");
    } else {
        print!("# loops lowered\n{lowered}\n# rewrite rules\n{rules}");
    }
    Ok(())
}

fn seed() -> Result<u64, u8> {
    match std::env::var(SEED_VAR) {
        Err(_) => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| {
            eprintln!("error: {SEED_VAR} must be a non-negative integer, got `{s}`");
            CHECK_FAILED
        }),
    }
}

fn cmd_run(args: &RunArgs) -> Exit {
    let p = load_checked(&args.file, mode(args.strict_single_assignment))?;
    let q = parse_query(&args.query, &p).map_err(|e| {
        eprintln!("error query {e}");
        CHECK_FAILED
    })?;
    let opts = EvalOptions {
        max_steps: args.max_steps,
        max_depth: args.max_depth,
        order: args.order.into(),
        seed: args.order_seed,
        origin: seed()?,
        occurs_check: args.occurs_check,
        trace: args.trace.is_some(),
        ..Default::default()
    };
    let out = Engine::new(&p).run(&q, &opts);
    if let Some(path) = &args.trace {
        fs::write(path, to_json_lines(&out.trace)).map_err(|e| {
            eprintln!("error: cannot write trace {}: {e}", path.display());
            RUNTIME_ERROR
        })?;
    }
    match out.value {
        Ok(v) => {
            println!("{v}");
            Ok(())
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(if e.is_limit() { LIMIT_EXCEEDED } else { RUNTIME_ERROR })
        }
    }
}

fn cmd_corpus(dir: &Path) -> Exit {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| {
            eprintln!("error: cannot read {}: {e}", dir.display());
            CHECK_FAILED
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "trs"))
        .collect();
    files.sort();
    let mut failed = 0;
    for f in &files {
        // The lowering must also succeed for a file to count.
        let ok = load_checked(f, BindingMode::MultiAssignment).map(|p| runtime_program(&p)).is_ok();
        println!("{} {}", if ok { "ok  " } else { "FAIL" }, f.display());
        failed += usize::from(!ok);
    }
    println!("{} files, {failed} failed", files.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(CHECK_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { CHECK_FAILED } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Check { file, strict_single_assignment } => {
            load_checked(file, mode(*strict_single_assignment)).map(|_| ())
        }
        Command::Desugar { file, lowered_only, rules_only } => cmd_desugar(file, *lowered_only, *rules_only),
        Command::Run(args) => cmd_run(args),
        Command::Corpus { dir } => cmd_corpus(dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
