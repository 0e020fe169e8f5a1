mod run;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use spatree::curves::CurveKind;
use spatree::layout::LayoutKind;
use spatree::tree::{gen_tree, TreeKind};

use run::{Algorithm, Experiment, Outcome, ReportRow};

#[derive(Parser)]
#[command(name = "spatree", version, about = "Energy and depth of tree algorithms on a simulated spatial computer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated tree in the text format.
    Gen {
        kind: TreeKind,
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one algorithm and report its costs.
    Run(RunArgs),
    /// Run one algorithm on generated trees of several sizes.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated tree sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    algorithm: Algorithm,
    /// Tree file; overrides the generator.
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long, default_value = "random-attachment")]
    kind: TreeKind,
    #[arg(long, default_value_t = 1023)]
    n: usize,
    #[arg(long, default_value = "hilbert")]
    curve: CurveKind,
    #[arg(long, default_value = "light-first")]
    order: LayoutKind,
    /// Layout dump to use instead of building one.
    #[arg(long)]
    layout: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Query file for `lca`; random queries are drawn when absent.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Compare results with sequential oracles and exit with status 2 on a mismatch.
    #[arg(long)]
    check: bool,
    /// Track per-position memory against the word budget.
    #[arg(long)]
    audit_memory: bool,
    /// Report destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Message events of the last repetition, as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Per-vertex results of the last repetition; `-` for standard output.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Gen { kind, n, seed, out } => {
            let text = gen_tree(kind, n, seed)?.to_text();
            emit(out.as_ref(), text.as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => {
            let exp = experiment(&args, args.n)?;
            execute(&args, vec![exp])
        }
        Command::Sweep { run, ns } => {
            if run.tree.is_some() || run.layout.is_some() {
                bail!("sweep generates its trees; drop --tree and --layout");
            }
            let exps = ns.iter().map(|&n| experiment(&run, n)).collect::<anyhow::Result<Vec<_>>>()?;
            execute(&run, exps)
        }
    }
}

fn experiment(args: &RunArgs, n: usize) -> anyhow::Result<Experiment> {
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    let tree = match &args.tree {
        Some(path) => read(path)?.parse()?,
        None => gen_tree(args.kind, n, args.seed)?,
    };
    let layout = match &args.layout {
        Some(path) => Some(run::parse_layout(&read(path)?, args.order, args.curve, tree.n())?),
        None => None,
    };
    let queries = match &args.queries {
        Some(path) => Some(spatree::tree::parse_queries(&read(path)?, tree.n())?),
        None => None,
    };
    Ok(Experiment {
        algorithm: args.algorithm,
        tree,
        curve: args.curve,
        order: args.order,
        layout,
        queries,
        seed: args.seed,
        audit_memory: args.audit_memory,
        trace: args.trace.is_some(),
    })
}

fn execute(args: &RunArgs, exps: Vec<Experiment>) -> anyhow::Result<ExitCode> {
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut last: Option<Outcome> = None;
    let mut mismatches = Vec::new();
    for exp in &exps {
        for _ in 0..args.reps {
            let out = run::run(exp)?;
            if args.check {
                if let Some(msg) = &out.mismatch {
                    mismatches.push(format!("{} n={}: {msg}", exp.algorithm.name(), exp.tree.n()));
                }
            }
            if let Some(a) = out.audit {
                eprintln!(
                    "audit n={}: budget {} words, peak {}, violations {}",
                    exp.tree.n(),
                    a.budget,
                    a.peak_words,
                    a.violations
                );
            }
            rows.push(out.row.clone());
            last = Some(out);
        }
    }
    let last = last.expect("at least one repetition");
    if let Some(path) = &args.trace {
        let mut f = io::BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
        last.write_trace(&mut f)?;
        f.flush()?;
    }
    if let Some(path) = &args.dump {
        emit(Some(path).filter(|p| p.as_os_str() != "-"), last.dump.as_bytes())?;
    }
    let report = match args.format {
        Format::Csv => run::to_csv(&rows)?,
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    emit(args.out.as_ref(), report.as_bytes())?;
    if mismatches.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for m in &mismatches {
            eprintln!("check failed: {m}");
        }
        Ok(ExitCode::from(2))
    }
}

fn read(path: &PathBuf) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().lock().write_all(bytes).context("writing standard output"),
    }
}
