//! The `beliefdiag` command line. Exit codes: 0 ok, 1 domain error
//! (diagnostics, impossible evidence, oracle mismatch), 2 I/O or usage.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::generate::{generate, GeneratorConfig, TopologyRequest};
use crate::model::{BeliefDiagram, NodeId};
use crate::netio::{export_dot, load_network, parse_evidence, write_network, ParseError};
use crate::oracle::{self, DEFAULT_JOINT_CAP};
use crate::scheduler::{self, RunOptions, Strategy};
use crate::transform::{self, EvidenceAssertion, TransformTrace};

/// Largest oracle disagreement tolerated by `--oracle`.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(
    name = "beliefdiag",
    version,
    about = "Exact inference on belief diagrams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and check a network; diagnostics go to standard error.
    Validate(NetArgs),
    /// Posterior marginals given evidence.
    Query(QueryArgs),
    /// Step log of the transformations, with a summary line.
    Trace(QueryArgs),
    /// Graphviz rendering, after absorbing (and optionally propagating) evidence.
    Export(ExportArgs),
    /// Random network document.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct NetArgs {
    network: PathBuf,
    /// File of `Node = outcome` lines.
    #[arg(long)]
    evidence_file: Option<PathBuf>,
    /// Inline assertion `Node=outcome`; repeatable.
    #[arg(short = 'e', long = "evidence", value_name = "NODE=OUTCOME")]
    evidence: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Batch,
    Message,
    Priority,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Batch => Strategy::Batch,
            StrategyArg::Message => Strategy::MessagePassing,
            StrategyArg::Priority => Strategy::Priority,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum FormatArg {
    Tsv,
    Json,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, value_enum, default_value = "batch")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "tsv")]
    format: FormatArg,
    /// Cross-check against full enumeration.
    #[arg(long)]
    oracle: bool,
    /// Use enumeration when the posterior diagram is multiply connected.
    #[arg(long)]
    allow_fallback: bool,
    /// Where to write the step log.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Where to write the posterior diagram as DOT.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Node names in the order used to pick reversals (batch only).
    #[arg(long, value_delimiter = ',')]
    ordering: Vec<String>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Also propagate the absorbed evidence.
    #[arg(long)]
    propagate: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "dag")]
    topology: TopologyRequest,
    #[arg(long, default_value_t = 6)]
    nodes: usize,
    #[arg(long, default_value_t = 3)]
    max_outcomes: usize,
    #[arg(long)]
    max_parents: Option<usize>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

enum Failure {
    Domain(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Io(m) => m,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

type CliResult = Result<i32, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Io(format!("standard output: {e}")))
}

fn positioned(path: &Path, e: &ParseError) -> Failure {
    Failure::Domain(format!(
        "{}:{}:{}: {}",
        path.display(),
        e.span.line,
        e.span.column,
        e.kind
    ))
}

/// Loads the network and gathers evidence from the document, the evidence
/// file and inline assertions, rejecting a node asserted twice.
fn load(args: &NetArgs) -> Result<(BeliefDiagram, Vec<EvidenceAssertion>), Failure> {
    let text = read(&args.network)?;
    let loaded = load_network(&text).map_err(|e| positioned(&args.network, &e))?;
    let d = loaded.diagram;
    let diags = d.validate();
    if !diags.is_empty() {
        let lines: Vec<String> = diags
            .iter()
            .map(|g| format!("{}: {}: {}", args.network.display(), d.name(g.node), g.kind))
            .collect();
        return Err(Failure::Domain(lines.join("\n")));
    }
    let mut evidence = loaded.evidence;
    if let Some(path) = &args.evidence_file {
        let text = read(path)?;
        evidence.extend(parse_evidence(&text, &d).map_err(|e| positioned(path, &e))?);
    }
    for item in &args.evidence {
        let parsed = parse_evidence(item, &d)
            .map_err(|e| Failure::Domain(format!("--evidence {item}: {}", e.kind)))?;
        if parsed.len() != 1 {
            return Err(Failure::Domain(format!(
                "--evidence {item}: expected one NODE=OUTCOME"
            )));
        }
        evidence.extend(parsed);
    }
    let mut seen = BTreeSet::new();
    for e in &evidence {
        if !seen.insert(e.node) {
            return Err(Failure::Domain(format!(
                "node `{}` is asserted more than once",
                d.name(e.node)
            )));
        }
    }
    Ok((d, evidence))
}

fn resolve_ordering(d: &BeliefDiagram, names: &[String]) -> Result<Option<Vec<NodeId>>, Failure> {
    if names.is_empty() {
        return Ok(None);
    }
    names
        .iter()
        .map(|n| d.id_of(n.trim()).map_err(domain))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn summary(trace: &TransformTrace, d: &BeliefDiagram) -> String {
    format!(
        "SUMMARY reversals={} fill_ins={} topology={}\n",
        trace.reversals,
        trace.fill_ins,
        d.classify_topology().as_str()
    )
}

fn cmd_validate(args: &NetArgs, out: &mut dyn Write) -> CliResult {
    let (d, evidence) = load(args)?;
    emit(
        out,
        &format!(
            "ok: {} nodes, {} arcs, {} assertions, {}\n",
            d.len(),
            d.arcs().len(),
            evidence.len(),
            d.classify_topology().as_str()
        ),
    )?;
    Ok(0)
}

fn cmd_query(args: &QueryArgs, out: &mut dyn Write) -> CliResult {
    let (mut d, evidence) = load(&args.net)?;
    let original = d.clone();
    let opts = RunOptions {
        allow_fallback: args.allow_fallback,
        joint_cap: DEFAULT_JOINT_CAP,
        ordering: resolve_ordering(&d, &args.ordering)?,
    };
    let outcome = scheduler::run(args.strategy.into(), &mut d, &evidence, &opts).map_err(domain)?;
    if let Some(path) = &args.trace {
        let mut log = outcome.trace.render(&d);
        log.push_str(&summary(&outcome.trace, &d));
        write_file(path, &log)?;
    }
    if let Some(path) = &args.dot {
        write_file(path, &export_dot(&d))?;
    }
    let check = if args.oracle {
        let expected =
            oracle::posterior_marginals(&original, &evidence, DEFAULT_JOINT_CAP).map_err(domain)?;
        Some(outcome.report.max_abs_diff(&expected))
    } else {
        None
    };
    let agree = check.is_none_or(|diff| diff <= ORACLE_TOLERANCE);
    match args.format {
        FormatArg::Tsv => {
            let mut text = outcome.report.to_tsv(&d);
            if let Some(diff) = check {
                text.push_str(&format!(
                    "# oracle max_abs_diff={diff:e} {}\n",
                    if agree { "agree" } else { "MISMATCH" }
                ));
            }
            emit(out, &text)?;
        }
        FormatArg::Json => {
            let marginals = outcome.report.to_json_value(&d);
            let value = match check {
                Some(diff) => serde_json::json!({
                    "marginals": marginals,
                    "oracle": { "max_abs_diff": diff, "agree": agree },
                }),
                None => marginals,
            };
            let text = serde_json::to_string_pretty(&value).map_err(domain)?;
            emit(out, &format!("{text}\n"))?;
        }
    }
    if agree {
        Ok(0)
    } else {
        Err(Failure::Domain(format!(
            "oracle disagreement {} exceeds {ORACLE_TOLERANCE:e}",
            check.unwrap_or(f64::NAN)
        )))
    }
}

fn cmd_trace(args: &QueryArgs, out: &mut dyn Write) -> CliResult {
    let (mut d, evidence) = load(&args.net)?;
    let trace = match args.strategy {
        StrategyArg::Batch => {
            let ordering = resolve_ordering(&d, &args.ordering)?;
            let mut trace = TransformTrace::default();
            for &e in &evidence {
                trace.extend(transform::absorb_evidence(&mut d, e).map_err(domain)?);
            }
            trace.extend(
                transform::propagate_all_evidence_with(&mut d, ordering.as_deref(), &mut |_, _| {})
                    .map_err(domain)?,
            );
            trace
        }
        s => {
            let opts = RunOptions::default();
            scheduler::run(s.into(), &mut d, &evidence, &opts)
                .map_err(domain)?
                .trace
        }
    };
    let mut log = trace.render(&d);
    log.push_str(&summary(&trace, &d));
    match &args.trace {
        Some(path) => write_file(path, &log)?,
        None => emit(out, &log)?,
    }
    if let Some(path) = &args.dot {
        write_file(path, &export_dot(&d))?;
    }
    Ok(0)
}

fn cmd_export(args: &ExportArgs, out: &mut dyn Write) -> CliResult {
    let (mut d, evidence) = load(&args.net)?;
    for &e in &evidence {
        transform::absorb_evidence(&mut d, e).map_err(domain)?;
    }
    if args.propagate {
        transform::propagate_all_evidence(&mut d).map_err(domain)?;
    }
    let dot = export_dot(&d);
    match &args.dot {
        Some(path) => write_file(path, &dot)?,
        None => emit(out, &dot)?,
    }
    Ok(0)
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = GeneratorConfig::new(args.seed, args.topology, args.nodes);
    cfg.max_outcomes = args.max_outcomes;
    if let Some(p) = args.max_parents {
        cfg.max_parents = p;
    }
    let d = generate(&cfg).map_err(domain)?;
    let text = write_network(&d);
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => emit(out, &text)?,
    }
    Ok(0)
}

/// Runs the command line `args` (program name first) and returns the exit
/// code. Results go to `stdout`, diagnostics to `stderr`.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                2
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => cmd_validate(a, stdout),
        Command::Query(a) => cmd_query(a, stdout),
        Command::Trace(a) => cmd_trace(a, stdout),
        Command::Export(a) => cmd_export(a, stdout),
        Command::Generate(a) => cmd_generate(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}
