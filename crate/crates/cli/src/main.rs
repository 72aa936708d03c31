//! `mapsearch`: generate networks, solve MAP queries, and run the width,
//! quality and evaluation-count experiments.
//!
//! Exit status: 0 on success, 1 for configuration errors, 2 for unreadable or
//! invalid input files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use mapsearch::experiments::{
    self, quality_records, read_problem, run_eval_stats, run_quality_experiment, run_width_experiment, solve,
    write_csv, CsvRow, ExperimentError, GenDocument, Generator, QualityConfig, SolveError, SolveMode, WidthConfig,
    FULL_SCALE_INSTANCES,
};
use mapsearch::netgen::{GenConfig, StructureMethod};
use mapsearch::search::{Algorithm, SearchConfig};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "mapsearch", version, about = "Exact and local-search MAP for Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random network with MAP variables and evidence.
    Gen(GenArgs),
    /// Solve one MAP query, exactly or by local search.
    Solve(SolveArgs),
    /// Survey constrained and unconstrained min-fill widths.
    Widths(WidthsArgs),
    /// Compare every method against exact MAP across a bias grid.
    Quality(QualityArgs),
    /// Evaluations needed to reach the returned answer, per method.
    Evalstats(EvalStatsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GeneratorKind {
    Connectivity,
    EdgeProb,
}

#[derive(Args, Debug)]
struct GeneratorArgs {
    /// Structure generator.
    #[arg(long, value_enum)]
    generator: Option<GeneratorKind>,
    /// Variables per network.
    #[arg(long)]
    nodes: Option<usize>,
    /// Connectivity values, e.g. `1-20` or `6,8,10`; instances cycle through them.
    #[arg(long = "c", value_parser = parse_int_list)]
    connectivity: Option<IntList>,
    /// Edge probability.
    #[arg(long)]
    p: Option<f64>,
    /// Maximum number of MAP variables (sampled from the roots).
    #[arg(long, default_value_t = 25)]
    max_map_vars: usize,
}

impl GeneratorArgs {
    fn generator(&self, default: GeneratorKind, default_p: f64) -> Generator {
        match self.generator.unwrap_or(if self.p.is_some() { GeneratorKind::EdgeProb } else { default }) {
            GeneratorKind::Connectivity => Generator::Connectivity {
                c_values: self.connectivity.clone().map_or_else(|| (1..=20).collect(), |l| l.0),
            },
            GeneratorKind::EdgeProb => Generator::EdgeProb { p: self.p.unwrap_or(default_p) },
        }
    }
}

#[derive(Args, Debug)]
struct BatchArgs {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination for per-instance rows (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of networks.
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Use 1000 networks regardless of `--instances`.
    #[arg(long)]
    full_scale: bool,
}

impl BatchArgs {
    fn instances(&self) -> usize {
        if self.full_scale {
            FULL_SCALE_INSTANCES
        } else {
            self.instances
        }
    }
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Comma-separated methods (e.g. `Seq-Taboo,MPE`) or `all`.
    #[arg(long, default_value = "all")]
    methods: String,
    /// Network evaluations per method, initialization included.
    #[arg(long, default_value_t = 150)]
    budget: usize,
    /// Instances whose constrained width exceeds this are skipped.
    #[arg(long, default_value_t = 22)]
    width_cap: usize,
    /// Random moves taken after a peak.
    #[arg(long, default_value_t = 3)]
    walk_length: usize,
    /// CSV destination for the aggregated table.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    gen: GeneratorArgs,
    /// Bias coefficient in [0, 0.5].
    #[arg(long, default_value_t = 0.5)]
    bias: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Network file or a document written by `gen`.
    file: PathBuf,
    /// Comma-separated MAP variable names; overrides the file's.
    #[arg(long)]
    map_vars: Option<String>,
    /// Comma-separated NAME=VALUE evidence (value indices); overrides the file's.
    #[arg(long)]
    evidence: Option<String>,
    /// `exact` or a method name such as `Seq-Taboo`.
    #[arg(long, default_value = "Seq-Taboo")]
    method: String,
    #[arg(long, default_value_t = 150)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    walk_length: usize,
    #[arg(long, default_value_t = 22)]
    width_cap: usize,
    /// Destination for the report (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WidthsArgs {
    #[command(flatten)]
    gen: GeneratorArgs,
    #[command(flatten)]
    batch: BatchArgs,
    /// Structures with fewer roots are regenerated.
    #[arg(long, default_value_t = 10)]
    min_map_vars: usize,
}

#[derive(Args, Debug)]
struct QualityArgs {
    #[command(flatten)]
    gen: GeneratorArgs,
    #[command(flatten)]
    batch: BatchArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Comma-separated bias coefficients.
    #[arg(long, default_value = "0,0.125,0.25,0.375,0.5", value_parser = parse_float_list)]
    bias_grid: FloatList,
}

#[derive(Args, Debug)]
struct EvalStatsArgs {
    #[command(flatten)]
    gen: GeneratorArgs,
    #[command(flatten)]
    batch: BatchArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 0.5)]
    bias: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct IntList(Vec<usize>);

#[derive(Clone, Debug, PartialEq)]
struct FloatList(Vec<f64>);

fn parse_int_list(s: &str) -> Result<IntList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a non-negative integer"));
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(lo..=hi);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("expected at least one value".into());
    }
    Ok(IntList(out))
}

fn parse_float_list(s: &str) -> Result<FloatList, String> {
    let values = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("expected at least one value".into());
    }
    Ok(FloatList(values))
}

fn parse_methods(spec: &str) -> Result<Vec<Algorithm>, CliError> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(Algorithm::ALL.to_vec());
    }
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Algorithm>().map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let result = match path {
        Some(p) => fs::write(p, bytes),
        None => io::stdout().lock().write_all(bytes),
    };
    result.map_err(|e| CliError::Config(format!("cannot write output: {e}")))
}

fn csv_bytes<T: CsvRow>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(buf)
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let structure = match args.gen.generator(GeneratorKind::EdgeProb, 0.025) {
        Generator::Connectivity { c_values } => {
            if c_values.len() != 1 {
                return Err(CliError::Config("`gen` takes a single connectivity value".into()));
            }
            StructureMethod::Connectivity { c: c_values[0] }
        }
        Generator::EdgeProb { p } => StructureMethod::EdgeProb { p },
    };
    let config = GenConfig {
        structure,
        nodes: args.gen.nodes.unwrap_or(100),
        bias: args.bias,
        max_map_vars: args.gen.max_map_vars,
    };
    let instance = config.generate(args.seed).map_err(|e| CliError::Config(e.to_string()))?;
    let doc = GenDocument::new(args.seed, config, &instance);
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_output(args.out.as_deref(), text.as_bytes())
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.file)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.file.display())))?;
    let problem = read_problem(&text)?;
    let net = &problem.network;
    let map_vars = match (&args.map_vars, problem.map_vars) {
        (Some(spec), _) => experiments::parse_var_list(net, spec)?,
        (None, Some(vars)) => vars,
        (None, None) => return Err(CliError::Config("no MAP variables: pass --map-vars".into())),
    };
    let evidence = match (&args.evidence, problem.evidence) {
        (Some(spec), _) => experiments::parse_evidence(net, spec)?,
        (None, Some(e)) => e,
        (None, None) => Default::default(),
    };
    let mode = if args.method.eq_ignore_ascii_case("exact") {
        SolveMode::Exact
    } else {
        let algorithm: Algorithm =
            args.method.parse().map_err(|e: mapsearch::search::UnknownAlgorithm| CliError::Config(e.to_string()))?;
        SolveMode::Search(SearchConfig {
            restart_walk_length: args.walk_length,
            ..algorithm.config(args.budget, args.seed)
        })
    };
    let report = solve(net, &map_vars, &evidence, &mode, args.width_cap)?;
    write_output(args.out.as_deref(), report.render(net).as_bytes())
}

fn cmd_widths(args: WidthsArgs) -> Result<(), CliError> {
    let config = WidthConfig {
        instances: args.batch.instances(),
        nodes: args.gen.nodes.unwrap_or(100),
        generator: args.gen.generator(GeneratorKind::Connectivity, 0.025),
        min_map_vars: args.min_map_vars,
        max_map_vars: args.gen.max_map_vars,
        seed: args.batch.seed,
    };
    let run = run_width_experiment(&config)?;
    write_output(args.batch.out.as_deref(), &csv_bytes(&run.rows)?)?;
    eprintln!(
        "{:<8} {:>5}  {:>26}  {:>26}",
        "bucket", "n", "unconstrained min/max/avg/wavg", "constrained min/max/avg/wavg"
    );
    for r in &run.records {
        let fmt = |s: &mapsearch::elim::WidthStats| {
            format!("{:>3} {:>3} {:>7.2} {:>7.2}", s.min, s.max, s.average, s.weighted_average)
        };
        eprintln!("{:<8} {:>5}  {:>26}  {:>26}", r.bucket, r.instances, fmt(&r.unconstrained), fmt(&r.constrained));
    }
    Ok(())
}

fn quality_config(
    gen: &GeneratorArgs,
    batch: &BatchArgs,
    search: &SearchArgs,
    biases: Vec<f64>,
) -> Result<QualityConfig, CliError> {
    Ok(QualityConfig {
        instances: batch.instances(),
        nodes: gen.nodes.unwrap_or(100),
        generator: gen.generator(GeneratorKind::EdgeProb, 0.025),
        biases,
        algorithms: parse_methods(&search.methods)?,
        budget: search.budget,
        width_cap: search.width_cap,
        max_map_vars: gen.max_map_vars,
        restart_walk_length: search.walk_length,
        seed: batch.seed,
    })
}

fn cmd_quality(args: QualityArgs) -> Result<(), CliError> {
    let config = quality_config(&args.gen, &args.batch, &args.search, args.bias_grid.0)?;
    let run = run_quality_experiment(&config)?;
    write_output(args.batch.out.as_deref(), &csv_bytes(&run.rows)?)?;
    let records = quality_records(&run.rows);
    if let Some(path) = &args.search.summary_out {
        write_output(Some(path), &csv_bytes(&records)?)?;
    }
    eprintln!("instances: {} reported, {} skipped by the width cap", run.reported(), run.skipped.len());
    let mut header = format!("{:<11}", "method");
    for b in &config.biases {
        header.push_str(&format!(" {b:>7}"));
    }
    eprintln!("{header}");
    for chunk in records.chunks(config.biases.len()) {
        let mut line = format!("{:<11}", chunk[0].method);
        for r in chunk {
            line.push_str(&format!(" {:>7}", r.solved));
        }
        eprintln!("{line}");
    }
    Ok(())
}

fn cmd_evalstats(args: EvalStatsArgs) -> Result<(), CliError> {
    let config = quality_config(&args.gen, &args.batch, &args.search, vec![args.bias])?;
    let (run, stats) = run_eval_stats(&config, args.bias)?;
    write_output(args.batch.out.as_deref(), &csv_bytes(&run.rows)?)?;
    if let Some(path) = &args.search.summary_out {
        write_output(Some(path), &csv_bytes(&stats)?)?;
    }
    eprintln!("instances: {} reported, {} skipped by the width cap", run.reported(), run.skipped.len());
    eprintln!("{:<11} {:>8} {:>8} {:>5}", "method", "mean", "stdev", "max");
    for s in &stats {
        eprintln!("{:<11} {:>8.2} {:>8.2} {:>5}", s.method, s.mean, s.stdev, s.max);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Widths(a) => cmd_widths(a),
        Command::Quality(a) => cmd_quality(a),
        Command::Evalstats(a) => cmd_evalstats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
