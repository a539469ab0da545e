//! `wavefeas` command line: `solve`, `bench`, `cascade` and `check`.
//!
//! Exit codes: 0 on success, 1 when a run did not converge (or a check
//! failed), 2 on invalid arguments or unreadable input.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use wavefeas::constraints::{PhaseConvention, ProblemKind, ProblemSpec, SymmetryScope, WaveletSets};
use wavefeas::ensemble::Ensemble;
use wavefeas::harness::{run_bench, BenchConfig};
use wavefeas::solvers::{solve_with, Algorithm, RunRecord, SolveConfig};
use wavefeas::wavelet::{cascade, extract_filters, verify, write_csv, FilterPair, DEFAULT_LEVELS};
use wavefeas::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "wavefeas", version, about = "Wavelet feasibility problems by DR, GCRM and L_T")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Two-stage solve from one random start; prints a JSON run record.
    Solve(SolveArgs),
    /// Multi-start comparison of DR, GCRM and LT.
    Bench(BenchArgs),
    /// Scaling function and wavelet samples by the cascade algorithm (CSV).
    Cascade(CascadeArgs),
    /// Residuals of every design condition for an ensemble.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProblemArg {
    Sym,
    Card,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgorithmArg {
    Dr,
    Gcrm,
    Lt,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Dr => Algorithm::Dr,
            AlgorithmArg::Gcrm => Algorithm::Gcrm,
            AlgorithmArg::Lt => Algorithm::Lt,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PhaseArg {
    FourPi,
    TwoPi,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScopeArg {
    ScalingFilter,
    FullMatrix,
}

#[derive(Args, Debug)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "sym")]
    problem: ProblemArg,
    /// Number of samples (even, at least 4).
    #[arg(long = "M", default_value_t = 6)]
    m: usize,
    /// Highest vanishing moment order.
    #[arg(long = "D", default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Symmetry centre or cardinal point [default: 2 for sym, 1 for card].
    #[arg(long = "P", allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, value_enum, default_value = "four-pi")]
    phase: PhaseArg,
    #[arg(long = "symmetry-scope", value_enum, default_value = "scaling-filter")]
    scope: ScopeArg,
}

impl ProblemArgs {
    fn spec(&self) -> ProblemSpec<f64> {
        let kind = match self.problem {
            ProblemArg::Sym => ProblemKind::Symmetric,
            ProblemArg::Card => ProblemKind::Cardinal,
        };
        let base = ProblemSpec::default_for(kind);
        ProblemSpec {
            m: self.m,
            d: self.d,
            gamma: self.gamma,
            p: self.p.unwrap_or(base.p),
            kind,
            phase: match self.phase {
                PhaseArg::FourPi => PhaseConvention::FourPi,
                PhaseArg::TwoPi => PhaseConvention::TwoPi,
            },
            scope: match self.scope {
                ScopeArg::ScalingFilter => SymmetryScope::ScalingFilter,
                ScopeArg::FullMatrix => SymmetryScope::FullMatrix,
            },
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long = "stage1-threshold", default_value_t = 1e-2)]
    stage1_threshold: f64,
    /// Cap on stage-1 plus stage-2 iterations.
    #[arg(long = "max-iters", default_value_t = 20_000)]
    max_iters: usize,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lt")]
    algorithm: AlgorithmArg,
    /// Include the per-iteration gap sequence.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 100)]
    starts: usize,
    #[arg(long = "base-seed", default_value_t = 0)]
    base_seed: u64,
    /// Worker threads (overrides WAVEFEAS_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON report here and print a table instead.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CascadeArgs {
    /// Filter JSON (`{"h": [...], "g": [...]}`), an ensemble, or a solved run record.
    #[arg(long)]
    filters: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Ensemble JSON or a solved run record.
    #[arg(long)]
    ensemble: PathBuf,
    #[command(flatten)]
    problem: ProblemArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_) | Error::InvalidConfig(_) | Error::SizeMismatch { .. } => Failure::Usage(e.to_string()),
            _ => Failure::NotConverged(e.to_string()),
        }
    }
}

type CliResult = Result<i32, Failure>;

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Cascade(a) => run_cascade(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NOT_CONVERGED
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn solve(a: SolveArgs) -> CliResult {
    let spec = a.problem.spec();
    let sets = WaveletSets::new(spec.clone())?;
    let cfg = SolveConfig {
        tol: a.run.tol,
        stage1_threshold: a.run.stage1_threshold,
        max_iters: a.run.max_iters,
        record_trace: a.trace,
        ..SolveConfig::new(spec, a.algorithm.into(), a.seed)
    };
    let record = solve_with(&sets, &cfg)?;
    emit(a.out.as_deref(), &to_json(&record))?;
    if record.solved {
        Ok(EXIT_OK)
    } else {
        eprintln!("not converged: gap {:e} after {} iterations", record.final_gap, record.stage1_iters + record.stage2_iters);
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn bench(a: BenchArgs) -> CliResult {
    let mut cfg = BenchConfig::new(a.problem.spec(), a.starts, a.base_seed);
    cfg.tol = a.run.tol;
    cfg.stage1_threshold = a.run.stage1_threshold;
    cfg.max_iters = a.run.max_iters;
    cfg.threads = a.threads;
    let report = run_bench(&cfg)?.without_solutions();
    let json = to_json(&report);
    match &a.json {
        Some(path) => {
            emit(Some(path), &json)?;
            emit(None, &report.stats.to_table())?;
        }
        None => emit(None, &json)?,
    }
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EnsembleSource {
    Ensemble(Ensemble<f64>),
    Record(RunRecord<f64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FilterSource {
    Filters(FilterPair<f64>),
    Other(EnsembleSource),
}

fn ensemble_from(src: EnsembleSource) -> Result<Ensemble<f64>, Failure> {
    match src {
        EnsembleSource::Ensemble(e) => Ok(e),
        EnsembleSource::Record(r) => {
            r.solution.ok_or_else(|| Failure::NotConverged("run record has no solution (run did not converge)".into()))
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Usage(format!("{} is not {what}: {e}", path.display())))
}

fn run_cascade(a: CascadeArgs) -> CliResult {
    let filters = match parse::<FilterSource>(&a.filters, "a filter, ensemble or run-record JSON")? {
        FilterSource::Filters(f) => f,
        FilterSource::Other(src) => extract_filters(&ensemble_from(src)?)?,
    };
    let table = cascade(&filters, a.levels)?;
    let mut buf = Vec::new();
    write_csv(&table, &mut buf).expect("write to memory");
    emit(a.out.as_deref(), &String::from_utf8(buf).expect("ascii"))?;
    Ok(EXIT_OK)
}

fn check(a: CheckArgs) -> CliResult {
    let e = ensemble_from(parse::<EnsembleSource>(&a.ensemble, "an ensemble or run-record JSON")?)?;
    let mut spec = a.problem.spec();
    spec.m = e.m();
    let sets = WaveletSets::new(spec)?;
    let report = verify(&e, &sets)?;
    emit(None, &to_json(&report))?;
    Ok(if report.passes(1e-7, 1e-6) { EXIT_OK } else { EXIT_NOT_CONVERGED })
}
