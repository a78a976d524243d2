//! Command-line front end.
//!
//! Exit codes: 0 for a certified solve (or any successful `generate` /
//! `oracle`), 2 when a solve ends with a gap or an oracle input is too
//! large, 1 for usage, I/O and parse errors.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::io::{self, GeneratorKind, GeneratorSpec};
use crate::model::PairwiseModel;
use crate::oracle::{self, OracleError};
use crate::pursuit::{self, Candidate, CandidateKind, SolveConfig, SolveOutcome, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_GAP: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cluster-mplp", version, about = "Certified MAP inference by dual cluster pursuit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and print a run report.
    Solve(SolveArgs),
    /// Write a synthetic instance in the native format.
    Generate(GenerateArgs),
    /// Exact MAP by enumeration.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Native,
    Uai,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(Format::Native),
            "uai" => Ok(Format::Uai),
            other => Err(format!("unknown format `{other}` (native, uai)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Score,
    Random,
}

impl FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "score" => Ok(ScheduleKind::Score),
            "random" => Ok(ScheduleKind::Random),
            other => Err(format!("unknown schedule `{other}` (score, random)")),
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "native")]
    pub format: Format,
    /// Log value substituted for zero probabilities in UAI files.
    #[arg(long, default_value_t = io::DEFAULT_ZERO_FLOOR, allow_negative_numbers = true)]
    pub zero_floor: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 2e-5)]
    pub convergence_threshold: f64,
    #[arg(long, default_value_t = 1000)]
    pub initial_pass_cap: usize,
    #[arg(long, default_value_t = 20)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 5)]
    pub clusters_per_round: usize,
    #[arg(long, default_value = "both")]
    pub candidates: CandidateKind,
    #[arg(long, default_value = "score")]
    pub schedule: ScheduleKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the per-event trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub max_rounds: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub score_floor: f64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub kind: GeneratorKind,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub rows: usize,
    #[arg(long, default_value_t = 3)]
    pub cols: usize,
    #[arg(long, default_value_t = 2)]
    pub states: usize,
    #[arg(long)]
    pub states_max: Option<usize>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub coupling_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub coupling_max: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub field_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub field_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = oracle::DEFAULT_LIMIT)]
    pub limit: u128,
}

/// The summary printed by `solve`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub status: Status,
    pub dual: f64,
    pub decoded_energy: f64,
    pub gap: f64,
    pub added: Vec<Candidate>,
    pub triplets: usize,
    pub passes: usize,
    pub rounds: usize,
    pub wall_time: Duration,
    pub assignment: String,
    pub config: SolveConfig,
    pub schedule: ScheduleKind,
    pub seed: Option<u64>,
}

impl RunReport {
    pub fn from_outcome(out: &SolveOutcome, config: &SolveConfig, schedule: ScheduleKind, wall_time: Duration) -> Self {
        RunReport {
            status: out.status,
            dual: out.dual,
            decoded_energy: out.energy,
            gap: out.gap(),
            added: out.added.clone(),
            triplets: out.clusters().len(),
            passes: out.passes,
            rounds: out.rounds,
            wall_time,
            assignment: out.assignment.to_string(),
            config: config.clone(),
            schedule,
            seed: out.trace.seed,
        }
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(f, "status: {}", self.status)?;
        writeln!(f, "dual: {}", self.dual)?;
        writeln!(f, "decoded: {}", self.decoded_energy)?;
        writeln!(f, "gap: {:e}", self.gap)?;
        writeln!(f, "clusters_added: {}", self.added.len())?;
        let ids: Vec<String> = self.added.iter().map(|c| c.to_string()).collect();
        writeln!(f, "cluster_ids: {}", ids.join(" "))?;
        writeln!(f, "triplets: {}", self.triplets)?;
        writeln!(f, "passes: {}", self.passes)?;
        writeln!(f, "rounds: {}", self.rounds)?;
        writeln!(f, "wall_ms: {:.3}", self.wall_time.as_secs_f64() * 1e3)?;
        writeln!(f, "assignment: {}", self.assignment)?;
        writeln!(
            f,
            "config: tol={} convergence_threshold={} initial_pass_cap={} inner_iters={} clusters_per_round={} candidates={} max_rounds={} score_floor={}",
            c.gap_tolerance,
            c.convergence_threshold,
            c.initial_pass_cap,
            c.inner_iters,
            c.clusters_per_round,
            c.candidate_kind,
            c.max_rounds,
            c.score_floor
        )?;
        let schedule = match self.schedule {
            ScheduleKind::Score => "score",
            ScheduleKind::Random => "random",
        };
        writeln!(f, "schedule: {schedule}")?;
        match self.seed {
            Some(s) => writeln!(f, "seed: {s}"),
            None => writeln!(f, "seed: none"),
        }
    }
}

fn load(args: &InputArgs) -> Result<PairwiseModel, String> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| format!("cannot read {}: {e}", args.input.display()))?;
    let parsed = match args.format {
        Format::Native => io::parse_native(&text),
        Format::Uai => io::parse_uai(&text, args.zero_floor),
    };
    parsed.map_err(|e| format!("{}: {e}", args.input.display()))
}

/// Parses `argv` and runs the command, writing to `out` and `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(&args, out),
        Command::Generate(args) => cmd_generate(&args, out),
        Command::Oracle(args) => cmd_oracle(&args, out),
    };
    match result {
        Ok(code) => code,
        Err((code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

type CmdResult = Result<i32, (i32, String)>;

fn usage(message: impl fmt::Display) -> (i32, String) {
    (EXIT_USAGE, message.to_string())
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> CmdResult {
    let config = SolveConfig {
        initial_pass_cap: args.initial_pass_cap,
        inner_iters: args.inner_iters,
        clusters_per_round: args.clusters_per_round,
        gap_tolerance: args.tol,
        convergence_threshold: args.convergence_threshold,
        max_rounds: args.max_rounds,
        candidate_kind: args.candidates,
        score_floor: args.score_floor,
        ..SolveConfig::default()
    };
    config.validate().map_err(usage)?;
    let model = load(&args.input).map_err(usage)?;
    let start = Instant::now();
    let outcome = match args.schedule {
        ScheduleKind::Score => pursuit::solve(&model, &config),
        ScheduleKind::Random => pursuit::solve_random_schedule(&model, &config, args.seed),
    }
    .map_err(usage)?;
    let report = RunReport::from_outcome(&outcome, &config, args.schedule, start.elapsed());
    if let Some(path) = &args.trace {
        fs::write(path, outcome.trace.to_csv())
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    write!(out, "{report}").map_err(usage)?;
    Ok(if report.status == Status::Certified { EXIT_OK } else { EXIT_GAP })
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let spec = GeneratorSpec {
        kind: args.kind,
        n: args.n,
        rows: args.rows,
        cols: args.cols,
        states: args.states,
        states_max: args.states_max,
        coupling: (args.coupling_min, args.coupling_max),
        field: (args.field_min, args.field_max),
        seed: args.seed,
    };
    let model = io::generate(&spec).map_err(usage)?;
    let text = io::write_native(&model);
    match &args.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?,
        None => out.write_all(text.as_bytes()).map_err(usage)?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> CmdResult {
    let model = load(&args.input).map_err(usage)?;
    match oracle::brute_force_map(&model, args.limit) {
        Ok(r) => {
            writeln!(out, "energy: {}", r.energy).map_err(usage)?;
            writeln!(out, "assignment: {}", r.assignment).map_err(usage)?;
            writeln!(out, "optima: {}", r.optima).map_err(usage)?;
            Ok(EXIT_OK)
        }
        Err(e @ OracleError::TooLarge { .. }) => Err((EXIT_GAP, e.to_string())),
    }
}
