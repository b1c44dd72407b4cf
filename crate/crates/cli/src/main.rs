use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qpe_core::curves::{box_curve, majority_curve, to_table, wedge_curve};
use qpe_core::numerics::{parse_rational, PrecisionContext, RadAngle, Turn};
use qpe_core::pipelines::CurveCache;
use qpe_core::planner::{BudgetPolicy, FirstStage};
use qpe_core::schemes::{box_min_n, sign_min_n, wedge_min_n, Delta, MajoritySet, MinN, WedgeGeometry};
use qpe_core::simulator::{run_trials, write_jsonl, PhaseSource, SimPlan, TrialStats};
use qpe_core::tables::{regenerate, TableCsv, TableId};
use qpe_core::Exec;

/// Exact measurement counts for iterative phase estimation.
#[derive(Parser)]
#[command(name = "qpe", version)]
struct Cli {
    /// Working precision of the exact evaluations.
    #[arg(long, global = true, default_value_t = 256)]
    precision_bits: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Regenerate a reference table and compare it with the golden values.
    Table(TableArgs),
    /// Error curve dataset of a sampling scheme.
    #[command(subcommand)]
    Curve(CurveCmd),
    /// Monte-Carlo run of an estimation algorithm.
    Simulate(SimArgs),
    /// Smallest sample count meeting an error budget.
    #[command(subcommand)]
    MinN(MinNCmd),
}

#[derive(Args)]
struct TableArgs {
    /// 1 to 4.
    id: u8,
    /// Advisory rows must match exactly (default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Report advisory rows within the tolerance as warnings.
    #[arg(long)]
    lenient: bool,
    /// Per-cell report (computed, golden, margin) as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CurveCmd {
    /// Single-component box error against p.
    Box {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        delta: String,
        #[arg(long, default_value_t = 200)]
        resolution: u32,
    },
    /// Wedge error against the angle.
    Wedge {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eta: RadAngle,
        #[arg(long, default_value_t = 400)]
        resolution: u32,
    },
    /// Majority quantization error with the 2^n-scaled column.
    Majority {
        /// Comma-separated sample counts.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long, value_enum, default_value_t = SetArg::Reduced)]
        set: SetArg,
        #[arg(long, default_value_t = 200)]
        resolution: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SetArg {
    Reduced,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    Classic,
    Improved,
}

#[derive(Clone, Copy, ValueEnum)]
enum FirstArg {
    TripleSign,
    Majority,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    m: u32,
    #[arg(long)]
    eps: String,
    #[arg(long, value_enum, default_value_t = AlgArg::Improved)]
    algorithm: AlgArg,
    #[arg(long, value_enum, default_value_t = FirstArg::TripleSign)]
    first_stage: FirstArg,
    /// table3, table4_sign, table4_majority or custom:FIRST,REST.
    #[arg(long)]
    policy: Option<BudgetPolicy>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed phase in turns; uniform when absent.
    #[arg(long)]
    phi: Option<f64>,
    /// Per-trial transcripts.
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MinNCmd {
    /// Sign scheme at angle ALPHA (e.g. 7/16pi).
    Sign { alpha: RadAngle, eps: String },
    /// Box scheme; DELTA is a number or eta:ANGLE for sin(ANGLE)/sqrt2.
    Box { delta: String, eps: String },
    /// Wedge scheme at half-angle ETA.
    Wedge { eta: RadAngle, eps: String },
}

/// Malformed values that clap cannot check.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn rational(s: &str) -> Result<rug::Rational> {
    parse_rational(s).or_else(|e| usage(format!("invalid number {s:?}: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let ctx = match PrecisionContext::new(cli.precision_bits) {
        Ok(c) => c,
        Err(e) => return usage(e.to_string()),
    };
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let mut out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let out_fmt = cli.format;
    let code = match cli.command {
        Command::Table(a) => cmd_table(a, out_fmt, &mut out, ctx, exec)?,
        Command::Curve(c) => cmd_curve(c, out_fmt, &mut out, ctx)?,
        Command::Simulate(a) => cmd_simulate(a, &mut out, ctx, exec)?,
        Command::MinN(c) => cmd_min_n(c, &mut out, ctx)?,
    };
    out.flush()?;
    Ok(code)
}

fn emit(t: &TableCsv, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Csv => t.write(out)?,
        Format::Markdown => out.write_all(t.to_markdown().as_bytes())?,
    }
    Ok(())
}

fn cmd_table(a: TableArgs, format: Format, out: &mut dyn Write, ctx: PrecisionContext, exec: Exec) -> Result<ExitCode> {
    let id = match TableId::from_number(a.id) {
        Ok(id) => id,
        Err(e) => return usage(e.to_string()),
    };
    let strict = !a.lenient;
    let report = regenerate(id, &CurveCache::new(), ctx, exec)?;
    emit(&report.table(), format, out)?;
    if let Some(p) = &a.report {
        report
            .detail()
            .write(File::create(p).with_context(|| format!("creating {}", p.display()))?)?;
    }
    for c in report.warnings(strict) {
        eprintln!(
            "warning: {} / {}: computed {:?}, golden {:?}",
            c.row, c.column, c.computed, c.golden
        );
    }
    let bad = report.mismatches(strict);
    for c in &bad {
        eprintln!(
            "mismatch: {} / {}: computed {:?}, golden {:?}",
            c.row, c.column, c.computed, c.golden
        );
    }
    eprintln!(
        "table {}: {} cells, {} mismatches",
        id.number(),
        report.cells.len(),
        bad.len()
    );
    Ok(if bad.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_curve(c: CurveCmd, format: Format, out: &mut dyn Write, ctx: PrecisionContext) -> Result<ExitCode> {
    let resolution = match &c {
        CurveCmd::Box { resolution, .. }
        | CurveCmd::Wedge { resolution, .. }
        | CurveCmd::Majority { resolution, .. } => *resolution,
    };
    if resolution < 2 {
        return usage("resolution must be at least 2");
    }
    let table = match c {
        CurveCmd::Box { n, delta, .. } => to_table(&box_curve(n, &parse_delta(&delta)?, resolution, ctx)?, false),
        CurveCmd::Wedge { n, eta, .. } => {
            let geom = WedgeGeometry::new(n, eta).or_else(|e| usage(e.to_string()))?;
            to_table(&wedge_curve(&geom, resolution)?, false)
        }
        CurveCmd::Majority { n, set, .. } => {
            let set = match set {
                SetArg::Reduced => MajoritySet::Reduced,
                SetArg::Full => MajoritySet::Full,
            };
            to_table(&majority_curve(&n, set, resolution)?, true)
        }
    };
    emit(&table, format, out)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_delta(s: &str) -> Result<Delta> {
    match s.strip_prefix("eta:") {
        Some(a) => Ok(Delta::OfEta(
            a.parse().or_else(|e: qpe_core::Error| usage(e.to_string()))?,
        )),
        None => Ok(Delta::Value(rational(s)?)),
    }
}

fn cmd_simulate(a: SimArgs, out: &mut dyn Write, ctx: PrecisionContext, exec: Exec) -> Result<ExitCode> {
    if a.trials == 0 {
        return usage("at least one trial is required");
    }
    let eps = rational(&a.eps)?;
    if eps <= 0 || eps >= 1 {
        return usage("eps must lie in (0, 1)");
    }
    let plan = match a.algorithm {
        AlgArg::Classic => SimPlan::classic(a.m, &eps, ctx)?,
        AlgArg::Improved => {
            let first = match a.first_stage {
                FirstArg::TripleSign => FirstStage::TripleSign,
                FirstArg::Majority => FirstStage::Majority,
            };
            SimPlan::improved(a.m, &eps, first, a.policy.as_ref(), &CurveCache::new(), ctx)?
        }
    };
    let source = match a.phi {
        Some(phi) => PhaseSource::Fixed(vec![Turn::new(phi)]),
        None => PhaseSource::Uniform,
    };
    let ts = run_trials(&plan, a.trials, a.seed, &source, exec)?;
    if let Some(p) = &a.jsonl {
        let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
        write_jsonl(&mut w, &ts)?;
        w.flush()?;
    }
    let s = TrialStats::from_transcripts(&ts, eps.to_f64());
    writeln!(out, "algorithm,{}", plan.algorithm())?;
    writeln!(out, "m,{}", s.m)?;
    writeln!(out, "eps,{}", eps)?;
    writeln!(out, "samples_per_run,{}", plan.predicted_samples())?;
    writeln!(out, "seed,{}", a.seed)?;
    writeln!(out, "trials,{}", s.trials)?;
    writeln!(out, "successes,{}", s.successes)?;
    writeln!(out, "failure_rate,{}", s.failure_rate)?;
    writeln!(out, "failure_lower,{}", s.failure_lower)?;
    writeln!(out, "failure_upper,{}", s.failure_upper)?;
    writeln!(out, "confidence,{}", s.confidence)?;
    writeln!(out, "error_threshold,{}", s.threshold)?;
    Ok(if s.meets() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_min_n(c: MinNCmd, out: &mut dyn Write, ctx: PrecisionContext) -> Result<ExitCode> {
    let r: MinN = match c {
        MinNCmd::Sign { alpha, eps } => sign_min_n(&alpha, &rational(&eps)?, ctx),
        MinNCmd::Box { delta, eps } => box_min_n(&parse_delta(&delta)?, &rational(&eps)?, ctx),
        MinNCmd::Wedge { eta, eps } => wedge_min_n(&eta, &rational(&eps)?, ctx),
    }
    .or_else(|e| match e {
        qpe_core::Error::Domain(_) => usage(e.to_string()),
        e => Err(e.into()),
    })?;
    writeln!(out, "n,{}", r.n)?;
    writeln!(out, "budget,{}", r.budget)?;
    writeln!(out, "worst_error,{:.6e}", r.result.worst_error.to_f64())?;
    writeln!(out, "witness,{:.12}", r.result.witness.to_f64())?;
    writeln!(out, "side,{}", r.result.side.label())?;
    writeln!(out, "margin,{:.6e}", r.decision.margin)?;
    writeln!(out, "unverified_convexity,{}", r.result.unverified_convexity)?;
    let unstable: Vec<String> = r.unstable.iter().map(u32::to_string).collect();
    writeln!(out, "unstable,{}", unstable.join(" "))?;
    Ok(ExitCode::SUCCESS)
}
