mod report;
mod verify;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use datashare_core::market::market_from_str;
use datashare_core::mechanisms::{Constraint, Objective, SearchOptions};
use datashare_core::rational::{parse_rational, rat};
use datashare_core::{
    canonical_mechanism, pareto_compare, search_interval_mechanisms, solve_equilibrium, CanonicalMechanism, Execution,
    MarketConfig, Rational, SharingMechanism,
};
use report::{dec, MetricsRow};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_MISMATCH: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "datashare",
    version,
    about = "Data-sharing mechanisms in a Hotelling duopoly"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every closed-form scenario against the engine and the grid oracle.
    Verify(VerifyArgs),
    /// Solve one mechanism and compare it with no sharing.
    Eval(EvalArgs),
    /// Sweep the one-segment family that reveals [ε, ½).
    Sweep(SweepArgs),
    /// Exhaustive search over one-interval-per-side mechanisms.
    Search(SearchArgs),
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "3", value_parser = rational_arg)]
    v: Rational,
    #[arg(long, default_value = "1", value_parser = rational_arg)]
    t: Rational,
    /// Skip the floating-point oracle column.
    #[arg(long)]
    no_oracle: bool,
    /// Grid consumers per segment for the oracle.
    #[arg(long, default_value_t = 100_000)]
    oracle_consumers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct EvalArgs {
    /// Market config (JSON).
    config: PathBuf,
    /// Mechanism file (JSON); defaults to the config's own `mechanism` key.
    #[arg(long, conflicts_with = "canonical")]
    mechanism: Option<PathBuf>,
    /// Named mechanism, e.g. `4seg-consumeropt` or `1seg-eps(1/10)`.
    #[arg(long)]
    canonical: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Accept ε in (0, ½) for `1seg-eps`.
    #[arg(long)]
    allow_extrapolation: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    Eps,
}

#[derive(Args)]
struct SweepArgs {
    /// Market config (JSON).
    config: PathBuf,
    #[arg(long, value_enum, default_value = "eps")]
    param: SweepParam,
    #[arg(long, value_parser = rational_arg)]
    from: Rational,
    #[arg(long, value_parser = rational_arg)]
    to: Rational,
    /// Number of evenly spaced values, both ends included.
    #[arg(long)]
    steps: usize,
    /// Accept ε in (0, ½) instead of (0, ¼].
    #[arg(long)]
    allow_extrapolation: bool,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Market config (JSON).
    config: PathBuf,
    #[arg(long, default_value = "no-harm")]
    constraint: String,
    #[arg(long, default_value = "profit")]
    objective: String,
    /// Grid spacing 1/n, at most 1/12.
    #[arg(long, default_value = "1/48", value_parser = rational_arg)]
    resolution: Rational,
    #[arg(long)]
    sequential: bool,
    /// Where to write the frontier CSV; printed after the report otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure that maps to a specific exit status.
struct Exit(u8);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Search(args) => cmd_search(args),
    };
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Exit(code))) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

type CmdResult = anyhow::Result<Option<Exit>>;

fn load_document(path: &Path) -> anyhow::Result<datashare_core::market::MarketDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    market_from_str(&text).with_context(|| format!("in {}", path.display()))
}

/// Writes to `--out` when given, stdout otherwise.
fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let report = verify::run(&verify::VerifyOptions {
        v: args.v,
        t: args.t,
        oracle: !args.no_oracle,
        oracle_consumers: args.oracle_consumers,
    })?;
    print!("{}", report.text);
    Ok((!report.passed).then_some(Exit(EXIT_MISMATCH)))
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let doc = load_document(&args.config)?;
    let config = doc.config;
    let (label, mechanism) = match (&args.canonical, &args.mechanism) {
        (Some(name), _) => {
            let named: CanonicalMechanism = name.parse()?;
            (
                named.to_string(),
                canonical_mechanism(&named, &config, args.allow_extrapolation)?,
            )
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let m =
                datashare_core::market::mechanism_from_str(&text).with_context(|| format!("in {}", path.display()))?;
            (path.display().to_string(), m)
        }
        (None, None) => match doc.mechanism {
            Some(m) => ("config".to_string(), m),
            None => bail!("no mechanism: pass --mechanism, --canonical, or add a `mechanism` key to the config"),
        },
    };
    let baseline = solve_equilibrium(&SharingMechanism::no_sharing(), &config)?;
    let outcome = solve_equilibrium(&mechanism, &config)?;
    let verdict = pareto_compare(&outcome, &baseline)?;
    let bytes = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report::outcome_json(&label, &outcome, &baseline, &verdict))?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut buf = Vec::new();
            report::write_metrics(&mut buf, &[MetricsRow::new(label, None, &outcome, verdict)])?;
            buf.push(b'\n');
            report::write_runs(&mut buf, &outcome)?;
            buf
        }
    };
    emit(&args.out, &bytes)?;
    Ok(None)
}

/// `steps` evenly spaced values from `from` to `to`, both included.
fn sweep_values(from: Rational, to: Rational, steps: usize) -> anyhow::Result<Vec<Rational>> {
    if steps == 0 {
        bail!("bad range: need at least one step");
    }
    if from > to {
        bail!("bad range: from {from} exceeds to {to}");
    }
    if steps == 1 {
        if from != to {
            bail!("bad range: one step needs from = to");
        }
        return Ok(vec![from]);
    }
    let n = Rational::from_integer(steps as i128 - 1);
    Ok((0..steps)
        .map(|k| from + (to - from) * Rational::from_integer(k as i128) / n)
        .collect())
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let SweepParam::Eps = args.param;
    let config = load_document(&args.config)?.config;
    let upper = if args.allow_extrapolation { rat(1, 2) } else { rat(1, 4) };
    let zero = Rational::from_integer(0);
    let inside = |x: &Rational| *x > zero && (*x < upper || (!args.allow_extrapolation && *x == upper));
    if !inside(&args.from) || !inside(&args.to) {
        let range = if args.allow_extrapolation {
            "(0, 1/2)"
        } else {
            "(0, 1/4]"
        };
        bail!("bad range: [{}, {}] is not inside {range}", args.from, args.to);
    }
    let values = sweep_values(args.from, args.to, args.steps)?;
    let baseline = solve_equilibrium(&SharingMechanism::no_sharing(), &config)?;
    let rows = execution(args.sequential).map(&values, |eps| -> anyhow::Result<MetricsRow> {
        let mechanism = canonical_mechanism(&CanonicalMechanism::OneSegEps(*eps), &config, args.allow_extrapolation)?;
        let outcome = solve_equilibrium(&mechanism, &config)?;
        let verdict = pareto_compare(&outcome, &baseline)?;
        Ok(MetricsRow::new(eps.to_string(), Some(*eps), &outcome, verdict))
    });
    let rows = rows.into_iter().collect::<anyhow::Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    report::write_metrics(&mut buf, &rows)?;
    emit(&args.out, &buf)?;
    Ok(None)
}

fn cmd_search(args: SearchArgs) -> CmdResult {
    let config: MarketConfig = load_document(&args.config)?.config;
    let constraint: Constraint = args.constraint.parse()?;
    let objective: Objective = args.objective.parse()?;
    if args.resolution > rat(1, 12) {
        bail!("resolution {} is coarser than 1/12", args.resolution);
    }
    let options = SearchOptions {
        execution: execution(args.sequential),
        ..SearchOptions::new(constraint, objective, args.resolution)
    };
    let report = search_interval_mechanisms(&config, &options)?;
    let mut text = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(
        text,
        "constraint: {constraint}, objective: {objective}, resolution: {}",
        args.resolution
    );
    let _ = writeln!(
        text,
        "evaluated {} mechanisms, {} feasible, {} without a pure equilibrium",
        report.evaluated,
        report.feasible,
        report.unsolved.len()
    );
    let b = &report.baseline;
    let _ = writeln!(
        text,
        "no sharing: joint {} ({}), CW {} ({})",
        b.joint(),
        dec(&b.joint()),
        b.cw,
        dec(&b.cw)
    );
    match &report.best {
        Some(best) => {
            let _ = writeln!(text, "best: {}", best.mechanism);
            let _ = writeln!(text, "  p_A {}  p_B {}", best.p_a, best.p_b);
            let _ = writeln!(text, "  pi_A {}  pi_B {}", best.pi_a, best.pi_b);
            let _ = writeln!(
                text,
                "  joint {} ({})  CW {} ({})",
                best.joint(),
                dec(&best.joint()),
                best.cw,
                dec(&best.cw)
            );
            let _ = writeln!(
                text,
                "  ir_A {}  ir_B {}  jointly_ir {}  no_harm {}",
                best.ir_a, best.ir_b, best.jointly_ir, best.no_harm
            );
        }
        None => {
            let _ = writeln!(text, "best: none feasible");
        }
    }
    let _ = writeln!(text, "frontier: {} points", report.frontier.len());
    let mut frontier = Vec::new();
    report::write_frontier(&mut frontier, &report.frontier)?;
    match &args.out {
        Some(path) => {
            fs::write(path, &frontier).with_context(|| format!("writing {}", path.display()))?;
            print!("{text}");
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.write_all(b"\n")?;
            stdout.write_all(&frontier)?;
        }
    }
    Ok(None)
}
