//! Command-line driver: run instrumented executions, print bound tables,
//! falsify algorithms, audit choke points, search protocol spaces, and
//! invert output vectors.
//!
//! Exit codes: 0 when the requested check holds (or a sought witness is
//! found), 1 when a checked property fails, 2 on usage errors, 3 when an
//! enumeration guard refuses the requested size.

use chokepoint::adversary::{self, AdversaryError};
use chokepoint::algorithms;
use chokepoint::audit::{self, AuditError};
use chokepoint::formulas::{self, BoundsReport, FormulaError};
use chokepoint::model::{
    default_max_steps, execute, split_passes, verify_output, InputInstance, TraceJson,
};
use chokepoint::rng::Lcg;
use chokepoint::search::{self, SearchCaps, SearchError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::json;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_GUARD: u8 = 3;

#[derive(Parser)]
#[command(
    name = "chokepoint",
    about = "Laboratory for space-bounded sum-exclude-self computation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one algorithm on one instance and print its trace.
    Run(RunArgs),
    /// Print bound-table rows over parameter grids.
    Bounds(BoundsArgs),
    /// Hunt for a counterexample, or verify the first-pass read bound.
    Falsify(ShapeArgs),
    /// Enumerate all inputs of a shape and audit the choke point.
    Audit(AuditArgs),
    /// Exhaustively search protocols for minimum read counts.
    Search(SearchArgs),
    /// Invert an output vector back to its input elements.
    Reconstruct(ReconstructArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Algorithm: standard, optimized, first-pass-minimal, or cheat:<k>.
    #[arg(long)]
    alg: String,
    /// Element width in bits (1..=64).
    #[arg(long)]
    d: u32,
    /// Comma-separated decimal element values.
    #[arg(long)]
    input: Option<String>,
    /// Number of elements to generate when no literal input is given.
    #[arg(long)]
    n: Option<usize>,
    /// Seed for generated inputs.
    #[arg(long)]
    seed: Option<u64>,
    /// Working-state budget in bits.
    #[arg(long, default_value_t = 256)]
    t: u64,
    /// Action cap; defaults to 8n + 8.
    #[arg(long)]
    max_steps: Option<u64>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Comma-separated n values.
    #[arg(long)]
    n: String,
    /// Comma-separated d values.
    #[arg(long)]
    d: String,
    /// Comma-separated t values.
    #[arg(long)]
    t: Option<String>,
    /// Add one row per (n, d) at t = d + ceil(log2 n), annotated with the
    /// implemented algorithms' read counts.
    #[arg(long)]
    auto_t: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long)]
    alg: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: u32,
    #[arg(long, default_value_t = 256)]
    t: u64,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Include every (state, transcript) pair in the report.
    #[arg(long)]
    dump_pairs: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: u32,
    /// Register width in bits.
    #[arg(long)]
    t: u32,
    /// Feasibility guard on the protocol count.
    #[arg(long, default_value_t = 100_000_000)]
    max_protocols: u64,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Comma-separated decimal output values.
    #[arg(long)]
    input: String,
    /// Optional element width for domain validation.
    #[arg(long)]
    d: Option<u32>,
}

fn main() -> ExitCode {
    // clap's own errors (bad flags) already exit with code 2
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("CHOKEPOINT_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Falsify(args) => cmd_falsify(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Search(args) => cmd_search(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
    };
    ExitCode::from(code)
}

fn usage_error(message: impl AsRef<str>) -> u8 {
    eprintln!("error: {}", message.as_ref());
    EXIT_USAGE
}

fn parse_values(text: &str) -> Result<Vec<u64>, String> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad value {part:?}"))
        })
        .collect()
}

fn build_instance(args: &RunArgs) -> Result<InputInstance, String> {
    let values = match (&args.input, args.n, args.seed) {
        (Some(literal), _, _) => parse_values(literal)?,
        (None, Some(n), seed) => {
            let mut lcg = Lcg::new(seed.unwrap_or(0));
            (0..n).map(|_| lcg.next_value(args.d)).collect()
        }
        (None, None, _) => return Err("provide --input or --n (with optional --seed)".into()),
    };
    InputInstance::new(args.d, values).map_err(|e| e.to_string())
}

fn cmd_run(args: RunArgs) -> u8 {
    let alg = match algorithms::by_name(&args.alg) {
        Ok(alg) => alg,
        Err(e) => return usage_error(e.to_string()),
    };
    let instance = match build_instance(&args) {
        Ok(instance) => instance,
        Err(e) => return usage_error(e),
    };
    let max_steps = args
        .max_steps
        .unwrap_or_else(|| default_max_steps(instance.n()));
    let trace = match execute(alg.as_ref(), &instance, args.t, max_steps) {
        Ok(trace) => trace,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VIOLATION;
        }
    };
    let json = TraceJson::from_trace(&trace);
    println!(
        "{}",
        serde_json::to_string(&json).expect("trace serializes")
    );
    match split_passes(&trace) {
        Ok(split) => println!(
            "reads={} first_pass={} second_pass={} max_state_bits={}",
            trace.read_count(),
            split.first_pass_reads,
            split.second_pass_reads,
            trace.max_counted_state_bits
        ),
        Err(e) => println!("reads={} split_unavailable={e}", trace.read_count()),
    }
    let verdict = verify_output(&trace);
    if verdict.is_correct() {
        println!("verdict=correct");
    } else {
        let cells: Vec<String> = verdict
            .mismatches
            .iter()
            .map(|m| m.cell.to_string())
            .collect();
        println!("verdict=incorrect cells={}", cells.join(","));
    }
    EXIT_OK
}

fn cmd_bounds(args: BoundsArgs) -> u8 {
    let ns = match parse_values(&args.n) {
        Ok(v) if !v.is_empty() => v,
        _ => return usage_error("--n needs a nonempty list"),
    };
    let ds = match parse_values(&args.d) {
        Ok(v) if !v.is_empty() => v,
        _ => return usage_error("--d needs a nonempty list"),
    };
    let ts = match &args.t {
        Some(text) => match parse_values(text) {
            Ok(v) => v,
            Err(e) => return usage_error(e),
        },
        None => Vec::new(),
    };
    if ts.is_empty() && !args.auto_t {
        return usage_error("provide --t values or --auto-t");
    }
    for d in &ds {
        if *d == 0 || *d > 1_000_000 {
            return usage_error(format!("d={d} out of range"));
        }
    }
    for n in &ns {
        if *n == 0 || *n > 1 << 50 {
            return usage_error(format!("n={n} out of range"));
        }
    }
    let mut rows = Vec::new();
    for n in &ns {
        for d in &ds {
            for t in &ts {
                rows.push(BoundsReport::new(*n, *d as u32, *t));
            }
            if args.auto_t {
                rows.push(BoundsReport::auto_t(*n, *d as u32));
            }
        }
    }
    match args.format {
        Format::Csv => {
            println!("{}", BoundsReport::CSV_HEADER);
            for row in &rows {
                println!("{}", row.csv_row());
            }
        }
        Format::Json => {
            println!("{}", serde_json::to_string(&rows).expect("rows serialize"));
        }
    }
    EXIT_OK
}

fn cmd_falsify(args: ShapeArgs) -> u8 {
    let alg = match algorithms::by_name(&args.alg) {
        Ok(alg) => alg,
        Err(e) => return usage_error(e.to_string()),
    };
    if alg.declared_correct() {
        // Exhaustive correctness + first-pass bound; a witness here would be
        // a violation.
        match adversary::verify_first_pass_bound(alg.as_ref(), args.n, args.d, args.t) {
            Ok(report) => {
                println!(
                    "{}",
                    serde_json::to_string(&report).expect("report serializes")
                );
                if report.bound_respected {
                    EXIT_OK
                } else {
                    EXIT_VIOLATION
                }
            }
            Err(AdversaryError::EnumerationTooLarge { bits, cap }) => {
                eprintln!("error: enumeration of 2^{bits} inputs exceeds the 2^{cap} guard");
                EXIT_GUARD
            }
            Err(e @ AdversaryError::AlgorithmIncorrect { .. }) => {
                println!(
                    "{}",
                    json!({ "algorithm": args.alg, "violation": e.to_string() })
                );
                EXIT_VIOLATION
            }
            Err(e) => usage_error(e.to_string()),
        }
    } else {
        match adversary::find_counterexample_exhaustive(alg.as_ref(), args.n, args.d, args.t) {
            Ok(Some(witness)) => {
                let replayed = adversary::replay_counterexample(alg.as_ref(), &witness, args.t)
                    .unwrap_or(false);
                let mut value = witness.to_json();
                value["replayed"] = json!(replayed);
                println!("{value}");
                if replayed {
                    EXIT_OK
                } else {
                    EXIT_VIOLATION
                }
            }
            Ok(None) => {
                println!(
                    "{}",
                    json!({ "algorithm": args.alg, "counterexample": null })
                );
                EXIT_VIOLATION
            }
            Err(AdversaryError::EnumerationTooLarge { bits, cap }) => {
                eprintln!("error: enumeration of 2^{bits} inputs exceeds the 2^{cap} guard");
                EXIT_GUARD
            }
            Err(e) => usage_error(e.to_string()),
        }
    }
}

fn cmd_audit(args: AuditArgs) -> u8 {
    let alg = match algorithms::by_name(&args.shape.alg) {
        Ok(alg) => alg,
        Err(e) => return usage_error(e.to_string()),
    };
    match audit::chokepoint_audit(
        alg.as_ref(),
        args.shape.n,
        args.shape.d,
        args.shape.t,
        args.dump_pairs,
    ) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string(&report).expect("report serializes")
            );
            if report.injective && report.bit_inequality_holds {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
        Err(AuditError::EnumerationTooLarge { bits, cap }) => {
            eprintln!("error: enumeration of 2^{bits} inputs exceeds the 2^{cap} guard");
            EXIT_GUARD
        }
        Err(e @ AuditError::AlgorithmIncorrect { .. }) => {
            println!(
                "{}",
                json!({ "algorithm": args.shape.alg, "violation": e.to_string() })
            );
            EXIT_VIOLATION
        }
        Err(e) => usage_error(e.to_string()),
    }
}

fn cmd_search(args: SearchArgs) -> u8 {
    let caps = SearchCaps {
        max_protocols: args.max_protocols,
        max_steps: args.max_steps,
    };
    match search::min_reads(args.n, args.d, args.t, &caps) {
        Ok(report) => {
            match args.format {
                Format::Json => println!(
                    "{}",
                    serde_json::to_string(&report).expect("report serializes")
                ),
                Format::Csv => {
                    println!("{}", search::MinReadsReport::CSV_HEADER);
                    println!("{}", report.csv_row());
                }
            }
            let first_pass_ok = report
                .min_first_pass_reads
                .is_none_or(|m| m >= args.n as u64 - 1);
            if report.bound_respected && first_pass_ok {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
        Err(SearchError::SearchSpaceTooLarge { estimated, cap }) => {
            eprintln!("error: search space of {estimated} protocols exceeds the cap of {cap}");
            EXIT_GUARD
        }
        Err(e) => usage_error(e.to_string()),
    }
}

fn cmd_reconstruct(args: ReconstructArgs) -> u8 {
    let parsed: Result<Vec<BigInt>, String> = args
        .input
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<BigInt>()
                .map_err(|_| format!("bad value {part:?}"))
        })
        .collect();
    let out = match parsed {
        Ok(v) => v,
        Err(e) => return usage_error(e),
    };
    match formulas::reconstruct(&out, args.d) {
        Ok(elements) => {
            let values: Vec<String> = elements.iter().map(|e| e.to_string()).collect();
            println!("{}", json!({ "input": values }));
            EXIT_OK
        }
        Err(e @ FormulaError::NotDivisible { .. }) => {
            println!("{}", json!({ "input": null, "error": e.to_string() }));
            EXIT_VIOLATION
        }
        Err(e @ FormulaError::OutOfDomain { .. }) => {
            println!("{}", json!({ "input": null, "error": e.to_string() }));
            EXIT_VIOLATION
        }
        Err(e) => usage_error(e.to_string()),
    }
}
