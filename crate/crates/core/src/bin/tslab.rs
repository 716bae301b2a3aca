use std::error::Error;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tslab::bench::{emit, run_experiment, EngineMode, ExperimentId, ExperimentSpec, OutputFormat};
use tslab::check::run_property_suites;
use tslab::comm::{comm_cost_report, simulate_on_tape, ProtocolMode};
use tslab::compile::{
    build_eq_fingerprint_2pfa, build_form_checker, compile_and_oracle_program,
    compile_query_program, compiled_from_doc, machine_from_doc, CompiledMachine, FormShape,
    PrimeRange,
};
use tslab::langs::{encode_pair, parse_bits};
use tslab::machines::doc::{export_table, MachineDoc};
use tslab::machines::{
    run_deterministic, run_monte_carlo, run_probabilistic_exact, run_qcfa_exact, step_cap_default,
    MachineKind, MachineSpec, Tape, DEFAULT_PRUNE_EPS,
};
use tslab::querymodel::{
    default_grover_schedule, grover_program, parity2_program, QueryProgram, DEFAULT_GROVER_REPEATS,
};

type Res<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "tslab", version, about = "Two-way finite automata lab")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit a serialized machine.
    Build(BuildArgs),
    /// Run a machine on one tape and print its RunResult.
    Run(RunArgs),
    /// Run the two-party crossing protocol and print the transcript.
    Comm(CommArgs),
    /// Sweep an experiment over n and print csv or json rows.
    Sweep(SweepArgs),
    /// Run the invariant suites; exits nonzero if any fails.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Builder {
    EqFingerprint,
    FormChecker,
    IntGrover,
    Parity2Plain,
    Parity2And,
    QueryPlain,
    QueryAnd,
}

#[derive(Clone, Copy, ValueEnum)]
enum RangeArg {
    LeN2,
    OpenInterval,
}

impl From<RangeArg> for PrimeRange {
    fn from(r: RangeArg) -> Self {
        match r {
            RangeArg::LeN2 => PrimeRange::LeN2,
            RangeArg::OpenInterval => PrimeRange::OpenInterval,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Pair,
    Plain,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    EqTradeoff,
    IntTradeoff,
    CommEq,
    CommInt,
    CompilerCheck,
    GadgetCheck,
}

#[derive(clap::Args)]
struct BuildArgs {
    builder: Builder,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, value_enum, default_value = "le-n2")]
    prime_range: RangeArg,
    #[arg(long, value_enum, default_value = "pair")]
    shape: ShapeArg,
    /// Query program JSON for query-plain and query-and.
    #[arg(long)]
    program: Option<PathBuf>,
    /// Grover repetitions per schedule.
    #[arg(long, default_value_t = DEFAULT_GROVER_REPEATS)]
    repeats: usize,
    /// Emit an explicit transition table instead of a builder reference.
    #[arg(long)]
    table: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct TapeArgs {
    /// Machine document path, `-` for stdin.
    #[arg(long)]
    machine: String,
    /// Full tape such as `¢01##01$`; ASCII `<` and `>` stand for the end markers.
    #[arg(long, conflicts_with_all = ["x", "y"])]
    tape: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    step_cap: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args)]
struct RunArgs {
    #[command(flatten)]
    tape: TapeArgs,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

#[derive(clap::Args)]
struct CommArgs {
    #[command(flatten)]
    tape: TapeArgs,
    /// `monte-carlo` follows one seeded trajectory.
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
}

#[derive(clap::Args)]
struct SweepArgs {
    experiment: ExperimentArg,
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Random pairs per n above the exhaustive range.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Random programs per n for compiler-check and gadget-check.
    #[arg(long, default_value_t = 4)]
    programs: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    step_cap: Option<u64>,
    #[arg(long, value_enum, default_value = "le-n2")]
    prime_range: RangeArg,
    /// Fill the wall_time column (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

fn write_out(text: &str, out: Option<&PathBuf>) -> Res<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn build(a: &BuildArgs) -> Res<()> {
    let program = || -> Res<QueryProgram> {
        let path = a
            .program
            .as_ref()
            .ok_or("--program is required for this builder")?;
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    };
    let m: MachineSpec = match a.builder {
        Builder::EqFingerprint => build_eq_fingerprint_2pfa(a.n, a.prime_range.into())?.machine,
        Builder::FormChecker => {
            let shape = match a.shape {
                ShapeArg::Pair => FormShape::Pair,
                ShapeArg::Plain => FormShape::Plain,
            };
            build_form_checker(a.n, shape)?
        }
        Builder::IntGrover => {
            let p = grover_program(a.n, &default_grover_schedule(a.n), a.repeats)?;
            compile_and_oracle_program(&p)?.machine
        }
        Builder::Parity2Plain => compile_query_program(&parity2_program())?.machine,
        Builder::Parity2And => compile_and_oracle_program(&parity2_program())?.machine,
        Builder::QueryPlain => compile_query_program(&program()?)?.machine,
        Builder::QueryAnd => compile_and_oracle_program(&program()?)?.machine,
    };
    let doc = if a.table {
        export_table(&m, 1 << 20)?
    } else {
        MachineDoc::from_machine(&m)?
    };
    write_out(&(doc.to_text() + "\n"), a.out.as_ref())
}

struct Loaded {
    machine: MachineSpec,
    compiled: Option<CompiledMachine>,
}

fn load(path: &str) -> Res<Loaded> {
    let text = if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path)?
    };
    let doc = MachineDoc::from_text(&text)?;
    let compiled = compiled_from_doc(&doc)?;
    let machine = match &compiled {
        Some(c) => c.machine.clone(),
        None => machine_from_doc(&doc)?,
    };
    Ok(Loaded { machine, compiled })
}

/// The tape plus the block width `n` when it came from `--x`/`--y`.
fn tape_of(a: &TapeArgs) -> Res<(Tape, Option<usize>)> {
    if let Some(t) = &a.tape {
        let t = t.replace('<', "¢").replace('>', "$");
        return Ok((t.parse()?, None));
    }
    let x = parse_bits(a.x.as_deref().ok_or("give --tape or --x")?)?;
    match &a.y {
        Some(y) => {
            let y = parse_bits(y)?;
            let n = x.len();
            Ok((encode_pair(&x, &y)?, Some(n)))
        }
        None => Ok((Tape::from_bits(&x), None)),
    }
}

fn cap_for(l: &Loaded, tape: &Tape, explicit: Option<u64>) -> u64 {
    explicit.unwrap_or_else(|| match &l.compiled {
        Some(c) => c.step_cap(tape.len()),
        None => step_cap_default(tape.len(), 0),
    })
}

fn run(a: &RunArgs) -> Res<()> {
    let l = load(&a.tape.machine)?;
    let (tape, _) = tape_of(&a.tape)?;
    let cap = cap_for(&l, &tape, a.tape.step_cap);
    let m = &l.machine;
    let mut r = match a.mode {
        ModeArg::MonteCarlo => run_monte_carlo(m, &tape, cap, a.trials, a.tape.seed)?,
        ModeArg::Exact => match m.kind {
            MachineKind::Deterministic => run_deterministic(m, &tape, cap)?,
            MachineKind::Probabilistic => run_probabilistic_exact(m, &tape, cap)?,
            MachineKind::QuantumClassical => run_qcfa_exact(m, &tape, cap, DEFAULT_PRUNE_EPS)?,
        },
    };
    if let Some(c) = &l.compiled {
        let q = c.provenance.total_queries();
        if q > 0 {
            r.queries_used = Some(q);
        }
    }
    write_out(&format!("{}\n", serde_json::to_string_pretty(&r)?), None)?;
    Ok(())
}

fn comm(a: &CommArgs) -> Res<()> {
    let l = load(&a.tape.machine)?;
    let (tape, width) = tape_of(&a.tape)?;
    let n = match width.or_else(|| l.compiled.as_ref().map(|c| c.n())) {
        Some(n) => n,
        None => return Err("give --x and --y so the split width is known".into()),
    };
    let cap = cap_for(&l, &tape, a.tape.step_cap);
    let mode = match a.mode {
        ModeArg::Exact => ProtocolMode::Exact,
        ModeArg::MonteCarlo => ProtocolMode::Sample(a.tape.seed),
    };
    let t = simulate_on_tape(&l.machine, &tape, n, mode, cap)?;
    let report = comm_cost_report(&t, &l.machine);
    let doc = json!({ "transcript": t, "report": report });
    write_out(&format!("{}\n", serde_json::to_string_pretty(&doc)?), None)?;
    Ok(())
}

fn sweep(a: &SweepArgs) -> Res<()> {
    let id = match a.experiment {
        ExperimentArg::EqTradeoff => ExperimentId::EqTradeoff,
        ExperimentArg::IntTradeoff => ExperimentId::IntTradeoff,
        ExperimentArg::CommEq => ExperimentId::CommEq,
        ExperimentArg::CommInt => ExperimentId::CommInt,
        ExperimentArg::CompilerCheck => ExperimentId::CompilerCheck,
        ExperimentArg::GadgetCheck => ExperimentId::GadgetCheck,
    };
    let spec = ExperimentSpec {
        seed: a.seed,
        trials: a.trials,
        samples: a.samples,
        programs: a.programs,
        format: match a.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        },
        mode: match a.mode {
            ModeArg::Exact => EngineMode::Exact,
            ModeArg::MonteCarlo => EngineMode::MonteCarlo,
        },
        prime_range: a.prime_range.into(),
        step_cap: a.step_cap,
        timing: a.timing,
        ..ExperimentSpec::new(id, a.n.clone())
    };
    let rows = run_experiment(&spec)?;
    write_out(&emit(&rows, spec.format)?, a.out.as_ref())
}

fn check(a: &CheckArgs) -> Res<bool> {
    let reports = run_property_suites(a.seed, a.trials);
    let mut text = String::new();
    for r in &reports {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("{tag} {}: {}\n", r.name, r.detail));
    }
    write_out(&text, None)?;
    Ok(reports.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Build(a) => build(a).map(|_| true),
        Cmd::Run(a) => run(a).map(|_| true),
        Cmd::Comm(a) => comm(a).map(|_| true),
        Cmd::Sweep(a) => sweep(a).map(|_| true),
        Cmd::Check(a) => check(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("tslab: check failed");
            ExitCode::from(1)
        }
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tslab: {e}");
            ExitCode::from(2)
        }
    }
}
