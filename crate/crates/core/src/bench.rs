//! Sweeps over `n` producing time, space, error and communication rows.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comm::{simulate_on_tape, CommError, ProtocolMode};
use crate::compile::{
    build_eq_fingerprint_2pfa, compile_and_oracle_program, compile_query_program, run_compiled,
    CompileError, CompiledMachine, PrimeRange,
};
use crate::langs::{and_bits, bits_of, encode_pair, eq_predicate, int_predicate, Bits};
use crate::machines::{run_monte_carlo, space_bits, MachineError, Tape};
use crate::querymodel::{
    default_grover_schedule, grover_program, random_straight_line, run_query_program, QueryError,
    DEFAULT_GROVER_REPEATS,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown experiment id {0:?}")]
    UnknownExperiment(String),
    #[error("invalid n = {0}: sweeps need n ≥ 2")]
    InvalidN(usize),
    #[error("empty sweep")]
    EmptySweep,
    #[error("unknown format {0:?}")]
    UnknownFormat(String),
    #[error("compile: {0}")]
    Compile(#[from] CompileError),
    #[error("machine: {0}")]
    Machine(#[from] MachineError),
    #[error("comm: {0}")]
    Comm(#[from] CommError),
    #[error("query: {0}")]
    Query(#[from] QueryError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    EqTradeoff,
    IntTradeoff,
    CommEq,
    CommInt,
    CompilerCheck,
    GadgetCheck,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::EqTradeoff,
        ExperimentId::IntTradeoff,
        ExperimentId::CommEq,
        ExperimentId::CommInt,
        ExperimentId::CompilerCheck,
        ExperimentId::GadgetCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::EqTradeoff => "eq-tradeoff",
            ExperimentId::IntTradeoff => "int-tradeoff",
            ExperimentId::CommEq => "comm-eq",
            ExperimentId::CommInt => "comm-int",
            ExperimentId::CompilerCheck => "compiler-check",
            ExperimentId::GadgetCheck => "gadget-check",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| BenchError::UnknownExperiment(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(BenchError::UnknownFormat(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineMode {
    #[default]
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub ns: Vec<usize>,
    pub seed: u64,
    /// Monte Carlo trials per input.
    pub trials: u64,
    /// Random pairs per `n` above the exhaustive range.
    pub samples: usize,
    /// Random programs per `n` for compiler and gadget checks.
    pub programs: usize,
    pub format: OutputFormat,
    pub mode: EngineMode,
    pub prime_range: PrimeRange,
    pub step_cap: Option<u64>,
    /// Record wall time; off by default so output stays byte-identical.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(id: ExperimentId, ns: Vec<usize>) -> Self {
        Self {
            id,
            ns,
            seed: 0,
            trials: 10_000,
            samples: 64,
            programs: 4,
            format: OutputFormat::Csv,
            mode: EngineMode::Exact,
            prime_range: PrimeRange::LeN2,
            step_cap: None,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    #[serde(rename = "T_max")]
    pub t_max: u64,
    #[serde(rename = "T_expected")]
    pub t_expected: f64,
    #[serde(rename = "S_bits")]
    pub s_bits: f64,
    #[serde(rename = "TS")]
    pub ts: f64,
    pub worst_error: f64,
    pub comm_bits: u64,
    pub comm_qubits: u64,
    pub wall_time: f64,
}

pub const CSV_HEADER: &str =
    "n,T_max,T_expected,S_bits,TS,worst_error,comm_bits,comm_qubits,wall_time";

/// Largest `n` swept exhaustively.
pub const EXHAUSTIVE_MAX_N: usize = 8;

/// Rounds to 12 significant digits.
pub fn round_sig(v: f64) -> f64 {
    sig12(v).parse().unwrap_or(v)
}

/// Decimal text with 12 significant digits, trailing zeros trimmed.
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{:.*}", decimals, v);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn row_rng(seed: u64, n: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Bits {
    (0..n).map(|_| rng.gen()).collect()
}

fn unit(n: usize, i: usize) -> Bits {
    (0..n).map(|k| k == i).collect()
}

/// Every pair for `n ≤ 8`; otherwise the pairs `(eᵢ, eᵢ)` plus `samples`
/// seeded random pairs.
pub fn pair_inputs(n: usize, seed: u64, samples: usize) -> Vec<(Bits, Bits)> {
    if n <= EXHAUSTIVE_MAX_N {
        let all: Vec<Bits> = (0..1u64 << n).map(|v| bits_of(v, n)).collect();
        return all
            .iter()
            .flat_map(|x| all.iter().map(move |y| (x.clone(), y.clone())))
            .collect();
    }
    let mut rng = row_rng(seed, n);
    let mut out: Vec<(Bits, Bits)> = (0..n).map(|i| (unit(n, i), unit(n, i))).collect();
    out.extend((0..samples).map(|_| (random_bits(n, &mut rng), random_bits(n, &mut rng))));
    out
}

/// Inputs for AND-compiled machines. Up to `n = 4` every pair; up to
/// `n = 8` every intersection pattern `z` as `(1ⁿ, z)` and `(z, 1ⁿ)`;
/// beyond that the sampled policy of [`pair_inputs`].
pub fn and_inputs(n: usize, seed: u64, samples: usize) -> Vec<(Bits, Bits)> {
    if n <= 4 || n > EXHAUSTIVE_MAX_N {
        return pair_inputs(n, seed, samples);
    }
    let ones = vec![true; n];
    (0..1u64 << n)
        .flat_map(|v| {
            let z = bits_of(v, n);
            [(ones.clone(), z.clone()), (z, ones.clone())]
        })
        .collect()
}

/// Every `x` for `n ≤ 8`, else single-bit words plus seeded samples.
pub fn word_inputs(n: usize, seed: u64, samples: usize) -> Vec<Bits> {
    if n <= EXHAUSTIVE_MAX_N {
        return (0..1u64 << n).map(|v| bits_of(v, n)).collect();
    }
    let mut rng = row_rng(seed, n);
    let mut out: Vec<Bits> = (0..n).map(|i| unit(n, i)).collect();
    out.extend((0..samples).map(|_| random_bits(n, &mut rng)));
    out
}

pub fn int_machine(n: usize) -> Result<CompiledMachine, BenchError> {
    let p = grover_program(n, &default_grover_schedule(n), DEFAULT_GROVER_REPEATS)?;
    Ok(compile_and_oracle_program(&p)?)
}

#[derive(Debug, Clone, Copy, Default)]
struct Eval {
    error: f64,
    steps_max: u64,
    steps_expected: f64,
    comm_bits: u64,
    comm_qubits: u64,
}

impl Eval {
    fn join(self, o: Eval) -> Eval {
        Eval {
            error: self.error.max(o.error),
            steps_max: self.steps_max.max(o.steps_max),
            steps_expected: self.steps_expected.max(o.steps_expected),
            comm_bits: self.comm_bits.max(o.comm_bits),
            comm_qubits: self.comm_qubits.max(o.comm_qubits),
        }
    }
}

fn input_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Runs one tape and returns its acceptance probability with costs.
fn run_tape(
    c: &CompiledMachine,
    tape: &Tape,
    n: usize,
    spec: &ExperimentSpec,
    with_comm: bool,
    seed: u64,
) -> Result<(f64, Eval), BenchError> {
    let cap = spec.step_cap.unwrap_or_else(|| c.step_cap(tape.len()));
    let (result, bits, qubits) = match (spec.mode, with_comm) {
        (EngineMode::Exact, true) => {
            let t = simulate_on_tape(&c.machine, tape, n, ProtocolMode::Exact, cap)?;
            (t.output, t.total_bits, t.total_qubits)
        }
        (EngineMode::Exact, false) => (run_compiled(c, tape)?, 0, 0),
        (EngineMode::MonteCarlo, comm) => {
            let r = run_monte_carlo(&c.machine, tape, cap, spec.trials, seed)?;
            let (b, q) = if comm {
                let t = simulate_on_tape(&c.machine, tape, n, ProtocolMode::Sample(seed), cap)?;
                (t.total_bits, t.total_qubits)
            } else {
                (0, 0)
            };
            (r, b, q)
        }
    };
    Ok((
        result.accept_prob,
        Eval {
            error: 0.0,
            steps_max: result.steps_max,
            steps_expected: result.steps_expected,
            comm_bits: bits,
            comm_qubits: qubits,
        },
    ))
}

fn fold(evals: Vec<Result<Eval, BenchError>>) -> Result<Eval, BenchError> {
    evals
        .into_iter()
        .try_fold(Eval::default(), |acc, e| Ok(acc.join(e?)))
}

/// Worst one-sided error of a pair-language machine over `inputs`.
fn language_row(
    c: &CompiledMachine,
    n: usize,
    inputs: &[(Bits, Bits)],
    member: fn(&[bool], &[bool]) -> bool,
    spec: &ExperimentSpec,
    with_comm: bool,
) -> Result<Eval, BenchError> {
    let evals = inputs
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let tape = encode_pair(x, y).expect("equal lengths");
            let (acc, mut e) = run_tape(c, &tape, n, spec, with_comm, input_seed(spec.seed, i))?;
            e.error = if member(x, y) { 1.0 - acc } else { acc }.clamp(0.0, 1.0);
            Ok(e)
        })
        .collect();
    fold(evals)
}

fn eq_member(x: &[bool], y: &[bool]) -> bool {
    eq_predicate(x, y).expect("equal lengths")
}

fn int_member(x: &[bool], y: &[bool]) -> bool {
    int_predicate(x, y).expect("equal lengths")
}

/// Compiled straight-line programs against their query-level runs. With
/// `and_layout`, inputs are pairs and the reference is run on `x ∧ y`.
fn compiler_row(
    n: usize,
    spec: &ExperimentSpec,
    and_layout: bool,
) -> Result<(Eval, f64), BenchError> {
    let mut rng = row_rng(spec.seed, n);
    let mut total = Eval::default();
    let mut space = 0.0f64;
    for k in 0..spec.programs.max(1) {
        let m = rng.gen_range(1..=3);
        let t = rng.gen_range(0..=4);
        let p = random_straight_line(n, m, t, &mut rng);
        let c = if and_layout {
            compile_and_oracle_program(&p)?
        } else {
            compile_query_program(&p)?
        };
        space = space.max(space_bits(&c.machine));
        let inputs: Vec<(Bits, Bits)> = if and_layout {
            and_inputs(n, input_seed(spec.seed, k), spec.samples)
        } else {
            word_inputs(n, input_seed(spec.seed, k), spec.samples)
                .into_iter()
                .map(|x| (x, Vec::new()))
                .collect()
        };
        let evals = inputs
            .par_iter()
            .enumerate()
            .map(|(i, (x, y))| {
                let (tape, z) = if and_layout {
                    (
                        encode_pair(x, y).expect("equal lengths"),
                        and_bits(x, y).expect("equal"),
                    )
                } else {
                    (Tape::from_bits(x), x.clone())
                };
                let want = run_query_program(&p, &z)?.accept_prob;
                let (acc, mut e) = run_tape(&c, &tape, n, spec, false, input_seed(spec.seed, i))?;
                e.error = (acc - want).abs().min(1.0);
                Ok(e)
            })
            .collect();
        total = total.join(fold(evals)?);
    }
    Ok((total, space))
}

fn one_row(n: usize, spec: &ExperimentSpec) -> Result<SweepRow, BenchError> {
    let start = Instant::now();
    let (eval, s_bits) = match spec.id {
        ExperimentId::EqTradeoff | ExperimentId::CommEq => {
            let c = build_eq_fingerprint_2pfa(n, spec.prime_range)?;
            let inputs = pair_inputs(n, spec.seed, spec.samples);
            let comm = spec.id == ExperimentId::CommEq;
            (
                language_row(&c, n, &inputs, eq_member, spec, comm)?,
                space_bits(&c.machine),
            )
        }
        ExperimentId::IntTradeoff | ExperimentId::CommInt => {
            let c = int_machine(n)?;
            let inputs = and_inputs(n, spec.seed, spec.samples);
            let comm = spec.id == ExperimentId::CommInt;
            (
                language_row(&c, n, &inputs, int_member, spec, comm)?,
                space_bits(&c.machine),
            )
        }
        ExperimentId::CompilerCheck => compiler_row(n, spec, false)?,
        ExperimentId::GadgetCheck => compiler_row(n, spec, true)?,
    };
    let s_bits = round_sig(s_bits);
    Ok(SweepRow {
        n,
        t_max: eval.steps_max,
        t_expected: round_sig(eval.steps_expected),
        s_bits,
        ts: round_sig(eval.steps_max as f64 * s_bits),
        worst_error: round_sig(eval.error),
        comm_bits: eval.comm_bits,
        comm_qubits: eval.comm_qubits,
        wall_time: if spec.timing {
            round_sig(start.elapsed().as_secs_f64())
        } else {
            0.0
        },
    })
}

/// One row per distinct `n`, ascending.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<SweepRow>, BenchError> {
    if spec.ns.is_empty() {
        return Err(BenchError::EmptySweep);
    }
    if let Some(&bad) = spec.ns.iter().find(|&&n| n < 2) {
        return Err(BenchError::InvalidN(bad));
    }
    let mut ns = spec.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter().map(|n| one_row(n, spec)).collect()
}

pub fn emit(rows: &[SweepRow], format: OutputFormat) -> Result<String, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::EmptySweep);
    }
    Ok(match format {
        OutputFormat::Json => serde_json::to_string_pretty(rows)? + "\n",
        OutputFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in rows {
                let cells = [
                    r.n.to_string(),
                    r.t_max.to_string(),
                    sig12(r.t_expected),
                    sig12(r.s_bits),
                    sig12(r.ts),
                    sig12(r.worst_error),
                    r.comm_bits.to_string(),
                    r.comm_qubits.to_string(),
                    sig12(r.wall_time),
                ];
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn primes_upto(k: u64) -> Vec<u64> {
        (2..=k).filter(|&p| (2..p).all(|d| p % d != 0)).collect()
    }

    #[test]
    fn sig12_examples() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(12.5), "12.5");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(2.0 / 3.0 * 1000.0), "666.666666667");
        assert_eq!(sig12(123456789012345.0), "123456789012345");
        assert_eq!(sig12(1e-20), "0.00000000000000000001");
    }

    #[test]
    fn one_row_one_line() {
        let rows = run_experiment(&ExperimentSpec::new(ExperimentId::EqTradeoff, vec![4])).unwrap();
        let csv = emit(&rows, OutputFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
    }

    #[test]
    fn eq_sweep_matches_prime_oracle() {
        let spec = ExperimentSpec::new(ExperimentId::EqTradeoff, vec![16, 4, 8]);
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![4, 8, 16]);
        let csv = emit(&rows, OutputFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 4);
        for r in &rows {
            let n = r.n;
            let primes = primes_upto((n * n) as u64);
            let worst = pair_inputs(n, spec.seed, spec.samples)
                .iter()
                .filter(|(x, y)| x != y)
                .map(|(x, y)| {
                    let (a, b) = (crate::langs::num_value(x), crate::langs::num_value(y));
                    let d = a.abs_diff(b);
                    primes.iter().filter(|&&p| d % p as u128 == 0).count() as f64
                        / primes.len() as f64
                })
                .fold(0.0, f64::max);
            assert!((r.worst_error - worst).abs() < 1e-11, "n={n}");
            if n >= 8 {
                assert!(r.worst_error <= 2.0 * (n as f64).ln() / n as f64);
            }
            assert_eq!(r.t_max, 3 * n as u64 + 2);
            assert_eq!(r.comm_bits, 0);
        }
    }

    #[test]
    fn comm_eq_reports_one_message() {
        let mut spec = ExperimentSpec::new(ExperimentId::CommEq, vec![4, 12]);
        spec.samples = 8;
        let rows = run_experiment(&spec).unwrap();
        for r in rows {
            let c = build_eq_fingerprint_2pfa(r.n, PrimeRange::LeN2).unwrap();
            assert_eq!(r.comm_bits as u32, crate::comm::message_bits(&c.machine));
            assert_eq!(r.comm_qubits, 0);
        }
    }

    #[test]
    fn compiler_and_gadget_checks_are_tight() {
        for id in [ExperimentId::CompilerCheck, ExperimentId::GadgetCheck] {
            let mut spec = ExperimentSpec::new(id, vec![2, 3]);
            spec.programs = 2;
            let rows = run_experiment(&spec).unwrap();
            for r in rows {
                assert!(r.worst_error <= 1e-9, "{id} n={}", r.n);
                assert!(r.t_max > 0);
            }
        }
    }

    #[test]
    fn int_row_small() {
        let rows = run_experiment(&ExperimentSpec::new(ExperimentId::CommInt, vec![4])).unwrap();
        let r = &rows[0];
        assert!(r.worst_error <= 1.0 / 3.0);
        let c = int_machine(4).unwrap();
        assert_eq!(r.s_bits, round_sig(space_bits(&c.machine)));
        assert!(r.comm_qubits > 0);
    }

    #[test]
    fn monte_carlo_mode_runs() {
        let mut spec = ExperimentSpec::new(ExperimentId::CommEq, vec![3]);
        spec.mode = EngineMode::MonteCarlo;
        spec.trials = 200;
        let a = emit(&run_experiment(&spec).unwrap(), OutputFormat::Csv).unwrap();
        let b = emit(&run_experiment(&spec).unwrap(), OutputFormat::Csv).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            run_experiment(&ExperimentSpec::new(ExperimentId::EqTradeoff, vec![1, 4])),
            Err(BenchError::InvalidN(1))
        ));
        assert!(matches!(
            run_experiment(&ExperimentSpec::new(ExperimentId::EqTradeoff, vec![])),
            Err(BenchError::EmptySweep)
        ));
        assert!(matches!(
            "eq".parse::<ExperimentId>(),
            Err(BenchError::UnknownExperiment(_))
        ));
        assert_eq!(
            "gadget-check".parse::<ExperimentId>().unwrap(),
            ExperimentId::GadgetCheck
        );
        assert!(emit(&[], OutputFormat::Json).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 * n.powf(1.5)))
            .collect();
        assert!((loglog_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }

    #[test]
    fn input_policies() {
        assert_eq!(pair_inputs(3, 0, 64).len(), 64);
        assert_eq!(pair_inputs(9, 0, 64).len(), 9 + 64);
        assert_eq!(pair_inputs(9, 5, 64), pair_inputs(9, 5, 64));
        assert_eq!(and_inputs(6, 0, 64).len(), 2 * 64);
        assert_eq!(word_inputs(10, 0, 5).len(), 15);
    }

    fn row_strategy() -> impl Strategy<Value = SweepRow> {
        (
            2usize..100,
            0u64..1_000_000,
            0.0f64..1e6,
            0.0f64..64.0,
            0.0f64..1.0,
            0u64..1000,
            0u64..1000,
        )
            .prop_map(|(n, t, te, s, err, b, q)| {
                let s = round_sig(s);
                SweepRow {
                    n,
                    t_max: t,
                    t_expected: round_sig(te),
                    s_bits: s,
                    ts: round_sig(t as f64 * s),
                    worst_error: round_sig(err),
                    comm_bits: b,
                    comm_qubits: q,
                    wall_time: 0.0,
                }
            })
    }

    proptest! {
        #[test]
        fn json_round_trips(rows in prop::collection::vec(row_strategy(), 1..5)) {
            let doc = emit(&rows, OutputFormat::Json).unwrap();
            let back: Vec<SweepRow> = serde_json::from_str(&doc).unwrap();
            prop_assert_eq!(back, rows);
        }

        #[test]
        fn csv_cells_reparse(rows in prop::collection::vec(row_strategy(), 1..5)) {
            let doc = emit(&rows, OutputFormat::Csv).unwrap();
            for (line, r) in doc.lines().skip(1).zip(&rows) {
                let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
                prop_assert_eq!(cells[0] as usize, r.n);
                prop_assert_eq!(cells[4], r.ts);
                prop_assert!((cells[4] - r.t_max as f64 * r.s_bits).abs() <= 1e-11 * cells[4].max(1.0));
                prop_assert_eq!(cells[5], r.worst_error);
            }
        }

        #[test]
        fn sig12_keeps_twelve_digits(v in 1e-6f64..1e9) {
            let r: f64 = sig12(v).parse().unwrap();
            prop_assert!((r - v).abs() <= 5e-12 * v);
        }
    }
}
