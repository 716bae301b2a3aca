//! Invariant suites run by `tslab check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::int_machine;
use crate::compile::{
    build_eq_fingerprint_2pfa, build_form_checker, compile_and_oracle_program,
    compile_query_program, run_compiled, CompiledMachine, FormShape, PrimeRange,
};
use crate::langs::{
    bits_of, decode_pair, encode_pair, eq_predicate, int_predicate, ne_depth, ne_eval, num_value,
    rne_predicate,
};
use crate::machines::{run_deterministic, run_monte_carlo, Action, MachineSpec, Tape, TapeSymbol};
use crate::qcore::{unitarity_deviation, Grid};
use crate::querymodel::{
    parity2_program, random_straight_line, random_unitary, run_query_program, QueryProgram,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &str, failures: Vec<String>, checked: usize) -> Self {
        let passed = failures.is_empty();
        let detail = if passed {
            format!("{checked} cases")
        } else {
            format!(
                "{} of {checked} failed; first: {}",
                failures.len(),
                failures[0]
            )
        };
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

const TOL: f64 = 1e-9;

fn pair_tape(x: u64, y: u64, n: usize) -> Tape {
    encode_pair(&bits_of(x, n), &bits_of(y, n)).expect("equal lengths")
}

fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> Tape {
    let len = rng.gen_range(0..=max_len);
    let word: Vec<TapeSymbol> = (0..len)
        .map(|_| match rng.gen_range(0..3) {
            0 => TapeSymbol::Zero,
            1 => TapeSymbol::One,
            _ => TapeSymbol::Hash,
        })
        .collect();
    Tape::from_word(&word).expect("word symbols only")
}

struct Fixtures {
    fingerprint: CompiledMachine,
    grover: CompiledMachine,
    parity_plain: CompiledMachine,
    parity_and: CompiledMachine,
    random_plain: Vec<(QueryProgram, CompiledMachine)>,
    form: MachineSpec,
}

fn fixtures(rng: &mut ChaCha8Rng) -> Fixtures {
    Fixtures {
        fingerprint: build_eq_fingerprint_2pfa(4, PrimeRange::LeN2).expect("n ≥ 2"),
        grover: int_machine(4).expect("grover builds"),
        parity_plain: compile_query_program(&parity2_program()).expect("parity compiles"),
        parity_and: compile_and_oracle_program(&parity2_program()).expect("parity compiles"),
        random_plain: (0..3)
            .map(|_| {
                let (m, t) = (rng.gen_range(1..=3), rng.gen_range(0..=3));
                let p = random_straight_line(3, m, t, rng);
                let c = compile_query_program(&p).expect("compiles");
                (p, c)
            })
            .collect(),
        form: build_form_checker(2, FormShape::Pair).expect("n ≥ 1"),
    }
}

fn mass_conservation(f: &Fixtures, rng: &mut ChaCha8Rng) -> CheckReport {
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut check = |what: String, total: f64| {
        checked += 1;
        if (total - 1.0).abs() > TOL {
            failures.push(format!("{what}: total {total}"));
        }
    };
    for c in [&f.fingerprint, &f.grover, &f.parity_and] {
        let n = 4.min(c.n());
        for x in 0..1u64 << n {
            for y in 0..1u64 << n {
                let tape = pair_tape(x, y, n);
                match run_compiled(c, &tape) {
                    Ok(r) => check(format!("{} {x}/{y}", c.label()), r.total_prob()),
                    Err(e) => check(format!("{} {x}/{y}: {e}", c.label()), f64::NAN),
                }
            }
        }
        for _ in 0..16 {
            let tape = random_word(rng, 3 * n + 3);
            let total = run_compiled(c, &tape).map_or(f64::NAN, |r| r.total_prob());
            check(format!("{} malformed {tape}", c.label()), total);
        }
    }
    for c in f.random_plain.iter().map(|p| &p.1).chain([&f.parity_plain]) {
        let n = c.n();
        for x in 0..1u64 << n {
            let total = run_compiled(c, &Tape::from_bits(&bits_of(x, n)))
                .map_or(f64::NAN, |r| r.total_prob());
            check(format!("{} x={x}", c.label()), total);
        }
    }
    for _ in 0..32 {
        let tape = random_word(rng, 8);
        let total = run_deterministic(&f.form, &tape, 1000).map_or(f64::NAN, |r| r.total_prob());
        check(format!("form {tape}"), total);
    }
    CheckReport::new("mass-conservation", failures, checked)
}

/// Every unitary is unitary, every measurement complete and every random
/// choice a distribution, over all states and symbols of `m`.
fn validate_actions(m: &MachineSpec) -> Vec<String> {
    let mut failures = Vec::new();
    for s in 0..m.classical_state_count {
        let state = crate::machines::StateId(s);
        if m.flag(state).is_halting() {
            continue;
        }
        for sym in TapeSymbol::ALL {
            let Ok(action) = m.rule.action(state, sym) else {
                continue;
            };
            match action {
                Action::Classical { .. } => {}
                Action::Random(branches) => {
                    let total: f64 = branches.iter().map(|b| b.weight).sum();
                    if branches.iter().any(|b| b.weight < 0.0) || (total - 1.0).abs() > 1e-12 {
                        failures.push(format!("state {s} {sym:?}: weights sum to {total}"));
                    }
                }
                Action::Unitary { op, .. } => {
                    let dev = unitarity_deviation(&op.to_grid());
                    if dev > TOL {
                        failures.push(format!("state {s} {sym:?}: unitarity deviation {dev}"));
                    }
                }
                Action::Measure { measurement, moves } => {
                    let dim = measurement.dim();
                    let mut sum = Grid::zeros(dim);
                    for p in measurement.projectors() {
                        let g = p.to_grid();
                        let idem = g.matmul(&g).max_deviation(&g);
                        let herm = g.adjoint().max_deviation(&g);
                        if idem > TOL || herm > TOL {
                            failures.push(format!("state {s} {sym:?}: bad projector"));
                        }
                        sum = sum.add(&g);
                    }
                    if sum.max_deviation(&Grid::identity(dim)) > TOL
                        || moves.len() != measurement.outcome_count()
                    {
                        failures.push(format!("state {s} {sym:?}: incomplete measurement"));
                    }
                }
            }
        }
    }
    failures
}

fn operator_validity(f: &Fixtures, rng: &mut ChaCha8Rng) -> CheckReport {
    let mut failures = Vec::new();
    let mut checked = 0;
    let machines = [&f.fingerprint, &f.grover, &f.parity_plain, &f.parity_and]
        .into_iter()
        .chain(f.random_plain.iter().map(|p| &p.1))
        .map(|c| &c.machine)
        .chain([&f.form]);
    for m in machines {
        checked += 1;
        failures.extend(validate_actions(m));
    }
    for dim in 1..=8 {
        checked += 1;
        let dev = unitarity_deviation(&random_unitary(dim, rng).to_grid());
        if dev > TOL {
            failures.push(format!("random unitary dim {dim}: deviation {dev}"));
        }
    }
    CheckReport::new("unitarity-and-measurements", failures, checked)
}

fn monte_carlo_agreement(f: &Fixtures, seed: u64, trials: u64) -> CheckReport {
    let mut failures = Vec::new();
    let cases: Vec<(&CompiledMachine, Tape)> = vec![
        (&f.fingerprint, pair_tape(0b0001, 0b0111, 4)),
        (&f.fingerprint, pair_tape(0b0110, 0b0110, 4)),
        (&f.fingerprint, pair_tape(0b0000, 0b1100, 4)),
        (&f.parity_plain, Tape::from_bits(&bits_of(0b10, 2))),
        (&f.parity_and, pair_tape(0b11, 0b11, 2)),
        (&f.random_plain[0].1, Tape::from_bits(&bits_of(0b101, 3))),
        (&f.grover, pair_tape(0b1111, 0b0001, 4)),
    ];
    for (i, (c, tape)) in cases.iter().enumerate() {
        let cap = c.step_cap(tape.len());
        let exact = match run_compiled(c, tape) {
            Ok(r) => r.accept_prob,
            Err(e) => {
                failures.push(format!("{} {tape}: {e}", c.label()));
                continue;
            }
        };
        let mc = match run_monte_carlo(&c.machine, tape, cap, trials, seed.wrapping_add(i as u64)) {
            Ok(r) => r.accept_prob,
            Err(e) => {
                failures.push(format!("{} {tape}: {e}", c.label()));
                continue;
            }
        };
        let bound = 4.0 * (exact * (1.0 - exact) / trials as f64).sqrt() + 0.002;
        if (mc - exact).abs() > bound {
            failures.push(format!(
                "{} {tape}: sampled {mc} vs exact {exact} (bound {bound})",
                c.label()
            ));
        }
    }
    CheckReport::new("monte-carlo-vs-exact", failures, cases.len())
}

/// Not-all-equal composed over ternary blocks, written out recursively.
fn ne_reference(bits: &[bool]) -> bool {
    if bits.len() == 1 {
        return bits[0];
    }
    let third = bits.len() / 3;
    let parts: Vec<bool> = bits.chunks(third).map(ne_reference).collect();
    !(parts[0] == parts[1] && parts[1] == parts[2])
}

fn ne_tables() -> CheckReport {
    let mut failures = Vec::new();
    let mut checked = 0;
    for d in 1..=2u32 {
        let n = 3usize.pow(d);
        if ne_depth(n) != Some(d) {
            failures.push(format!("depth of {n}"));
        }
        for v in 0..1u64 << n {
            checked += 1;
            let bits = bits_of(v, n);
            if ne_eval(d, &bits).ok() != Some(ne_reference(&bits)) {
                failures.push(format!("NE^{d}({v:0n$b})"));
            }
        }
    }
    for v in 0..1u64 << 9 {
        for w in [0u64, 0b111_111_111, 0b101_010_011, v ^ 0b110_001_101] {
            checked += 1;
            let (x, y) = (bits_of(v, 9), bits_of(w, 9));
            let z: Vec<bool> = x.iter().zip(&y).map(|(a, b)| a & b).collect();
            if rne_predicate(&x, &y, 2).ok() != Some(ne_reference(&z)) {
                failures.push(format!("RNE({v:09b}, {w:09b})"));
            }
        }
    }
    CheckReport::new("ne-tables", failures, checked)
}

fn primes_upto(k: u64) -> Vec<u64> {
    (2..=k).filter(|&p| (2..p).all(|d| p % d != 0)).collect()
}

fn member_agreement(f: &Fixtures, rng: &mut ChaCha8Rng) -> CheckReport {
    let mut failures = Vec::new();
    let mut checked = 0;
    let n = 4;
    let primes = primes_upto((n * n) as u64);
    for x in 0..1u64 << n {
        for y in 0..1u64 << n {
            checked += 1;
            let (xb, yb) = (bits_of(x, n), bits_of(y, n));
            let tape = pair_tape(x, y, n);
            let fp = run_compiled(&f.fingerprint, &tape).map_or(f64::NAN, |r| r.accept_prob);
            let bad = primes
                .iter()
                .filter(|&&p| num_value(&xb).abs_diff(num_value(&yb)) % p as u128 == 0)
                .count() as f64
                / primes.len() as f64;
            let want = if eq_predicate(&xb, &yb).unwrap() {
                1.0
            } else {
                bad
            };
            if (fp - want).abs() > 1e-12 {
                failures.push(format!("fingerprint {x}/{y}: {fp} vs {want}"));
            }
            let g = run_compiled(&f.grover, &tape).map_or(f64::NAN, |r| r.accept_prob);
            let ok = if int_predicate(&xb, &yb).unwrap() {
                g >= 2.0 / 3.0
            } else {
                g == 0.0
            };
            if !ok {
                failures.push(format!("grover {x}/{y}: {g}"));
            }
        }
    }
    for x in 0..4u64 {
        checked += 1;
        let p =
            run_compiled(&f.parity_and, &pair_tape(x, 0b11, 2)).map_or(f64::NAN, |r| r.accept_prob);
        let want = (x.count_ones() % 2) as f64;
        if (p - want).abs() > TOL {
            failures.push(format!("parity {x:02b}: {p}"));
        }
    }
    for (program, c) in &f.random_plain {
        let n = c.n();
        for x in 0..1u64 << n {
            checked += 1;
            let bits = bits_of(x, n);
            let got = run_compiled(c, &Tape::from_bits(&bits)).map_or(f64::NAN, |r| r.accept_prob);
            let want = run_query_program(program, &bits).map_or(f64::NAN, |o| o.accept_prob);
            if (got - want).abs() > TOL {
                failures.push(format!("program x={x}: {got} vs {want}"));
            }
        }
    }
    for _ in 0..64 {
        checked += 1;
        let tape = random_word(rng, 8);
        let got = run_deterministic(&f.form, &tape, 1000).map_or(f64::NAN, |r| r.accept_prob);
        let want = if decode_pair(&tape, 2).is_some() {
            1.0
        } else {
            0.0
        };
        if got != want {
            failures.push(format!("form {tape}: {got}"));
        }
    }
    CheckReport::new("member-oracle-agreement", failures, checked)
}

/// Runs every suite; `trials` is the Monte Carlo sample size.
pub fn run_property_suites(seed: u64, trials: u64) -> Vec<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = fixtures(&mut rng);
    vec![
        mass_conservation(&f, &mut rng),
        operator_validity(&f, &mut rng),
        monte_carlo_agreement(&f, seed, trials),
        ne_tables(),
        member_agreement(&f, &mut rng),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_ne_small() {
        assert!(!ne_reference(&[true, true, true]));
        assert!(ne_reference(&[true, false, true]));
        // blocks (110)(110)(110) all map to 1
        assert!(!ne_reference(&[
            true, true, false, true, true, false, true, true, false
        ]));
    }

    #[test]
    fn validator_flags_broken_random_action() {
        use crate::machines::{Branch, MachineKind, Move, StateId, TableRule};
        use std::sync::Arc;
        let mut t = TableRule::new(vec![StateId(1)], vec![StateId(2)]).unwrap();
        t.set_all(
            StateId(0),
            Action::Random(vec![Branch {
                weight: 0.7,
                next: StateId(1),
                mv: Move::Stay,
            }]),
        );
        let m = MachineSpec::new(MachineKind::Probabilistic, 3, StateId(0), Arc::new(t));
        assert_eq!(validate_actions(&m).len(), TapeSymbol::ALL.len());
    }

    #[test]
    fn suites_pass_with_small_trials() {
        for r in run_property_suites(3, 20_000) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
