use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::form::{scan, FormShape, Scan};
use super::{CompileError, CompiledMachine, Provenance};
use crate::langs::num_value;
use crate::machines::{
    Action, Branch, MachineError, MachineKind, MachineSource, MachineSpec, Move, StateFlag,
    StateId, TapeSymbol, TransitionRule,
};

/// Which primes the fingerprint draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrimeRange {
    /// All primes `p ≤ n²`, including 2.
    #[default]
    LeN2,
    /// Primes with `2 < p < n²`.
    OpenInterval,
}

pub fn primes_in_range(n: usize, range: PrimeRange) -> Vec<u64> {
    let top = (n * n) as usize;
    let mut composite = vec![false; top + 1];
    let mut primes = Vec::new();
    for k in 2..=top {
        if composite[k] {
            continue;
        }
        primes.push(k as u64);
        for multiple in (k * k..=top).step_by(k) {
            composite[multiple] = true;
        }
    }
    match range {
        PrimeRange::LeN2 => primes,
        PrimeRange::OpenInterval => primes
            .into_iter()
            .filter(|&p| p > 2 && p < top as u64)
            .collect(),
    }
}

/// Fraction of primes in range dividing `Num(x) − Num(y)`; 1 when `x = y`.
pub fn bad_prime_ratio(x: &[bool], y: &[bool], range: PrimeRange) -> f64 {
    let primes = primes_in_range(x.len(), range);
    let diff = num_value(x).abs_diff(num_value(y));
    let bad = primes.iter().filter(|&&p| diff % p as u128 == 0).count();
    bad as f64 / primes.len() as f64
}

const START: u64 = 0;
const ACCEPT: u64 = 1;
const REJECT: u64 = 2;
const FIRST: u64 = 3;

/// States `(prime index, cells read c ∈ 0..=3n, residue r < p)` laid out
/// block by block after the three fixed states.
#[derive(Debug)]
struct FingerprintRule {
    n: usize,
    primes: Vec<u64>,
    bases: Vec<u64>,
}

impl FingerprintRule {
    fn new(n: usize, primes: Vec<u64>) -> Self {
        let mut bases = Vec::with_capacity(primes.len());
        let mut next = FIRST;
        for &p in &primes {
            bases.push(next);
            next += (3 * n as u64 + 1) * p;
        }
        Self { n, primes, bases }
    }

    fn state_count(&self) -> u64 {
        FIRST
            + self
                .primes
                .iter()
                .map(|p| (3 * self.n as u64 + 1) * p)
                .sum::<u64>()
    }

    fn id(&self, k: usize, c: usize, r: u64) -> StateId {
        StateId(self.bases[k] + c as u64 * self.primes[k] + r)
    }

    fn decode(&self, s: StateId) -> Option<(usize, usize, u64)> {
        if s.0 < FIRST || s.0 >= self.state_count() {
            return None;
        }
        let k = self.bases.partition_point(|&b| b <= s.0) - 1;
        let off = s.0 - self.bases[k];
        let p = self.primes[k];
        Some((k, (off / p) as usize, off % p))
    }
}

fn pow2_mod(e: usize, p: u64) -> u64 {
    let (mut acc, mut base, mut e) = (1 % p, 2 % p, e);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

impl TransitionRule for FingerprintRule {
    fn action(&self, state: StateId, symbol: TapeSymbol) -> Result<Action, MachineError> {
        let reject = Action::classical(StateId(REJECT), Move::Stay);
        if state.0 == START {
            if symbol != TapeSymbol::LeftEnd {
                return Ok(reject);
            }
            // the last weight absorbs rounding so the weights sum to exactly 1
            let count = self.primes.len();
            let w = 1.0 / count as f64;
            let rest = 1.0 - (0..count - 1).fold(0.0, |acc, _| acc + w);
            return Ok(Action::Random(
                (0..count)
                    .map(|k| Branch {
                        weight: if k + 1 == count { rest } else { w },
                        next: self.id(k, 0, 0),
                        mv: Move::Right,
                    })
                    .collect(),
            ));
        }
        if state.0 == ACCEPT || state.0 == REJECT {
            return Err(MachineError::HaltingStateQueried(state.0));
        }
        let (k, c, r) = self
            .decode(state)
            .ok_or(MachineError::UndefinedTransition {
                state: state.0,
                symbol,
            })?;
        let (n, p, pos) = (self.n, self.primes[k], c + 1);
        Ok(match scan(FormShape::Pair, n, pos, symbol) {
            Scan::Bad => reject,
            Scan::Done if r == 0 => Action::classical(StateId(ACCEPT), Move::Stay),
            Scan::Done => reject,
            Scan::Continue => {
                let b = symbol.bit().map_or(0, u64::from);
                let r = if pos <= n {
                    (2 * r + b) % p
                } else if pos <= 2 * n {
                    r
                } else {
                    (r + p - b * pow2_mod(3 * n - pos, p)) % p
                };
                Action::classical(self.id(k, c + 1, r), Move::Right)
            }
        })
    }

    fn flag(&self, state: StateId) -> StateFlag {
        match state.0 {
            ACCEPT => StateFlag::Accepting,
            REJECT => StateFlag::Rejecting,
            _ => StateFlag::Neither,
        }
    }
}

/// Probabilistic machine for `x #ⁿ y` equality by fingerprinting.
///
/// At `¢` it picks a prime uniformly, then makes one left-to-right sweep that
/// also checks the tape shape: over `x` it keeps `r = Num(x) mod p` via
/// `r ← 2r + bit`, idles over `#ⁿ`, and over `y` subtracts `bit · 2^{n-1-k}`.
/// At `$` it accepts iff `r = 0`. Malformed tapes are rejected during the
/// sweep.
pub fn build_eq_fingerprint_2pfa(
    n: usize,
    prime_range: PrimeRange,
) -> Result<CompiledMachine, CompileError> {
    if n < 2 {
        return Err(CompileError::InvalidParameter(
            "fingerprint machine needs n ≥ 2".into(),
        ));
    }
    let primes = primes_in_range(n, prime_range);
    if primes.is_empty() {
        return Err(CompileError::InvalidParameter(format!(
            "no primes in range for n = {n}"
        )));
    }
    let rule = FingerprintRule::new(n, primes);
    let count = rule.state_count();
    let machine = MachineSpec::new(
        MachineKind::Probabilistic,
        count,
        StateId(START),
        Arc::new(rule),
    )
    .with_source(MachineSource::Builder {
        name: "eq_fingerprint".into(),
        params: serde_json::json!({ "n": n, "prime_range": prime_range }),
    });
    let mut c = CompiledMachine::new(machine, Provenance::EqFingerprint { n, prime_range });
    let side = (n * n + 1) as u64;
    c.nominal_classical_states = Some(side * side * side);
    Ok(c)
}
