//! Two-party simulation of a machine on `¢ x #ⁿ y $`.
//!
//! Alice owns `¢` and `x`, Bob owns `y` and `$`; the `#` block belongs to
//! whoever is currently simulating. A message fires when the head enters
//! the other party's exclusive region, carrying the classical state
//! (`⌈log₂ |S|⌉` bits) and, for quantum-classical machines, the register
//! (`⌈log₂ dim⌉` qubits, carried symbolically by the single simulator).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::langs::encode_pair;
use crate::machines::{
    explore, sample_trajectory, space_bits, Crossing, ExploreOptions, MachineError, MachineKind,
    MachineSpec, RegionSplit, RunResult, StateFlag, StateId, Tape, DEFAULT_PRUNE_EPS,
    DEFAULT_STEP_CAP,
};

#[derive(Debug, Error)]
pub enum CommError {
    #[error("x has {0} bits but y has {1}")]
    LengthMismatch(usize, usize),
    #[error("tape of length {len} does not fit a width-{n} split")]
    TapeMismatch { len: usize, n: usize },
    #[error("machine: {0}")]
    Machine(#[from] MachineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolMode {
    /// Exact branch tree; messages are those of a branch with the most crossings.
    Exact,
    /// One seeded trajectory.
    Sample(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    AliceToBob,
    BobToAlice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingMessage {
    pub direction: Direction,
    pub classical_bits: u32,
    pub qubits: u32,
    pub step_index: u64,
    /// Classical state handed over; the register travels with it when `qubits > 0`.
    pub state: StateId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommTranscript {
    pub n: usize,
    pub mode: ProtocolMode,
    pub messages: Vec<CrossingMessage>,
    pub total_bits: u64,
    pub total_qubits: u64,
    pub rounds: u64,
    pub output: RunResult,
    /// Branch-mass-weighted crossing count (equals the message count when sampling).
    pub expected_crossings: f64,
    pub expected_bits: f64,
}

/// `⌈log₂ k⌉`, with `k ≤ 1` costing nothing.
pub fn ceil_log2(k: u64) -> u32 {
    if k <= 1 {
        0
    } else {
        64 - (k - 1).leading_zeros()
    }
}

pub fn message_bits(m: &MachineSpec) -> u32 {
    ceil_log2(m.classical_state_count)
}

pub fn message_qubits(m: &MachineSpec) -> u32 {
    ceil_log2(m.quantum_dim.max(1) as u64)
}

fn prune_eps(m: &MachineSpec) -> f64 {
    if m.kind == MachineKind::QuantumClassical {
        DEFAULT_PRUNE_EPS
    } else {
        0.0
    }
}

/// Runs `m` on `encode_pair(x, y)` as the crossing-sequence protocol, with
/// the default step cap.
pub fn simulate_crossing_protocol(
    m: &MachineSpec,
    x: &[bool],
    y: &[bool],
    mode: ProtocolMode,
) -> Result<CommTranscript, CommError> {
    if x.len() != y.len() {
        return Err(CommError::LengthMismatch(x.len(), y.len()));
    }
    let tape = encode_pair(x, y).expect("lengths checked");
    simulate_on_tape(m, &tape, x.len(), mode, DEFAULT_STEP_CAP)
}

/// Protocol run on an arbitrary tape split as if it had width-`n` blocks.
/// Exact mode uses the same prune threshold as the plain engines
/// ([`DEFAULT_PRUNE_EPS`] for quantum-classical machines, 0 otherwise).
pub fn simulate_on_tape(
    m: &MachineSpec,
    tape: &Tape,
    n: usize,
    mode: ProtocolMode,
    step_cap: u64,
) -> Result<CommTranscript, CommError> {
    if n == 0 || tape.len() < 2 * n + 2 {
        return Err(CommError::TapeMismatch { len: tape.len(), n });
    }
    let split = RegionSplit { n };
    let (output, history, expected) = match mode {
        ProtocolMode::Exact => {
            let e = explore(
                m,
                tape,
                &ExploreOptions {
                    step_cap,
                    prune_eps: prune_eps(m),
                    split: Some(split),
                    keep_leaves: false,
                },
            )?;
            (e.result, e.worst_history, e.expected_crossings)
        }
        ProtocolMode::Sample(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = sample_trajectory(m, tape, step_cap, Some(split), &mut rng)?;
            let hit = |f: StateFlag| if t.flag == f { 1.0 } else { 0.0 };
            let output = RunResult {
                accept_prob: hit(StateFlag::Accepting),
                reject_prob: hit(StateFlag::Rejecting),
                nonhalt_prob: hit(StateFlag::Neither),
                steps_max: t.steps,
                steps_expected: t.steps as f64,
                space_bits: space_bits(m),
                queries_used: None,
            };
            let count = t.history.len() as f64;
            (output, t.history, count)
        }
    };
    let (bits, qubits) = (message_bits(m), message_qubits(m));
    let messages: Vec<CrossingMessage> = history
        .iter()
        .map(|c: &Crossing| CrossingMessage {
            direction: if c.to_bob {
                Direction::AliceToBob
            } else {
                Direction::BobToAlice
            },
            classical_bits: bits,
            qubits,
            step_index: c.step,
            state: c.state,
        })
        .collect();
    let alternations = messages
        .windows(2)
        .filter(|w| w[0].direction != w[1].direction)
        .count() as u64;
    Ok(CommTranscript {
        n,
        mode,
        total_bits: messages.iter().map(|m| m.classical_bits as u64).sum(),
        total_qubits: messages.iter().map(|m| m.qubits as u64).sum(),
        rounds: alternations + 1,
        messages,
        output,
        expected_crossings: expected,
        expected_bits: expected * bits as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommReport {
    pub n: usize,
    pub crossings: u64,
    pub total_bits: u64,
    pub total_qubits: u64,
    pub steps_max: u64,
    /// `steps_max / n + 1`.
    pub crossing_bound: f64,
    /// `⌈log₂ |S|⌉ · (steps_max / n + 1)`.
    pub bits_bound: f64,
    pub within_bound: bool,
    /// Smallest step distance between consecutive messages.
    pub min_gap: Option<u64>,
}

pub fn comm_cost_report(t: &CommTranscript, m: &MachineSpec) -> CommReport {
    let crossing_bound = t.output.steps_max as f64 / t.n as f64 + 1.0;
    let bits_bound = message_bits(m) as f64 * crossing_bound;
    let crossings = t.messages.len() as u64;
    CommReport {
        n: t.n,
        crossings,
        total_bits: t.total_bits,
        total_qubits: t.total_qubits,
        steps_max: t.output.steps_max,
        crossing_bound,
        bits_bound,
        within_bound: crossings as f64 <= crossing_bound && t.total_bits as f64 <= bits_bound,
        min_gap: t
            .messages
            .windows(2)
            .map(|w| w[1].step_index - w[0].step_index)
            .min(),
    }
}
