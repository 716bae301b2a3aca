//! Two-way automata: deterministic, probabilistic and quantum-classical
//! machines over tapes `¢ w $`, with exact and sampling engines.
//!
//! Transition functions are rules queried per `(state, symbol)` rather than
//! materialized tables, since constructed machines can have very large state
//! spaces. [`doc`] provides a table export for small machines.

pub mod doc;
mod engine;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{ProjectiveMeasurement, QError, StateVector, TolerancePolicy, UnitaryOp};

pub(crate) use engine::{explore, sample_trajectory, Crossing, ExploreOptions, RegionSplit};
pub use engine::{
    run_deterministic, run_monte_carlo, run_probabilistic_exact, run_qcfa_exact, run_qcfa_leaves,
    step_cap_default, Leaf, DEFAULT_PRUNE_EPS, DEFAULT_STEP_CAP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineError {
    #[error("no transition for state {state} on symbol {symbol}")]
    UndefinedTransition { state: u64, symbol: TapeSymbol },
    #[error("transition requested from halting state {0}")]
    HaltingStateQueried(u64),
    #[error("head would leave the tape at position {0}")]
    HeadOutOfBounds(i64),
    #[error("malformed distribution for state {state}: weights sum to {total}")]
    MalformedDistribution { state: u64, total: f64 },
    #[error("action not allowed for a {kind:?} machine: {detail}")]
    KindMismatch { kind: MachineKind, detail: String },
    #[error("engine expects a {expected:?} machine, got {got:?}")]
    WrongEngine {
        expected: MachineKind,
        got: MachineKind,
    },
    #[error("invalid tape: {0}")]
    InvalidTape(String),
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
    #[error("probability mass leaked: total {0}")]
    MassLeak(f64),
    #[error("quantum: {0}")]
    Quantum(#[from] QError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TapeSymbol {
    Zero,
    One,
    Hash,
    LeftEnd,
    RightEnd,
}

impl TapeSymbol {
    pub const ALL: [TapeSymbol; 5] = [
        TapeSymbol::Zero,
        TapeSymbol::One,
        TapeSymbol::Hash,
        TapeSymbol::LeftEnd,
        TapeSymbol::RightEnd,
    ];

    pub fn as_char(self) -> char {
        match self {
            TapeSymbol::Zero => '0',
            TapeSymbol::One => '1',
            TapeSymbol::Hash => '#',
            TapeSymbol::LeftEnd => '¢',
            TapeSymbol::RightEnd => '$',
        }
    }

    /// `¢` may also be written `<`, and `$` as `>`.
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '0' => TapeSymbol::Zero,
            '1' => TapeSymbol::One,
            '#' => TapeSymbol::Hash,
            '¢' | '<' => TapeSymbol::LeftEnd,
            '$' | '>' => TapeSymbol::RightEnd,
            _ => return None,
        })
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            TapeSymbol::Zero => Some(false),
            TapeSymbol::One => Some(true),
            _ => None,
        }
    }

    pub fn from_bit(b: bool) -> Self {
        if b {
            TapeSymbol::One
        } else {
            TapeSymbol::Zero
        }
    }
}

impl fmt::Display for TapeSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl Serialize for TapeSymbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.as_char().to_string())
    }
}

impl<'de> Deserialize<'de> for TapeSymbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next().and_then(TapeSymbol::from_char), chars.next()) {
            (Some(sym), None) => Ok(sym),
            _ => Err(serde::de::Error::custom(format!("bad tape symbol {s:?}"))),
        }
    }
}

/// An input tape `¢ w $`; end markers appear only at the two ends.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tape(Vec<TapeSymbol>);

impl Tape {
    pub fn new(cells: Vec<TapeSymbol>) -> Result<Self, MachineError> {
        let n = cells.len();
        if n < 2 || cells[0] != TapeSymbol::LeftEnd || cells[n - 1] != TapeSymbol::RightEnd {
            return Err(MachineError::InvalidTape(
                "tape must be bracketed by ¢ and $".into(),
            ));
        }
        if cells[1..n - 1]
            .iter()
            .any(|s| matches!(s, TapeSymbol::LeftEnd | TapeSymbol::RightEnd))
        {
            return Err(MachineError::InvalidTape(
                "end marker in tape interior".into(),
            ));
        }
        Ok(Self(cells))
    }

    /// Wraps the interior word `w` as `¢ w $`.
    pub fn from_word(word: &[TapeSymbol]) -> Result<Self, MachineError> {
        let mut cells = Vec::with_capacity(word.len() + 2);
        cells.push(TapeSymbol::LeftEnd);
        cells.extend_from_slice(word);
        cells.push(TapeSymbol::RightEnd);
        Self::new(cells)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let word: Vec<TapeSymbol> = bits.iter().map(|&b| TapeSymbol::from_bit(b)).collect();
        Self::from_word(&word).expect("bit words never contain markers")
    }

    pub fn cells(&self) -> &[TapeSymbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of interior cells.
    pub fn word_len(&self) -> usize {
        self.0.len() - 2
    }
}

impl std::str::FromStr for Tape {
    type Err = MachineError;
    fn from_str(s: &str) -> Result<Self, MachineError> {
        let cells = s
            .chars()
            .map(|c| {
                TapeSymbol::from_char(c)
                    .ok_or_else(|| MachineError::InvalidTape(format!("bad symbol {c:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if cells.first() == Some(&TapeSymbol::LeftEnd) {
            Tape::new(cells)
        } else {
            Tape::from_word(&cells)
        }
    }
}

impl fmt::Display for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{s}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u64);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateFlag {
    Accepting,
    Rejecting,
    Neither,
}

impl StateFlag {
    pub fn is_halting(self) -> bool {
        self != StateFlag::Neither
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Left,
    Stay,
    Right,
}

impl Move {
    pub fn delta(self) -> i64 {
        match self {
            Move::Left => -1,
            Move::Stay => 0,
            Move::Right => 1,
        }
    }

    pub fn from_delta(d: i8) -> Option<Self> {
        match d {
            -1 => Some(Move::Left),
            0 => Some(Move::Stay),
            1 => Some(Move::Right),
            _ => None,
        }
    }
}

impl Serialize for Move {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.delta() as i8)
    }
}

impl<'de> Deserialize<'de> for Move {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Move::from_delta(v).ok_or_else(|| serde::de::Error::custom(format!("bad move {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub next: StateId,
    pub mv: Move,
}

/// What a machine does in one step from a non-halting state.
#[derive(Debug, Clone)]
pub enum Action {
    /// Classical move; the quantum register (if any) is untouched.
    Classical { next: StateId, mv: Move },
    /// Probabilistic choice.
    Random(Vec<Branch>),
    /// Unitary on the quantum register, then a classical move.
    Unitary {
        op: Arc<UnitaryOp>,
        next: StateId,
        mv: Move,
    },
    /// Projective measurement; outcome `k` selects `moves[k]`.
    Measure {
        measurement: Arc<ProjectiveMeasurement>,
        moves: Vec<(StateId, Move)>,
    },
}

impl Action {
    pub fn classical(next: StateId, mv: Move) -> Self {
        Action::Classical { next, mv }
    }
}

pub trait TransitionRule: Send + Sync + fmt::Debug {
    fn action(&self, state: StateId, symbol: TapeSymbol) -> Result<Action, MachineError>;
    fn flag(&self, state: StateId) -> StateFlag;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MachineKind {
    Deterministic,
    Probabilistic,
    QuantumClassical,
}

/// Where a machine came from: an explicit table or a named builder.
#[derive(Debug, Clone, PartialEq)]
pub enum MachineSource {
    Table,
    Builder {
        name: String,
        params: serde_json::Value,
    },
}

#[derive(Debug, Clone)]
pub struct MachineSpec {
    pub kind: MachineKind,
    pub classical_state_count: u64,
    pub quantum_dim: usize,
    pub initial_classical: StateId,
    pub initial_quantum: Option<StateVector>,
    pub rule: Arc<dyn TransitionRule>,
    pub source: MachineSource,
    pub tolerance: TolerancePolicy,
}

impl MachineSpec {
    pub fn new(
        kind: MachineKind,
        classical_state_count: u64,
        initial_classical: StateId,
        rule: Arc<dyn TransitionRule>,
    ) -> Self {
        Self {
            kind,
            classical_state_count,
            quantum_dim: 0,
            initial_classical,
            initial_quantum: None,
            rule,
            source: MachineSource::Table,
            tolerance: TolerancePolicy::default(),
        }
    }

    pub fn with_quantum(mut self, initial: StateVector) -> Self {
        self.quantum_dim = initial.dim();
        self.initial_quantum = Some(initial);
        self
    }

    pub fn with_source(mut self, source: MachineSource) -> Self {
        self.source = source;
        self
    }

    /// The same rule re-labelled as another kind; used to embed deterministic
    /// machines into the probabilistic and quantum-classical engines.
    pub fn lifted(&self, kind: MachineKind) -> MachineSpec {
        let mut m = self.clone();
        m.kind = kind;
        if kind == MachineKind::QuantumClassical && m.initial_quantum.is_none() {
            m.initial_quantum = Some(StateVector::basis(1, 0));
            m.quantum_dim = 1;
        }
        m
    }

    pub fn flag(&self, s: StateId) -> StateFlag {
        self.rule.flag(s)
    }
}

/// `log₂ |S| + log₂ max(dim Q, 1)`.
pub fn space_bits(m: &MachineSpec) -> f64 {
    (m.classical_state_count.max(1) as f64).log2() + (m.quantum_dim.max(1) as f64).log2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub accept_prob: f64,
    pub reject_prob: f64,
    /// Mass still live at the step cap, plus pruned branches.
    pub nonhalt_prob: f64,
    pub steps_max: u64,
    pub steps_expected: f64,
    pub space_bits: f64,
    pub queries_used: Option<u64>,
}

impl RunResult {
    pub fn total_prob(&self) -> f64 {
        self.accept_prob + self.reject_prob + self.nonhalt_prob
    }
}

/// Explicit transition table, for small machines and parsed documents.
#[derive(Debug, Clone, Default)]
pub struct TableRule {
    pub transitions: HashMap<(StateId, TapeSymbol), Action>,
    pub accepting: Vec<StateId>,
    pub rejecting: Vec<StateId>,
}

impl TableRule {
    pub fn new(accepting: Vec<StateId>, rejecting: Vec<StateId>) -> Result<Self, MachineError> {
        if accepting.iter().any(|a| rejecting.contains(a)) {
            return Err(MachineError::InvalidMachine(
                "accepting and rejecting sets overlap".into(),
            ));
        }
        Ok(Self {
            transitions: HashMap::new(),
            accepting,
            rejecting,
        })
    }

    pub fn set(&mut self, state: StateId, symbol: TapeSymbol, action: Action) -> &mut Self {
        self.transitions.insert((state, symbol), action);
        self
    }

    /// Same action for every symbol.
    pub fn set_all(&mut self, state: StateId, action: Action) -> &mut Self {
        for sym in TapeSymbol::ALL {
            self.transitions.insert((state, sym), action.clone());
        }
        self
    }
}

impl TransitionRule for TableRule {
    fn action(&self, state: StateId, symbol: TapeSymbol) -> Result<Action, MachineError> {
        if self.flag(state).is_halting() {
            return Err(MachineError::HaltingStateQueried(state.0));
        }
        self.transitions
            .get(&(state, symbol))
            .cloned()
            .ok_or(MachineError::UndefinedTransition {
                state: state.0,
                symbol,
            })
    }

    fn flag(&self, state: StateId) -> StateFlag {
        if self.accepting.contains(&state) {
            StateFlag::Accepting
        } else if self.rejecting.contains(&state) {
            StateFlag::Rejecting
        } else {
            StateFlag::Neither
        }
    }
}
