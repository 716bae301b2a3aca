//! Constructions: the query-program compilers (plain and AND-oracle tapes),
//! the prime-fingerprint machine for EQ, and the input-form checker.

use std::collections::VecDeque;
use std::hash::Hash;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machines::doc::{MachineBody, MachineDoc};
use crate::machines::{
    run_deterministic, run_probabilistic_exact, run_qcfa_exact, step_cap_default, Action,
    MachineError, MachineKind, MachineSpec, Move, RunResult, StateId, TableRule, Tape, TapeSymbol,
    DEFAULT_PRUNE_EPS,
};
use crate::qcore::{ProjectiveMeasurement, QError, UnitaryOp};
use crate::querymodel::{QueryError, QueryProgram};

mod fingerprint;
mod form;
mod query;

pub use fingerprint::{bad_prime_ratio, build_eq_fingerprint_2pfa, primes_in_range, PrimeRange};
pub use form::{build_form_checker, FormShape};
pub use query::{compile_and_oracle_program, compile_query_program};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown builder {0:?}")]
    UnknownBuilder(String),
    #[error("query program: {0}")]
    Query(#[from] QueryError),
    #[error("machine: {0}")]
    Machine(#[from] MachineError),
    #[error("quantum: {0}")]
    Quantum(#[from] QError),
}

/// Where a compiled machine came from, with what the step bound needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case")]
pub enum Provenance {
    QueryPlain {
        n: usize,
        block_queries: Vec<usize>,
        branching: bool,
    },
    QueryAnd {
        n: usize,
        block_queries: Vec<usize>,
        branching: bool,
    },
    EqFingerprint {
        n: usize,
        prime_range: PrimeRange,
    },
    FormChecker {
        n: usize,
        shape: FormShape,
    },
}

impl Provenance {
    pub fn total_queries(&self) -> u64 {
        match self {
            Provenance::QueryPlain { block_queries, .. }
            | Provenance::QueryAnd { block_queries, .. } => {
                block_queries.iter().sum::<usize>() as u64
            }
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledMachine {
    pub machine: MachineSpec,
    pub provenance: Provenance,
    pub classical_states: u64,
    /// The construction's nominal classical state count when it differs
    /// from what the built machine declares.
    pub nominal_classical_states: Option<u64>,
    pub quantum_dim: usize,
}

impl CompiledMachine {
    fn new(machine: MachineSpec, provenance: Provenance) -> Self {
        Self {
            classical_states: machine.classical_state_count,
            quantum_dim: machine.quantum_dim,
            nominal_classical_states: None,
            machine,
            provenance,
        }
    }

    pub fn n(&self) -> usize {
        match &self.provenance {
            Provenance::QueryPlain { n, .. }
            | Provenance::QueryAnd { n, .. }
            | Provenance::EqFingerprint { n, .. }
            | Provenance::FormChecker { n, .. } => *n,
        }
    }

    pub fn label(&self) -> &'static str {
        match &self.provenance {
            Provenance::QueryPlain { .. } => "query-plain",
            Provenance::QueryAnd { .. } => "query-and",
            Provenance::EqFingerprint { .. } => "eq-fingerprint",
            Provenance::FormChecker { .. } => "form-checker",
        }
    }

    /// Step cap used when running this machine: the compiled-machine default,
    /// never below the predicted bound.
    pub fn step_cap(&self, tape_len: usize) -> u64 {
        let bound = predicted_step_bound(self, tape_len).unwrap_or(0);
        step_cap_default(tape_len, self.provenance.total_queries()).max(bound + 1)
    }
}

/// Closed-form upper bound on `steps_max` over well-formed tapes of length `tape_len`.
///
/// With `L = tape_len`, a query block with `t` oracle calls costs at most
/// `(t + 1)·(2L + 2)` on plain tapes and `2 + t·(6n + 2)` on AND tapes;
/// branching programs add `3L + 4` (plain) or `2L + 2` (AND) per block for
/// verification and register reset; the form-check prefix costs `2L`.
pub fn predicted_step_bound(c: &CompiledMachine, tape_len: usize) -> Result<u64, CompileError> {
    let l = tape_len as u64;
    let form = 2 * l;
    Ok(match &c.provenance {
        Provenance::QueryPlain {
            block_queries,
            branching,
            ..
        } => {
            let extra = if *branching { 3 * l + 4 } else { 0 };
            form + block_queries
                .iter()
                .map(|&t| (t as u64 + 1) * (2 * l + 2) + extra)
                .sum::<u64>()
        }
        Provenance::QueryAnd {
            n,
            block_queries,
            branching,
        } => {
            let n = *n as u64;
            let extra = if *branching { 2 * l + 2 } else { 0 };
            form + block_queries
                .iter()
                .map(|&t| 2 + t as u64 * (6 * n + 2) + extra)
                .sum::<u64>()
        }
        Provenance::EqFingerprint { .. } | Provenance::FormChecker { .. } => l,
    })
}

/// Runs a compiled machine on the matching exact engine with its own step cap.
pub fn run_compiled(c: &CompiledMachine, tape: &Tape) -> Result<RunResult, MachineError> {
    let cap = c.step_cap(tape.len());
    let mut r = match c.machine.kind {
        MachineKind::Deterministic => run_deterministic(&c.machine, tape, cap)?,
        MachineKind::Probabilistic => run_probabilistic_exact(&c.machine, tape, cap)?,
        MachineKind::QuantumClassical => run_qcfa_exact(&c.machine, tape, cap, DEFAULT_PRUNE_EPS)?,
    };
    if matches!(
        c.provenance,
        Provenance::QueryPlain { .. } | Provenance::QueryAnd { .. }
    ) {
        r.queries_used = Some(c.provenance.total_queries());
    }
    Ok(r)
}

/// Resolves a machine document: tables directly, builder bodies by name.
pub fn machine_from_doc(doc: &MachineDoc) -> Result<MachineSpec, CompileError> {
    match compiled_from_doc(doc)? {
        Some(c) => Ok(c.machine),
        None => Ok(doc.to_table_machine()?),
    }
}

/// Rebuilds a builder document with its provenance; `None` for table bodies.
pub fn compiled_from_doc(doc: &MachineDoc) -> Result<Option<CompiledMachine>, CompileError> {
    let MachineBody::Builder { name, params } = &doc.body else {
        return Ok(None);
    };
    let bad = |e: serde_json::Error| CompileError::InvalidParameter(e.to_string());
    let n = || -> Result<usize, CompileError> {
        params
            .get("n")
            .and_then(|v| v.as_u64())
            .map(|v| v as usize)
            .ok_or_else(|| CompileError::InvalidParameter("missing n".into()))
    };
    let c = match name.as_str() {
        "eq_fingerprint" => {
            let range = match params.get("prime_range") {
                Some(v) => serde_json::from_value(v.clone()).map_err(bad)?,
                None => PrimeRange::default(),
            };
            build_eq_fingerprint_2pfa(n()?, range)?
        }
        "form_checker" => {
            let shape: FormShape = match params.get("shape") {
                Some(v) => serde_json::from_value(v.clone()).map_err(bad)?,
                None => FormShape::default(),
            };
            let n = n()?;
            CompiledMachine::new(
                build_form_checker(n, shape)?,
                Provenance::FormChecker { n, shape },
            )
        }
        "query_plain" | "query_and" => {
            let p: QueryProgram =
                serde_json::from_value(params.get("program").cloned().unwrap_or_default())
                    .map_err(bad)?;
            if name == "query_plain" {
                compile_query_program(&p)?
            } else {
                compile_and_oracle_program(&p)?
            }
        }
        other => return Err(CompileError::UnknownBuilder(other.to_string())),
    };
    Ok(Some(c))
}

/// One step of a node-level machine description.
pub(crate) enum Step<N> {
    Move(N, Move),
    Unitary(Arc<UnitaryOp>, N, Move),
    Measure(Arc<ProjectiveMeasurement>, Vec<(N, Move)>),
}

/// Interns the nodes reachable from `init` through `step` and emits a table.
/// `init`, `accept` and `reject` get ids 0, 1 and 2.
pub(crate) fn assemble<N, F>(
    init: N,
    accept: N,
    reject: N,
    step: F,
) -> Result<(TableRule, u64), MachineError>
where
    N: Hash + Eq + Clone,
    F: Fn(&N, TapeSymbol) -> Step<N>,
{
    let mut ids: IndexMap<N, StateId> = IndexMap::new();
    let mut queue = VecDeque::new();
    let intern = |node: N, ids: &mut IndexMap<N, StateId>, queue: &mut VecDeque<N>| -> StateId {
        let next = StateId(ids.len() as u64);
        *ids.entry(node.clone()).or_insert_with(|| {
            queue.push_back(node);
            next
        })
    };
    intern(init, &mut ids, &mut queue);
    let acc = intern(accept.clone(), &mut ids, &mut queue);
    let rej = intern(reject.clone(), &mut ids, &mut queue);
    let mut rule = TableRule::new(vec![acc], vec![rej])?;
    while let Some(node) = queue.pop_front() {
        if node == accept || node == reject {
            continue;
        }
        let from = ids[&node];
        for sym in TapeSymbol::ALL {
            let action = match step(&node, sym) {
                Step::Move(to, mv) => Action::Classical {
                    next: intern(to, &mut ids, &mut queue),
                    mv,
                },
                Step::Unitary(op, to, mv) => Action::Unitary {
                    op,
                    next: intern(to, &mut ids, &mut queue),
                    mv,
                },
                Step::Measure(measurement, moves) => Action::Measure {
                    measurement,
                    moves: moves
                        .into_iter()
                        .map(|(to, mv)| (intern(to, &mut ids, &mut queue), mv))
                        .collect(),
                },
            };
            rule.set(from, sym, action);
        }
    }
    let count = ids.len() as u64;
    Ok((rule, count))
}
