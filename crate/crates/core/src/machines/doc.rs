//! Textual machine documents (JSON).
//!
//! A document carries `kind`, `classical_state_count`, `quantum_dim`, the
//! initial states, and a `body` that is either an explicit transition table
//! or a named builder with parameters:
//!
//! ```json
//! { "kind": "probabilistic", "classical_state_count": 1234, "quantum_dim": 0,
//!   "initial_classical": 0,
//!   "body": { "type": "builder", "name": "eq_fingerprint", "params": { "n": 8 } } }
//! ```
//!
//! Table actions are tagged by `op`: `move`, `random`, `unitary` (operator as
//! rows of `[re, im]` pairs) and `measure`. Moves are `-1`, `0` or `1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    Action, Branch, MachineError, MachineKind, MachineSource, MachineSpec, Move, StateFlag,
    StateId, TableRule, TapeSymbol,
};
use crate::qcore::{ProjectiveMeasurement, StateVector, TolerancePolicy, UnitaryOp, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineDoc {
    pub kind: MachineKind,
    pub classical_state_count: u64,
    pub quantum_dim: usize,
    pub initial_classical: StateId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_quantum: Option<Vec<C64>>,
    pub body: MachineBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MachineBody {
    Table {
        accepting: Vec<StateId>,
        rejecting: Vec<StateId>,
        transitions: Vec<TransitionDoc>,
    },
    Builder {
        name: String,
        params: serde_json::Value,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub state: StateId,
    pub symbol: TapeSymbol,
    pub action: ActionDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub next: StateId,
    pub mv: Move,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTarget {
    pub weight: f64,
    pub next: StateId,
    pub mv: Move,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum ActionDoc {
    Move {
        next: StateId,
        mv: Move,
    },
    Random {
        branches: Vec<WeightedTarget>,
    },
    Unitary {
        unitary: UnitaryOp,
        next: StateId,
        mv: Move,
    },
    Measure {
        measurement: ProjectiveMeasurement,
        moves: Vec<Target>,
    },
}

impl From<&Action> for ActionDoc {
    fn from(a: &Action) -> Self {
        match a {
            Action::Classical { next, mv } => ActionDoc::Move {
                next: *next,
                mv: *mv,
            },
            Action::Random(bs) => ActionDoc::Random {
                branches: bs
                    .iter()
                    .map(|b| WeightedTarget {
                        weight: b.weight,
                        next: b.next,
                        mv: b.mv,
                    })
                    .collect(),
            },
            Action::Unitary { op, next, mv } => ActionDoc::Unitary {
                unitary: op.as_ref().clone(),
                next: *next,
                mv: *mv,
            },
            Action::Measure { measurement, moves } => ActionDoc::Measure {
                measurement: measurement.as_ref().clone(),
                moves: moves
                    .iter()
                    .map(|&(next, mv)| Target { next, mv })
                    .collect(),
            },
        }
    }
}

impl From<ActionDoc> for Action {
    fn from(a: ActionDoc) -> Self {
        match a {
            ActionDoc::Move { next, mv } => Action::Classical { next, mv },
            ActionDoc::Random { branches } => Action::Random(
                branches
                    .into_iter()
                    .map(|b| Branch {
                        weight: b.weight,
                        next: b.next,
                        mv: b.mv,
                    })
                    .collect(),
            ),
            ActionDoc::Unitary { unitary, next, mv } => Action::Unitary {
                op: Arc::new(unitary),
                next,
                mv,
            },
            ActionDoc::Measure { measurement, moves } => Action::Measure {
                measurement: Arc::new(measurement),
                moves: moves.into_iter().map(|t| (t.next, t.mv)).collect(),
            },
        }
    }
}

impl MachineDoc {
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn from_text(text: &str) -> Result<Self, MachineError> {
        serde_json::from_str(text).map_err(|e| MachineError::InvalidMachine(e.to_string()))
    }

    fn header(m: &MachineSpec, body: MachineBody) -> Self {
        MachineDoc {
            kind: m.kind,
            classical_state_count: m.classical_state_count,
            quantum_dim: m.quantum_dim,
            initial_classical: m.initial_classical,
            initial_quantum: m.initial_quantum.as_ref().map(|q| q.amps().to_vec()),
            body,
        }
    }

    /// Builder machines emit their builder reference; table machines emit the table.
    pub fn from_machine(m: &MachineSpec) -> Result<Self, MachineError> {
        match &m.source {
            MachineSource::Builder { name, params } => Ok(Self::header(
                m,
                MachineBody::Builder {
                    name: name.clone(),
                    params: params.clone(),
                },
            )),
            MachineSource::Table => export_table(m, 1 << 16),
        }
    }

    /// Rebuilds a table machine. Builder bodies are resolved by
    /// [`crate::compile::machine_from_doc`].
    pub fn to_table_machine(&self) -> Result<MachineSpec, MachineError> {
        let MachineBody::Table {
            accepting,
            rejecting,
            transitions,
        } = &self.body
        else {
            return Err(MachineError::InvalidMachine(
                "document has a builder body".into(),
            ));
        };
        let mut rule = TableRule::new(accepting.clone(), rejecting.clone())?;
        for t in transitions {
            if t.state.0 >= self.classical_state_count {
                return Err(MachineError::InvalidMachine(format!(
                    "state {} out of range",
                    t.state
                )));
            }
            rule.set(t.state, t.symbol, t.action.clone().into());
        }
        let mut m = MachineSpec::new(
            self.kind,
            self.classical_state_count,
            self.initial_classical,
            Arc::new(rule),
        );
        if let Some(amps) = &self.initial_quantum {
            let q = StateVector::normalized(amps.clone(), &TolerancePolicy::default())?;
            if q.dim() != self.quantum_dim {
                return Err(MachineError::InvalidMachine(
                    "initial quantum state has wrong dimension".into(),
                ));
            }
            m = m.with_quantum(q);
        } else if self.quantum_dim > 0 {
            return Err(MachineError::InvalidMachine(
                "quantum_dim > 0 without initial state".into(),
            ));
        }
        Ok(m)
    }
}

/// Materializes any machine whose state ids are `0..classical_state_count`
/// into an explicit table. Undefined `(state, symbol)` pairs are omitted.
pub fn export_table(m: &MachineSpec, max_states: u64) -> Result<MachineDoc, MachineError> {
    if m.classical_state_count > max_states {
        return Err(MachineError::InvalidMachine(format!(
            "{} states exceeds table export limit {max_states}",
            m.classical_state_count
        )));
    }
    let mut accepting = Vec::new();
    let mut rejecting = Vec::new();
    let mut transitions = Vec::new();
    for s in (0..m.classical_state_count).map(StateId) {
        match m.flag(s) {
            StateFlag::Accepting => accepting.push(s),
            StateFlag::Rejecting => rejecting.push(s),
            StateFlag::Neither => {
                for symbol in TapeSymbol::ALL {
                    match m.rule.action(s, symbol) {
                        Ok(a) => transitions.push(TransitionDoc {
                            state: s,
                            symbol,
                            action: (&a).into(),
                        }),
                        Err(MachineError::UndefinedTransition { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(MachineDoc::header(
        m,
        MachineBody::Table {
            accepting,
            rejecting,
            transitions,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::{run_probabilistic_exact, run_qcfa_exact, Tape};

    fn coin_then_measure() -> MachineSpec {
        let mut t = TableRule::new(vec![StateId(2)], vec![StateId(3)]).unwrap();
        t.set(
            StateId(0),
            TapeSymbol::LeftEnd,
            Action::Unitary {
                op: Arc::new(UnitaryOp::sign_diagonal([false, true])),
                next: StateId(1),
                mv: Move::Right,
            },
        );
        t.set_all(StateId(1), Action::classical(StateId(1), Move::Right));
        t.set(
            StateId(1),
            TapeSymbol::RightEnd,
            Action::Measure {
                measurement: Arc::new(ProjectiveMeasurement::computational(2)),
                moves: vec![(StateId(2), Move::Stay), (StateId(3), Move::Stay)],
            },
        );
        let h = std::f64::consts::FRAC_1_SQRT_2;
        MachineSpec::new(MachineKind::QuantumClassical, 4, StateId(0), Arc::new(t))
            .with_quantum(StateVector::from_real(&[h, h]).unwrap())
    }

    #[test]
    fn table_round_trip_is_identity() {
        let m = coin_then_measure();
        let text = MachineDoc::from_machine(&m).unwrap().to_text();
        let parsed = MachineDoc::from_text(&text).unwrap();
        assert_eq!(parsed.to_text(), text);
        let rebuilt = parsed.to_table_machine().unwrap();
        assert_eq!(MachineDoc::from_machine(&rebuilt).unwrap().to_text(), text);
        let tape: Tape = "¢01$".parse().unwrap();
        assert_eq!(
            run_qcfa_exact(&m, &tape, 50, 0.0).unwrap(),
            run_qcfa_exact(&rebuilt, &tape, 50, 0.0).unwrap()
        );
    }

    #[test]
    fn probabilistic_table_round_trip() {
        let mut t = TableRule::new(vec![StateId(1)], vec![StateId(2)]).unwrap();
        t.set_all(
            StateId(0),
            Action::Random(vec![
                Branch {
                    weight: 0.25,
                    next: StateId(1),
                    mv: Move::Stay,
                },
                Branch {
                    weight: 0.75,
                    next: StateId(2),
                    mv: Move::Stay,
                },
            ]),
        );
        let m = MachineSpec::new(MachineKind::Probabilistic, 3, StateId(0), Arc::new(t));
        let doc = MachineDoc::from_machine(&m).unwrap();
        let back = MachineDoc::from_text(&doc.to_text())
            .unwrap()
            .to_table_machine()
            .unwrap();
        let tape: Tape = "¢$".parse().unwrap();
        assert_eq!(
            run_probabilistic_exact(&back, &tape, 5)
                .unwrap()
                .accept_prob,
            0.25
        );
    }

    #[test]
    fn malformed_documents_rejected() {
        assert!(MachineDoc::from_text("{\"kind\": \"deterministic\"}").is_err());
        let mut doc = MachineDoc::from_machine(&coin_then_measure()).unwrap();
        doc.initial_quantum = Some(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(doc.to_table_machine().is_err());
    }
}
