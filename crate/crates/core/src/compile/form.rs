use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{assemble, CompileError, Step};
use crate::machines::{MachineKind, MachineSource, MachineSpec, Move, StateId, TapeSymbol};

/// Tape shapes a form check accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FormShape {
    /// `¢ x #ⁿ y $` with `x, y ∈ {0,1}ⁿ`.
    #[default]
    Pair,
    /// `¢ x $` with `x ∈ {0,1}ⁿ`.
    Plain,
}

impl FormShape {
    pub fn tape_len(self, n: usize) -> usize {
        match self {
            FormShape::Pair => 3 * n + 2,
            FormShape::Plain => n + 2,
        }
    }
}

pub(crate) enum Scan {
    Continue,
    Done,
    Bad,
}

/// Verdict for reading `sym` at tape position `pos` during a left-to-right
/// form scan.
pub(crate) fn scan(shape: FormShape, n: usize, pos: usize, sym: TapeSymbol) -> Scan {
    let last = shape.tape_len(n) - 1;
    let ok = if pos == 0 {
        sym == TapeSymbol::LeftEnd
    } else if pos == last {
        sym == TapeSymbol::RightEnd
    } else if shape == FormShape::Pair && (n + 1..=2 * n).contains(&pos) {
        sym == TapeSymbol::Hash
    } else {
        sym.bit().is_some()
    };
    match (ok, pos == last) {
        (false, _) => Scan::Bad,
        (true, true) => Scan::Done,
        (true, false) => Scan::Continue,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    At(usize),
    Accept,
    Reject,
}

/// Deterministic single left-to-right pass with a position counter; accepts
/// exactly the well-formed tapes of `shape`. Uses `tape_len + 2` states.
pub fn build_form_checker(n: usize, shape: FormShape) -> Result<MachineSpec, CompileError> {
    if n == 0 {
        return Err(CompileError::InvalidParameter(
            "form check needs n ≥ 1".into(),
        ));
    }
    let (rule, count) = assemble(Node::At(0), Node::Accept, Node::Reject, |node, sym| {
        let Node::At(pos) = *node else {
            unreachable!("halting nodes have no steps")
        };
        match scan(shape, n, pos, sym) {
            Scan::Continue => Step::Move(Node::At(pos + 1), Move::Right),
            Scan::Done => Step::Move(Node::Accept, Move::Stay),
            Scan::Bad => Step::Move(Node::Reject, Move::Stay),
        }
    })?;
    Ok(MachineSpec::new(
        MachineKind::Deterministic,
        count,
        StateId(0),
        Arc::new(rule),
    )
    .with_source(MachineSource::Builder {
        name: "form_checker".into(),
        params: serde_json::json!({ "n": n, "shape": shape }),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::{run_deterministic, Tape};

    fn accepts(n: usize, shape: FormShape, tape: &str) -> bool {
        let m = build_form_checker(n, shape).unwrap();
        let t: Tape = tape.parse().unwrap();
        run_deterministic(&m, &t, 1000).unwrap().accept_prob == 1.0
    }

    #[test]
    fn examples() {
        assert!(accepts(2, FormShape::Pair, "¢01##01$"));
        assert!(!accepts(2, FormShape::Pair, "¢01#01$"));
        assert!(accepts(4, FormShape::Plain, "¢0110$"));
        assert!(!accepts(4, FormShape::Plain, "¢011$"));
        assert!(!accepts(2, FormShape::Pair, "¢01##011$"));
        assert!(!accepts(2, FormShape::Pair, "¢0#1##1$"));
        assert!(build_form_checker(0, FormShape::Plain).is_err());
    }

    #[test]
    fn hand_trace_of_length_walk() {
        let m = build_form_checker(2, FormShape::Pair).unwrap();
        let r = run_deterministic(&m, &"¢01##01$".parse().unwrap(), 1000).unwrap();
        // seven moves right, then the accepting step on `$`
        assert_eq!(r.steps_max, 8);
        assert_eq!(m.classical_state_count, 10);
    }

    /// Every tape over `{0,1,#}` of length up to `3n + 1` is checked against a
    /// direct string test.
    #[test]
    fn exhaustive_small_tapes() {
        let alphabet = ['0', '1', '#'];
        for n in 1..=2usize {
            for shape in [FormShape::Pair, FormShape::Plain] {
                let m = build_form_checker(n, shape).unwrap();
                for len in 0..=3 * n + 1 {
                    for code in 0..3usize.pow(len as u32) {
                        let word: String = (0..len)
                            .map(|k| alphabet[code / 3usize.pow(k as u32) % 3])
                            .collect();
                        let want = match shape {
                            FormShape::Plain => word.len() == n && !word.contains('#'),
                            FormShape::Pair => {
                                word.len() == 3 * n
                                    && !word[..n].contains('#')
                                    && word[n..2 * n].chars().all(|c| c == '#')
                                    && !word[2 * n..].contains('#')
                            }
                        };
                        let t: Tape = word.parse().unwrap();
                        let got = run_deterministic(&m, &t, 1000).unwrap().accept_prob == 1.0;
                        assert_eq!(got, want, "{shape:?} n={n} {word}");
                    }
                }
            }
        }
    }
}
