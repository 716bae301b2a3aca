//! Query programs lowered to quantum-classical two-way machines.
//!
//! The register is the program's `(n+1)·m`-dimensional space plus one fresh
//! basis state `|0⟩` at index 0, tensored with an auxiliary qubit on AND
//! tapes (auxiliary value is the fast index). The machine starts in `|0⟩`,
//! and each block begins at `¢` with one unitary taking `|0⟩` to `U_0|ψ_s⟩`.
//!
//! On `¢ x $` an oracle call is one left-to-right sweep applying the phase
//! `(-1)^{x_i}` to `|i, ·⟩` at cell `i`; `U_k` is applied at `$` and the head
//! walks back. On `¢ x #ⁿ y $` it is the three-pass walk: forward over `x`
//! flipping the auxiliary qubit on `|i, ·⟩` when `x_i = 1`, forward over `y`
//! putting a phase on auxiliary value 1 when `y_i = 1`, and back over `x`
//! undoing the flips; `U_k` is applied at `¢`.
//!
//! Index verification walks the head to the cells named by the outcome. A
//! failed block measures the register in the computational basis, swaps the
//! outcome back to `|0⟩` and rewinds to `¢` for the next block.

use std::sync::Arc;

use super::form::{scan, FormShape, Scan};
use super::{assemble, CompileError, CompiledMachine, Provenance, Step};
use crate::machines::{MachineKind, MachineSource, MachineSpec, Move, StateId, TapeSymbol};
use crate::qcore::{
    Grid, ProjectiveMeasurement, StateVector, TolerancePolicy, UnitaryOp, C64, ONE, ZERO,
};
use crate::querymodel::{Continuation, QueryProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Plain,
    And,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    Form(usize),
    FormRewind,
    Accept,
    Reject,
    Init(usize),
    Meas(usize),
    /// Plain sweep `(block, call, cell)`, cell `n + 1` being `$`.
    Fwd(usize, usize, usize),
    Back(usize, usize),
    /// AND forward over `x`, over `#ⁿ`, over `y` (cell `n + 1` is `$`).
    FwdX(usize, usize, usize),
    FwdHash(usize, usize),
    FwdY(usize, usize, usize),
    /// AND backward over `y`, over `#ⁿ`, over `x` (cell 0 is `¢`).
    BackY(usize, usize),
    BackHash(usize, usize),
    BackX(usize, usize, usize),
    VerifyRewind(usize, usize),
    /// Right moves left before reading `x_i`, then `y_i`.
    VerifyX(usize, usize),
    VerifyY(usize, usize),
    /// Reset measurement before entering the next block.
    Fail(usize),
    Swap(usize, usize),
    Rewind(usize),
}

struct BlockOps {
    queries: usize,
    prepare: Arc<UnitaryOp>,
    after: Vec<Arc<UnitaryOp>>,
    measurement: Arc<ProjectiveMeasurement>,
    continuations: Vec<(Continuation, u64)>,
}

struct Lowering {
    layout: Layout,
    n: usize,
    dim: usize,
    blocks: Vec<BlockOps>,
    /// Per cell `i`: plain phase `Θ_{i,1}` or AND auxiliary flip `U_{i,1}`.
    cell_x: Vec<Arc<UnitaryOp>>,
    /// AND phase `V_{i,1}`.
    cell_y: Vec<Arc<UnitaryOp>>,
    reset: Arc<ProjectiveMeasurement>,
    swaps: Vec<Arc<UnitaryOp>>,
}

fn lifted_tol() -> TolerancePolicy {
    TolerancePolicy::new(1e-9, 1e-7, 1e-9).expect("valid tolerances")
}

impl Lowering {
    fn new(p: &QueryProgram, layout: Layout) -> Result<Self, CompileError> {
        p.validate()?;
        let (n, m) = (p.n, p.m);
        let aux = if layout == Layout::And { 2 } else { 1 };
        let dim = (p.dim() + 1) * aux;
        let tol = lifted_tol();
        let reg = |i: usize, j: usize| 1 + i * m + j;

        let lift = |u: &UnitaryOp| -> Result<Arc<UnitaryOp>, CompileError> {
            if let Some(d) = u.diagonal_entries() {
                let entries = std::iter::once(ONE)
                    .chain(d.iter().copied())
                    .flat_map(|z| std::iter::repeat(z).take(aux))
                    .collect();
                return Ok(Arc::new(UnitaryOp::diagonal(entries, &tol)?));
            }
            let g = u.to_grid().with_leading_identity().tensor_identity(aux);
            Ok(Arc::new(UnitaryOp::dense(g, &tol)?))
        };

        let mut blocks = Vec::with_capacity(p.blocks.len());
        for b in &p.blocks {
            // Householder reflection taking the fresh |0⟩ to |ψ_s⟩
            let mut w: Vec<C64> = std::iter::once(ONE)
                .chain(b.start.amps().iter().map(|a| -a))
                .collect();
            let norm = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in &mut w {
                *a /= norm;
            }
            let house = Grid::identity(w.len()).add(&Grid::outer(&w).scale(C64::new(-2.0, 0.0)));
            let prep = b.unitaries[0]
                .to_grid()
                .with_leading_identity()
                .matmul(&house);
            let measurement = ProjectiveMeasurement::new(
                b.measurement
                    .projectors()
                    .iter()
                    .enumerate()
                    .map(|(k, pr)| pr.with_leading(k == 0).tensor_identity(aux))
                    .collect(),
                b.measurement.labels().to_vec(),
                &tol,
            )?;
            blocks.push(BlockOps {
                queries: b.queries(),
                prepare: Arc::new(UnitaryOp::dense(prep.tensor_identity(aux), &tol)?),
                after: b.unitaries[1..]
                    .iter()
                    .map(&lift)
                    .collect::<Result<_, _>>()?,
                measurement: Arc::new(measurement),
                continuations: b
                    .continuations
                    .iter()
                    .copied()
                    .zip(b.measurement.labels().iter().copied())
                    .collect(),
            });
        }

        let mut cell_x = vec![Arc::new(UnitaryOp::identity(dim))];
        let mut cell_y = vec![Arc::new(UnitaryOp::identity(dim))];
        for i in 1..=n {
            let on_cell = |k: usize| (k / aux) >= reg(i, 0) && (k / aux) < reg(i, 0) + m;
            match layout {
                Layout::Plain => {
                    cell_x.push(Arc::new(UnitaryOp::sign_diagonal((0..dim).map(on_cell))))
                }
                Layout::And => {
                    let perm = (0..dim)
                        .map(|k| if on_cell(k) { k ^ 1 } else { k })
                        .collect();
                    cell_x.push(Arc::new(UnitaryOp::permutation(perm)?));
                    cell_y.push(Arc::new(UnitaryOp::sign_diagonal(
                        (0..dim).map(|k| on_cell(k) && k % 2 == 1),
                    )));
                }
            }
        }
        let swaps = (0..dim)
            .map(|k| {
                let mut perm: Vec<usize> = (0..dim).collect();
                perm.swap(0, k);
                UnitaryOp::permutation(perm).map(Arc::new)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            layout,
            n,
            dim,
            blocks,
            cell_x,
            cell_y,
            reset: Arc::new(ProjectiveMeasurement::computational(dim)),
            swaps,
        })
    }

    fn shape(&self) -> FormShape {
        match self.layout {
            Layout::Plain => FormShape::Plain,
            Layout::And => FormShape::Pair,
        }
    }

    fn first_pass(&self, b: usize, k: usize) -> Node {
        match self.layout {
            Layout::Plain => Node::Fwd(b, k, 1),
            Layout::And => Node::FwdX(b, k, 1),
        }
    }

    fn fail(&self, b: usize) -> Node {
        if b + 1 < self.blocks.len() {
            Node::Fail(b)
        } else {
            Node::Reject
        }
    }

    /// Applies `op` when the cell holds a 1, else just moves.
    fn on_bit(&self, bit: bool, op: &Arc<UnitaryOp>, next: Node, mv: Move) -> Step<Node> {
        if bit {
            Step::Unitary(op.clone(), next, mv)
        } else {
            Step::Move(next, mv)
        }
    }

    /// `U_k` followed by the next call's pass or the block measurement.
    fn after_call(&self, b: usize, k: usize, forward: Move, continue_at: Node) -> Step<Node> {
        let block = &self.blocks[b];
        let op = block.after[k - 1].clone();
        if k < block.queries {
            Step::Unitary(op, continue_at, forward)
        } else {
            Step::Unitary(op, Node::Meas(b), Move::Stay)
        }
    }

    fn step(&self, node: &Node, sym: TapeSymbol) -> Step<Node> {
        use Node::*;
        use TapeSymbol::{Hash, LeftEnd, RightEnd};
        let n = self.n;
        let bit = sym.bit();
        let reject = Step::Move(Reject, Move::Stay);
        match *node {
            Accept | Reject => unreachable!("halting nodes have no steps"),
            Form(pos) => match scan(self.shape(), n, pos, sym) {
                Scan::Bad => reject,
                Scan::Continue => Step::Move(Form(pos + 1), Move::Right),
                Scan::Done => Step::Move(FormRewind, Move::Left),
            },
            FormRewind | Rewind(_) | VerifyRewind(..) if sym != LeftEnd => {
                Step::Move(node.clone(), Move::Left)
            }
            FormRewind => Step::Move(Init(0), Move::Stay),
            Rewind(b) => Step::Move(Init(b), Move::Stay),
            VerifyRewind(b, i) => Step::Move(VerifyX(b, i - 1), Move::Right),
            Init(b) => {
                let block = &self.blocks[b];
                if sym != LeftEnd {
                    reject
                } else if block.queries == 0 {
                    Step::Unitary(block.prepare.clone(), Meas(b), Move::Stay)
                } else {
                    Step::Unitary(block.prepare.clone(), self.first_pass(b, 1), Move::Right)
                }
            }
            Meas(b) => {
                let block = &self.blocks[b];
                let moves = block
                    .continuations
                    .iter()
                    .map(|&(c, label)| match c {
                        Continuation::Accept => (Accept, Move::Stay),
                        Continuation::Reject => (Reject, Move::Stay),
                        Continuation::Next => (self.fail(b), Move::Stay),
                        Continuation::VerifyIndex if (1..=n as u64).contains(&label) => {
                            (VerifyRewind(b, label as usize), Move::Stay)
                        }
                        Continuation::VerifyIndex => (self.fail(b), Move::Stay),
                    })
                    .collect();
                Step::Measure(block.measurement.clone(), moves)
            }

            Fwd(b, k, i) if i <= n => match bit {
                Some(x) => self.on_bit(x, &self.cell_x[i], Fwd(b, k, i + 1), Move::Right),
                None => reject,
            },
            Fwd(b, k, _) if sym == RightEnd => self.after_call(b, k, Move::Left, Back(b, k)),
            Fwd(..) => reject,
            Back(b, k) if sym == LeftEnd => Step::Move(Fwd(b, k + 1, 1), Move::Right),
            Back(..) => Step::Move(node.clone(), Move::Left),

            FwdX(b, k, i) => match bit {
                Some(x) => {
                    let next = if i < n {
                        FwdX(b, k, i + 1)
                    } else {
                        FwdHash(b, k)
                    };
                    self.on_bit(x, &self.cell_x[i], next, Move::Right)
                }
                None => reject,
            },
            FwdHash(b, k) => match bit {
                _ if sym == Hash => Step::Move(node.clone(), Move::Right),
                Some(y) => self.on_bit(y, &self.cell_y[1], FwdY(b, k, 2), Move::Right),
                None => reject,
            },
            FwdY(b, k, i) if i <= n => match bit {
                Some(y) => self.on_bit(y, &self.cell_y[i], FwdY(b, k, i + 1), Move::Right),
                None => reject,
            },
            FwdY(b, k, _) if sym == RightEnd => Step::Move(BackY(b, k), Move::Left),
            FwdY(..) => reject,
            BackY(b, k) if sym == Hash => Step::Move(BackHash(b, k), Move::Left),
            BackY(..) => Step::Move(node.clone(), Move::Left),
            BackHash(b, k) => match bit {
                _ if sym == Hash => Step::Move(node.clone(), Move::Left),
                Some(x) => self.on_bit(x, &self.cell_x[n], BackX(b, k, n - 1), Move::Left),
                None => reject,
            },
            BackX(b, k, 0) if sym == LeftEnd => {
                self.after_call(b, k, Move::Right, FwdX(b, k + 1, 1))
            }
            BackX(b, k, i) => match bit {
                Some(x) if i > 0 => self.on_bit(x, &self.cell_x[i], BackX(b, k, i - 1), Move::Left),
                _ => reject,
            },

            VerifyX(b, r) | VerifyY(b, r) if r > 0 => {
                let next = if matches!(node, VerifyX(..)) {
                    VerifyX(b, r - 1)
                } else {
                    VerifyY(b, r - 1)
                };
                Step::Move(next, Move::Right)
            }
            VerifyX(b, _) => match (bit, self.layout) {
                (Some(true), Layout::Plain) => Step::Move(Accept, Move::Stay),
                (Some(true), Layout::And) => Step::Move(VerifyY(b, 2 * n - 1), Move::Right),
                (Some(false), _) => Step::Move(self.fail(b), Move::Stay),
                (None, _) => reject,
            },
            VerifyY(b, _) => match bit {
                Some(true) => Step::Move(Accept, Move::Stay),
                Some(false) => Step::Move(self.fail(b), Move::Stay),
                None => reject,
            },
            Fail(b) => Step::Measure(
                self.reset.clone(),
                (0..self.dim)
                    .map(|k| (Swap(b + 1, k), Move::Stay))
                    .collect(),
            ),
            Swap(b, 0) => Step::Move(Rewind(b), Move::Stay),
            Swap(b, k) => Step::Unitary(self.swaps[k].clone(), Rewind(b), Move::Stay),
        }
    }

    fn build(self, p: &QueryProgram) -> Result<CompiledMachine, CompileError> {
        let (rule, count) = assemble(Node::Form(0), Node::Accept, Node::Reject, |node, sym| {
            self.step(node, sym)
        })?;
        let block_queries = self.blocks.iter().map(|b| b.queries).collect();
        let branching = !p.is_straight_line();
        let (name, provenance) = match self.layout {
            Layout::Plain => (
                "query_plain",
                Provenance::QueryPlain {
                    n: p.n,
                    block_queries,
                    branching,
                },
            ),
            Layout::And => (
                "query_and",
                Provenance::QueryAnd {
                    n: p.n,
                    block_queries,
                    branching,
                },
            ),
        };
        let mut init = vec![ZERO; self.dim];
        init[0] = ONE;
        let machine = MachineSpec::new(
            MachineKind::QuantumClassical,
            count,
            StateId(0),
            Arc::new(rule),
        )
        .with_quantum(StateVector::new(init)?)
        .with_source(MachineSource::Builder {
            name: name.into(),
            params: serde_json::json!({ "n": p.n, "program": p }),
        });
        Ok(CompiledMachine::new(machine, provenance))
    }
}

/// Lowers `p` to a machine over `¢ x $`, `x ∈ {0,1}ⁿ`, preceded by a form check.
pub fn compile_query_program(p: &QueryProgram) -> Result<CompiledMachine, CompileError> {
    Lowering::new(p, Layout::Plain)?.build(p)
}

/// Lowers `p` to a machine over `¢ x #ⁿ y $` computing `p` on `x ∧ y`, with
/// one auxiliary qubit and a form check.
pub fn compile_and_oracle_program(p: &QueryProgram) -> Result<CompiledMachine, CompileError> {
    Lowering::new(p, Layout::And)?.build(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{machine_from_doc, predicted_step_bound, run_compiled};
    use crate::langs::{and_bits, bits_of, encode_pair, parse_bits};
    use crate::machines::doc::MachineDoc;
    use crate::machines::{run_qcfa_leaves, Tape, DEFAULT_PRUNE_EPS};
    use crate::qcore::Projector;
    use crate::querymodel::{
        default_grover_schedule, grover_program, oracle_matrix, parity2_program,
        random_straight_line, run_query_program,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plain_run(c: &CompiledMachine, x: &[bool]) -> crate::machines::RunResult {
        run_compiled(c, &Tape::from_bits(x)).unwrap()
    }

    fn pair_run(c: &CompiledMachine, x: &[bool], y: &[bool]) -> crate::machines::RunResult {
        run_compiled(c, &encode_pair(x, y).unwrap()).unwrap()
    }

    #[test]
    fn zero_query_full_accept_projector() {
        let n = 3;
        let m = ProjectiveMeasurement::new(
            vec![
                Projector::basis(4, vec![]),
                Projector::basis(4, vec![0, 1, 2, 3]),
            ],
            vec![0, 1],
            &TolerancePolicy::default(),
        )
        .unwrap();
        let p = QueryProgram::straight_line(
            n,
            1,
            StateVector::basis(4, 2),
            vec![UnitaryOp::identity(4)],
            m,
        )
        .unwrap();
        let c = compile_query_program(&p).unwrap();
        for v in 0..8 {
            let r = plain_run(&c, &bits_of(v, n));
            assert!((r.accept_prob - 1.0).abs() < 1e-12);
            assert!(r.steps_max <= predicted_step_bound(&c, n + 2).unwrap());
        }
    }

    #[test]
    fn parity2_plain_exact() {
        let c = compile_query_program(&parity2_program()).unwrap();
        for v in 0..4 {
            let x = bits_of(v, 2);
            let r = plain_run(&c, &x);
            let want = (x[0] ^ x[1]) as u8 as f64;
            assert!((r.accept_prob - want).abs() < 1e-12);
            assert!(r.nonhalt_prob < 1e-12);
            let bound = predicted_step_bound(&c, 4).unwrap();
            assert!(r.steps_max <= bound);
            assert!(bound <= 3 * 3 * 4 + 8);
        }
        assert_eq!(c.quantum_dim, 4);
    }

    #[test]
    fn parity2_and_over_all_ones() {
        let c = compile_and_oracle_program(&parity2_program()).unwrap();
        for v in 0..4 {
            for w in 0..4 {
                let (x, y) = (bits_of(v, 2), bits_of(w, 2));
                let z = and_bits(&x, &y).unwrap();
                let r = pair_run(&c, &x, &y);
                assert!((r.accept_prob - (z[0] ^ z[1]) as u8 as f64).abs() < 1e-9);
            }
        }
        assert_eq!(c.quantum_dim, 8);
    }

    #[test]
    fn malformed_tapes_rejected() {
        let c = compile_query_program(&parity2_program()).unwrap();
        for t in ["¢1$", "¢101$", "¢1#$"] {
            assert_eq!(
                run_compiled(&c, &t.parse().unwrap()).unwrap().accept_prob,
                0.0
            );
        }
        let c = compile_and_oracle_program(&parity2_program()).unwrap();
        assert_eq!(
            run_compiled(&c, &"¢10#11$".parse().unwrap())
                .unwrap()
                .accept_prob,
            0.0
        );
    }

    #[test]
    fn random_programs_agree_with_query_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..12 {
            let (n, m, t) = (
                rng.gen_range(1..=3),
                rng.gen_range(1..=2),
                rng.gen_range(0..=3),
            );
            let p = random_straight_line(n, m, t, &mut rng);
            let c = compile_query_program(&p).unwrap();
            for v in 0..1u64 << n {
                let x = bits_of(v, n);
                let want = run_query_program(&p, &x).unwrap().accept_prob;
                let r = plain_run(&c, &x);
                assert!((r.accept_prob - want).abs() <= 1e-9, "n={n} m={m} t={t}");
                assert!(r.steps_max <= predicted_step_bound(&c, n + 2).unwrap());
            }
        }
    }

    /// Runs one AND-oracle call on `start` and returns the final register.
    fn gadget_state(start: &StateVector, x: &[bool], y: &[bool]) -> Vec<C64> {
        let n = x.len();
        let all = ProjectiveMeasurement::new(
            vec![Projector::basis(n + 1, (0..=n).collect())],
            vec![1],
            &TolerancePolicy::default(),
        )
        .unwrap();
        let p = QueryProgram::straight_line(
            n,
            1,
            start.clone(),
            vec![UnitaryOp::identity(n + 1), UnitaryOp::identity(n + 1)],
            all,
        )
        .unwrap();
        let c = compile_and_oracle_program(&p).unwrap();
        let tape = encode_pair(x, y).unwrap();
        let (r, leaves) =
            run_qcfa_leaves(&c.machine, &tape, c.step_cap(tape.len()), DEFAULT_PRUNE_EPS).unwrap();
        assert!((r.accept_prob - 1.0).abs() < 1e-12);
        assert_eq!(leaves.len(), 1);
        leaves[0].quantum.clone().unwrap().into_amps()
    }

    #[test]
    fn gadget_equals_direct_and_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3usize {
            let start = {
                let raw: Vec<C64> = (0..=n)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                StateVector::normalized(raw, &TolerancePolicy::new(1e-9, 1e-9, 1e-9).unwrap())
                    .unwrap_or_else(|_| StateVector::basis(n + 1, 0))
            };
            for v in 0..1u64 << n {
                for w in 0..1u64 << n {
                    let (x, y) = (bits_of(v, n), bits_of(w, n));
                    let got = gadget_state(&start, &x, &y);
                    let direct =
                        oracle_matrix(&and_bits(&x, &y).unwrap(), 1).apply_amps(start.amps());
                    assert!(got[0].norm() <= 1e-12);
                    assert_eq!(got[1], ZERO);
                    for i in 0..=n {
                        assert_eq!(got[2 * (i + 1) + 1], ZERO, "auxiliary qubit left set");
                        assert!((got[2 * (i + 1)] - direct[i]).norm() <= 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn uniform_start_with_zero_inputs_is_identity() {
        let n = 3;
        let start = StateVector::from_real(&[0.5; 4]).unwrap();
        let got = gadget_state(&start, &[false; 3], &[false; 3]);
        for i in 0..=n {
            assert!((got[2 * (i + 1)] - C64::new(0.5, 0.0)).norm() < 1e-12);
            assert_eq!(got[2 * (i + 1) + 1], ZERO);
        }
        let got = gadget_state(
            &start,
            &parse_bits("110").unwrap(),
            &parse_bits("011").unwrap(),
        );
        let direct = oracle_matrix(&parse_bits("010").unwrap(), 1).apply_amps(start.amps());
        for i in 0..=n {
            assert!((got[2 * (i + 1)] - direct[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn grover_and_compiled_examples() {
        let p = grover_program(4, &default_grover_schedule(4), 3).unwrap();
        let c = compile_and_oracle_program(&p).unwrap();
        let b = |s: &str| parse_bits(s).unwrap();
        let hit = pair_run(&c, &b("1000"), &b("1000"));
        assert!(hit.accept_prob >= 2.0 / 3.0);
        let want = run_query_program(&p, &b("1000")).unwrap().accept_prob;
        assert!((hit.accept_prob - want).abs() < 1e-9);
        let miss = pair_run(&c, &b("1000"), &b("0111"));
        assert_eq!(miss.accept_prob, 0.0);
        assert!(miss.nonhalt_prob < 1e-9);
    }

    #[test]
    fn grover_compiled_matches_query_level_everywhere() {
        let n = 4;
        let p = grover_program(n, &default_grover_schedule(n), 3).unwrap();
        let plain = compile_query_program(&p).unwrap();
        let and = compile_and_oracle_program(&p).unwrap();
        for v in 0..16 {
            let x = bits_of(v, n);
            let want = run_query_program(&p, &x).unwrap().accept_prob;
            let r = plain_run(&plain, &x);
            assert!((r.accept_prob - want).abs() < 1e-9);
            assert!(r.steps_max <= predicted_step_bound(&plain, n + 2).unwrap());
            for w in 0..16 {
                let y = bits_of(w, n);
                let z = and_bits(&x, &y).unwrap();
                let want = run_query_program(&p, &z).unwrap().accept_prob;
                let r = pair_run(&and, &x, &y);
                assert!((r.accept_prob - want).abs() < 1e-9);
                assert!(r.nonhalt_prob < 1e-9);
                assert!(r.steps_max <= predicted_step_bound(&and, 3 * n + 2).unwrap());
            }
        }
    }

    #[test]
    fn grover_steps_within_sqrt_n_times_n() {
        for n in [4usize, 8, 16] {
            let p = grover_program(n, &default_grover_schedule(n), 3).unwrap();
            let c = compile_and_oracle_program(&p).unwrap();
            let r = pair_run(&c, &vec![false; n], &vec![true; n]);
            let bound = predicted_step_bound(&c, 3 * n + 2).unwrap();
            assert!(r.steps_max <= bound);
            assert!(bound as f64 <= 100.0 * (n as f64).sqrt() * n as f64);
            assert!((r.reject_prob - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn straight_line_steps_are_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let steps = |n: usize, t: usize, rng: &mut ChaCha8Rng| {
            let p = random_straight_line(n, 1, t, rng);
            let c = compile_query_program(&p).unwrap();
            plain_run(&c, &vec![true; n]).steps_max as i64
        };
        for n in [1, 2, 4] {
            let s: Vec<i64> = (0..5).map(|t| steps(n, t, &mut rng)).collect();
            assert!(
                s.windows(3).skip(1).all(|w| w[2] - w[1] == w[1] - w[0]),
                "t sweep {s:?}"
            );
        }
        for t in [0, 1, 3] {
            let s: Vec<i64> = (1..6).map(|n| steps(n, t, &mut rng)).collect();
            assert!(
                s.windows(3).all(|w| w[2] - w[1] == w[1] - w[0]),
                "n sweep {s:?}"
            );
        }
    }

    #[test]
    fn builder_document_round_trip() {
        let c = compile_query_program(&parity2_program()).unwrap();
        let doc = MachineDoc::from_machine(&c.machine).unwrap();
        let back = machine_from_doc(&MachineDoc::from_text(&doc.to_text()).unwrap()).unwrap();
        assert_eq!(back.classical_state_count, c.machine.classical_state_count);
        let table = MachineDoc::from_text(
            &crate::machines::doc::export_table(&c.machine, 1 << 16)
                .unwrap()
                .to_text(),
        )
        .unwrap()
        .to_table_machine()
        .unwrap();
        let t = Tape::from_bits(&parse_bits("10").unwrap());
        let r = crate::machines::run_qcfa_exact(&table, &t, 1000, 0.0).unwrap();
        assert!((r.accept_prob - 1.0).abs() < 1e-12);
    }
}
