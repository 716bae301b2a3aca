//! Quantum query algorithms over the basis `|i, j⟩`, `i ∈ 0..=n`, `j ∈ 1..=m`,
//! with the phase oracle `O_x|i,j⟩ = (-1)^{x_i}|i,j⟩` (`O_x` fixes `|0,j⟩`).
//!
//! A program is a list of blocks. Each block starts from a fixed state, runs
//! `U_0, O_x, U_1, …, O_x, U_t`, and ends in a projective measurement whose
//! outcomes continue with accept, reject, a classical verification of the
//! measured index, or the next block. A straight-line program is a single
//! block measured with `{M_0, M_1}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{
    apply_unitary, measure, Grid, ProjectiveMeasurement, Projector, QError, StateVector,
    TolerancePolicy, UnitaryOp, C64, ONE, ZERO,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("input has length {got}, program expects {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("quantum: {0}")]
    Quantum(#[from] QError),
}

/// What happens after a measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Continuation {
    Accept,
    Reject,
    /// Read the outcome label as an index `i ∈ 1..=n`; accept iff input bit
    /// `i` is 1, otherwise continue with the next block. Labels outside
    /// `1..=n` fail verification. Costs no oracle call.
    VerifyIndex,
    /// Continue with the next block; rejects after the last block.
    Next,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub start: StateVector,
    /// `U_0, …, U_t`; an oracle call sits between consecutive entries.
    pub unitaries: Vec<UnitaryOp>,
    pub measurement: ProjectiveMeasurement,
    /// One per measurement outcome, in projector order.
    pub continuations: Vec<Continuation>,
}

impl Block {
    pub fn queries(&self) -> usize {
        self.unitaries.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryProgram {
    pub n: usize,
    pub m: usize,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOutcome {
    pub accept_prob: f64,
    pub reject_prob: f64,
    /// Oracle calls along the longest path.
    pub queries: u64,
}

impl QueryProgram {
    /// Single block `U_t O_x ⋯ O_x U_0 |ψ_s⟩` measured with `{M_0, M_1}`
    /// (labels 0 and 1); outcome 1 accepts.
    pub fn straight_line(
        n: usize,
        m: usize,
        start: StateVector,
        unitaries: Vec<UnitaryOp>,
        final_measurement: ProjectiveMeasurement,
    ) -> Result<Self, QueryError> {
        let continuations = final_measurement
            .labels()
            .iter()
            .map(|&l| {
                if l == 1 {
                    Continuation::Accept
                } else {
                    Continuation::Reject
                }
            })
            .collect();
        let p = QueryProgram {
            n,
            m,
            blocks: vec![Block {
                start,
                unitaries,
                measurement: final_measurement,
                continuations,
            }],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        (self.n + 1) * self.m
    }

    /// Position of `|i, j⟩` (`j` is 1-based).
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.m + (j - 1)
    }

    pub fn total_queries(&self) -> u64 {
        self.blocks.iter().map(|b| b.queries() as u64).sum()
    }

    pub fn is_straight_line(&self) -> bool {
        self.blocks.len() == 1
            && self.blocks[0]
                .continuations
                .iter()
                .all(|c| matches!(c, Continuation::Accept | Continuation::Reject))
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        let bad = |s: String| Err(QueryError::InvalidProgram(s));
        if self.n == 0 || self.m == 0 {
            return bad("n and m must be positive".into());
        }
        if self.blocks.is_empty() {
            return bad("program has no blocks".into());
        }
        let d = self.dim();
        for (k, b) in self.blocks.iter().enumerate() {
            if b.start.dim() != d
                || b.measurement.dim() != d
                || b.unitaries.iter().any(|u| u.dim() != d)
            {
                return bad(format!(
                    "block {k}: operator dimension differs from (n+1)·m = {d}"
                ));
            }
            if b.unitaries.is_empty() {
                return bad(format!("block {k}: needs at least U_0"));
            }
            if b.continuations.len() != b.measurement.outcome_count() {
                return bad(format!("block {k}: one continuation per outcome required"));
            }
            if (b.start.norm_sqr() - 1.0).abs() > TolerancePolicy::default().tol_norm {
                return bad(format!("block {k}: start state is not normalized"));
            }
        }
        Ok(())
    }
}

/// Diagonal phase oracle of dimension `(n+1)·m`.
pub fn oracle_matrix(x: &[bool], m: usize) -> UnitaryOp {
    let flips = std::iter::repeat(false)
        .take(m)
        .chain(x.iter().flat_map(|&b| std::iter::repeat(b).take(m)));
    UnitaryOp::sign_diagonal(flips)
}

/// Exact acceptance probability by evaluating each block's outcome distribution.
pub fn run_query_program(p: &QueryProgram, x: &[bool]) -> Result<QueryOutcome, QueryError> {
    if x.len() != p.n {
        return Err(QueryError::InputLength {
            expected: p.n,
            got: x.len(),
        });
    }
    p.validate()?;
    let tol = TolerancePolicy::default();
    let oracle = oracle_matrix(x, p.m);
    let mut reach = 1.0;
    let mut accept = 0.0;
    let mut reject = 0.0;
    for block in &p.blocks {
        let mut psi = apply_unitary(&block.unitaries[0], &block.start)?;
        for u in &block.unitaries[1..] {
            psi = apply_unitary(u, &apply_unitary(&oracle, &psi)?)?;
        }
        let mut next = 0.0;
        for (o, c) in measure(&block.measurement, &psi, &tol)?
            .iter()
            .zip(&block.continuations)
        {
            let mass = reach * o.probability;
            match c {
                Continuation::Accept => accept += mass,
                Continuation::Reject => reject += mass,
                Continuation::Next => next += mass,
                Continuation::VerifyIndex => {
                    let hit = (1..=p.n as u64).contains(&o.label) && x[o.label as usize - 1];
                    if hit {
                        accept += mass;
                    } else {
                        next += mass;
                    }
                }
            }
        }
        reach = next;
    }
    reject += reach;
    Ok(QueryOutcome {
        accept_prob: accept.clamp(0.0, 1.0),
        reject_prob: reject.clamp(0.0, 1.0),
        queries: p.total_queries(),
    })
}

/// `m_j = ⌈(π/4)·√(n/2^j)⌉` for `j = 0..=⌈log₂ n⌉`.
pub fn default_grover_schedule(n: usize) -> Vec<usize> {
    let top = (n as f64).log2().ceil() as i32;
    (0..=top)
        .map(|j| ((PI / 4.0) * (n as f64 / 2f64.powi(j)).sqrt()).ceil() as usize)
        .collect()
}

pub const DEFAULT_GROVER_REPEATS: usize = 3;

/// Grover search with classical verification, over `m = 1`.
///
/// For each repeat and each schedule entry `m_j`: prepare the uniform state
/// over `|1⟩…|n⟩`, apply `m_j` rounds of oracle then diffusion
/// `2|u⟩⟨u| − I` (acting on `i ≥ 1`, fixing `|0⟩`), measure the index and
/// verify it. Accepts on the first verified hit.
pub fn grover_program(
    n: usize,
    schedule: &[usize],
    repeats: usize,
) -> Result<QueryProgram, QueryError> {
    if n < 2 {
        return Err(QueryError::InvalidProgram(
            "Grover search needs n ≥ 2".into(),
        ));
    }
    let dim = n + 1;
    let amp = 1.0 / (n as f64).sqrt();
    let mut uniform = vec![ZERO; dim];
    for a in &mut uniform[1..] {
        *a = C64::new(amp, 0.0);
    }
    let mut diffusion = Grid::outer(&uniform).scale(C64::new(2.0, 0.0));
    for i in 1..dim {
        diffusion.set(i, i, diffusion.get(i, i) - ONE);
    }
    diffusion.set(0, 0, ONE);
    let tol = TolerancePolicy::default();
    let diffusion = UnitaryOp::dense(diffusion, &tol)?;
    let start = StateVector::new(uniform)?;
    let measurement = ProjectiveMeasurement::computational(dim);
    let continuations: Vec<Continuation> = (0..dim)
        .map(|i| {
            if i == 0 {
                Continuation::Next
            } else {
                Continuation::VerifyIndex
            }
        })
        .collect();
    let mut blocks = Vec::new();
    for _ in 0..repeats {
        for &iters in schedule {
            let mut unitaries = vec![UnitaryOp::identity(dim)];
            unitaries.extend(std::iter::repeat(diffusion.clone()).take(iters));
            blocks.push(Block {
                start: start.clone(),
                unitaries,
                measurement: measurement.clone(),
                continuations: continuations.clone(),
            });
        }
    }
    let p = QueryProgram { n, m: 1, blocks };
    p.validate()?;
    Ok(p)
}

/// Exact one-query parity of two bits: `accept_prob = x₁ ⊕ x₂`.
pub fn parity2_program() -> QueryProgram {
    let h = FRAC_1_SQRT_2;
    let tol = TolerancePolicy::default();
    // columns: |0⟩ → |+⟩, |1⟩ → |−⟩, |2⟩ → |0⟩ over the index states |1⟩, |2⟩
    let u0 = Grid::from_real_rows(&[&[0.0, 0.0, 1.0], &[h, h, 0.0], &[h, -h, 0.0]]).unwrap();
    let u1 = Grid::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, h, h], &[0.0, h, -h]]).unwrap();
    let measurement = ProjectiveMeasurement::new(
        vec![
            Projector::basis(3, vec![0, 1]),
            Projector::basis(3, vec![2]),
        ],
        vec![0, 1],
        &tol,
    )
    .unwrap();
    QueryProgram::straight_line(
        2,
        1,
        StateVector::basis(3, 0),
        vec![
            UnitaryOp::dense(u0, &tol).unwrap(),
            UnitaryOp::dense(u1, &tol).unwrap(),
        ],
        measurement,
    )
    .unwrap()
}

/// Unitary from Gram-Schmidt on rows with uniformly random complex entries.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> UnitaryOp {
    loop {
        let mut rows: Vec<Vec<C64>> = Vec::with_capacity(dim);
        let mut ok = true;
        for _ in 0..dim {
            let mut v: Vec<C64> = (0..dim)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            for _ in 0..2 {
                for u in &rows {
                    let dot: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in v.iter_mut().zip(u) {
                        *x -= dot * y;
                    }
                }
            }
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-6 {
                ok = false;
                break;
            }
            rows.push(v.into_iter().map(|a| a / norm).collect());
        }
        if ok {
            if let Ok(u) =
                UnitaryOp::dense(Grid::from_rows(rows).unwrap(), &TolerancePolicy::default())
            {
                return u;
            }
        }
    }
}

/// Straight-line program with random `U_k`, random start state and a random
/// rank-`r` accepting projector drawn from a random orthonormal basis.
pub fn random_straight_line<R: Rng>(n: usize, m: usize, t: usize, rng: &mut R) -> QueryProgram {
    let dim = (n + 1) * m;
    let unitaries = (0..=t).map(|_| random_unitary(dim, rng)).collect();
    let start = {
        let g = random_unitary(dim, rng).to_grid();
        StateVector::new((0..dim).map(|r| g.get(r, 0)).collect()).unwrap()
    };
    let basis = random_unitary(dim, rng).to_grid();
    let rank = rng.gen_range(1..dim.max(2));
    let mut accept = Grid::zeros(dim);
    for c in 0..rank.min(dim) {
        let col: Vec<C64> = (0..dim).map(|r| basis.get(r, c)).collect();
        accept = accept.add(&Grid::outer(&col));
    }
    let reject = Grid::identity(dim).add(&accept.scale(-ONE));
    let measurement = ProjectiveMeasurement::new(
        vec![Projector::dense(reject), Projector::dense(accept)],
        vec![0, 1],
        &TolerancePolicy::new(1e-9, 1e-7, 1e-9).unwrap(),
    )
    .expect("complementary projectors");
    QueryProgram::straight_line(n, m, start, unitaries, measurement).expect("consistent dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langs::{bits_of, parse_bits};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn b(s: &str) -> Vec<bool> {
        parse_bits(s).unwrap()
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_matrix(&b("000"), 2).to_grid(), Grid::identity(8));
        assert_eq!(
            oracle_matrix(&b("1"), 1).to_grid(),
            Grid::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
        );
        assert_eq!(
            oracle_matrix(&b("101"), 1).diagonal_entries().unwrap(),
            &[ONE, -ONE, ONE, -ONE]
        );
    }

    #[test]
    fn zero_query_program_with_empty_accept_projector() {
        let m = ProjectiveMeasurement::new(
            vec![
                Projector::basis(3, vec![0, 1, 2]),
                Projector::basis(3, vec![]),
            ],
            vec![0, 1],
            &TolerancePolicy::default(),
        )
        .unwrap();
        let p = QueryProgram::straight_line(
            2,
            1,
            StateVector::basis(3, 0),
            vec![UnitaryOp::identity(3)],
            m,
        )
        .unwrap();
        for v in 0..4 {
            let o = run_query_program(&p, &bits_of(v, 2)).unwrap();
            assert_eq!(o.accept_prob, 0.0);
            assert_eq!(o.queries, 0);
        }
    }

    #[test]
    fn parity2_truth_table() {
        let p = parity2_program();
        for (x, want) in [("00", 0.0), ("01", 1.0), ("10", 1.0), ("11", 0.0)] {
            let o = run_query_program(&p, &b(x)).unwrap();
            assert!(
                (o.accept_prob - want).abs() < 1e-12,
                "{x}: {}",
                o.accept_prob
            );
            assert_eq!(o.queries, 1);
        }
        assert!(p.is_straight_line());
    }

    #[test]
    fn input_length_checked() {
        assert_eq!(
            run_query_program(&parity2_program(), &b("011")),
            Err(QueryError::InputLength {
                expected: 2,
                got: 3
            })
        );
    }

    #[test]
    fn grover_schedule_values() {
        assert_eq!(default_grover_schedule(4), vec![2, 2, 1]);
        assert_eq!(default_grover_schedule(8), vec![3, 2, 2, 1]);
        assert_eq!(default_grover_schedule(16), vec![4, 3, 2, 2, 1]);
        assert!(grover_program(1, &[1], 1).is_err());
    }

    /// Single marked item: `sin²((2k+1)θ)` with `sin θ = 1/√n`, then the
    /// chance that all blocks miss.
    fn grover_single_marked_oracle(n: usize, schedule: &[usize], repeats: usize) -> f64 {
        let theta = (1.0 / (n as f64).sqrt()).asin();
        let miss: f64 = schedule
            .iter()
            .map(|&k| 1.0 - ((2 * k + 1) as f64 * theta).sin().powi(2))
            .product();
        1.0 - miss.powi(repeats as i32)
    }

    #[test]
    fn grover_examples() {
        let sched = default_grover_schedule(4);
        let p = grover_program(4, &sched, 3).unwrap();
        assert_eq!(run_query_program(&p, &b("0000")).unwrap().accept_prob, 0.0);
        let one = run_query_program(&p, &b("0001")).unwrap();
        assert!(one.accept_prob >= 2.0 / 3.0);
        assert!((one.accept_prob - grover_single_marked_oracle(4, &sched, 3)).abs() < 1e-12);
        assert!(run_query_program(&p, &b("1111")).unwrap().accept_prob >= 2.0 / 3.0);
    }

    #[test]
    fn grover_sixteen_weight_one_inputs() {
        let sched = default_grover_schedule(16);
        let p = grover_program(16, &sched, 3).unwrap();
        let budget: usize = 3 * sched.iter().sum::<usize>();
        for i in 0..16 {
            let mut x = vec![false; 16];
            x[i] = true;
            let o = run_query_program(&p, &x).unwrap();
            assert!(o.accept_prob >= 2.0 / 3.0);
            assert!(o.queries as usize <= budget);
            assert!((o.accept_prob - grover_single_marked_oracle(16, &sched, 3)).abs() < 1e-9);
        }
    }

    #[test]
    fn grover_is_one_sided() {
        for n in [2, 3, 5, 8] {
            let p = grover_program(n, &default_grover_schedule(n), 3).unwrap();
            assert_eq!(
                run_query_program(&p, &vec![false; n]).unwrap().accept_prob,
                0.0
            );
        }
    }

    #[test]
    fn serde_round_trip() {
        let p = parity2_program();
        let text = serde_json::to_string(&p).unwrap();
        let q: QueryProgram = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&q).unwrap(), text);
        for v in 0..4 {
            let x = bits_of(v, 2);
            assert_eq!(
                run_query_program(&p, &x).unwrap(),
                run_query_program(&q, &x).unwrap()
            );
        }
    }

    proptest! {
        #[test]
        fn oracle_involution_and_composition(xv in 0u64..64, yv in 0u64..64, m in 1usize..3) {
            let (x, y) = (bits_of(xv, 6), bits_of(yv, 6));
            let ox = oracle_matrix(&x, m);
            prop_assert_eq!(ox.compose(&ox).to_grid(), Grid::identity(7 * m));
            let xor: Vec<bool> = x.iter().zip(&y).map(|(a, b)| a ^ b).collect();
            prop_assert_eq!(ox.compose(&oracle_matrix(&y, m)), oracle_matrix(&xor, m));
        }

        #[test]
        fn random_programs_give_probabilities(seed in any::<u64>(), n in 1usize..4, m in 1usize..3, t in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_straight_line(n, m, t, &mut rng);
            for v in 0..1u64 << n {
                let o = run_query_program(&p, &bits_of(v, n)).unwrap();
                prop_assert!((0.0..=1.0).contains(&o.accept_prob));
                prop_assert!((o.accept_prob + o.reject_prob - 1.0).abs() <= 1e-9);
            }
        }
    }
}
