use std::sync::Arc;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    space_bits, Action, MachineError, MachineKind, MachineSpec, Move, RunResult, StateFlag,
    StateId, Tape,
};
use crate::qcore::{apply_unitary, measure, StateVector};

pub const DEFAULT_STEP_CAP: u64 = 1_000_000;
pub const DEFAULT_PRUNE_EPS: f64 = 1e-12;

/// Cap for compiled machines: `50 · (tape length + 1) · (1 + t)`.
pub fn step_cap_default(tape_len: usize, queries: u64) -> u64 {
    50 * (tape_len as u64 + 1) * (1 + queries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

/// Ownership of tape cells for `¢ x #ⁿ y $`: Alice owns `¢` and `x`, Bob owns
/// `y` and `$`, and the `#` block is shared.
#[derive(Debug, Clone, Copy)]
pub struct RegionSplit {
    pub n: usize,
}

impl RegionSplit {
    pub fn owner(&self, pos: usize) -> Option<Party> {
        if pos <= self.n {
            Some(Party::Alice)
        } else if pos > 2 * self.n {
            Some(Party::Bob)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Crossing {
    /// 1-based index of the transition that moved the head across.
    pub step: u64,
    pub to_bob: bool,
    /// Classical state entered by that transition.
    pub state: StateId,
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    pub step_cap: u64,
    pub prune_eps: f64,
    pub split: Option<RegionSplit>,
    pub keep_leaves: bool,
}

/// A halted branch of an exact run.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub state: StateId,
    pub flag: StateFlag,
    pub head: usize,
    pub step: u64,
    pub prob: f64,
    pub quantum: Option<StateVector>,
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub result: RunResult,
    pub leaves: Vec<Leaf>,
    pub worst_history: Vec<Crossing>,
    pub expected_crossings: f64,
}

#[derive(Debug, Clone)]
struct Config {
    state: StateId,
    head: usize,
    quantum: Option<StateVector>,
    mass: f64,
    /// Crossing bookkeeping for the paths merged into this configuration,
    /// each with its share of `mass`. Never affects the mass arithmetic.
    comm: Vec<CommClass>,
}

#[derive(Debug, Clone)]
struct CommClass {
    party: Party,
    history: Arc<Vec<Crossing>>,
    share: f64,
}

impl CommClass {
    fn start() -> Vec<CommClass> {
        vec![CommClass {
            party: Party::Alice,
            history: Arc::new(Vec::new()),
            share: 1.0,
        }]
    }

    /// Records a crossing if the head at `head` lies in the other party's region.
    fn advance(&mut self, split: Option<RegionSplit>, head: usize, step: u64, state: StateId) {
        if let Some(owner) = split.and_then(|s| s.owner(head)) {
            if owner != self.party {
                self.party = owner;
                Arc::make_mut(&mut self.history).push(Crossing {
                    step,
                    to_bob: owner == Party::Bob,
                    state,
                });
            }
        }
    }
}

/// Combines two class lists weighted by their configuration masses; classes
/// with equal party and crossing count keep one representative history.
fn merge_classes(into: &mut Vec<CommClass>, into_mass: f64, from: Vec<CommClass>, from_mass: f64) {
    let total = into_mass + from_mass;
    if total <= 0.0 {
        return;
    }
    for c in into.iter_mut() {
        c.share *= into_mass / total;
    }
    for mut c in from {
        c.share *= from_mass / total;
        match into
            .iter_mut()
            .find(|e| e.party == c.party && e.history.len() == c.history.len())
        {
            Some(e) => {
                e.share += c.share;
                if c.history < e.history {
                    e.history = c.history;
                }
            }
            None => into.push(c),
        }
    }
}

struct Child {
    next: StateId,
    mv: Move,
    weight: f64,
    quantum: Option<StateVector>,
}

fn check_kind(m: &MachineSpec, action: &Action) -> Result<(), MachineError> {
    let ok = match (m.kind, action) {
        (_, Action::Classical { .. }) => true,
        (MachineKind::Probabilistic, Action::Random(_)) => true,
        (MachineKind::QuantumClassical, Action::Unitary { .. } | Action::Measure { .. }) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(MachineError::KindMismatch {
            kind: m.kind,
            detail: format!("{action:?}"),
        })
    }
}

/// Children of one configuration: `(next, move, conditional probability, quantum)`.
fn expand(m: &MachineSpec, cfg: &Config, action: Action) -> Result<Vec<Child>, MachineError> {
    check_kind(m, &action)?;
    let tol = &m.tolerance;
    Ok(match action {
        Action::Classical { next, mv } => vec![Child {
            next,
            mv,
            weight: 1.0,
            quantum: cfg.quantum.clone(),
        }],
        Action::Random(branches) => {
            let total: f64 = branches.iter().map(|b| b.weight).sum();
            if (total - 1.0).abs() > tol.tol_prob || branches.iter().any(|b| !(b.weight >= 0.0)) {
                return Err(MachineError::MalformedDistribution {
                    state: cfg.state.0,
                    total,
                });
            }
            branches
                .into_iter()
                .filter(|b| b.weight > 0.0)
                .map(|b| Child {
                    next: b.next,
                    mv: b.mv,
                    weight: b.weight,
                    quantum: None,
                })
                .collect()
        }
        Action::Unitary { op, next, mv } => {
            let q = cfg.quantum.as_ref().ok_or_else(|| {
                MachineError::InvalidMachine("quantum action without register".into())
            })?;
            vec![Child {
                next,
                mv,
                weight: 1.0,
                quantum: Some(apply_unitary(&op, q)?),
            }]
        }
        Action::Measure { measurement, moves } => {
            let q = cfg.quantum.as_ref().ok_or_else(|| {
                MachineError::InvalidMachine("quantum action without register".into())
            })?;
            if moves.len() != measurement.outcome_count() {
                return Err(MachineError::InvalidMachine(format!(
                    "measurement has {} outcomes but {} moves",
                    measurement.outcome_count(),
                    moves.len()
                )));
            }
            let outcomes = measure(&measurement, q, tol)?;
            outcomes
                .into_iter()
                .zip(moves)
                .filter(|(o, _)| o.probability > 0.0)
                .map(|(o, (next, mv))| Child {
                    next,
                    mv,
                    weight: o.probability,
                    quantum: o.post_state,
                })
                .collect()
        }
    })
}

fn moved(head: usize, mv: Move, tape_len: usize) -> Result<usize, MachineError> {
    let h = head as i64 + mv.delta();
    if h < 0 || h >= tape_len as i64 {
        return Err(MachineError::HeadOutOfBounds(h));
    }
    Ok(h as usize)
}

#[derive(Default)]
struct Tally {
    accept: f64,
    reject: f64,
    nonhalt: f64,
    steps_max: u64,
    steps_weighted: f64,
    crossings_weighted: f64,
    worst_crossings: usize,
    worst_history: Vec<Crossing>,
}

impl Tally {
    fn terminal(&mut self, mass: f64, step: u64, comm: &[CommClass]) {
        self.steps_max = self.steps_max.max(step);
        self.steps_weighted += mass * step as f64;
        for c in comm {
            self.crossings_weighted += mass * c.share * c.history.len() as f64;
            if c.history.len() > self.worst_crossings {
                self.worst_crossings = c.history.len();
                self.worst_history = c.history.as_ref().clone();
            }
        }
    }
}

/// Exact breadth-first evolution of the configuration distribution.
///
/// Configurations that agree on classical state and head are merged; quantum
/// configurations merge only when their state vectors agree within
/// `tol_norm` up to a global phase. With a region split, crossing histories
/// ride along without changing which configurations merge, so the result is
/// bitwise the same as without one.
pub(crate) fn explore(
    m: &MachineSpec,
    tape: &Tape,
    opts: &ExploreOptions,
) -> Result<Exploration, MachineError> {
    let tol = m.tolerance;
    let cells = tape.cells();
    if m.kind == MachineKind::QuantumClassical {
        match &m.initial_quantum {
            Some(q) if q.dim() == m.quantum_dim => {}
            _ => {
                return Err(MachineError::InvalidMachine(
                    "missing or mis-sized initial quantum state".into(),
                ))
            }
        }
    }
    let quantum = match m.kind {
        MachineKind::QuantumClassical => m.initial_quantum.clone(),
        _ => None,
    };
    let mut tally = Tally::default();
    let mut leaves = Vec::new();
    let mut pruned = 0.0;
    let init = Config {
        state: m.initial_classical,
        head: 0,
        quantum,
        mass: 1.0,
        comm: CommClass::start(),
    };
    let mut live = Vec::new();
    match m.flag(init.state) {
        StateFlag::Neither => live.push(init),
        flag => {
            match flag {
                StateFlag::Accepting => tally.accept = 1.0,
                _ => tally.reject = 1.0,
            }
            tally.terminal(1.0, 0, &init.comm);
        }
    }

    let mut step = 0u64;
    while !live.is_empty() && step < opts.step_cap {
        let now = step + 1;
        let mut buckets: IndexMap<(StateId, usize), Vec<Config>> = IndexMap::new();
        for cfg in live.drain(..) {
            let action = m.rule.action(cfg.state, cells[cfg.head])?;
            for child in expand(m, &cfg, action)? {
                let mass = cfg.mass * child.weight;
                let head = moved(cfg.head, child.mv, cells.len())?;
                let flag = m.flag(child.next);
                if child.weight < opts.prune_eps {
                    pruned += mass;
                    tally.terminal(mass, now, &cfg.comm);
                    continue;
                }
                if flag.is_halting() {
                    if flag == StateFlag::Accepting {
                        tally.accept += mass;
                    } else {
                        tally.reject += mass;
                    }
                    tally.terminal(mass, now, &cfg.comm);
                    if opts.keep_leaves {
                        leaves.push(Leaf {
                            state: child.next,
                            flag,
                            head,
                            step: now,
                            prob: mass,
                            quantum: child.quantum,
                        });
                    }
                    continue;
                }
                let mut comm = cfg.comm.clone();
                for c in &mut comm {
                    c.advance(opts.split, head, now, child.next);
                }
                let key = (child.next, head);
                let bucket = buckets.entry(key).or_default();
                let same = bucket
                    .iter_mut()
                    .find(|c| match (&c.quantum, &child.quantum) {
                        (Some(a), Some(b)) => a.ray_deviation(b) <= tol.tol_norm,
                        (None, None) => true,
                        _ => false,
                    });
                match same {
                    Some(existing) => {
                        merge_classes(&mut existing.comm, existing.mass, comm, mass);
                        existing.mass += mass;
                    }
                    None => bucket.push(Config {
                        state: child.next,
                        head,
                        quantum: child.quantum,
                        mass,
                        comm,
                    }),
                }
            }
        }
        live = buckets.into_values().flatten().collect();
        step = now;
        let live_mass: f64 = live.iter().map(|c| c.mass).sum();
        let total = live_mass + tally.accept + tally.reject + pruned;
        if (total - 1.0).abs() > 1e3 * tol.tol_prob {
            return Err(MachineError::MassLeak(total));
        }
    }
    for cfg in &live {
        tally.nonhalt += cfg.mass;
        tally.terminal(cfg.mass, step, &cfg.comm);
    }
    tally.nonhalt += pruned;

    let result = RunResult {
        accept_prob: tally.accept.clamp(0.0, 1.0),
        reject_prob: tally.reject.clamp(0.0, 1.0),
        nonhalt_prob: tally.nonhalt.clamp(0.0, 1.0),
        steps_max: tally.steps_max,
        steps_expected: tally.steps_weighted.min(tally.steps_max as f64),
        space_bits: space_bits(m),
        queries_used: None,
    };
    Ok(Exploration {
        result,
        leaves,
        worst_history: tally.worst_history,
        expected_crossings: tally.crossings_weighted,
    })
}

fn expect_kind(m: &MachineSpec, kind: MachineKind) -> Result<(), MachineError> {
    if m.kind == kind {
        Ok(())
    } else {
        Err(MachineError::WrongEngine {
            expected: kind,
            got: m.kind,
        })
    }
}

fn plain(step_cap: u64, prune_eps: f64) -> ExploreOptions {
    ExploreOptions {
        step_cap,
        prune_eps,
        split: None,
        keep_leaves: false,
    }
}

/// Follows δ until a halting state or the cap; capped runs report `nonhalt_prob = 1`.
pub fn run_deterministic(
    m: &MachineSpec,
    tape: &Tape,
    step_cap: u64,
) -> Result<RunResult, MachineError> {
    expect_kind(m, MachineKind::Deterministic)?;
    Ok(explore(m, tape, &plain(step_cap, 0.0))?.result)
}

/// Exact distribution over `(state, head)`; capped mass is charged `step_cap` steps.
pub fn run_probabilistic_exact(
    m: &MachineSpec,
    tape: &Tape,
    step_cap: u64,
) -> Result<RunResult, MachineError> {
    expect_kind(m, MachineKind::Probabilistic)?;
    Ok(explore(m, tape, &plain(step_cap, 0.0))?.result)
}

/// Exact measurement-outcome tree. Outcomes with probability below
/// `prune_eps` are dropped into `nonhalt_prob`.
pub fn run_qcfa_exact(
    m: &MachineSpec,
    tape: &Tape,
    step_cap: u64,
    prune_eps: f64,
) -> Result<RunResult, MachineError> {
    expect_kind(m, MachineKind::QuantumClassical)?;
    Ok(explore(m, tape, &plain(step_cap, prune_eps))?.result)
}

/// [`run_qcfa_exact`] that also returns every halted branch with its final quantum state.
pub fn run_qcfa_leaves(
    m: &MachineSpec,
    tape: &Tape,
    step_cap: u64,
    prune_eps: f64,
) -> Result<(RunResult, Vec<Leaf>), MachineError> {
    expect_kind(m, MachineKind::QuantumClassical)?;
    let opts = ExploreOptions {
        keep_leaves: true,
        ..plain(step_cap, prune_eps)
    };
    let e = explore(m, tape, &opts)?;
    Ok((e.result, e.leaves))
}

/// One sampled trajectory.
#[derive(Debug, Clone)]
pub(crate) struct Trajectory {
    pub flag: StateFlag,
    pub steps: u64,
    pub history: Vec<Crossing>,
}

pub(crate) fn sample_trajectory(
    m: &MachineSpec,
    tape: &Tape,
    step_cap: u64,
    split: Option<RegionSplit>,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory, MachineError> {
    let cells = tape.cells();
    let mut cfg = Config {
        state: m.initial_classical,
        head: 0,
        quantum: match m.kind {
            MachineKind::QuantumClassical => m.initial_quantum.clone(),
            _ => None,
        },
        mass: 1.0,
        comm: CommClass::start(),
    };
    let mut steps = 0;
    loop {
        let flag = m.flag(cfg.state);
        if flag.is_halting() || steps >= step_cap {
            return Ok(Trajectory {
                flag,
                steps,
                history: cfg.comm[0].history.as_ref().clone(),
            });
        }
        let action = m.rule.action(cfg.state, cells[cfg.head])?;
        let children = expand(m, &cfg, action)?;
        let mut r: f64 = rng.gen();
        let last = children.len() - 1;
        let pick = children
            .into_iter()
            .enumerate()
            .find(|(i, c)| {
                r -= c.weight;
                r < 0.0 || *i == last
            })
            .map(|(_, c)| c)
            .expect("at least one child");
        steps += 1;
        cfg.head = moved(cfg.head, pick.mv, cells.len())?;
        cfg.state = pick.next;
        cfg.quantum = pick.quantum;
        if !m.flag(cfg.state).is_halting() {
            cfg.comm[0].advance(split, cfg.head, steps, cfg.state);
        }
    }
}

/// Empirical acceptance frequency over `trials` seeded trajectories.
pub fn run_monte_carlo(
    m: &MachineSpec,
    tape: &Tape,
    step_cap: u64,
    trials: u64,
    seed: u64,
) -> Result<RunResult, MachineError> {
    if trials == 0 {
        return Err(MachineError::InvalidMachine(
            "trials must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut acc, mut rej, mut non) = (0u64, 0u64, 0u64);
    let mut steps_max = 0;
    let mut steps_sum = 0.0;
    for _ in 0..trials {
        let t = sample_trajectory(m, tape, step_cap, None, &mut rng)?;
        match t.flag {
            StateFlag::Accepting => acc += 1,
            StateFlag::Rejecting => rej += 1,
            StateFlag::Neither => non += 1,
        }
        steps_max = steps_max.max(t.steps);
        steps_sum += t.steps as f64;
    }
    let n = trials as f64;
    Ok(RunResult {
        accept_prob: acc as f64 / n,
        reject_prob: rej as f64 / n,
        nonhalt_prob: non as f64 / n,
        steps_max,
        steps_expected: steps_sum / n,
        space_bits: space_bits(m),
        queries_used: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::{Branch, TableRule, TapeSymbol};
    use crate::qcore::{Grid, ProjectiveMeasurement, TolerancePolicy, UnitaryOp};

    const S0: StateId = StateId(0);
    const S1: StateId = StateId(1);
    const ACC: StateId = StateId(8);
    const REJ: StateId = StateId(9);

    fn table() -> TableRule {
        TableRule::new(vec![ACC], vec![REJ]).unwrap()
    }

    fn walk_to_end() -> MachineSpec {
        let mut t = table();
        t.set_all(S0, Action::classical(S0, Move::Right));
        t.set(S0, TapeSymbol::RightEnd, Action::classical(ACC, Move::Stay));
        MachineSpec::new(MachineKind::Deterministic, 3, S0, Arc::new(t))
    }

    fn fair_coin() -> MachineSpec {
        let mut t = table();
        t.set_all(
            S0,
            Action::Random(vec![
                Branch {
                    weight: 0.5,
                    next: ACC,
                    mv: Move::Stay,
                },
                Branch {
                    weight: 0.5,
                    next: REJ,
                    mv: Move::Stay,
                },
            ]),
        );
        MachineSpec::new(MachineKind::Probabilistic, 3, S0, Arc::new(t))
    }

    #[test]
    fn accept_on_first_dollar() {
        let r = run_deterministic(&walk_to_end(), &"¢$".parse().unwrap(), 100).unwrap();
        assert_eq!(r.accept_prob, 1.0);
        assert_eq!(r.steps_max, 2);
        assert_eq!(r.steps_expected, 2.0);
    }

    #[test]
    fn two_cycle_hits_cap() {
        let mut t = table();
        t.set_all(S0, Action::classical(S1, Move::Right));
        t.set_all(S1, Action::classical(S0, Move::Left));
        let m = MachineSpec::new(MachineKind::Deterministic, 4, S0, Arc::new(t));
        let r = run_deterministic(&m, &"¢0$".parse().unwrap(), 100).unwrap();
        assert_eq!(r.nonhalt_prob, 1.0);
        assert_eq!(r.steps_max, 100);
    }

    #[test]
    fn head_out_of_bounds_is_an_error() {
        let mut t = table();
        t.set_all(S0, Action::classical(S0, Move::Left));
        let m = MachineSpec::new(MachineKind::Deterministic, 3, S0, Arc::new(t));
        assert_eq!(
            run_deterministic(&m, &"¢$".parse().unwrap(), 10).unwrap_err(),
            MachineError::HeadOutOfBounds(-1)
        );
    }

    #[test]
    fn undefined_transition_reported() {
        let mut t = table();
        t.set(S0, TapeSymbol::LeftEnd, Action::classical(S0, Move::Right));
        let m = MachineSpec::new(MachineKind::Deterministic, 3, S0, Arc::new(t));
        assert!(matches!(
            run_deterministic(&m, &"¢0$".parse().unwrap(), 10),
            Err(MachineError::UndefinedTransition { .. })
        ));
    }

    #[test]
    fn wrong_engine_rejected() {
        assert!(matches!(
            run_deterministic(&fair_coin(), &"¢$".parse().unwrap(), 10),
            Err(MachineError::WrongEngine { .. })
        ));
    }

    #[test]
    fn fair_branch_is_half() {
        let r = run_probabilistic_exact(&fair_coin(), &"¢$".parse().unwrap(), 10).unwrap();
        assert_eq!(r.accept_prob, 0.5);
        assert_eq!(r.reject_prob, 0.5);
        assert_eq!(r.steps_max, 1);
    }

    #[test]
    fn malformed_distribution_rejected() {
        let mut t = table();
        t.set_all(
            S0,
            Action::Random(vec![Branch {
                weight: 0.7,
                next: ACC,
                mv: Move::Stay,
            }]),
        );
        let m = MachineSpec::new(MachineKind::Probabilistic, 3, S0, Arc::new(t));
        assert!(matches!(
            run_probabilistic_exact(&m, &"¢$".parse().unwrap(), 10),
            Err(MachineError::MalformedDistribution { .. })
        ));
    }

    #[test]
    fn lifted_deterministic_machines_agree() {
        let m = walk_to_end();
        let tape: Tape = "¢0110$".parse().unwrap();
        let d = run_deterministic(&m, &tape, 100).unwrap();
        let p = run_probabilistic_exact(&m.lifted(MachineKind::Probabilistic), &tape, 100).unwrap();
        let q = run_qcfa_exact(
            &m.lifted(MachineKind::QuantumClassical),
            &tape,
            100,
            DEFAULT_PRUNE_EPS,
        )
        .unwrap();
        let mc = run_monte_carlo(&m, &tape, 100, 10, 7).unwrap();
        for r in [&p, &q, &mc] {
            assert_eq!(r.accept_prob, d.accept_prob);
            assert_eq!(r.steps_max, d.steps_max);
        }
    }

    fn measuring_machine() -> MachineSpec {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut t = table();
        t.set_all(
            S0,
            Action::Measure {
                measurement: Arc::new(ProjectiveMeasurement::computational(2)),
                moves: vec![(ACC, Move::Stay), (REJ, Move::Stay)],
            },
        );
        MachineSpec::new(MachineKind::QuantumClassical, 3, S0, Arc::new(t))
            .with_quantum(StateVector::from_real(&[h, h]).unwrap())
    }

    #[test]
    fn qcfa_identity_walk_accepts() {
        let mut t = table();
        t.set_all(
            S0,
            Action::Unitary {
                op: Arc::new(UnitaryOp::identity(2)),
                next: S0,
                mv: Move::Right,
            },
        );
        t.set(S0, TapeSymbol::RightEnd, Action::classical(ACC, Move::Stay));
        let m = MachineSpec::new(MachineKind::QuantumClassical, 3, S0, Arc::new(t))
            .with_quantum(StateVector::basis(2, 0));
        let r = run_qcfa_exact(&m, &"¢01$".parse().unwrap(), 100, DEFAULT_PRUNE_EPS).unwrap();
        assert_eq!(r.accept_prob, 1.0);
        assert_eq!(r.steps_max, 4);
    }

    #[test]
    fn qcfa_measurement_splits_evenly() {
        let r = run_qcfa_exact(
            &measuring_machine(),
            &"¢$".parse().unwrap(),
            10,
            DEFAULT_PRUNE_EPS,
        )
        .unwrap();
        assert!((r.accept_prob - 0.5).abs() < 1e-15);
        assert!((r.reject_prob - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pruned_branches_become_nonhalt_mass() {
        let r = run_qcfa_exact(&measuring_machine(), &"¢$".parse().unwrap(), 10, 0.6).unwrap();
        assert_eq!(r.accept_prob + r.reject_prob, 0.0);
        assert!((r.nonhalt_prob - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_kind_forbidden_in_qcfa() {
        let m = fair_coin().lifted(MachineKind::QuantumClassical);
        assert!(matches!(
            run_qcfa_exact(&m, &"¢$".parse().unwrap(), 10, 0.0),
            Err(MachineError::KindMismatch { .. })
        ));
    }

    #[test]
    fn monte_carlo_fair_branch_within_three_sigma() {
        let r = run_monte_carlo(&fair_coin(), &"¢$".parse().unwrap(), 10, 1_000_000, 42).unwrap();
        assert!((r.accept_prob - 0.5).abs() <= 0.003, "{}", r.accept_prob);
        let again =
            run_monte_carlo(&fair_coin(), &"¢$".parse().unwrap(), 10, 1_000_000, 42).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn monte_carlo_matches_qcfa_exact() {
        // Hadamard at ¢, walk right, measure at $: accept with probability cos²(θ) for a rotation
        let theta: f64 = 0.3;
        let (c, s) = (theta.cos(), theta.sin());
        let rot = UnitaryOp::dense(
            Grid::from_real_rows(&[&[c, -s], &[s, c]]).unwrap(),
            &TolerancePolicy::default(),
        )
        .unwrap();
        let mut t = table();
        t.set_all(
            S0,
            Action::Unitary {
                op: Arc::new(rot),
                next: S1,
                mv: Move::Right,
            },
        );
        t.set_all(S1, Action::classical(S1, Move::Right));
        t.set(
            S1,
            TapeSymbol::RightEnd,
            Action::Measure {
                measurement: Arc::new(ProjectiveMeasurement::computational(2)),
                moves: vec![(ACC, Move::Stay), (REJ, Move::Stay)],
            },
        );
        let m = MachineSpec::new(MachineKind::QuantumClassical, 4, S0, Arc::new(t))
            .with_quantum(StateVector::basis(2, 0));
        let tape: Tape = "¢0101$".parse().unwrap();
        let exact = run_qcfa_exact(&m, &tape, 100, DEFAULT_PRUNE_EPS).unwrap();
        assert!((exact.accept_prob - c * c).abs() < 1e-12);
        let trials = 100_000;
        let mc = run_monte_carlo(&m, &tape, 100, trials, 3).unwrap();
        let p = exact.accept_prob;
        assert!((mc.accept_prob - p).abs() <= 4.0 * (p * (1.0 - p) / trials as f64).sqrt() + 0.002);
    }
}
