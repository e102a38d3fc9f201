//! Explicit-state checks of a concrete protocol against its problem.
//!
//! Everything here is computed from the protocol's commands and tables; no
//! solver artifacts are consulted.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::formula::Ground;
use crate::parser::problem_hash;
use crate::problem::{Convergence, Goal, SynthesisProblem, Timing};
use crate::protocol::{Firing, Protocol};
use crate::space::{SpaceError, StateSpace};

/// Upper bound on the size of the monotonicity search space.
pub const MONOTONIC_STATE_BOUND: usize = 1 << 24;

/// One system step: the target state and the processes that executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub target: usize,
    /// Bit `i` is set when process `i` executed.
    pub acting: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub process: usize,
    pub state: usize,
    pub detail: String,
}

/// Transitions induced by a protocol's commands.
#[derive(Clone, Debug)]
pub struct TransitionGraph {
    /// `per_process[i][s]`: sorted successors of `s` when process `i` executes.
    pub per_process: Vec<Vec<Vec<usize>>>,
    /// `steps[s]`: system steps under the protocol's timing.
    pub steps: Vec<Vec<Edge>>,
    /// Writes outside the write set and assignments leaving a domain.
    pub violations: Vec<Violation>,
}

impl TransitionGraph {
    pub fn build(proto: &Protocol, problem: &SynthesisProblem, space: &StateSpace) -> Self {
        let n = space.process_count();
        assert!(n <= 64, "at most 64 processes are supported");
        let count = space.state_count();
        let mut per_process = vec![vec![Vec::new(); count]; n];
        let mut violations = Vec::new();
        for s in 0..count {
            for c in &proto.commands {
                match c.fire(space, problem, &proto.predicate_tables, s) {
                    Firing::Disabled => {}
                    Firing::Fires { target, outside_write } => {
                        for v in outside_write {
                            violations.push(Violation {
                                code: "WRITE_VIOLATION",
                                process: c.process,
                                state: s,
                                detail: format!(
                                    "process {} assigns `{}`, which it may not write",
                                    c.process, problem.topology.vars[v].name
                                ),
                            });
                        }
                        per_process[c.process][s].push(target);
                    }
                    Firing::OutOfDomain { var, value } => violations.push(Violation {
                        code: "OUT_OF_DOMAIN",
                        process: c.process,
                        state: s,
                        detail: format!(
                            "process {} assigns {value} to `{}`, outside its domain",
                            c.process, problem.topology.vars[var].name
                        ),
                    }),
                }
            }
        }
        for rows in &mut per_process {
            for succ in rows.iter_mut() {
                succ.sort_unstable();
                succ.dedup();
            }
        }
        let steps = (0..count)
            .map(|s| match proto.timing {
                Timing::Asynchronous => {
                    let mut out: Vec<Edge> = (0..n)
                        .flat_map(|i| per_process[i][s].iter().map(move |&t| Edge { target: t, acting: 1 << i }))
                        .collect();
                    out.sort_unstable();
                    out
                }
                Timing::Synchronous => synchronous_steps(space, &per_process, s),
            })
            .collect();
        TransitionGraph { per_process, steps, violations }
    }

    pub fn enabled(&self, process: usize, s: usize) -> bool {
        !self.per_process[process][s].is_empty()
    }
}

/// Every enabled process executes one of its moves; disabled ones keep.
fn synchronous_steps(space: &StateSpace, per_process: &[Vec<Vec<usize>>], s: usize) -> Vec<Edge> {
    let mut partial = vec![(s, 0u64)];
    for (i, rows) in per_process.iter().enumerate() {
        let moves = &rows[s];
        if moves.is_empty() {
            continue;
        }
        partial = partial
            .into_iter()
            .flat_map(|(t, acting)| {
                moves.iter().map(move |&m| (space.apply_write(t, i, space.current_write(m, i)), acting | 1 << i))
            })
            .collect();
    }
    let mut out: Vec<Edge> = partial
        .into_iter()
        .filter(|&(_, acting)| acting != 0)
        .map(|(target, acting)| Edge { target, acting })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub state: usize,
    pub values: Vec<i64>,
    /// Processes executing from this state to the next one. Empty on the
    /// last step.
    pub acting: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceStep>,
}

impl CheckResult {
    fn pass(name: &str) -> Self {
        CheckResult { name: name.to_string(), pass: true, code: None, detail: None, trace: Vec::new() }
    }

    fn fail(name: &str, code: &str, detail: String, trace: Vec<TraceStep>) -> Self {
        CheckResult { name: name.to_string(), pass: false, code: Some(code.to_string()), detail: Some(detail), trace }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

impl Verdict {
    pub fn from_checks(checks: Vec<CheckResult>) -> Self {
        Verdict { pass: checks.iter().all(|c| c.pass), checks }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("problem formula: {0}")]
    Formula(#[from] crate::formula::FormulaError),
}

impl VerifyError {
    pub fn code(&self) -> &'static str {
        match self {
            VerifyError::Space(e) => e.code(),
            VerifyError::Formula(e) => e.code(),
        }
    }
}

/// Where a formula is required to hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    AllStates,
    LsStates,
}

pub struct Verifier<'a> {
    problem: &'a SynthesisProblem,
    proto: &'a Protocol,
    space: StateSpace,
    graph: TransitionGraph,
}

impl<'a> Verifier<'a> {
    pub fn new(proto: &'a Protocol, problem: &'a SynthesisProblem) -> Result<Self, VerifyError> {
        let space = StateSpace::new(&problem.topology)?;
        let graph = TransitionGraph::build(proto, problem, &space);
        Ok(Verifier { problem, proto, space, graph })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn graph(&self) -> &TransitionGraph {
        &self.graph
    }

    fn step(&self, state: usize, acting: u64) -> TraceStep {
        TraceStep {
            state,
            values: (0..self.space.var_count()).map(|v| self.space.value(state, v)).collect(),
            acting: (0..64).filter(|i| acting & (1 << i) != 0).collect(),
        }
    }

    /// Trace through `states`, labelling each hop with a step that realizes it.
    fn trace(&self, states: &[usize]) -> Vec<TraceStep> {
        states
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let acting = states
                    .get(k + 1)
                    .and_then(|&t| self.graph.steps[s].iter().find(|e| e.target == t))
                    .map_or(0, |e| e.acting);
                self.step(s, acting)
            })
            .collect()
    }

    fn show(&self, s: usize) -> String {
        let parts: Vec<String> = self
            .problem
            .topology
            .vars
            .iter()
            .enumerate()
            .map(|(v, d)| format!("{}={}", d.name, self.space.value(s, v)))
            .collect();
        format!("({})", parts.join(", "))
    }

    fn ls(&self) -> Option<&[bool]> {
        self.proto.ls_table.as_deref()
    }

    /// Transitions form whole groups and stay inside write sets and domains.
    pub fn check_read_restriction(&self) -> CheckResult {
        const NAME: &str = "read_restriction";
        if let Some(v) = self.graph.violations.first() {
            return CheckResult::fail(NAME, v.code, v.detail.clone(), self.trace(&[v.state]));
        }
        for (i, rows) in self.graph.per_process.iter().enumerate() {
            for (s, succ) in rows.iter().enumerate() {
                for &t in succ {
                    let l = self.space.project_local(s, i);
                    let w = self.space.current_write(t, i);
                    for s2 in self.space.states_with_local(i, l) {
                        let t2 = self.space.apply_write(s2, i, w);
                        if rows[s2].binary_search(&t2).is_err() {
                            let detail = format!(
                                "process {i} has {} -> {} but not {} -> {}, which it cannot tell apart",
                                self.show(s),
                                self.show(t),
                                self.show(s2),
                                self.show(t2)
                            );
                            return CheckResult::fail(
                                NAME,
                                "GROUP_INCOMPLETE",
                                detail,
                                vec![self.step(s2, 1 << i), self.step(t2, 0)],
                            );
                        }
                    }
                }
            }
        }
        CheckResult::pass(NAME)
    }

    /// No step leaves the legitimate states.
    pub fn check_closure(&self) -> CheckResult {
        const NAME: &str = "closure";
        let Some(ls) = self.ls() else {
            return CheckResult::fail(NAME, "MISSING_LS_TABLE", "protocol has no legitimate-state table".into(), vec![]);
        };
        for s in (0..self.space.state_count()).filter(|&s| ls[s]) {
            if let Some(e) = self.graph.steps[s].iter().find(|e| !ls[e.target]) {
                let detail = format!("{} -> {} leaves the legitimate states", self.show(s), self.show(e.target));
                return CheckResult::fail(NAME, "LEAVES_LS", detail, vec![self.step(s, e.acting), self.step(e.target, 0)]);
            }
        }
        CheckResult::pass(NAME)
    }

    /// Outside the legitimate states, every state has a step and there is no cycle.
    pub fn check_strong_convergence(&self) -> CheckResult {
        const NAME: &str = "strong_convergence";
        let Some(ls) = self.ls() else {
            return CheckResult::fail(NAME, "MISSING_LS_TABLE", "protocol has no legitimate-state table".into(), vec![]);
        };
        let region: Vec<bool> = ls.iter().map(|&b| !b).collect();
        self.region_check(NAME, &region)
    }

    /// Deadlock and cycle scan inside `region`.
    fn region_check(&self, name: &str, region: &[bool]) -> CheckResult {
        for s in (0..self.space.state_count()).filter(|&s| region[s]) {
            if self.graph.steps[s].is_empty() {
                let detail = format!("{} has no step", self.show(s));
                return CheckResult::fail(name, "DEADLOCK", detail, vec![self.step(s, 0)]);
            }
        }
        if let Some(cycle) = find_cycle(&self.graph.steps, region) {
            let detail = format!("cycle of length {} through {}", cycle.len() - 1, self.show(cycle[0]));
            return CheckResult::fail(name, "CYCLE", detail, self.trace(&cycle));
        }
        CheckResult::pass(name)
    }

    /// From every state some legitimate state is reachable.
    pub fn check_weak_convergence(&self) -> CheckResult {
        const NAME: &str = "weak_convergence";
        let Some(ls) = self.ls() else {
            return CheckResult::fail(NAME, "MISSING_LS_TABLE", "protocol has no legitimate-state table".into(), vec![]);
        };
        let count = self.space.state_count();
        let mut preds = vec![Vec::new(); count];
        for (s, edges) in self.graph.steps.iter().enumerate() {
            for e in edges {
                preds[e.target].push(s);
            }
        }
        let mut reached: Vec<bool> = ls.to_vec();
        let mut queue: VecDeque<usize> = (0..count).filter(|&s| ls[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &s in &preds[t] {
                if !reached[s] {
                    reached[s] = true;
                    queue.push_back(s);
                }
            }
        }
        if let Some(s) = (0..count).find(|&s| !reached[s]) {
            let detail = format!("no legitimate state is reachable from {}", self.show(s));
            return CheckResult::fail(NAME, "NO_RECOVERY", detail, vec![self.step(s, 0)]);
        }
        CheckResult::pass(NAME)
    }

    /// No process executes twice on a path that has not yet reached a
    /// legitimate state.
    pub fn check_monotonic(&self) -> CheckResult {
        const NAME: &str = "monotonic";
        let Some(ls) = self.ls() else {
            return CheckResult::fail(NAME, "MISSING_LS_TABLE", "protocol has no legitimate-state table".into(), vec![]);
        };
        match monotonic_violation(&self.graph.steps, ls, self.space.process_count()) {
            Err(size) => CheckResult::fail(
                NAME,
                "SCALE_EXCEEDED",
                format!("{size} augmented states exceed the bound of {MONOTONIC_STATE_BOUND}"),
                vec![],
            ),
            Ok(None) => CheckResult::pass(NAME),
            Ok(Some((path, last))) => {
                let mut trace: Vec<TraceStep> = path.iter().map(|&(s, a)| self.step(s, a)).collect();
                trace.push(self.step(last, 0));
                let detail = format!(
                    "a process executes twice before a legitimate state is reached, starting at {}",
                    self.show(path[0].0)
                );
                CheckResult::fail(NAME, "REPEATED_EXECUTION", detail, trace)
            }
        }
    }

    fn pred_value(&self, p: usize, s: usize) -> bool {
        let owner = self.problem.predicates[p].owner;
        self.proto.predicate_tables[p][self.space.owner_local(owner, s)]
    }

    /// Value of a formula without `U` at `s`; `X` quantifies over all steps
    /// and holds at a state without steps.
    pub fn eval(&self, g: &Ground, s: usize) -> bool {
        match g {
            Ground::Next(f) => self.graph.steps[s].iter().all(|e| self.eval(f, e.target)),
            Ground::Not(f) => !self.eval(f, s),
            Ground::And(v) => v.iter().all(|f| self.eval(f, s)),
            Ground::Or(v) => v.iter().any(|f| self.eval(f, s)),
            Ground::Implies(a, b) => !self.eval(a, s) || self.eval(b, s),
            Ground::Iff(a, b) => self.eval(a, s) == self.eval(b, s),
            Ground::Until(..) => panic!("until below the top-level conjunction"),
            atom => atom.eval_state(
                &|v| self.space.value(s, v),
                &|p| self.pred_value(p, s),
                &|i| self.graph.enabled(i, s),
            ),
        }
    }

    /// Checks a ground formula at every anchored state. `U` may appear only
    /// as a top-level conjunct.
    pub fn check_formula(&self, name: &str, g: &Ground, anchor: Anchor) -> CheckResult {
        let count = self.space.state_count();
        let anchored: Vec<bool> = match (anchor, self.ls()) {
            (Anchor::AllStates, _) => vec![true; count],
            (Anchor::LsStates, Some(ls)) => ls.to_vec(),
            (Anchor::LsStates, None) => {
                return CheckResult::fail(name, "MISSING_LS_TABLE", "protocol has no legitimate-state table".into(), vec![]);
            }
        };
        for part in g.conjuncts() {
            let result = match part {
                Ground::Until(p, q) => {
                    if !p.is_temporal_free() || !q.is_temporal_free() {
                        return CheckResult::fail(name, "UNSUPPORTED_FORMULA", "nested temporal operator".into(), vec![]);
                    }
                    self.check_until(name, p, q, &anchored)
                }
                state => {
                    if contains_until(state) {
                        return CheckResult::fail(
                            name,
                            "UNSUPPORTED_FORMULA",
                            "`U` below the top-level conjunction".into(),
                            vec![],
                        );
                    }
                    self.check_pointwise(name, state, &anchored)
                }
            };
            if !result.pass {
                return result;
            }
        }
        CheckResult::pass(name)
    }

    fn check_pointwise(&self, name: &str, g: &Ground, anchored: &[bool]) -> CheckResult {
        let vars = &self.problem.topology.vars;
        for s in (0..self.space.state_count()).filter(|&s| anchored[s]) {
            if !self.eval(g, s) {
                let detail = format!("`{}` is false at {}", g.render(vars, &self.problem.predicates), self.show(s));
                let trace = match g {
                    Ground::Next(f) => {
                        let e = self.graph.steps[s].iter().find(|e| !self.eval(f, e.target)).copied();
                        match e {
                            Some(e) => vec![self.step(s, e.acting), self.step(e.target, 0)],
                            None => vec![self.step(s, 0)],
                        }
                    }
                    _ => vec![self.step(s, 0)],
                };
                return CheckResult::fail(name, "FORMULA_FALSE", detail, trace);
            }
        }
        CheckResult::pass(name)
    }

    fn check_until(&self, name: &str, p: &Ground, q: &Ground, anchored: &[bool]) -> CheckResult {
        let vars = &self.problem.topology.vars;
        let text = format!("({} U {})", p.render(vars, &self.problem.predicates), q.render(vars, &self.problem.predicates));
        let pending: Vec<bool> =
            (0..self.space.state_count()).map(|s| anchored[s] && !self.eval(q, s)).collect();
        for s in (0..self.space.state_count()).filter(|&s| pending[s]) {
            if !self.eval(p, s) {
                let detail = format!("`{text}` fails at {}: neither side holds", self.show(s));
                return CheckResult::fail(name, "UNTIL_FALSE", detail, vec![self.step(s, 0)]);
            }
        }
        let result = self.region_check(name, &pending);
        if result.pass {
            result
        } else {
            CheckResult { detail: result.detail.map(|d| format!("`{text}` is never fulfilled: {d}")), ..result }
        }
    }

    /// All checks the problem's goal calls for.
    pub fn verify(&self) -> Result<Verdict, VerifyError> {
        let env = self.problem.ground_env();
        let phi = env.ground(&self.problem.phi)?;
        let psi = env.ground(&self.problem.psi)?;
        let mut checks = vec![self.check_problem_match(), self.check_read_restriction()];
        match self.problem.mode.goal {
            Goal::IdealStabilizing => {
                checks.push(self.check_formula("phi", &phi, Anchor::AllStates));
                checks.push(self.check_formula("psi", &psi, Anchor::AllStates));
            }
            Goal::SelfStabilizing | Goal::MonotonicStabilizing => {
                checks.push(self.check_formula("phi", &phi, Anchor::AllStates));
                checks.push(self.check_formula("psi", &psi, Anchor::LsStates));
                if let Some(f) = &self.problem.legitimate {
                    checks.push(self.check_legitimate(&env.ground(f)?));
                }
                checks.push(self.check_closure());
                checks.push(match self.problem.mode.convergence {
                    Convergence::Strong => self.check_strong_convergence(),
                    Convergence::Weak => self.check_weak_convergence(),
                });
                if self.problem.mode.goal == Goal::MonotonicStabilizing {
                    checks.push(self.check_monotonic());
                }
            }
        }
        Ok(Verdict::from_checks(checks))
    }

    /// The legitimate-state table is exactly the set of states satisfying `g`.
    pub fn check_legitimate(&self, g: &Ground) -> CheckResult {
        const NAME: &str = "legitimate";
        let Some(ls) = self.ls() else {
            return CheckResult::fail(NAME, "MISSING_LS_TABLE", "protocol has no legitimate-state table".into(), vec![]);
        };
        match (0..self.space.state_count()).find(|&s| ls[s] != self.eval(g, s)) {
            None => CheckResult::pass(NAME),
            Some(s) => {
                let detail = format!(
                    "{} is {} in the table but the formula says otherwise",
                    self.show(s),
                    if ls[s] { "legitimate" } else { "not legitimate" }
                );
                CheckResult::fail(NAME, "LS_MISMATCH", detail, vec![self.step(s, 0)])
            }
        }
    }

    /// The protocol was produced for this problem and uses its timing.
    pub fn check_problem_match(&self) -> CheckResult {
        const NAME: &str = "problem_match";
        let hash = problem_hash(self.problem);
        if self.proto.problem_hash != hash {
            return CheckResult::fail(
                NAME,
                "HASH_MISMATCH",
                format!("protocol is for problem {}, not {hash}", self.proto.problem_hash),
                vec![],
            );
        }
        if self.proto.timing != self.problem.mode.timing {
            return CheckResult::fail(
                NAME,
                "TIMING_MISMATCH",
                format!("protocol timing {:?} differs from the problem's {:?}", self.proto.timing, self.problem.mode.timing),
                vec![],
            );
        }
        CheckResult::pass(NAME)
    }
}

fn contains_until(g: &Ground) -> bool {
    match g {
        Ground::Until(..) => true,
        Ground::Next(f) | Ground::Not(f) => contains_until(f),
        Ground::And(v) | Ground::Or(v) => v.iter().any(contains_until),
        Ground::Implies(a, b) | Ground::Iff(a, b) => contains_until(a) || contains_until(b),
        _ => false,
    }
}

/// A cycle inside `region`, as a closed list of states (first = last).
pub fn find_cycle(steps: &[Vec<Edge>], region: &[bool]) -> Option<Vec<usize>> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; steps.len()];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in (0..steps.len()).filter(|&s| region[s]) {
        if color[root] != WHITE {
            continue;
        }
        color[root] = GREY;
        stack.push((root, 0));
        while let Some(&mut (s, ref mut next)) = stack.last_mut() {
            let Some(e) = steps[s].get(*next) else {
                color[s] = BLACK;
                stack.pop();
                continue;
            };
            *next += 1;
            let t = e.target;
            if !region[t] {
                continue;
            }
            match color[t] {
                WHITE => {
                    color[t] = GREY;
                    stack.push((t, 0));
                }
                GREY => {
                    let from = stack.iter().position(|&(u, _)| u == t).expect("grey states are on the stack");
                    let mut cycle: Vec<usize> = stack[from..].iter().map(|&(u, _)| u).collect();
                    cycle.push(t);
                    return Some(cycle);
                }
                _ => {}
            }
        }
    }
    None
}

type MonotonicPath = (Vec<(usize, u64)>, usize);

/// Breadth-first search over (state, executed-process set) pairs from every
/// non-legitimate state. Returns the shortest path ending in a repeated
/// execution, or `Err(size)` when the search space is too large.
pub fn monotonic_violation(steps: &[Vec<Edge>], ls: &[bool], processes: usize) -> Result<Option<MonotonicPath>, usize> {
    let count = steps.len();
    let masks = 1usize.checked_shl(processes as u32).unwrap_or(usize::MAX);
    let size = count.saturating_mul(masks);
    if size > MONOTONIC_STATE_BOUND {
        return Err(size);
    }
    let node = |s: usize, m: u64| s * masks + m as usize;
    let mut parent: Vec<Option<(usize, u64)>> = vec![None; size];
    let mut seen = vec![false; size];
    let mut queue = VecDeque::new();
    for s in (0..count).filter(|&s| !ls[s]) {
        seen[node(s, 0)] = true;
        queue.push_back((s, 0u64));
    }
    let unwind = |parent: &[Option<(usize, u64)>], mut s: usize, mut m: u64| {
        let mut nodes = vec![(s, m)];
        while let Some((ps, pm)) = parent[node(s, m)] {
            nodes.push((ps, pm));
            s = ps;
            m = pm;
        }
        nodes.reverse();
        nodes
    };
    while let Some((s, m)) = queue.pop_front() {
        for e in &steps[s] {
            if e.acting & m != 0 {
                let nodes = unwind(&parent, s, m);
                // Convert the node path into (state, acting) pairs.
                let mut path: Vec<(usize, u64)> =
                    nodes.windows(2).map(|w| (w[0].0, w[1].1 & !w[0].1)).collect();
                path.push((s, e.acting));
                return Ok(Some((path, e.target)));
            }
            if ls[e.target] {
                continue;
            }
            let next = (e.target, m | e.acting);
            let id = node(next.0, next.1);
            if !seen[id] {
                seen[id] = true;
                parent[id] = Some((s, m));
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

/// States from which a monotonicity violation can start.
pub fn monotonic_violation_starts(steps: &[Vec<Edge>], ls: &[bool], processes: usize) -> BTreeSet<usize> {
    (0..steps.len())
        .filter(|&s| !ls[s] && single_root_violation(steps, ls, processes, s))
        .collect()
}

fn single_root_violation(steps: &[Vec<Edge>], ls: &[bool], processes: usize, root: usize) -> bool {
    let masks = 1usize << processes;
    let mut seen = vec![false; steps.len() * masks];
    let mut queue = VecDeque::from([(root, 0u64)]);
    seen[root * masks] = true;
    while let Some((s, m)) = queue.pop_front() {
        for e in &steps[s] {
            if e.acting & m != 0 {
                return true;
            }
            if ls[e.target] {
                continue;
            }
            let id = e.target * masks + (m | e.acting) as usize;
            if !seen[id] {
                seen[id] = true;
                queue.push_back((e.target, m | e.acting));
            }
        }
    }
    false
}

/// Convenience wrapper: builds the graph and runs every check the goal needs.
pub fn verify(proto: &Protocol, problem: &SynthesisProblem) -> Result<Verdict, VerifyError> {
    Verifier::new(proto, problem)?.verify()
}
