//! Builds the quantifier-free constraint system for a synthesis problem.

use std::fmt;

use serde::Serialize;

use crate::formula::{FormulaError, Ground};
use crate::parser::problem_hash;
use crate::problem::{
    validate_problem, Convergence, Goal, ModeConfig, Symmetry, SynthesisProblem, Timing,
    ValidationReport,
};
use crate::smt::{Sort, SymId, Symbol, Term};
use crate::space::{SpaceError, StateSpace};

/// Default ceiling on the number of global states the encoder will expand.
pub const DEFAULT_MAX_STATES: usize = 1 << 14;
/// Ceiling on the number of composed successors per state in synchronous mode.
pub const MAX_SYNC_STEPS: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderOptions {
    /// Upper bound of every ranking symbol; `None` means the state count.
    pub rank_bound: Option<i64>,
    pub max_states: usize,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        EncoderOptions { rank_bound: None, max_states: DEFAULT_MAX_STATES }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("scale exceeded: {0}")]
    ScaleExceeded(String),
    #[error("invalid problem:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

impl EncodeError {
    pub fn code(&self) -> &'static str {
        match self {
            EncodeError::ScaleExceeded(_) => "SCALE_EXCEEDED",
            EncodeError::Invalid(_) => "VALIDATION_ERROR",
            EncodeError::Formula(e) => e.code(),
        }
    }
}

impl From<SpaceError> for EncodeError {
    fn from(e: SpaceError) -> Self {
        EncodeError::ScaleExceeded(e.to_string())
    }
}

/// Every unknown of the synthesis problem, flattened into named symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownTable {
    pub symbols: Vec<Symbol>,
    /// `rel[i][local][write]`; `None` where the write valuation equals the
    /// local state's current one.
    pub rel: Vec<Vec<Vec<Option<SymId>>>>,
    /// `lp[pred][owner local state]`.
    pub lp: Vec<Vec<SymId>>,
    pub ls: Option<Vec<SymId>>,
    pub lambda: Option<Vec<SymId>>,
    /// One ranking per `U` instance, over all states.
    pub until: Vec<Vec<SymId>>,
    /// `flag[i][state]`, monotonic mode only.
    pub flag: Option<Vec<Vec<SymId>>>,
}

impl UnknownTable {
    pub fn rel_count(&self) -> usize {
        self.rel.iter().flatten().flatten().filter(|x| x.is_some()).count()
    }

    pub fn symbol_index(&self, name: &str) -> Option<SymId> {
        self.symbols.iter().position(|s| s.name == name)
    }
}

/// Label of the constraint family a constraint belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Phi,
    Psi,
    Closure,
    RankDecrease,
    NoDeadlock,
    WeakConvergence,
    UntilRank,
    UntilProgress,
    MonotonicFire,
    MonotonicKeep,
    Symmetry,
    Legitimate,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Phi => "phi",
            Family::Psi => "psi",
            Family::Closure => "closure",
            Family::RankDecrease => "rank_decrease",
            Family::NoDeadlock => "no_deadlock",
            Family::WeakConvergence => "weak_convergence",
            Family::UntilRank => "until_rank",
            Family::UntilProgress => "until_progress",
            Family::MonotonicFire => "monotonic_fire",
            Family::MonotonicKeep => "monotonic_keep",
            Family::Symmetry => "symmetry",
            Family::Legitimate => "legitimate",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub family: Family,
    pub term: Term,
}

#[derive(Clone, Debug)]
pub struct SmtInstance {
    pub table: UnknownTable,
    pub constraints: Vec<Constraint>,
    pub problem_hash: String,
    pub mode: ModeConfig,
    pub state_count: usize,
    pub rank_bound: i64,
}

impl SmtInstance {
    pub fn count(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }
}

/// One possible successor of a state under the symbolic relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    /// Condition on the unknowns under which the step exists.
    pub cond: Term,
    pub target: usize,
    /// Processes whose write sets change.
    pub fired: Vec<usize>,
}

/// Where state-level constraints are required to hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    All,
    Ls,
}

/// A top-level conjunct of a grounded formula.
#[derive(Clone, Debug)]
enum Part {
    State(Ground),
    Until(Ground, Ground, usize),
}

fn split_parts(g: &Ground, next_until: &mut usize) -> Result<Vec<Part>, EncodeError> {
    let mut out = Vec::new();
    for c in g.conjuncts() {
        match c {
            Ground::Until(a, b) => {
                if !a.is_temporal_free() || !b.is_temporal_free() {
                    return Err(FormulaError::NestedTemporal(format!("{c:?}")).into());
                }
                out.push(Part::Until((**a).clone(), (**b).clone(), *next_until));
                *next_until += 1;
            }
            Ground::Const(false) => out.push(Part::State(Ground::Const(false))),
            c => out.push(Part::State(c.clone())),
        }
    }
    Ok(out)
}

pub struct Encoder<'a> {
    problem: &'a SynthesisProblem,
    space: StateSpace,
    table: UnknownTable,
    steps: Vec<Vec<Step>>,
    phi: Vec<Part>,
    psi: Vec<Part>,
    legitimate: Option<Ground>,
    rank_bound: i64,
}

fn push_symbol(symbols: &mut Vec<Symbol>, name: String, sort: Sort) -> SymId {
    symbols.push(Symbol { name, sort });
    symbols.len() - 1
}

/// Allocates every unknown of the problem.
pub fn allocate_unknowns(
    p: &SynthesisProblem,
    opts: &EncoderOptions,
) -> Result<UnknownTable, EncodeError> {
    Ok(Encoder::new(p, opts)?.table)
}

impl<'a> Encoder<'a> {
    pub fn new(p: &'a SynthesisProblem, opts: &EncoderOptions) -> Result<Self, EncodeError> {
        let report = validate_problem(p);
        if !report.is_ok() {
            return Err(EncodeError::Invalid(report));
        }
        let space = StateSpace::with_bound(&p.topology, opts.max_states)?;
        let n_states = space.state_count();
        let env = p.ground_env();
        let mut until_count = 0;
        let phi = split_parts(&env.ground(&p.phi)?, &mut until_count)?;
        let psi = split_parts(&env.ground(&p.psi)?, &mut until_count)?;
        let legitimate = p.legitimate.as_ref().map(|f| env.ground(f)).transpose()?;

        let rank_hi = opts.rank_bound.unwrap_or(n_states as i64).max(0);
        let rank = Sort::Int { lo: 0, hi: rank_hi };
        let mut symbols = Vec::new();
        let nproc = p.topology.process_count;

        let mut rel = Vec::with_capacity(nproc);
        for i in 0..nproc {
            let mut rows = Vec::with_capacity(space.local_size(i));
            for l in 0..space.local_size(i) {
                let cur = space.current_write_of_local(i, l);
                let row = (0..space.write_count(i))
                    .map(|w| (w != cur).then(|| push_symbol(&mut symbols, format!("r_{i}_{l}_{w}"), Sort::Bool)))
                    .collect();
                rows.push(row);
            }
            rel.push(rows);
        }
        let lp = p
            .predicates
            .iter()
            .map(|pr| {
                (0..space.owner_local_size(pr.owner))
                    .map(|l| push_symbol(&mut symbols, format!("lp_{}_{l}", pr.name), Sort::Bool))
                    .collect()
            })
            .collect();
        let self_like = p.mode.has_legitimate_states();
        let ls = self_like.then(|| {
            (0..n_states)
                .map(|s| push_symbol(&mut symbols, format!("ls_{s}"), Sort::Bool))
                .collect()
        });
        let lambda = self_like.then(|| {
            (0..n_states)
                .map(|s| push_symbol(&mut symbols, format!("lambda_{s}"), rank))
                .collect()
        });
        let until = (0..until_count)
            .map(|k| {
                (0..n_states)
                    .map(|s| push_symbol(&mut symbols, format!("ulam_{k}_{s}"), rank))
                    .collect()
            })
            .collect();
        let flag = (p.mode.goal == Goal::MonotonicStabilizing).then(|| {
            (0..nproc)
                .map(|i| {
                    (0..n_states)
                        .map(|s| push_symbol(&mut symbols, format!("flag_{i}_{s}"), Sort::Bool))
                        .collect()
                })
                .collect()
        });
        let table = UnknownTable { symbols, rel, lp, ls, lambda, until, flag };

        let mut enc = Encoder { problem: p, space, table, steps: Vec::new(), phi, psi, legitimate, rank_bound: rank_hi };
        enc.steps = (0..n_states)
            .map(|s| enc.compute_steps(s))
            .collect::<Result<_, _>>()?;
        Ok(enc)
    }

    pub fn table(&self) -> &UnknownTable {
        &self.table
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    /// Symbolic successors of `s`.
    pub fn steps(&self, s: usize) -> &[Step] {
        &self.steps[s]
    }

    fn moves(&self, i: usize, s: usize) -> Vec<(SymId, usize)> {
        let l = self.space.project_local(s, i);
        self.table.rel[i][l]
            .iter()
            .enumerate()
            .filter_map(|(w, id)| id.map(|id| (id, w)))
            .collect()
    }

    fn compute_steps(&self, s: usize) -> Result<Vec<Step>, EncodeError> {
        let nproc = self.problem.topology.process_count;
        match self.problem.mode.timing {
            Timing::Asynchronous => Ok((0..nproc)
                .flat_map(|i| {
                    self.moves(i, s).into_iter().map(move |(id, w)| Step {
                        cond: Term::var(id),
                        target: self.space.apply_write(s, i, w),
                        fired: vec![i],
                    })
                })
                .collect()),
            Timing::Synchronous => {
                let mut partial = vec![(Vec::<Term>::new(), s, Vec::<usize>::new())];
                for i in 0..nproc {
                    let moves = self.moves(i, s);
                    let keep = Term::not(self.enabled(i, s));
                    let mut next = Vec::with_capacity(partial.len() * (moves.len() + 1));
                    for (conds, t, fired) in &partial {
                        let mut c = conds.clone();
                        c.push(keep.clone());
                        next.push((c, *t, fired.clone()));
                        for &(id, w) in &moves {
                            let mut c = conds.clone();
                            c.push(Term::var(id));
                            let mut f = fired.clone();
                            f.push(i);
                            next.push((c, self.space.apply_write(*t, i, w), f));
                        }
                    }
                    if next.len() > MAX_SYNC_STEPS {
                        return Err(EncodeError::ScaleExceeded(format!(
                            "more than {MAX_SYNC_STEPS} synchronous successors of state {s}"
                        )));
                    }
                    partial = next;
                }
                Ok(partial
                    .into_iter()
                    .filter(|(_, _, fired)| !fired.is_empty())
                    .map(|(conds, target, fired)| Step { cond: Term::and(conds), target, fired })
                    .collect())
            }
        }
    }

    /// Process `i` has an outgoing move at `s`.
    pub fn enabled(&self, i: usize, s: usize) -> Term {
        Term::or(self.moves(i, s).into_iter().map(|(id, _)| Term::var(id)))
    }

    pub fn has_successor(&self, s: usize) -> Term {
        Term::or((0..self.problem.topology.process_count).map(|i| self.enabled(i, s)))
    }

    fn ls(&self, s: usize) -> Term {
        Term::var(self.table.ls.as_ref().expect("legitimate states are allocated")[s])
    }

    fn lambda(&self, s: usize) -> SymId {
        self.table.lambda.as_ref().expect("ranking is allocated")[s]
    }

    fn anchor(&self, anchor: Anchor, s: usize) -> Term {
        match anchor {
            Anchor::All => Term::True,
            Anchor::Ls => self.ls(s),
        }
    }

    /// Meaning of a ground formula at state `s`. `X` is the conjunction over
    /// symbolic successors; `U` must have been split off beforehand.
    pub fn eval_state(&self, g: &Ground, s: usize) -> Term {
        match g {
            Ground::Const(b) => Term::constant(*b),
            Ground::Cmp(..) => {
                let holds = g.eval_state(&|v| self.space.value(s, v), &|_| false, &|_| false);
                Term::constant(holds)
            }
            Ground::Pred(p) => {
                let owner = self.problem.predicates[*p].owner;
                Term::var(self.table.lp[*p][self.space.owner_local(owner, s)])
            }
            Ground::Enabled(i) => self.enabled(*i, s),
            Ground::Not(f) => Term::not(self.eval_state(f, s)),
            Ground::And(v) => Term::and(v.iter().map(|f| self.eval_state(f, s))),
            Ground::Or(v) => Term::or(v.iter().map(|f| self.eval_state(f, s))),
            Ground::Implies(a, b) => Term::implies(self.eval_state(a, s), self.eval_state(b, s)),
            Ground::Iff(a, b) => Term::iff(self.eval_state(a, s), self.eval_state(b, s)),
            Ground::Next(f) => self.next_at(f, s),
            Ground::Until(..) => panic!("until subformula reached state evaluation"),
        }
    }

    fn next_at(&self, f: &Ground, s: usize) -> Term {
        Term::and(
            self.steps[s]
                .iter()
                .map(|st| Term::implies(st.cond.clone(), self.eval_state(f, st.target))),
        )
    }

    /// `X f` at every anchored state.
    pub fn encode_next(&self, f: &Ground, anchor: Anchor) -> Vec<Term> {
        self.state_family(&Ground::Next(Box::new(f.clone())), anchor)
    }

    fn state_family(&self, g: &Ground, anchor: Anchor) -> Vec<Term> {
        (0..self.space.state_count())
            .map(|s| Term::implies(self.anchor(anchor, s), self.eval_state(g, s)))
            .filter(|t| !t.is_true())
            .collect()
    }

    /// `P U Q` at every anchored state, with ranking `k`: returns
    /// (ranking increase, progress) constraints.
    pub fn encode_until(&self, p: &Ground, q: &Ground, anchor: Anchor, k: usize) -> (Vec<Term>, Vec<Term>) {
        let rank = &self.table.until[k];
        let mut increase = Vec::new();
        let mut progress = Vec::new();
        for s in 0..self.space.state_count() {
            let pending = Term::and([self.anchor(anchor, s), Term::not(self.eval_state(q, s))]);
            if pending == Term::False {
                continue;
            }
            for st in &self.steps[s] {
                let t = Term::implies(
                    Term::and([pending.clone(), st.cond.clone()]),
                    Term::gt(rank[st.target], rank[s]),
                );
                if !t.is_true() {
                    increase.push(t);
                }
            }
            let t = Term::implies(pending, Term::and([self.eval_state(p, s), self.has_successor(s)]));
            if !t.is_true() {
                progress.push(t);
            }
        }
        (increase, progress)
    }

    fn encode_parts(&self, parts: &[Part], anchor: Anchor, family: Family, out: &mut Vec<Constraint>) {
        for part in parts {
            match part {
                Part::State(g) => out.extend(
                    self.state_family(g, anchor).into_iter().map(|term| Constraint { family, term }),
                ),
                Part::Until(p, q, k) => {
                    let (inc, prog) = self.encode_until(p, q, anchor, *k);
                    out.extend(inc.into_iter().map(|term| Constraint { family: Family::UntilRank, term }));
                    out.extend(
                        prog.into_iter().map(|term| Constraint { family: Family::UntilProgress, term }),
                    );
                }
            }
        }
    }

    /// The predicate-defining formula at every state.
    pub fn encode_phi(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        self.encode_parts(&self.phi, Anchor::All, Family::Phi, &mut out);
        out
    }

    /// The behavioral requirement at every legitimate state.
    pub fn encode_ls_psi(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        self.encode_parts(&self.psi, Anchor::Ls, Family::Psi, &mut out);
        out
    }

    /// Both formulas at every state.
    pub fn encode_ideal(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        self.encode_parts(&self.phi, Anchor::All, Family::Phi, &mut out);
        self.encode_parts(&self.psi, Anchor::All, Family::Psi, &mut out);
        out
    }

    pub fn encode_closure(&self) -> Vec<Term> {
        let mut out = Vec::new();
        for s in 0..self.space.state_count() {
            for st in &self.steps[s] {
                out.push(Term::implies(
                    Term::and([self.ls(s), st.cond.clone()]),
                    self.ls(st.target),
                ));
            }
        }
        out
    }

    /// (ranking increase outside LS, no deadlock outside LS).
    pub fn encode_strong_convergence(&self) -> (Vec<Term>, Vec<Term>) {
        let mut rank = Vec::new();
        let mut live = Vec::new();
        for s in 0..self.space.state_count() {
            let outside = Term::not(self.ls(s));
            for st in &self.steps[s] {
                rank.push(Term::implies(
                    Term::and([outside.clone(), st.cond.clone()]),
                    Term::gt(self.lambda(st.target), self.lambda(s)),
                ));
            }
            live.push(Term::implies(outside, self.has_successor(s)));
        }
        (rank, live)
    }

    pub fn encode_weak_convergence(&self) -> Vec<Term> {
        (0..self.space.state_count())
            .map(|s| {
                let good = self.steps[s].iter().map(|st| {
                    Term::and([
                        st.cond.clone(),
                        Term::or([self.ls(st.target), Term::gt(self.lambda(st.target), self.lambda(s))]),
                    ])
                });
                Term::implies(Term::not(self.ls(s)), Term::or(good))
            })
            .collect()
    }

    /// (each firing process sets its flag, other processes keep theirs).
    pub fn encode_monotonic(&self) -> (Vec<Term>, Vec<Term>) {
        let flag = self.table.flag.as_ref().expect("flags are allocated");
        let nproc = self.problem.topology.process_count;
        let mut fire = Vec::new();
        let mut keep = Vec::new();
        for s in 0..self.space.state_count() {
            let outside = Term::not(self.ls(s));
            for st in &self.steps[s] {
                let pre = Term::and([outside.clone(), st.cond.clone()]);
                fire.push(Term::implies(
                    pre.clone(),
                    Term::and(st.fired.iter().flat_map(|&i| {
                        [Term::var(flag[i][s]), Term::not(Term::var(flag[i][st.target]))]
                    })),
                ));
                for i in (0..nproc).filter(|i| !st.fired.contains(i)) {
                    keep.push(Term::implies(
                        Term::and([pre.clone(), Term::not(Term::var(flag[i][s]))]),
                        Term::not(Term::var(flag[i][st.target])),
                    ));
                }
            }
        }
        (fire, keep)
    }

    /// Equates relation rows and predicate tables across the members of each
    /// symmetry class, under the renaming induced by their views.
    /// Pins the legitimate states to the problem's fixed formula, if any.
    pub fn encode_legitimate(&self) -> Vec<Term> {
        let Some(g) = &self.legitimate else { return Vec::new() };
        (0..self.space.state_count()).map(|s| Term::iff(self.ls(s), self.eval_state(g, s))).collect()
    }

    pub fn encode_symmetry(&self) -> Vec<Term> {
        let mut out = Vec::new();
        if self.problem.mode.symmetry != Symmetry::Symmetric {
            return out;
        }
        let sp = &self.space;
        for class in &self.problem.mode.classes {
            let Some(first) = class.members.first() else { continue };
            let a = first.process;
            for m in &class.members[1..] {
                let b = m.process;
                let rename: Vec<(usize, usize)> =
                    first.view.iter().copied().zip(m.view.iter().copied()).collect();
                let map_local = |l: usize| {
                    let mut s = 0;
                    for &(va, vb) in &rename {
                        let x = sp.local_digit(a, l, va).expect("view covers the read set");
                        s = sp.with_digit(s, vb, x);
                    }
                    sp.project_local(s, b)
                };
                let map_write = |w: usize| {
                    let vals = sp.write_valuation(a, w);
                    let mut s = 0;
                    for (&va, x) in sp.write_set(a).iter().zip(vals) {
                        let vb = rename.iter().find(|(x, _)| *x == va).expect("write var in view").1;
                        s = sp.with_digit(s, vb, x);
                    }
                    sp.current_write(s, b)
                };
                for l in 0..sp.local_size(a) {
                    let lb = map_local(l);
                    for w in 0..sp.write_count(a) {
                        let wb = map_write(w);
                        match (self.table.rel[a][l][w], self.table.rel[b][lb][wb]) {
                            (Some(x), Some(y)) => out.push(Term::iff(Term::var(x), Term::var(y))),
                            (None, None) => {}
                            _ => unreachable!("renaming preserves self-loop positions"),
                        }
                    }
                    for (&pa, &pb) in first.predicates.iter().zip(&m.predicates) {
                        out.push(Term::iff(
                            Term::var(self.table.lp[pa][l]),
                            Term::var(self.table.lp[pb][lb]),
                        ));
                    }
                }
            }
        }
        out
    }

    /// Dispatches on the problem's mode and returns the complete instance.
    pub fn build(self) -> SmtInstance {
        let mode = &self.problem.mode;
        let mut cs: Vec<Constraint> = Vec::new();
        let tag = |family: Family, terms: Vec<Term>| {
            terms
                .into_iter()
                .filter(|t| !t.is_true())
                .map(move |term| Constraint { family, term })
        };
        if mode.has_legitimate_states() {
            cs.extend(self.encode_phi());
            cs.extend(self.encode_ls_psi());
            cs.extend(tag(Family::Legitimate, self.encode_legitimate()));
            cs.extend(tag(Family::Closure, self.encode_closure()));
            match mode.convergence {
                Convergence::Strong => {
                    let (rank, live) = self.encode_strong_convergence();
                    cs.extend(tag(Family::RankDecrease, rank));
                    cs.extend(tag(Family::NoDeadlock, live));
                }
                Convergence::Weak => cs.extend(tag(Family::WeakConvergence, self.encode_weak_convergence())),
            }
            if mode.goal == Goal::MonotonicStabilizing {
                let (fire, keep) = self.encode_monotonic();
                cs.extend(tag(Family::MonotonicFire, fire));
                cs.extend(tag(Family::MonotonicKeep, keep));
            }
        } else {
            cs.extend(self.encode_ideal());
        }
        cs.extend(tag(Family::Symmetry, self.encode_symmetry()));

        SmtInstance {
            problem_hash: problem_hash(self.problem),
            mode: mode.clone(),
            state_count: self.space.state_count(),
            rank_bound: self.rank_bound,
            constraints: cs,
            table: self.table,
        }
    }
}

pub fn build_instance(p: &SynthesisProblem) -> Result<SmtInstance, EncodeError> {
    build_instance_with(p, &EncoderOptions::default())
}

pub fn build_instance_with(p: &SynthesisProblem, opts: &EncoderOptions) -> Result<SmtInstance, EncodeError> {
    Ok(Encoder::new(p, opts)?.build())
}
