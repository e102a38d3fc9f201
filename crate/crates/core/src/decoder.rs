//! Turns a solver witness into a protocol and compacts its guards.

use std::collections::{BTreeMap, BTreeSet};

use crate::encoder::{allocate_unknowns, EncodeError, EncoderOptions, UnknownTable};
use crate::formula::{CmpOp, GExpr, Ground};
use crate::minimize::{cover_to_ground, minimize, Cube};
use crate::parser::problem_hash;
use crate::problem::SynthesisProblem;
use crate::protocol::{Firing, GuardedCommand, Protocol};
use crate::smt::Sort;
use crate::solver::Witness;
use crate::space::StateSpace;

/// Cap on the number of assignment maps tried per process.
const MAX_CANDIDATE_MAPS: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("witness does not match the problem: {0}")]
    WitnessMismatch(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

impl DecodeError {
    pub fn code(&self) -> &'static str {
        match self {
            DecodeError::WitnessMismatch(_) => "WITNESS_MISMATCH",
            DecodeError::Encode(e) => e.code(),
        }
    }
}

fn check_shape(w: &Witness, table: &UnknownTable) -> Result<(), DecodeError> {
    let mut expected_bools = BTreeSet::new();
    let mut expected_ints = BTreeSet::new();
    for s in &table.symbols {
        match s.sort {
            Sort::Bool => expected_bools.insert(s.name.as_str()),
            Sort::Int { .. } => expected_ints.insert(s.name.as_str()),
        };
    }
    let bools: BTreeSet<&str> = w.bools.keys().map(String::as_str).collect();
    let ints: BTreeSet<&str> = w.ints.keys().map(String::as_str).collect();
    if let Some(missing) = expected_bools.difference(&bools).next() {
        return Err(DecodeError::WitnessMismatch(format!("no Boolean value for `{missing}`")));
    }
    if let Some(missing) = expected_ints.difference(&ints).next() {
        return Err(DecodeError::WitnessMismatch(format!("no integer value for `{missing}`")));
    }
    if let Some(extra) = bools.difference(&expected_bools).chain(ints.difference(&expected_ints)).next() {
        return Err(DecodeError::WitnessMismatch(format!("unexpected symbol `{extra}`")));
    }
    Ok(())
}

fn local_guard(space: &StateSpace, problem: &SynthesisProblem, i: usize, l: usize) -> Ground {
    let vals = space.local_valuation(i, l);
    Ground::and(space.read_set(i).iter().zip(vals).map(|(&v, x)| {
        Ground::Cmp(GExpr::Var(v), CmpOp::Eq, GExpr::Const(problem.topology.vars[v].values[x]))
    }))
}

fn write_assign(space: &StateSpace, problem: &SynthesisProblem, i: usize, w: usize) -> Vec<(usize, GExpr)> {
    space
        .write_set(i)
        .iter()
        .zip(space.write_valuation(i, w))
        .map(|(&v, x)| (v, GExpr::Const(problem.topology.vars[v].values[x])))
        .collect()
}

/// One command per selected relation bit, with an exact local-state guard,
/// plus every table of the witness.
pub fn decode(w: &Witness, problem: &SynthesisProblem) -> Result<Protocol, DecodeError> {
    let table = allocate_unknowns(problem, &EncoderOptions::default())?;
    check_shape(w, &table)?;
    let space = StateSpace::new(&problem.topology).map_err(|e| DecodeError::Encode(e.into()))?;
    let name = |id: usize| table.symbols[id].name.as_str();

    let mut commands = Vec::new();
    for (i, rows) in table.rel.iter().enumerate() {
        for (l, row) in rows.iter().enumerate() {
            for (wv, id) in row.iter().enumerate() {
                if let Some(id) = id {
                    if w.bools[name(*id)] {
                        commands.push(GuardedCommand {
                            process: i,
                            guard: local_guard(&space, problem, i, l),
                            assign: write_assign(&space, problem, i, wv),
                        });
                    }
                }
            }
        }
    }
    Ok(Protocol {
        problem_hash: problem_hash(problem),
        timing: problem.mode.timing,
        symmetry: problem.mode.symmetry,
        commands,
        predicate_tables: table
            .lp
            .iter()
            .map(|ids| ids.iter().map(|&id| w.bools[name(id)]).collect())
            .collect(),
        ls_table: table.ls.as_ref().map(|ids| ids.iter().map(|&id| w.bools[name(id)]).collect()),
        lambda_table: table.lambda.as_ref().map(|ids| ids.iter().map(|&id| w.ints[name(id)]).collect()),
    })
}

/// Per process, the set of (local state, write valuation) pairs the
/// protocol's commands induce. Self-loops are dropped.
pub fn local_relation(proto: &Protocol, problem: &SynthesisProblem, space: &StateSpace) -> Vec<BTreeSet<(usize, usize)>> {
    let mut out = vec![BTreeSet::new(); problem.topology.process_count];
    for c in &proto.commands {
        let i = c.process;
        for l in 0..space.local_size(i) {
            let s = space.states_with_local(i, l)[0];
            if let Firing::Fires { target, .. } = c.fire(space, problem, &proto.predicate_tables, s) {
                if target != s {
                    out[i].insert((l, space.current_write(target, i)));
                }
            }
        }
    }
    out
}

/// Per process, the global transitions the protocol's commands induce.
pub fn global_relation(proto: &Protocol, problem: &SynthesisProblem, space: &StateSpace) -> Vec<BTreeSet<(usize, usize)>> {
    let mut out = vec![BTreeSet::new(); problem.topology.process_count];
    for s in 0..space.state_count() {
        for (i, succ) in proto.process_successors(space, problem, s).into_iter().enumerate() {
            out[i].extend(succ.into_iter().map(|t| (s, t)));
        }
    }
    out
}

/// Per process, the global transitions selected by a witness.
pub fn witness_relation(w: &Witness, problem: &SynthesisProblem, space: &StateSpace) -> Result<Vec<BTreeSet<(usize, usize)>>, DecodeError> {
    let table = allocate_unknowns(problem, &EncoderOptions::default())?;
    check_shape(w, &table)?;
    let mut out = vec![BTreeSet::new(); problem.topology.process_count];
    for s in 0..space.state_count() {
        for (i, set) in out.iter_mut().enumerate() {
            let l = space.project_local(s, i);
            for (wv, id) in table.rel[i][l].iter().enumerate() {
                if let Some(id) = id {
                    if w.bools[&table.symbols[*id].name] {
                        set.insert((s, space.apply_write(s, i, wv)));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Rhs {
    Const(usize),
    Copy(usize),
    Shift(usize, i64),
}

fn candidate_rhs(space: &StateSpace, problem: &SynthesisProblem, i: usize, v: usize) -> Vec<Rhs> {
    let vars = &problem.topology.vars;
    let mut out: Vec<Rhs> = (0..vars[v].domain_size()).map(Rhs::Const).collect();
    let counting = |u: usize| vars[u].values.iter().copied().eq(0..vars[u].domain_size() as i64);
    for &u in space.read_set(i) {
        if u != v {
            out.push(Rhs::Copy(u));
        }
    }
    for &u in space.read_set(i) {
        if counting(u) && counting(v) && vars[u].domain_size() == vars[v].domain_size() {
            for c in 1..vars[u].domain_size() as i64 {
                out.push(Rhs::Shift(u, c));
            }
        }
    }
    out
}

fn rhs_expr(problem: &SynthesisProblem, v: usize, rhs: &Rhs) -> GExpr {
    let vars = &problem.topology.vars;
    match *rhs {
        Rhs::Const(x) => GExpr::Const(vars[v].values[x]),
        Rhs::Copy(u) => GExpr::Var(u),
        Rhs::Shift(u, c) => GExpr::Mod(
            Box::new(GExpr::Add(Box::new(GExpr::Var(u)), Box::new(GExpr::Const(c)))),
            Box::new(GExpr::Const(vars[u].domain_size() as i64)),
        ),
    }
}

/// Write valuation an assignment map produces at a local state, if every
/// component stays in its domain.
fn apply_map(space: &StateSpace, problem: &SynthesisProblem, i: usize, l: usize, map: &[Rhs]) -> Option<usize> {
    let s = space.states_with_local(i, l)[0];
    let mut t = s;
    for (&v, rhs) in space.write_set(i).iter().zip(map) {
        let value = rhs_expr(problem, v, rhs).eval(&|u| space.value(s, u));
        let x = problem.topology.vars[v].index_of_value(value)?;
        t = space.with_digit(t, v, x);
    }
    Some(space.current_write(t, i))
}

/// Re-expresses every process's relation as few commands with compact
/// guards. The induced relation and all tables are unchanged.
pub fn simplify_guards(proto: &Protocol, problem: &SynthesisProblem) -> Protocol {
    let Ok(space) = StateSpace::new(&problem.topology) else {
        return proto.clone();
    };
    let relation = local_relation(proto, problem, &space);
    let mut commands = Vec::new();
    for (i, pairs) in relation.iter().enumerate() {
        if pairs.is_empty() {
            continue;
        }
        let writes = space.write_set(i).to_vec();
        let per_var: Vec<Vec<Rhs>> = writes.iter().map(|&v| candidate_rhs(&space, problem, i, v)).collect();
        let product: usize = per_var.iter().map(Vec::len).product();
        let maps: Vec<Vec<Rhs>> = if product <= MAX_CANDIDATE_MAPS {
            cartesian(&per_var)
        } else {
            let consts: Vec<Vec<Rhs>> = per_var
                .iter()
                .map(|opts| opts.iter().filter(|r| matches!(r, Rhs::Const(_))).cloned().collect())
                .collect();
            cartesian(&consts)
        };

        // Local states at which each map reproduces a pair of the relation.
        let firing: Vec<BTreeSet<usize>> = maps
            .iter()
            .map(|map| {
                (0..space.local_size(i))
                    .filter(|&l| apply_map(&space, problem, i, l, map).is_some_and(|w| pairs.contains(&(l, w))))
                    .collect()
            })
            .collect();

        let mut uncovered: BTreeSet<(usize, usize)> = pairs.clone();
        // Map index and the local states whose pair it was first to cover.
        let mut chosen: Vec<(usize, BTreeSet<usize>)> = Vec::new();
        while !uncovered.is_empty() {
            let best = (0..maps.len())
                .filter(|m| !chosen.iter().any(|(c, _)| c == m))
                .max_by_key(|&m| {
                    let gain = firing[m]
                        .iter()
                        .filter(|&&l| {
                            apply_map(&space, problem, i, l, &maps[m]).is_some_and(|w| uncovered.contains(&(l, w)))
                        })
                        .count();
                    (gain, usize::MAX - m)
                })
                .expect("constant maps cover every pair");
            let mut fresh = BTreeSet::new();
            for &l in &firing[best] {
                if let Some(w) = apply_map(&space, problem, i, l, &maps[best]) {
                    if uncovered.remove(&(l, w)) {
                        fresh.insert(l);
                    }
                }
            }
            chosen.push((best, fresh));
        }
        chosen.sort_unstable();

        let domains: Vec<usize> = space.read_set(i).iter().map(|&v| space.domain_size(v)).collect();
        for (m, fresh) in chosen {
            let on: Vec<bool> = (0..space.local_size(i)).map(|l| fresh.contains(&l)).collect();
            let dc: Vec<bool> = (0..space.local_size(i)).map(|l| firing[m].contains(&l) && !fresh.contains(&l)).collect();
            let cover: Vec<Cube> = minimize(&domains, &on, &dc);
            let assign: Vec<(usize, GExpr)> =
                writes.iter().zip(&maps[m]).map(|(&v, rhs)| (v, rhs_expr(problem, v, rhs))).collect();
            for cube in cover {
                commands.push(GuardedCommand {
                    process: i,
                    guard: cover_to_ground(&[cube], space.read_set(i), &problem.topology.vars),
                    assign: assign.clone(),
                });
            }
        }
    }
    Protocol { commands, ..proto.clone() }
}

fn cartesian(per_var: &[Vec<Rhs>]) -> Vec<Vec<Rhs>> {
    let mut out = vec![Vec::new()];
    for opts in per_var {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// Counts commands per process, for summaries.
pub fn commands_per_process(proto: &Protocol) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for c in &proto.commands {
        *out.entry(c.process).or_insert(0) += 1;
    }
    out
}
