//! Guarded-command protocols, their JSON document and text rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::formula::{FormulaError, GExpr, Ground};
use crate::minimize::{cover_to_ground, minimize};
use crate::parser::{parse_expr, parse_formula_syntax, problem_hash};
use crate::problem::{Owner, Symmetry, SynthesisProblem, Timing};
use crate::space::StateSpace;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardedCommand {
    pub process: usize,
    pub guard: Ground,
    /// Simultaneous assignments; right-hand sides evaluate to declared values.
    pub assign: Vec<(usize, GExpr)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Protocol {
    pub problem_hash: String,
    pub timing: Timing,
    pub symmetry: Symmetry,
    pub commands: Vec<GuardedCommand>,
    /// Per predicate, indexed by the owner's local state.
    pub predicate_tables: Vec<Vec<bool>>,
    pub ls_table: Option<Vec<bool>>,
    pub lambda_table: Option<Vec<i64>>,
}

/// Outcome of evaluating a command at a global state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Firing {
    Disabled,
    /// Guard holds; `target` is the resulting state. `outside_write` lists
    /// assigned variables the process may not write.
    Fires { target: usize, outside_write: Vec<usize> },
    /// Guard holds but an assignment leaves the variable's domain.
    OutOfDomain { var: usize, value: i64 },
}

impl GuardedCommand {
    pub fn guard_holds(&self, space: &StateSpace, problem: &SynthesisProblem, tables: &[Vec<bool>], s: usize) -> bool {
        self.guard.eval_state(
            &|v| space.value(s, v),
            &|p| tables[p][space.owner_local(problem.predicates[p].owner, s)],
            &|_| false,
        )
    }

    pub fn fire(&self, space: &StateSpace, problem: &SynthesisProblem, tables: &[Vec<bool>], s: usize) -> Firing {
        if !self.guard_holds(space, problem, tables, s) {
            return Firing::Disabled;
        }
        let mut target = s;
        let mut outside_write = Vec::new();
        for (var, expr) in &self.assign {
            let value = expr.eval(&|v| space.value(s, v));
            let Some(x) = space.declared_values(*var).iter().position(|&a| a == value) else {
                return Firing::OutOfDomain { var: *var, value };
            };
            target = space.with_digit(target, *var, x);
            if !space.write_set(self.process).contains(var) {
                outside_write.push(*var);
            }
        }
        Firing::Fires { target, outside_write }
    }
}

impl Protocol {
    /// Empty protocol for a problem, with all-false tables.
    pub fn empty(problem: &SynthesisProblem, space: &StateSpace) -> Self {
        Protocol {
            problem_hash: problem_hash(problem),
            timing: problem.mode.timing,
            symmetry: problem.mode.symmetry,
            commands: Vec::new(),
            predicate_tables: problem
                .predicates
                .iter()
                .map(|p| vec![false; space.owner_local_size(p.owner)])
                .collect(),
            ls_table: problem.mode.has_legitimate_states().then(|| vec![false; space.state_count()]),
            lambda_table: None,
        }
    }

    /// Non-stuttering successors of `s` per process, under interleaving.
    /// Commands that leave a domain are skipped.
    pub fn process_successors(&self, space: &StateSpace, problem: &SynthesisProblem, s: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); problem.topology.process_count];
        for c in &self.commands {
            if let Firing::Fires { target, .. } = c.fire(space, problem, &self.predicate_tables, s) {
                if target != s && !out[c.process].contains(&target) {
                    out[c.process].push(target);
                }
            }
        }
        for succ in &mut out {
            succ.sort_unstable();
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Document

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprDoc {
    Int(i64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandDoc {
    pub process: usize,
    #[serde(default = "true_text")]
    pub guard: String,
    pub assign: BTreeMap<String, ExprDoc>,
}

fn true_text() -> String {
    "true".into()
}

/// A table given as 0/1 values, Booleans, or a formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableDoc {
    Bits(Vec<u8>),
    Bools(Vec<bool>),
    Formula(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesDoc {
    #[serde(default)]
    pub predicates: BTreeMap<String, TableDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ls: Option<TableDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Symmetry>,
    pub commands: Vec<CommandDoc>,
    #[serde(default)]
    pub tables: TablesDoc,
}

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("protocol was produced for problem {found}, not {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("{location}: {source}")]
    Formula {
        location: String,
        #[source]
        source: FormulaError,
    },
    #[error("{0}")]
    Schema(String),
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::Parse { .. } => "PARSE_ERROR",
            ProtocolError::HashMismatch { .. } => "HASH_MISMATCH",
            ProtocolError::Formula { source, .. } => source.code(),
            ProtocolError::Schema(_) => "SCHEMA_MISMATCH",
        }
    }
}

fn formula_err(location: impl Into<String>) -> impl FnOnce(FormulaError) -> ProtocolError {
    let location = location.into();
    move |source| ProtocolError::Formula { location, source }
}

pub fn parse_protocol(text: &str, problem: &SynthesisProblem) -> Result<Protocol, ProtocolError> {
    let doc: ProtocolDocument = serde_json::from_str(text).map_err(|e| ProtocolError::Parse {
        line: e.line().max(1),
        column: e.column().max(1),
        message: e.to_string(),
    })?;
    protocol_from_document(&doc, problem)
}

fn table_from_doc(
    doc: &TableDoc,
    len: usize,
    location: &str,
    eval: impl Fn(&Ground, usize) -> bool,
    check: impl Fn(&Ground) -> Result<(), ProtocolError>,
    problem: &SynthesisProblem,
) -> Result<Vec<bool>, ProtocolError> {
    let table: Vec<bool> = match doc {
        TableDoc::Bits(bits) => {
            if let Some(b) = bits.iter().find(|&&b| b > 1) {
                return Err(ProtocolError::Schema(format!("{location}: table entry {b} is not 0 or 1")));
            }
            bits.iter().map(|&b| b == 1).collect()
        }
        TableDoc::Bools(b) => b.clone(),
        TableDoc::Formula(text) => {
            let f = parse_formula_syntax(text).map_err(formula_err(location))?;
            if f.has_temporal() {
                return Err(ProtocolError::Schema(format!("{location}: table formulas must be state formulas")));
            }
            let g = problem.ground_env().ground(&f).map_err(formula_err(location))?;
            check(&g)?;
            (0..len).map(|k| eval(&g, k)).collect()
        }
    };
    if table.len() != len {
        return Err(ProtocolError::Schema(format!(
            "{location}: expected {len} entries, found {}",
            table.len()
        )));
    }
    Ok(table)
}

pub fn protocol_from_document(doc: &ProtocolDocument, problem: &SynthesisProblem) -> Result<Protocol, ProtocolError> {
    let expected = problem_hash(problem);
    if let Some(found) = &doc.problem_hash {
        if *found != expected {
            return Err(ProtocolError::HashMismatch { expected, found: found.clone() });
        }
    }
    let space = StateSpace::new(&problem.topology).map_err(|e| ProtocolError::Schema(e.to_string()))?;
    let env = problem.ground_env();
    let nproc = problem.topology.process_count;

    let mut commands = Vec::new();
    for (k, c) in doc.commands.iter().enumerate() {
        if c.process >= nproc {
            return Err(ProtocolError::Schema(format!("commands[{k}]: process {} out of range", c.process)));
        }
        let f = parse_formula_syntax(&c.guard).map_err(formula_err(format!("commands[{k}].guard")))?;
        if f.has_temporal() {
            return Err(ProtocolError::Schema(format!("commands[{k}].guard: guards must be state formulas")));
        }
        let guard = env.ground(&f).map_err(formula_err(format!("commands[{k}].guard")))?;
        let mut enabled = false;
        guard_uses_enabled(&guard, &mut enabled);
        if enabled {
            return Err(ProtocolError::Schema(format!("commands[{k}].guard: `enabled` is not allowed in guards")));
        }
        let mut assign = Vec::new();
        for (name, rhs) in &c.assign {
            let var = problem
                .topology
                .var_index(name)
                .ok_or_else(|| ProtocolError::Schema(format!("commands[{k}].assign: unknown variable `{name}`")))?;
            let expr = match rhs {
                ExprDoc::Int(v) => GExpr::Const(*v),
                ExprDoc::Text(t) => {
                    let e = parse_expr(t).map_err(formula_err(format!("commands[{k}].assign.{name}")))?;
                    env.ground_expr(&e, &mut Vec::new())
                        .map_err(formula_err(format!("commands[{k}].assign.{name}")))?
                }
            };
            assign.push((var, expr));
        }
        commands.push(GuardedCommand { process: c.process, guard, assign });
    }

    let mut predicate_tables = Vec::with_capacity(problem.predicates.len());
    for pr in &problem.predicates {
        let Some(tdoc) = doc.tables.predicates.get(&pr.name) else {
            return Err(ProtocolError::Schema(format!("tables.predicates: missing table for `{}`", pr.name)));
        };
        let location = format!("tables.predicates.{}", pr.name);
        let owner = pr.owner;
        let table = table_from_doc(
            tdoc,
            space.owner_local_size(owner),
            &location,
            |g, l| {
                // Evaluate at the smallest global state with this projection.
                let s = match owner {
                    Owner::Process(i) => space.states_with_local(i, l)[0],
                    Owner::Global => l,
                };
                g.eval_state(&|v| space.value(s, v), &|_| false, &|_| false)
            },
            |g| {
                let mut preds = Vec::new();
                g.preds(&mut preds);
                let mut vars = Vec::new();
                g.vars(&mut vars);
                if !preds.is_empty() {
                    return Err(ProtocolError::Schema(format!("{location}: predicate tables may not mention predicates")));
                }
                if let Owner::Process(i) = owner {
                    if let Some(&v) = vars.iter().find(|v| !space.read_set(i).contains(v)) {
                        return Err(ProtocolError::Schema(format!(
                            "{location}: `{}` is not readable by process {i}",
                            problem.topology.vars[v].name
                        )));
                    }
                }
                Ok(())
            },
            problem,
        )?;
        predicate_tables.push(table);
    }
    if let Some(extra) = doc.tables.predicates.keys().find(|k| problem.predicate_index(k).is_none()) {
        return Err(ProtocolError::Schema(format!("tables.predicates: unknown predicate `{extra}`")));
    }

    let ls_table = match &doc.tables.ls {
        None => None,
        Some(tdoc) => Some(table_from_doc(
            tdoc,
            space.state_count(),
            "tables.ls",
            |g, s| {
                g.eval_state(
                    &|v| space.value(s, v),
                    &|p| predicate_tables[p][space.owner_local(problem.predicates[p].owner, s)],
                    &|_| false,
                )
            },
            |g| {
                let mut enabled = false;
                guard_uses_enabled(g, &mut enabled);
                if enabled {
                    return Err(ProtocolError::Schema("tables.ls: `enabled` is not allowed here".into()));
                }
                Ok(())
            },
            problem,
        )?),
    };
    if let Some(lambda) = &doc.tables.lambda {
        if lambda.len() != space.state_count() {
            return Err(ProtocolError::Schema(format!(
                "tables.lambda: expected {} entries, found {}",
                space.state_count(),
                lambda.len()
            )));
        }
    }
    Ok(Protocol {
        problem_hash: expected,
        timing: doc.timing.unwrap_or(problem.mode.timing),
        symmetry: doc.symmetry.unwrap_or(problem.mode.symmetry),
        commands,
        predicate_tables,
        ls_table,
        lambda_table: doc.tables.lambda.clone(),
    })
}

fn guard_uses_enabled(g: &Ground, found: &mut bool) {
    match g {
        Ground::Enabled(_) => *found = true,
        Ground::Not(x) | Ground::Next(x) => guard_uses_enabled(x, found),
        Ground::And(v) | Ground::Or(v) => v.iter().for_each(|x| guard_uses_enabled(x, found)),
        Ground::Implies(a, b) | Ground::Iff(a, b) | Ground::Until(a, b) => {
            guard_uses_enabled(a, found);
            guard_uses_enabled(b, found);
        }
        _ => {}
    }
}

fn bits(table: &[bool]) -> TableDoc {
    TableDoc::Bits(table.iter().map(|&b| b as u8).collect())
}

/// Strips one pair of enclosing parentheses when they wrap the whole text.
fn strip_outer(text: String) -> String {
    let b = text.as_bytes();
    if b.len() < 2 || b[0] != b'(' || b[b.len() - 1] != b')' {
        return text;
    }
    let mut depth = 0;
    for (k, &c) in b.iter().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth == 0 && k != b.len() - 1 {
                    return text;
                }
            }
            _ => {}
        }
    }
    text[1..text.len() - 1].to_string()
}

pub fn protocol_to_document(proto: &Protocol, problem: &SynthesisProblem) -> ProtocolDocument {
    let vars = &problem.topology.vars;
    ProtocolDocument {
        problem_hash: Some(proto.problem_hash.clone()),
        timing: Some(proto.timing),
        symmetry: Some(proto.symmetry),
        commands: proto
            .commands
            .iter()
            .map(|c| CommandDoc {
                process: c.process,
                guard: strip_outer(c.guard.render(vars, &problem.predicates)),
                assign: c
                    .assign
                    .iter()
                    .map(|(v, e)| {
                        let rhs = match e {
                            GExpr::Const(k) => ExprDoc::Int(*k),
                            e => ExprDoc::Text(strip_outer(e.render(vars))),
                        };
                        (vars[*v].name.clone(), rhs)
                    })
                    .collect(),
            })
            .collect(),
        tables: TablesDoc {
            predicates: problem
                .predicates
                .iter()
                .zip(&proto.predicate_tables)
                .map(|(p, t)| (p.name.clone(), bits(t)))
                .collect(),
            ls: proto.ls_table.as_deref().map(bits),
            lambda: proto.lambda_table.clone(),
        },
    }
}

pub fn protocol_to_json(proto: &Protocol, problem: &SynthesisProblem) -> String {
    serde_json::to_string_pretty(&protocol_to_document(proto, problem)).expect("protocol documents always serialise")
}

/// Human-readable rendering in `guard -> assignment` notation, followed by
/// minimized forms of the predicate tables and the legitimate states.
pub fn render(proto: &Protocol, problem: &SynthesisProblem) -> String {
    let vars = &problem.topology.vars;
    let timing = match proto.timing {
        Timing::Asynchronous => "asynchronous",
        Timing::Synchronous => "synchronous",
    };
    let symmetry = match proto.symmetry {
        Symmetry::Asymmetric => "asymmetric",
        Symmetry::Symmetric => "symmetric",
    };
    let mut out = format!("protocol {} ({timing}, {symmetry})\n", proto.problem_hash);
    if proto.commands.is_empty() {
        out.push_str("no actions\n");
    }
    for c in &proto.commands {
        let guard = strip_outer(c.guard.render(vars, &problem.predicates));
        let assign: Vec<String> = c
            .assign
            .iter()
            .map(|(v, e)| format!("{} := {}", vars[*v].name, strip_outer(e.render(vars))))
            .collect();
        let _ = writeln!(out, "p{}: {guard} -> {}", c.process, assign.join(", "));
    }
    let Ok(space) = StateSpace::new(&problem.topology) else {
        return out;
    };
    for (p, table) in problem.predicates.iter().zip(&proto.predicate_tables) {
        let scope: Vec<usize> = match p.owner {
            Owner::Process(i) => space.read_set(i).to_vec(),
            Owner::Global => (0..space.var_count()).collect(),
        };
        let domains: Vec<usize> = scope.iter().map(|&v| space.domain_size(v)).collect();
        let g = cover_to_ground(&minimize(&domains, table, &[]), &scope, vars);
        let _ = writeln!(out, "{} <-> {}", p.name, strip_outer(g.render(vars, &problem.predicates)));
    }
    if let Some(ls) = &proto.ls_table {
        let _ = writeln!(out, "legitimate states: {} of {}", ls.iter().filter(|&&b| b).count(), ls.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_problem;

    fn ring() -> SynthesisProblem {
        parse_problem(
            r#"{
          "variables": [{"name":"x0","domain":3},{"name":"x1","domain":3},{"name":"x2","domain":3}],
          "processes": [
            {"read":["x0","x1","x2"],"write":["x0"]},
            {"read":["x0","x1","x2"],"write":["x1"]},
            {"read":["x0","x1","x2"],"write":["x2"]}
          ],
          "predicates": [{"name":"token0","owner":0},{"name":"token1","owner":1},{"name":"token2","owner":2}],
          "mode": {"goal":"self_stabilizing"}
        }"#,
        )
        .unwrap()
    }

    const DIJKSTRA: &str = r#"{
      "commands": [
        {"process":0,"guard":"x0 = x2","assign":{"x0":"(x0 + 1) mod 3"}},
        {"process":1,"guard":"x1 != x0","assign":{"x1":"x0"}},
        {"process":2,"guard":"x2 != x1","assign":{"x2":"x1"}}
      ],
      "tables": {
        "predicates": {"token0":"x0 = x2","token1":"x1 != x0","token2":"x2 != x1"},
        "ls": "(token0 & !token1 & !token2) | (!token0 & token1 & !token2) | (!token0 & !token1 & token2)"
      }
    }"#;

    #[test]
    fn loads_formula_tables() {
        let p = ring();
        let proto = parse_protocol(DIJKSTRA, &p).unwrap();
        assert_eq!(proto.commands.len(), 3);
        let t0 = &proto.predicate_tables[0];
        let sp = StateSpace::new(&p.topology).unwrap();
        for l in 0..27 {
            let v = sp.local_valuation(0, l);
            assert_eq!(t0[l], v[0] == v[2]);
        }
        let expected: Vec<bool> = (0..27)
            .map(|s| {
                let v = sp.valuation_of(s);
                [v[0] == v[2], v[1] != v[0], v[2] != v[1]].iter().filter(|&&t| t).count() == 1
            })
            .collect();
        assert_eq!(proto.ls_table.unwrap(), expected);
    }

    #[test]
    fn render_and_round_trip() {
        let p = ring();
        let proto = parse_protocol(DIJKSTRA, &p).unwrap();
        let text = render(&proto, &p);
        assert!(text.contains("p0: x0 = x2 -> x0 := (x0 + 1) mod 3"), "{text}");
        assert!(text.contains("p1: x1 != x0 -> x1 := x0"));
        let again = parse_protocol(&protocol_to_json(&proto, &p), &p).unwrap();
        assert_eq!(again, proto);
    }

    #[test]
    fn empty_protocol_renders_no_actions() {
        let p = ring();
        let sp = StateSpace::new(&p.topology).unwrap();
        assert!(render(&Protocol::empty(&p, &sp), &p).contains("no actions"));
    }

    #[test]
    fn rejects_foreign_hash_and_bad_tables() {
        let p = ring();
        let doc = DIJKSTRA.replacen('{', r#"{"problem_hash":"0000000000000000","#, 1);
        assert_eq!(parse_protocol(&doc, &p).unwrap_err().code(), "HASH_MISMATCH");
        let doc = DIJKSTRA.replace(r#""token0":"x0 = x2""#, r#""token0":[1,0]"#);
        assert_eq!(parse_protocol(&doc, &p).unwrap_err().code(), "SCHEMA_MISMATCH");
    }
}
