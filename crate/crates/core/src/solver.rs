//! SMT-LIB2 emission and an external solver driven over stdin/stdout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::encoder::{SmtInstance, UnknownTable};
use crate::smt::{Sort, SymId, Value};

pub const SOLVER_ENV: &str = "STABSYNTH_SOLVER";
pub const DEFAULT_SOLVER: &str = "z3 -in -smt2";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Executable followed by its arguments.
    pub command: Vec<String>,
    pub timeout: Duration,
    pub logic: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: split_command(DEFAULT_SOLVER),
            timeout: Duration::from_secs(600),
            logic: "QF_LIA".into(),
        }
    }
}

pub fn split_command(cmd: &str) -> Vec<String> {
    cmd.split_whitespace().map(str::to_string).collect()
}

impl SolverConfig {
    /// Command precedence: explicit override, then `STABSYNTH_SOLVER`, then
    /// the built-in default.
    pub fn resolve(command: Option<&str>, timeout: Option<Duration>) -> Self {
        let mut cfg = SolverConfig::default();
        let env = std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty());
        if let Some(cmd) = command.map(str::to_string).or(env) {
            cfg.command = split_command(&cmd);
        }
        if let Some(t) = timeout {
            cfg.timeout = t;
        }
        cfg
    }

    /// Whether the solver executable can be started at all.
    pub fn available(&self) -> bool {
        let Some(exe) = self.command.first() else { return false };
        Command::new(exe)
            .arg("-version")
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .is_ok()
    }
}

/// A total assignment to the instance's symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Witness {
    pub bools: BTreeMap<String, bool>,
    pub ints: BTreeMap<String, i64>,
    /// Symbols absent from the solver's model that received a default.
    pub defaulted: Vec<String>,
}

impl Witness {
    /// Builds a witness by querying `value` for every symbol of `table`.
    pub fn from_fn(table: &UnknownTable, mut value: impl FnMut(SymId) -> Value) -> Self {
        let mut w = Witness::default();
        for (id, sym) in table.symbols.iter().enumerate() {
            match value(id) {
                Value::Bool(b) => {
                    w.bools.insert(sym.name.clone(), b);
                }
                Value::Int(k) => {
                    w.ints.insert(sym.name.clone(), k);
                }
            }
        }
        w
    }

    pub fn bool(&self, name: &str) -> Option<bool> {
        self.bools.get(name).copied()
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        self.ints.get(name).copied()
    }

    /// Value of a symbol by id; panics on symbols the witness lacks.
    pub fn value(&self, table: &UnknownTable, id: SymId) -> Value {
        let sym = &table.symbols[id];
        match sym.sort {
            Sort::Bool => Value::Bool(self.bools[&sym.name]),
            Sort::Int { .. } => Value::Int(self.ints[&sym.name]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverOutcome {
    Sat(Witness),
    Unsat,
    Unknown(String),
    SolverError(String),
}

impl SolverOutcome {
    pub fn verdict(&self) -> &'static str {
        match self {
            SolverOutcome::Sat(_) => "sat",
            SolverOutcome::Unsat => "unsat",
            SolverOutcome::Unknown(_) => "unknown",
            SolverOutcome::SolverError(_) => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("model lacks a value for `{0}`")]
    ModelIncomplete(String),
    #[error("malformed model: {0}")]
    Malformed(String),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::ModelIncomplete(_) => "MODEL_INCOMPLETE",
            ModelError::Malformed(_) => "MALFORMED_MODEL",
        }
    }
}

/// Serialises an instance. Output depends only on the instance.
pub fn emit_smtlib(inst: &SmtInstance) -> String {
    emit_with_logic(inst, "QF_LIA")
}

pub fn emit_with_logic(inst: &SmtInstance, logic: &str) -> String {
    let syms = &inst.table.symbols;
    let mut out = String::new();
    let _ = writeln!(out, "(set-logic {logic})");
    let _ = writeln!(out, "(set-option :produce-models true)");
    for s in syms {
        let sort = match s.sort {
            Sort::Bool => "Bool",
            Sort::Int { .. } => "Int",
        };
        let _ = writeln!(out, "(declare-fun {} () {sort})", s.name);
    }
    for s in syms {
        if let Sort::Int { lo, hi } = s.sort {
            let _ = writeln!(out, "(assert (and (<= {lo} {0}) (<= {0} {hi})))", s.name);
        }
    }
    for c in &inst.constraints {
        out.push_str("(assert ");
        c.term.write_smtlib(syms, &mut out);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n");
    if !syms.is_empty() {
        out.push_str("(get-value (");
        for (k, s) in syms.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            out.push_str(&s.name);
        }
        out.push_str("))\n");
    }
    out
}

/// Runs the solver on `text` and interprets its answer against `table`.
pub fn run_solver(cfg: &SolverConfig, text: &str, table: &UnknownTable) -> SolverOutcome {
    let Some(exe) = cfg.command.first() else {
        return SolverOutcome::SolverError("empty solver command".into());
    };
    let mut child = match Command::new(exe)
        .args(&cfg.command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return SolverOutcome::SolverError(format!("cannot start `{exe}`: {e}")),
    };
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = text.to_string();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });

    let deadline = Instant::now() + cfg.timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(e) => return SolverOutcome::SolverError(format!("waiting for solver: {e}")),
        }
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    let Some(status) = status else {
        return SolverOutcome::Unknown("timeout".into());
    };
    interpret_output(&out, &err, status.success(), table)
}

/// Maps raw solver output to an outcome.
pub fn interpret_output(out: &str, err: &str, exited_ok: bool, table: &UnknownTable) -> SolverOutcome {
    let mut lines = out.lines().map(str::trim).filter(|l| !l.is_empty());
    let first = lines.next().unwrap_or("");
    match first {
        "sat" => {
            let rest: String = out.split_once("sat").map_or("", |x| x.1).to_string();
            match parse_model(&rest, table, false) {
                Ok(w) => SolverOutcome::Sat(w),
                Err(e) => SolverOutcome::SolverError(e.to_string()),
            }
        }
        "unsat" => SolverOutcome::Unsat,
        "unknown" => SolverOutcome::Unknown("solver answered unknown".into()),
        _ => {
            let mut diag = format!("no verdict in solver output: {}", out.trim());
            if !err.trim().is_empty() {
                diag.push_str(&format!("; stderr: {}", err.trim()));
            }
            if !exited_ok {
                diag.push_str("; nonzero exit");
            }
            SolverOutcome::SolverError(diag)
        }
    }
}

#[derive(Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, ModelError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                stack.push(Vec::new());
            }
            ')' => {
                chars.next();
                let done = stack.pop().expect("stack never empties below the root");
                stack
                    .last_mut()
                    .ok_or_else(|| ModelError::Malformed("unbalanced `)`".into()))?
                    .push(Sexp::List(done));
            }
            '"' => {
                chars.next();
                let mut s = String::from("\"");
                for c in chars.by_ref() {
                    s.push(c);
                    if c == '"' {
                        break;
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
        if stack.is_empty() {
            return Err(ModelError::Malformed("unbalanced `)`".into()));
        }
    }
    if stack.len() != 1 {
        return Err(ModelError::Malformed("unbalanced `(`".into()));
    }
    Ok(stack.pop().unwrap())
}

/// Parses a `get-value` response into a witness. Missing symbols get
/// `false` / their lower bound, unless `strict` and the symbol is part of
/// the protocol itself (relation, predicate or LS bits).
pub fn parse_model(text: &str, table: &UnknownTable, strict: bool) -> Result<Witness, ModelError> {
    let mut given: BTreeMap<String, Value> = BTreeMap::new();
    for top in parse_sexps(text)? {
        let Sexp::List(pairs) = top else {
            return Err(ModelError::Malformed("expected a list of (symbol value) pairs".into()));
        };
        for pair in pairs {
            let Sexp::List(items) = pair else {
                return Err(ModelError::Malformed("expected a (symbol value) pair".into()));
            };
            let [Sexp::Atom(name), value] = items.as_slice() else {
                if let Some(Sexp::Atom(a)) = items.first() {
                    if a == "error" {
                        return Err(ModelError::Malformed(format!("solver error: {items:?}")));
                    }
                }
                return Err(ModelError::Malformed(format!("bad model entry {items:?}")));
            };
            let v = match value {
                Sexp::Atom(a) if a == "true" => Value::Bool(true),
                Sexp::Atom(a) if a == "false" => Value::Bool(false),
                Sexp::Atom(a) => Value::Int(
                    a.parse()
                        .map_err(|_| ModelError::Malformed(format!("bad value `{a}` for `{name}`")))?,
                ),
                Sexp::List(_) => {
                    return Err(ModelError::Malformed(format!(
                        "unsupported value for `{name}` (negative or compound)"
                    )))
                }
            };
            given.insert(name.clone(), v);
        }
    }

    let mut w = Witness::default();
    for sym in &table.symbols {
        match (sym.sort, given.get(&sym.name)) {
            (Sort::Bool, Some(Value::Bool(b))) => {
                w.bools.insert(sym.name.clone(), *b);
            }
            (Sort::Int { lo, hi }, Some(Value::Int(k))) => {
                if *k < lo || *k > hi {
                    return Err(ModelError::Malformed(format!("`{}` = {k} outside {lo}..{hi}", sym.name)));
                }
                w.ints.insert(sym.name.clone(), *k);
            }
            (_, Some(_)) => {
                return Err(ModelError::Malformed(format!("value of `{}` has the wrong sort", sym.name)))
            }
            (sort, None) => {
                let core = ["r_", "lp_", "ls_"].iter().any(|p| sym.name.starts_with(p));
                if strict && core {
                    return Err(ModelError::ModelIncomplete(sym.name.clone()));
                }
                log::warn!("solver model omits `{}`; using the default", sym.name);
                w.defaulted.push(sym.name.clone());
                match sort {
                    Sort::Bool => {
                        w.bools.insert(sym.name.clone(), false);
                    }
                    Sort::Int { lo, .. } => {
                        w.ints.insert(sym.name.clone(), lo);
                    }
                }
            }
        }
    }
    Ok(w)
}

/// Emits, runs and parses in one go.
pub fn solve(inst: &SmtInstance, cfg: &SolverConfig) -> SolverOutcome {
    let text = emit_with_logic(inst, &cfg.logic);
    run_solver(cfg, &text, &inst.table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::Symbol;

    fn table(names: &[(&str, Sort)]) -> UnknownTable {
        UnknownTable {
            symbols: names.iter().map(|(n, s)| Symbol { name: n.to_string(), sort: *s }).collect(),
            rel: vec![],
            lp: vec![],
            ls: None,
            lambda: None,
            until: vec![],
            flag: None,
        }
    }

    #[test]
    fn parses_get_value() {
        let t = table(&[("r_0_3_1", Sort::Bool), ("lambda_0", Sort::Int { lo: 0, hi: 4 })]);
        let w = parse_model("((r_0_3_1 true)\n (lambda_0 3))", &t, true).unwrap();
        assert_eq!(w.bool("r_0_3_1"), Some(true));
        assert_eq!(w.int("lambda_0"), Some(3));
    }

    #[test]
    fn negative_integers_are_rejected() {
        let t = table(&[("lambda_0", Sort::Int { lo: 0, hi: 4 })]);
        assert!(parse_model("((lambda_0 (- 2)))", &t, false).is_err());
    }

    #[test]
    fn missing_symbols() {
        let t = table(&[("r_0_0_1", Sort::Bool), ("lambda_0", Sort::Int { lo: 0, hi: 4 })]);
        let w = parse_model("()", &t, false).unwrap();
        assert_eq!(w.bool("r_0_0_1"), Some(false));
        assert_eq!(w.defaulted.len(), 2);
        let e = parse_model("((lambda_0 1))", &t, true).unwrap_err();
        assert_eq!(e.code(), "MODEL_INCOMPLETE");
    }

    #[test]
    fn verdicts() {
        let t = table(&[]);
        assert_eq!(interpret_output("unsat\n(error \"no model\")\n", "", true, &t), SolverOutcome::Unsat);
        assert!(matches!(interpret_output("", "boom", false, &t), SolverOutcome::SolverError(_)));
        assert!(matches!(interpret_output("unknown\n", "", true, &t), SolverOutcome::Unknown(_)));
    }
}
