//! Concrete syntax: the formula language and the JSON problem document.
//!
//! Formula grammar, loosest binding first:
//!
//! ```text
//! formula  := implies ('<->' implies)*
//! implies  := or ('->' implies)?
//! or       := and (('|' | 'or') and)*
//! and      := until (('&' | 'and') until)*
//! until    := unary ('U' until)?
//! unary    := ('!' | 'not' | 'X' | 'F' | 'G') unary
//!           | ('forall' | 'exists') IDENT 'in' (expr '..' expr | 'dom' '(' expr ')') ':' formula
//!           | 'true' | 'false' | 'enabled' '(' expr ')' | '(' formula ')'
//!           | expr (cmp expr)?
//! expr     := term (('+' | '-') term)*
//! term     := factor ('mod' factor)*
//! factor   := INT | 'n' | IDENT ('[' expr ']')? | '-' factor | '(' expr ')'
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::formula::{CmpOp, Expr, Formula, FormulaError, GroundEnv, QuantDomain, Quantifier};
use crate::problem::{
    validate_problem, ClassMember, Convergence, Goal, ModeConfig, Owner, PredicateDecl,
    SymmetryClass, Symmetry, SynthesisProblem, Timing, Topology, ValidationReport, VarDecl,
};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    DotDot,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    Cmp(CmpOp),
    Plus,
    Minus,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut k = 0;
    let err = |line, column, message: String| FormulaError::Parse { line, column, message };
    while k < chars.len() {
        let c = chars[k];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            k += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            k += 1;
            continue;
        }
        let peek = chars.get(k + 1).copied();
        let peek2 = chars.get(k + 2).copied();
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ':' => (Tok::Colon, 1),
            '+' => (Tok::Plus, 1),
            '.' if peek == Some('.') => (Tok::DotDot, 2),
            '&' if peek == Some('&') => (Tok::Amp, 2),
            '&' => (Tok::Amp, 1),
            '|' if peek == Some('|') => (Tok::Pipe, 2),
            '|' => (Tok::Pipe, 1),
            '-' if peek == Some('>') => (Tok::Arrow, 2),
            '-' => (Tok::Minus, 1),
            '<' if peek == Some('-') && peek2 == Some('>') => (Tok::DArrow, 3),
            '<' if peek == Some('=') => (Tok::Cmp(CmpOp::Le), 2),
            '<' => (Tok::Cmp(CmpOp::Lt), 1),
            '>' if peek == Some('=') => (Tok::Cmp(CmpOp::Ge), 2),
            '>' => (Tok::Cmp(CmpOp::Gt), 1),
            '=' if peek == Some('=') => (Tok::Cmp(CmpOp::Eq), 2),
            '=' => (Tok::Cmp(CmpOp::Eq), 1),
            '!' if peek == Some('=') => (Tok::Cmp(CmpOp::Ne), 2),
            '!' => (Tok::Bang, 1),
            c if c.is_ascii_digit() => {
                let start = k;
                let mut end = k;
                while end < chars.len() && chars[end].is_ascii_digit() {
                    end += 1;
                }
                let s: String = chars[start..end].iter().collect();
                let v = s
                    .parse::<i64>()
                    .map_err(|_| err(tl, tc, format!("integer literal `{s}` too large")))?;
                (Tok::Int(v), end - start)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = k;
                let mut end = k;
                while end < chars.len() && (chars[end].is_ascii_alphanumeric() || chars[end] == '_') {
                    end += 1;
                }
                (Tok::Ident(chars[start..end].iter().collect()), end - start)
            }
            c => return Err(err(tl, tc, format!("unexpected character `{c}`"))),
        };
        out.push(Token { tok, line: tl, column: tc });
        k += len;
        col += len;
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        let t = &self.toks[self.pos];
        Err(FormulaError::Parse {
            line: t.line,
            column: t.column,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), FormulaError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), FormulaError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", describe(self.peek())))
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::DArrow {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Pipe || self.is_kw("or") {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::Amp || self.is_kw("and") {
            self.bump();
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.unary()?;
        if self.is_kw("U") {
            self.bump();
            let rhs = self.until()?;
            return Ok(Formula::Until(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if *self.peek() == Tok::Bang || self.is_kw("not") {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        if let Tok::Ident(kw) = self.peek().clone() {
            match kw.as_str() {
                "X" => {
                    self.bump();
                    return Ok(Formula::Next(Box::new(self.unary()?)));
                }
                "F" => {
                    self.bump();
                    return Ok(Formula::finally(self.unary()?));
                }
                "G" => {
                    self.bump();
                    return Ok(Formula::Globally(Box::new(self.unary()?)));
                }
                "forall" | "exists" => return self.quantifier(),
                "true" => {
                    self.bump();
                    return Ok(Formula::Bool(true));
                }
                "false" => {
                    self.bump();
                    return Ok(Formula::Bool(false));
                }
                "enabled" => {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let e = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Formula::Enabled(e));
                }
                _ => {}
            }
        }
        if *self.peek() == Tok::LParen {
            // Either a parenthesised arithmetic operand of a comparison or a
            // parenthesised formula; try the former first.
            let save = self.pos;
            if let Ok(lhs) = self.expr() {
                if let Tok::Cmp(op) = *self.peek() {
                    self.bump();
                    let rhs = self.expr()?;
                    return Ok(Formula::Cmp(lhs, op, rhs));
                }
            }
            self.pos = save;
            self.bump();
            let f = self.formula()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        let lhs = self.expr()?;
        if let Tok::Cmp(op) = *self.peek() {
            self.bump();
            let rhs = self.expr()?;
            return Ok(Formula::Cmp(lhs, op, rhs));
        }
        match lhs {
            Expr::Name(_) | Expr::Indexed(..) => Ok(Formula::Atom(lhs)),
            _ => self.error(format!("expected a comparison after `{lhs}`")),
        }
    }

    fn quantifier(&mut self) -> Result<Formula, FormulaError> {
        let q = match self.bump() {
            Tok::Ident(s) if s == "forall" => Quantifier::Forall,
            _ => Quantifier::Exists,
        };
        let var = match self.peek().clone() {
            Tok::Ident(s) if crate::problem::is_identifier(&s) => {
                self.bump();
                s
            }
            other => return self.error(format!("expected a bound variable, found {}", describe(&other))),
        };
        self.expect_kw("in")?;
        let dom = if self.is_kw("dom") {
            self.bump();
            self.expect(Tok::LParen, "`(`")?;
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            QuantDomain::Values(e)
        } else {
            let lo = self.expr()?;
            self.expect(Tok::DotDot, "`..`")?;
            let hi = self.expr()?;
            QuantDomain::Range(lo, hi)
        };
        self.expect(Tok::Colon, "`:`")?;
        let body = self.formula()?;
        Ok(Formula::Quant(q, var, dom, Box::new(body)))
    }

    fn expr(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.factor()?;
        while self.is_kw("mod") {
            self.bump();
            lhs = Expr::Mod(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, FormulaError> {
        match self.peek().clone() {
            Tok::Int(k) => {
                self.bump();
                Ok(Expr::Int(k))
            }
            Tok::Minus => {
                self.bump();
                match self.factor()? {
                    Expr::Int(k) => Ok(Expr::Int(-k)),
                    e => Ok(Expr::Sub(Box::new(Expr::Int(0)), Box::new(e))),
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "n" => {
                self.bump();
                Ok(Expr::N)
            }
            Tok::Ident(s) if crate::problem::is_identifier(&s) => {
                self.bump();
                if *self.peek() == Tok::LBracket {
                    self.bump();
                    let idx = self.expr()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    Ok(Expr::Indexed(s, Box::new(idx)))
                } else {
                    Ok(Expr::Name(s))
                }
            }
            other => self.error(format!("expected an expression, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(k) => format!("`{k}`"),
        Tok::Eof => "end of input".into(),
        Tok::Cmp(op) => format!("`{}`", op.symbol()),
        other => {
            let s = match other {
                Tok::LParen => "(",
                Tok::RParen => ")",
                Tok::LBracket => "[",
                Tok::RBracket => "]",
                Tok::Colon => ":",
                Tok::DotDot => "..",
                Tok::Bang => "!",
                Tok::Amp => "&",
                Tok::Pipe => "|",
                Tok::Arrow => "->",
                Tok::DArrow => "<->",
                Tok::Plus => "+",
                _ => "-",
            };
            format!("`{s}`")
        }
    }
}

/// Parses formula text without resolving names.
pub fn parse_formula_syntax(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after formula", describe(p.peek())));
    }
    Ok(f)
}

/// Parses a bare expression (used for assignment right-hand sides).
pub fn parse_expr(text: &str) -> Result<Expr, FormulaError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after expression", describe(p.peek())));
    }
    Ok(e)
}

/// Parses a formula and checks it against `env`: temporal shape, name
/// resolution, index ranges and literal domains. `bound` lists index
/// variables bound by an enclosing context.
pub fn parse_formula(
    text: &str,
    env: &GroundEnv<'_>,
    bound: &[(String, i64)],
) -> Result<Formula, FormulaError> {
    let f = parse_formula_syntax(text)?;
    f.check_temporal_shape()?;
    let mut scope = bound.to_vec();
    env.ground_with(&f, &mut scope)?;
    Ok(f)
}

// ---------------------------------------------------------------------------
// Problem document

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainDoc {
    Size(usize),
    Values(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDoc {
    pub name: String,
    pub domain: DomainDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessDoc {
    pub read: Vec<String>,
    pub write: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OwnerDoc {
    Process(usize),
    /// Only `"global"` is accepted.
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateDoc {
    pub name: String,
    pub owner: OwnerDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberDoc {
    pub process: usize,
    pub view: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predicates: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDoc {
    pub members: Vec<MemberDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeDoc {
    pub goal: Goal,
    #[serde(default)]
    pub timing: Timing,
    #[serde(default)]
    pub symmetry: Symmetry,
    #[serde(default)]
    pub convergence: Convergence,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<ClassDoc>,
}

/// The JSON problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub variables: Vec<VariableDoc>,
    pub processes: Vec<ProcessDoc>,
    #[serde(default)]
    pub predicates: Vec<PredicateDoc>,
    #[serde(default = "true_formula")]
    pub phi: String,
    #[serde(default = "true_formula")]
    pub psi: String,
    /// Fixes the legitimate states instead of leaving them to the solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legitimate: Option<String>,
    pub mode: ModeDoc,
}

fn true_formula() -> String {
    "true".into()
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` in {location}")]
    UnknownIdentifier { name: String, location: String },
    #[error("in {field}: {source}")]
    Formula {
        field: String,
        #[source]
        source: FormulaError,
    },
    #[error("invalid problem:\n{0}")]
    Validation(ValidationReport),
}

impl ProblemError {
    pub fn code(&self) -> &'static str {
        match self {
            ProblemError::Parse { .. } => "PARSE_ERROR",
            ProblemError::UnknownIdentifier { .. } => "UNKNOWN_IDENTIFIER",
            ProblemError::Formula { source, .. } => source.code(),
            ProblemError::Validation(_) => "VALIDATION_ERROR",
        }
    }
}

fn json_error(e: serde_json::Error) -> ProblemError {
    ProblemError::Parse {
        line: e.line().max(1),
        column: e.column().max(1),
        message: e.to_string(),
    }
}

/// Parses a problem document and validates the result.
pub fn parse_problem(text: &str) -> Result<SynthesisProblem, ProblemError> {
    let doc: ProblemDocument = serde_json::from_str(text).map_err(json_error)?;
    problem_from_document(&doc)
}

pub fn problem_from_document(doc: &ProblemDocument) -> Result<SynthesisProblem, ProblemError> {
    let vars: Vec<VarDecl> = doc
        .variables
        .iter()
        .map(|v| VarDecl {
            name: v.name.clone(),
            values: match &v.domain {
                DomainDoc::Size(k) => (0..*k as i64).collect(),
                DomainDoc::Values(vals) => vals.clone(),
            },
        })
        .collect();
    let lookup = |name: &str, location: String| {
        vars.iter()
            .position(|v| v.name == name)
            .ok_or_else(|| ProblemError::UnknownIdentifier { name: name.to_string(), location })
    };
    let mut read_sets = Vec::new();
    let mut write_sets = Vec::new();
    for (i, proc_doc) in doc.processes.iter().enumerate() {
        let mut read = proc_doc
            .read
            .iter()
            .map(|n| lookup(n, format!("processes[{i}].read")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut write = proc_doc
            .write
            .iter()
            .map(|n| lookup(n, format!("processes[{i}].write")))
            .collect::<Result<Vec<_>, _>>()?;
        read.sort_unstable();
        read.dedup();
        write.sort_unstable();
        write.dedup();
        read_sets.push(read);
        write_sets.push(write);
    }
    let predicates = doc
        .predicates
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let owner = match &p.owner {
                OwnerDoc::Process(i) => Owner::Process(*i),
                OwnerDoc::Named(s) if s == "global" => Owner::Global,
                OwnerDoc::Named(s) => {
                    return Err(ProblemError::Parse {
                        line: 1,
                        column: 1,
                        message: format!("predicates[{k}].owner: expected an index or \"global\", got `{s}`"),
                    })
                }
            };
            Ok(PredicateDecl { name: p.name.clone(), owner })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut classes = Vec::new();
    for (c, class) in doc.mode.classes.iter().enumerate() {
        let mut members = Vec::new();
        for m in &class.members {
            let view = m
                .view
                .iter()
                .map(|n| lookup(n, format!("mode.classes[{c}].view")))
                .collect::<Result<Vec<_>, _>>()?;
            let preds = m
                .predicates
                .iter()
                .map(|n| {
                    predicates.iter().position(|p| p.name == *n).ok_or_else(|| {
                        ProblemError::UnknownIdentifier {
                            name: n.clone(),
                            location: format!("mode.classes[{c}].predicates"),
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            members.push(ClassMember { process: m.process, view, predicates: preds });
        }
        classes.push(SymmetryClass { members });
    }

    let topology = Topology {
        process_count: doc.processes.len(),
        vars,
        read_sets,
        write_sets,
    };
    let mode = ModeConfig {
        goal: doc.mode.goal,
        timing: doc.mode.timing,
        symmetry: doc.mode.symmetry,
        convergence: doc.mode.convergence,
        classes,
    };

    let (phi, psi, legitimate) = {
        let env = GroundEnv::new(&topology.vars, &predicates, topology.process_count);
        let parse = |field: &str, text: &str| {
            parse_formula(text, &env, &[]).map_err(|source| match source {
                FormulaError::UnknownIdentifier(name) => ProblemError::UnknownIdentifier {
                    name,
                    location: field.to_string(),
                },
                source => ProblemError::Formula { field: field.to_string(), source },
            })
        };
        let legitimate = doc.legitimate.as_deref().map(|text| parse("legitimate", text)).transpose()?;
        (parse("phi", &doc.phi)?, parse("psi", &doc.psi)?, legitimate)
    };

    let problem = SynthesisProblem { topology, predicates, phi, psi, legitimate, mode };
    let report = validate_problem(&problem);
    if !report.is_ok() {
        return Err(ProblemError::Validation(report));
    }
    Ok(problem)
}

/// Canonical document for a problem. Formulas are rendered in their fully
/// parenthesised form.
pub fn problem_to_document(p: &SynthesisProblem) -> ProblemDocument {
    let topo = &p.topology;
    let names = |set: &[usize]| set.iter().map(|&v| topo.vars[v].name.clone()).collect::<Vec<_>>();
    ProblemDocument {
        variables: topo
            .vars
            .iter()
            .map(|v| VariableDoc {
                name: v.name.clone(),
                domain: if v.values.iter().copied().eq(0..v.values.len() as i64) {
                    DomainDoc::Size(v.values.len())
                } else {
                    DomainDoc::Values(v.values.clone())
                },
            })
            .collect(),
        processes: topo
            .read_sets
            .iter()
            .zip(&topo.write_sets)
            .map(|(r, w)| ProcessDoc { read: names(r), write: names(w) })
            .collect(),
        predicates: p
            .predicates
            .iter()
            .map(|pr| PredicateDoc {
                name: pr.name.clone(),
                owner: match pr.owner {
                    Owner::Process(i) => OwnerDoc::Process(i),
                    Owner::Global => OwnerDoc::Named("global".into()),
                },
            })
            .collect(),
        phi: p.phi.to_string(),
        psi: p.psi.to_string(),
        legitimate: p.legitimate.as_ref().map(ToString::to_string),
        mode: ModeDoc {
            goal: p.mode.goal,
            timing: p.mode.timing,
            symmetry: p.mode.symmetry,
            convergence: p.mode.convergence,
            classes: p
                .mode
                .classes
                .iter()
                .map(|c| ClassDoc {
                    members: c
                        .members
                        .iter()
                        .map(|m| MemberDoc {
                            process: m.process,
                            view: names(&m.view),
                            predicates: m.predicates.iter().map(|&k| p.predicates[k].name.clone()).collect(),
                        })
                        .collect(),
                })
                .collect(),
        },
    }
}

/// Stable 16-hex-digit digest of the canonical problem document.
pub fn problem_hash(p: &SynthesisProblem) -> String {
    let doc = problem_to_document(p);
    let text = serde_json::to_string(&doc).expect("problem documents always serialise");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Helper for readers of other documents: variable name to index.
pub fn var_names(p: &SynthesisProblem) -> BTreeMap<&str, usize> {
    p.topology.vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect()
}
