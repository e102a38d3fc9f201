//! Formula AST for the supported LTL fragment, its canonical rendering, and
//! grounding into quantifier-free formulas over concrete variables.

use std::collections::HashMap;
use std::fmt;

use crate::problem::{Owner, PredicateDecl, VarDecl};

/// Integer-valued expression. Appears in index positions, quantifier ranges,
/// and on either side of a comparison.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    /// The process count.
    N,
    /// A bound quantifier variable or a bare state-variable name.
    Name(String),
    /// `family[index]`, resolved to the declaration named `family{index}`.
    Indexed(String, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mod(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn apply(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// Range of a quantifier.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum QuantDomain {
    /// Inclusive integer range `lo..hi`.
    Range(Expr, Expr),
    /// `dom(v)`: the values of a state variable.
    Values(Expr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Bool(bool),
    Cmp(Expr, CmpOp, Expr),
    /// Predicate reference or Boolean use of a state variable.
    Atom(Expr),
    Enabled(Expr),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Quant(Quantifier, String, QuantDomain, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    /// Parsed so it can be rejected with a precise error; never encoded.
    Globally(Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("nested temporal operator in `{0}`")]
    NestedTemporal(String),
    #[error("unsupported temporal operator use: {0}")]
    UnsupportedTemporal(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("value out of domain: {0}")]
    ValueOutOfDomain(String),
    #[error("type error: {0}")]
    Type(String),
}

impl FormulaError {
    pub fn code(&self) -> &'static str {
        match self {
            FormulaError::Parse { .. } => "PARSE_ERROR",
            FormulaError::NestedTemporal(_) => "NESTED_TEMPORAL",
            FormulaError::UnsupportedTemporal(_) => "UNSUPPORTED_TEMPORAL",
            FormulaError::UnknownIdentifier(_) => "UNKNOWN_IDENTIFIER",
            FormulaError::IndexOutOfRange(_) => "INDEX_OUT_OF_RANGE",
            FormulaError::ValueOutOfDomain(_) => "VALUE_OUT_OF_DOMAIN",
            FormulaError::Type(_) => "TYPE_ERROR",
        }
    }
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// `F f`, which is sugar for `true U f`.
    pub fn finally(f: Formula) -> Formula {
        Formula::Until(Box::new(Formula::Bool(true)), Box::new(f))
    }

    pub fn is_temporal(&self) -> bool {
        matches!(
            self,
            Formula::Next(_) | Formula::Until(..) | Formula::Globally(_)
        )
    }

    /// True if any temporal operator occurs in the formula.
    pub fn has_temporal(&self) -> bool {
        match self {
            Formula::Bool(_) | Formula::Cmp(..) | Formula::Atom(_) | Formula::Enabled(_) => false,
            Formula::Next(_) | Formula::Until(..) | Formula::Globally(_) => true,
            Formula::Not(f) | Formula::Quant(_, _, _, f) => f.has_temporal(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.has_temporal() || b.has_temporal()
            }
        }
    }

    /// Checks the temporal shape: no temporal operator below another one,
    /// no `G`, and `U` only inside the top-level conjunction (under `&` and
    /// `forall` alone).
    pub fn check_temporal_shape(&self) -> Result<(), FormulaError> {
        self.check_nesting()?;
        self.check_until_position(true)
    }

    fn check_nesting(&self) -> Result<(), FormulaError> {
        match self {
            Formula::Next(f) | Formula::Globally(f) => {
                if f.has_temporal() {
                    return Err(FormulaError::NestedTemporal(self.to_string()));
                }
                Ok(())
            }
            Formula::Until(a, b) => {
                if a.has_temporal() || b.has_temporal() {
                    return Err(FormulaError::NestedTemporal(self.to_string()));
                }
                Ok(())
            }
            Formula::Not(f) | Formula::Quant(_, _, _, f) => f.check_nesting(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.check_nesting()?;
                b.check_nesting()
            }
            _ => Ok(()),
        }
    }

    fn check_until_position(&self, conjunctive: bool) -> Result<(), FormulaError> {
        match self {
            Formula::Globally(_) => Err(FormulaError::UnsupportedTemporal(format!(
                "`G` is not supported: {self}"
            ))),
            Formula::Until(..) if !conjunctive => Err(FormulaError::UnsupportedTemporal(format!(
                "`U` may only appear as a top-level conjunct: {self}"
            ))),
            Formula::Until(..) | Formula::Next(_) => Ok(()),
            Formula::And(a, b) => {
                a.check_until_position(conjunctive)?;
                b.check_until_position(conjunctive)
            }
            Formula::Quant(Quantifier::Forall, _, _, f) => f.check_until_position(conjunctive),
            Formula::Quant(Quantifier::Exists, _, _, f) | Formula::Not(f) => {
                f.check_until_position(false)
            }
            Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.check_until_position(false)?;
                b.check_until_position(false)
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(k) => write!(f, "{k}"),
            Expr::N => write!(f, "n"),
            Expr::Name(s) => write!(f, "{s}"),
            Expr::Indexed(s, e) => write!(f, "{s}[{e}]"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mod(a, b) => write!(f, "({a} mod {b})"),
        }
    }
}

impl fmt::Display for QuantDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantDomain::Range(lo, hi) => write!(f, "{lo}..{hi}"),
            QuantDomain::Values(v) => write!(f, "dom({v})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Bool(b) => write!(f, "{b}"),
            Formula::Cmp(a, op, b) => write!(f, "{a} {} {b}", op.symbol()),
            Formula::Atom(e) => write!(f, "{e}"),
            Formula::Enabled(e) => write!(f, "enabled({e})"),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Iff(a, b) => write!(f, "({a} <-> {b})"),
            Formula::Quant(q, v, d, body) => {
                let kw = match q {
                    Quantifier::Forall => "forall",
                    Quantifier::Exists => "exists",
                };
                write!(f, "({kw} {v} in {d}: {body})")
            }
            Formula::Next(g) => write!(f, "X ({g})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Globally(g) => write!(f, "G ({g})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Ground formulas

/// Quantifier-free integer expression over state variables (by index).
/// Variables evaluate to their declared values, not their value indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GExpr {
    Const(i64),
    Var(usize),
    Add(Box<GExpr>, Box<GExpr>),
    Sub(Box<GExpr>, Box<GExpr>),
    Mod(Box<GExpr>, Box<GExpr>),
}

impl GExpr {
    pub fn eval(&self, value: &impl Fn(usize) -> i64) -> i64 {
        match self {
            GExpr::Const(c) => *c,
            GExpr::Var(v) => value(*v),
            GExpr::Add(a, b) => a.eval(value) + b.eval(value),
            GExpr::Sub(a, b) => a.eval(value) - b.eval(value),
            GExpr::Mod(a, b) => {
                let m = b.eval(value);
                if m == 0 {
                    0
                } else {
                    a.eval(value).rem_euclid(m)
                }
            }
        }
    }

    pub fn vars(&self, out: &mut Vec<usize>) {
        match self {
            GExpr::Const(_) => {}
            GExpr::Var(v) => out.push(*v),
            GExpr::Add(a, b) | GExpr::Sub(a, b) | GExpr::Mod(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    pub fn render(&self, vars: &[VarDecl]) -> String {
        match self {
            GExpr::Const(c) => c.to_string(),
            GExpr::Var(v) => vars[*v].name.clone(),
            GExpr::Add(a, b) => format!("({} + {})", a.render(vars), b.render(vars)),
            GExpr::Sub(a, b) => format!("({} - {})", a.render(vars), b.render(vars)),
            GExpr::Mod(a, b) => format!("({} mod {})", a.render(vars), b.render(vars)),
        }
    }
}

/// Quantifier-free formula with resolved variables, predicates and processes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ground {
    Const(bool),
    Cmp(GExpr, CmpOp, GExpr),
    Pred(usize),
    Enabled(usize),
    Not(Box<Ground>),
    And(Vec<Ground>),
    Or(Vec<Ground>),
    Implies(Box<Ground>, Box<Ground>),
    Iff(Box<Ground>, Box<Ground>),
    Next(Box<Ground>),
    Until(Box<Ground>, Box<Ground>),
}

impl Ground {
    pub fn not(g: Ground) -> Ground {
        match g {
            Ground::Const(b) => Ground::Const(!b),
            g => Ground::Not(Box::new(g)),
        }
    }

    /// Flattening conjunction; constant operands are folded away.
    pub fn and(items: impl IntoIterator<Item = Ground>) -> Ground {
        let mut out = Vec::new();
        for g in items {
            match g {
                Ground::Const(true) => {}
                Ground::Const(false) => return Ground::Const(false),
                Ground::And(inner) => out.extend(inner),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Ground::Const(true),
            1 => out.pop().unwrap(),
            _ => Ground::And(out),
        }
    }

    pub fn or(items: impl IntoIterator<Item = Ground>) -> Ground {
        let mut out = Vec::new();
        for g in items {
            match g {
                Ground::Const(false) => {}
                Ground::Const(true) => return Ground::Const(true),
                Ground::Or(inner) => out.extend(inner),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Ground::Const(false),
            1 => out.pop().unwrap(),
            _ => Ground::Or(out),
        }
    }

    pub fn implies(a: Ground, b: Ground) -> Ground {
        match (a, b) {
            (Ground::Const(false), _) | (_, Ground::Const(true)) => Ground::Const(true),
            (Ground::Const(true), b) => b,
            (a, Ground::Const(false)) => Ground::not(a),
            (a, b) => Ground::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: Ground, b: Ground) -> Ground {
        match (a, b) {
            (Ground::Const(x), Ground::Const(y)) => Ground::Const(x == y),
            (Ground::Const(true), g) | (g, Ground::Const(true)) => g,
            (Ground::Const(false), g) | (g, Ground::Const(false)) => Ground::not(g),
            (a, b) => Ground::Iff(Box::new(a), Box::new(b)),
        }
    }

    pub fn is_temporal_free(&self) -> bool {
        match self {
            Ground::Next(_) | Ground::Until(..) => false,
            Ground::Not(g) => g.is_temporal_free(),
            Ground::And(v) | Ground::Or(v) => v.iter().all(Ground::is_temporal_free),
            Ground::Implies(a, b) | Ground::Iff(a, b) => a.is_temporal_free() && b.is_temporal_free(),
            _ => true,
        }
    }

    /// Splits the top-level conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<&Ground> {
        match self {
            Ground::And(v) => v.iter().collect(),
            Ground::Const(true) => Vec::new(),
            g => vec![g],
        }
    }

    /// Renders in the concrete formula syntax using declared names.
    pub fn render(&self, vars: &[VarDecl], preds: &[PredicateDecl]) -> String {
        fn join(items: &[Ground], sep: &str, vars: &[VarDecl], preds: &[PredicateDecl]) -> String {
            let parts: Vec<String> = items.iter().map(|g| g.render(vars, preds)).collect();
            format!("({})", parts.join(sep))
        }
        match self {
            Ground::Const(b) => b.to_string(),
            Ground::Cmp(a, op, b) => {
                format!("{} {} {}", a.render(vars), op.symbol(), b.render(vars))
            }
            Ground::Pred(p) => preds[*p].name.clone(),
            Ground::Enabled(i) => format!("enabled({i})"),
            Ground::Not(g) => format!("!({})", g.render(vars, preds)),
            Ground::And(v) => join(v, " & ", vars, preds),
            Ground::Or(v) => join(v, " | ", vars, preds),
            Ground::Implies(a, b) => {
                format!("({} -> {})", a.render(vars, preds), b.render(vars, preds))
            }
            Ground::Iff(a, b) => {
                format!("({} <-> {})", a.render(vars, preds), b.render(vars, preds))
            }
            Ground::Next(g) => format!("X ({})", g.render(vars, preds)),
            Ground::Until(a, b) => {
                format!("({} U {})", a.render(vars, preds), b.render(vars, preds))
            }
        }
    }

    /// Evaluates a temporal-free formula. `pred` and `enabled` supply the
    /// interpretation of predicate and enabledness atoms.
    pub fn eval_state(
        &self,
        value: &impl Fn(usize) -> i64,
        pred: &impl Fn(usize) -> bool,
        enabled: &impl Fn(usize) -> bool,
    ) -> bool {
        match self {
            Ground::Const(b) => *b,
            Ground::Cmp(a, op, b) => op.apply(a.eval(value), b.eval(value)),
            Ground::Pred(p) => pred(*p),
            Ground::Enabled(i) => enabled(*i),
            Ground::Not(g) => !g.eval_state(value, pred, enabled),
            Ground::And(v) => v.iter().all(|g| g.eval_state(value, pred, enabled)),
            Ground::Or(v) => v.iter().any(|g| g.eval_state(value, pred, enabled)),
            Ground::Implies(a, b) => {
                !a.eval_state(value, pred, enabled) || b.eval_state(value, pred, enabled)
            }
            Ground::Iff(a, b) => {
                a.eval_state(value, pred, enabled) == b.eval_state(value, pred, enabled)
            }
            Ground::Next(_) | Ground::Until(..) => {
                panic!("eval_state called on a temporal formula")
            }
        }
    }

    /// Collects the state variables the formula mentions.
    pub fn vars(&self, out: &mut Vec<usize>) {
        match self {
            Ground::Cmp(a, _, b) => {
                a.vars(out);
                b.vars(out);
            }
            Ground::Not(g) | Ground::Next(g) => g.vars(out),
            Ground::And(v) | Ground::Or(v) => v.iter().for_each(|g| g.vars(out)),
            Ground::Implies(a, b) | Ground::Iff(a, b) | Ground::Until(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            _ => {}
        }
    }

    /// Collects referenced predicates.
    pub fn preds(&self, out: &mut Vec<usize>) {
        match self {
            Ground::Pred(p) => out.push(*p),
            Ground::Not(g) | Ground::Next(g) => g.preds(out),
            Ground::And(v) | Ground::Or(v) => v.iter().for_each(|g| g.preds(out)),
            Ground::Implies(a, b) | Ground::Iff(a, b) | Ground::Until(a, b) => {
                a.preds(out);
                b.preds(out);
            }
            _ => {}
        }
    }
}

// ---------------------------------------------------------------------------
// Grounding

/// Name-resolution context for grounding.
pub struct GroundEnv<'a> {
    vars: &'a [VarDecl],
    preds: &'a [PredicateDecl],
    process_count: usize,
    var_index: HashMap<&'a str, usize>,
    pred_index: HashMap<&'a str, usize>,
}

enum Resolved {
    Var(usize),
    Pred(usize),
}

impl<'a> GroundEnv<'a> {
    pub fn new(vars: &'a [VarDecl], preds: &'a [PredicateDecl], process_count: usize) -> Self {
        GroundEnv {
            vars,
            preds,
            process_count,
            var_index: vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect(),
            pred_index: preds.iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect(),
        }
    }

    pub fn process_count(&self) -> usize {
        self.process_count
    }

    /// Grounds a closed formula.
    pub fn ground(&self, f: &Formula) -> Result<Ground, FormulaError> {
        self.ground_with(f, &mut Vec::new())
    }

    /// Grounds a formula under the given outer bindings.
    pub fn ground_with(
        &self,
        f: &Formula,
        bound: &mut Vec<(String, i64)>,
    ) -> Result<Ground, FormulaError> {
        Ok(match f {
            Formula::Bool(b) => Ground::Const(*b),
            Formula::Cmp(a, op, b) => {
                let ga = self.ground_expr(a, bound)?;
                let gb = self.ground_expr(b, bound)?;
                self.check_literal_domain(a, &gb)?;
                self.check_literal_domain(b, &ga)?;
                match (&ga, &gb) {
                    (GExpr::Const(x), GExpr::Const(y)) => Ground::Const(op.apply(*x, *y)),
                    _ => Ground::Cmp(ga, *op, gb),
                }
            }
            Formula::Atom(e) => match self.resolve_ref(e, bound)? {
                Resolved::Pred(p) => Ground::Pred(p),
                Resolved::Var(v) => Ground::Cmp(GExpr::Var(v), CmpOp::Ne, GExpr::Const(0)),
            },
            Formula::Enabled(e) => {
                let i = self.eval_index(e, bound)?;
                if i < 0 || i as usize >= self.process_count {
                    return Err(FormulaError::IndexOutOfRange(format!(
                        "enabled({i}) with {} processes",
                        self.process_count
                    )));
                }
                Ground::Enabled(i as usize)
            }
            Formula::Not(g) => Ground::not(self.ground_with(g, bound)?),
            Formula::And(a, b) => {
                Ground::and([self.ground_with(a, bound)?, self.ground_with(b, bound)?])
            }
            Formula::Or(a, b) => Ground::or([self.ground_with(a, bound)?, self.ground_with(b, bound)?]),
            Formula::Implies(a, b) => {
                Ground::implies(self.ground_with(a, bound)?, self.ground_with(b, bound)?)
            }
            Formula::Iff(a, b) => Ground::iff(self.ground_with(a, bound)?, self.ground_with(b, bound)?),
            Formula::Quant(q, name, dom, body) => {
                let values = self.domain_values(dom, bound)?;
                let mut parts = Vec::with_capacity(values.len());
                for v in values {
                    bound.push((name.clone(), v));
                    let g = self.ground_with(body, bound);
                    bound.pop();
                    parts.push(g?);
                }
                match q {
                    Quantifier::Forall => Ground::and(parts),
                    Quantifier::Exists => Ground::or(parts),
                }
            }
            Formula::Next(g) => match self.ground_with(g, bound)? {
                Ground::Const(true) => Ground::Const(true),
                g => Ground::Next(Box::new(g)),
            },
            Formula::Until(a, b) => {
                let ga = self.ground_with(a, bound)?;
                match self.ground_with(b, bound)? {
                    Ground::Const(true) => Ground::Const(true),
                    gb => Ground::Until(Box::new(ga), Box::new(gb)),
                }
            }
            Formula::Globally(_) => {
                return Err(FormulaError::UnsupportedTemporal(format!(
                    "`G` is not supported: {f}"
                )))
            }
        })
    }

    fn domain_values(
        &self,
        dom: &QuantDomain,
        bound: &mut Vec<(String, i64)>,
    ) -> Result<Vec<i64>, FormulaError> {
        match dom {
            QuantDomain::Range(lo, hi) => {
                let lo = self.eval_index(lo, bound)?;
                let hi = self.eval_index(hi, bound)?;
                if hi - lo > 1_000_000 {
                    return Err(FormulaError::IndexOutOfRange(format!("range {lo}..{hi} too large")));
                }
                Ok((lo..=hi).collect())
            }
            QuantDomain::Values(e) => match self.ground_expr(e, bound)? {
                GExpr::Var(v) => Ok(self.vars[v].values.clone()),
                _ => Err(FormulaError::Type(format!("dom({e}) needs a state variable"))),
            },
        }
    }

    fn check_literal_domain(&self, lit: &Expr, other: &GExpr) -> Result<(), FormulaError> {
        if let (Expr::Int(c), GExpr::Var(v)) = (lit, other) {
            if !self.vars[*v].values.contains(c) {
                return Err(FormulaError::ValueOutOfDomain(format!(
                    "{c} is not a value of `{}`",
                    self.vars[*v].name
                )));
            }
        }
        Ok(())
    }

    fn lookup_bound(bound: &[(String, i64)], name: &str) -> Option<i64> {
        bound.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Evaluates an expression that must not mention state variables.
    pub fn eval_index(&self, e: &Expr, bound: &mut Vec<(String, i64)>) -> Result<i64, FormulaError> {
        match self.ground_expr(e, bound)? {
            GExpr::Const(c) => Ok(c),
            _ => Err(FormulaError::Type(format!(
                "`{e}` mentions a state variable where an index is expected"
            ))),
        }
    }

    pub fn ground_expr(&self, e: &Expr, bound: &mut Vec<(String, i64)>) -> Result<GExpr, FormulaError> {
        fn fold(
            a: GExpr,
            b: GExpr,
            op: fn(i64, i64) -> Option<i64>,
            mk: fn(Box<GExpr>, Box<GExpr>) -> GExpr,
        ) -> Result<GExpr, FormulaError> {
            match (&a, &b) {
                (GExpr::Const(x), GExpr::Const(y)) => op(*x, *y)
                    .map(GExpr::Const)
                    .ok_or_else(|| FormulaError::Type(format!("invalid arithmetic on {x} and {y}"))),
                _ => Ok(mk(Box::new(a), Box::new(b))),
            }
        }
        match e {
            Expr::Int(k) => Ok(GExpr::Const(*k)),
            Expr::N => Ok(GExpr::Const(self.process_count as i64)),
            Expr::Name(name) => {
                if let Some(v) = Self::lookup_bound(bound, name) {
                    return Ok(GExpr::Const(v));
                }
                match self.resolve_ref(e, bound)? {
                    Resolved::Var(v) => Ok(GExpr::Var(v)),
                    Resolved::Pred(_) => Err(FormulaError::Type(format!(
                        "predicate `{name}` used as a value"
                    ))),
                }
            }
            Expr::Indexed(..) => match self.resolve_ref(e, bound)? {
                Resolved::Var(v) => Ok(GExpr::Var(v)),
                Resolved::Pred(_) => Err(FormulaError::Type(format!("predicate `{e}` used as a value"))),
            },
            Expr::Add(a, b) => fold(
                self.ground_expr(a, bound)?,
                self.ground_expr(b, bound)?,
                i64::checked_add,
                GExpr::Add,
            ),
            Expr::Sub(a, b) => fold(
                self.ground_expr(a, bound)?,
                self.ground_expr(b, bound)?,
                i64::checked_sub,
                GExpr::Sub,
            ),
            Expr::Mod(a, b) => {
                let gb = self.ground_expr(b, bound)?;
                if gb == GExpr::Const(0) {
                    return Err(FormulaError::Type(format!("modulus of `{e}` is zero")));
                }
                fold(
                    self.ground_expr(a, bound)?,
                    gb,
                    |x, y| Some(x.rem_euclid(y)),
                    GExpr::Mod,
                )
            }
        }
    }

    fn resolve_ref(&self, e: &Expr, bound: &mut Vec<(String, i64)>) -> Result<Resolved, FormulaError> {
        let name = match e {
            Expr::Name(name) => {
                if Self::lookup_bound(bound, name).is_some() {
                    return Err(FormulaError::Type(format!(
                        "bound variable `{name}` used as a formula"
                    )));
                }
                name.clone()
            }
            Expr::Indexed(family, idx) => {
                let k = self.eval_index(idx, bound)?;
                let name = format!("{family}{k}");
                if !self.var_index.contains_key(name.as_str()) && !self.pred_index.contains_key(name.as_str()) {
                    if self.family_exists(family) {
                        return Err(FormulaError::IndexOutOfRange(format!("{family}[{k}]")));
                    }
                    return Err(FormulaError::UnknownIdentifier(family.clone()));
                }
                name
            }
            _ => return Err(FormulaError::Type(format!("`{e}` is not a reference"))),
        };
        if let Some(&v) = self.var_index.get(name.as_str()) {
            return Ok(Resolved::Var(v));
        }
        if let Some(&p) = self.pred_index.get(name.as_str()) {
            return Ok(Resolved::Pred(p));
        }
        Err(FormulaError::UnknownIdentifier(name))
    }

    fn family_exists(&self, family: &str) -> bool {
        let is_member = |name: &str| {
            name.strip_prefix(family)
                .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
        };
        self.vars.iter().any(|v| is_member(&v.name)) || self.preds.iter().any(|p| is_member(&p.name))
    }

    /// Owner of a predicate, for callers that only hold the environment.
    pub fn predicate_owner(&self, p: usize) -> Owner {
        self.preds[p].owner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_vars() -> (Vec<VarDecl>, Vec<PredicateDecl>) {
        let vars = (0..3).map(|i| VarDecl::with_size(format!("x{i}"), 3)).collect();
        let preds = (0..3)
            .map(|i| PredicateDecl {
                name: format!("token{i}"),
                owner: Owner::Process(i),
            })
            .collect();
        (vars, preds)
    }

    #[test]
    fn grounding_expands_quantifiers() {
        let (vars, preds) = env_vars();
        let env = GroundEnv::new(&vars, &preds, 3);
        let f = Formula::Quant(
            Quantifier::Forall,
            "i".into(),
            QuantDomain::Range(Expr::Int(0), Expr::Sub(Box::new(Expr::N), Box::new(Expr::Int(1)))),
            Box::new(Formula::Atom(Expr::Indexed("token".into(), Box::new(Expr::Name("i".into()))))),
        );
        let g = env.ground(&f).unwrap();
        assert_eq!(g, Ground::And(vec![Ground::Pred(0), Ground::Pred(1), Ground::Pred(2)]));
    }

    #[test]
    fn out_of_range_family_index() {
        let (vars, preds) = env_vars();
        let env = GroundEnv::new(&vars, &preds, 3);
        let f = Formula::Atom(Expr::Indexed("token".into(), Box::new(Expr::Int(3))));
        assert_eq!(env.ground(&f).unwrap_err().code(), "INDEX_OUT_OF_RANGE");
        let f = Formula::Atom(Expr::Indexed("tok".into(), Box::new(Expr::Int(0))));
        assert_eq!(env.ground(&f).unwrap_err().code(), "UNKNOWN_IDENTIFIER");
    }

    #[test]
    fn literal_outside_domain_is_rejected() {
        let (vars, preds) = env_vars();
        let env = GroundEnv::new(&vars, &preds, 3);
        let f = Formula::Cmp(Expr::Name("x0".into()), CmpOp::Eq, Expr::Int(5));
        assert_eq!(env.ground(&f).unwrap_err().code(), "VALUE_OUT_OF_DOMAIN");
    }

    #[test]
    fn negative_modulus_wraps() {
        let (vars, preds) = env_vars();
        let env = GroundEnv::new(&vars, &preds, 3);
        let e = Expr::Mod(
            Box::new(Expr::Sub(Box::new(Expr::Int(0)), Box::new(Expr::Int(1)))),
            Box::new(Expr::N),
        );
        assert_eq!(env.eval_index(&e, &mut Vec::new()).unwrap(), 2);
    }

    #[test]
    fn until_under_disjunction_is_rejected() {
        let f = Formula::or(Formula::Bool(false), Formula::finally(Formula::Bool(true)));
        assert_eq!(f.check_temporal_shape().unwrap_err().code(), "UNSUPPORTED_TEMPORAL");
        let g = Formula::Next(Box::new(Formula::finally(Formula::Bool(true))));
        assert_eq!(g.check_temporal_shape().unwrap_err().code(), "NESTED_TEMPORAL");
    }
}
