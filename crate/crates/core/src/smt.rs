//! Quantifier-free terms over Boolean and bounded-integer symbols.

use std::fmt::Write as _;

pub type SymId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Bool,
    /// Integer restricted to `lo..=hi`.
    Int { lo: i64, hi: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub sort: Sort,
}

/// Boolean term. Build through the associated constructors, which fold
/// constants and flatten nested connectives.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    True,
    False,
    Var(SymId),
    Not(Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    Implies(Box<Term>, Box<Term>),
    Iff(Box<Term>, Box<Term>),
    /// Integer comparison `a > b`.
    Gt(SymId, SymId),
}

/// Value of a symbol in an assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl Term {
    pub fn constant(b: bool) -> Term {
        if b {
            Term::True
        } else {
            Term::False
        }
    }

    pub fn var(id: SymId) -> Term {
        Term::Var(id)
    }

    pub fn not(t: Term) -> Term {
        match t {
            Term::True => Term::False,
            Term::False => Term::True,
            Term::Not(inner) => *inner,
            t => Term::Not(Box::new(t)),
        }
    }

    pub fn and(items: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for t in items {
            match t {
                Term::True => {}
                Term::False => return Term::False,
                Term::And(inner) => out.extend(inner),
                t => out.push(t),
            }
        }
        match out.len() {
            0 => Term::True,
            1 => out.pop().unwrap(),
            _ => Term::And(out),
        }
    }

    pub fn or(items: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for t in items {
            match t {
                Term::False => {}
                Term::True => return Term::True,
                Term::Or(inner) => out.extend(inner),
                t => out.push(t),
            }
        }
        match out.len() {
            0 => Term::False,
            1 => out.pop().unwrap(),
            _ => Term::Or(out),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        match (a, b) {
            (Term::False, _) | (_, Term::True) => Term::True,
            (Term::True, b) => b,
            (a, Term::False) => Term::not(a),
            (a, b) if a == b => Term::True,
            (a, b) => Term::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: Term, b: Term) -> Term {
        match (a, b) {
            (Term::True, t) | (t, Term::True) => t,
            (Term::False, t) | (t, Term::False) => Term::not(t),
            (a, b) if a == b => Term::True,
            (a, b) => Term::Iff(Box::new(a), Box::new(b)),
        }
    }

    pub fn gt(a: SymId, b: SymId) -> Term {
        if a == b {
            Term::False
        } else {
            Term::Gt(a, b)
        }
    }

    pub fn is_true(&self) -> bool {
        *self == Term::True
    }

    /// Evaluates under a total assignment.
    pub fn eval(&self, value: &impl Fn(SymId) -> Value) -> bool {
        let int = |id| match value(id) {
            Value::Int(k) => k,
            Value::Bool(_) => panic!("symbol {id} used as an integer"),
        };
        match self {
            Term::True => true,
            Term::False => false,
            Term::Var(id) => match value(*id) {
                Value::Bool(b) => b,
                Value::Int(_) => panic!("symbol {id} used as a Boolean"),
            },
            Term::Not(t) => !t.eval(value),
            Term::And(v) => v.iter().all(|t| t.eval(value)),
            Term::Or(v) => v.iter().any(|t| t.eval(value)),
            Term::Implies(a, b) => !a.eval(value) || b.eval(value),
            Term::Iff(a, b) => a.eval(value) == b.eval(value),
            Term::Gt(a, b) => int(*a) > int(*b),
        }
    }

    /// Collects referenced symbols.
    pub fn symbols(&self, out: &mut Vec<SymId>) {
        match self {
            Term::True | Term::False => {}
            Term::Var(id) => out.push(*id),
            Term::Not(t) => t.symbols(out),
            Term::And(v) | Term::Or(v) => v.iter().for_each(|t| t.symbols(out)),
            Term::Implies(a, b) | Term::Iff(a, b) => {
                a.symbols(out);
                b.symbols(out);
            }
            Term::Gt(a, b) => {
                out.push(*a);
                out.push(*b);
            }
        }
    }

    /// SMT-LIB2 rendering.
    pub fn write_smtlib(&self, symbols: &[Symbol], out: &mut String) {
        match self {
            Term::True => out.push_str("true"),
            Term::False => out.push_str("false"),
            Term::Var(id) => out.push_str(&symbols[*id].name),
            Term::Not(t) => {
                out.push_str("(not ");
                t.write_smtlib(symbols, out);
                out.push(')');
            }
            Term::And(v) | Term::Or(v) => {
                out.push_str(if matches!(self, Term::And(_)) { "(and" } else { "(or" });
                for t in v {
                    out.push(' ');
                    t.write_smtlib(symbols, out);
                }
                out.push(')');
            }
            Term::Implies(a, b) | Term::Iff(a, b) => {
                out.push_str(if matches!(self, Term::Implies(..)) { "(=> " } else { "(= " });
                a.write_smtlib(symbols, out);
                out.push(' ');
                b.write_smtlib(symbols, out);
                out.push(')');
            }
            Term::Gt(a, b) => {
                let _ = write!(out, "(> {} {})", symbols[*a].name, symbols[*b].name);
            }
        }
    }

    pub fn to_smtlib(&self, symbols: &[Symbol]) -> String {
        let mut s = String::new();
        self.write_smtlib(symbols, &mut s);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_fold() {
        assert_eq!(Term::and([Term::True, Term::var(0)]), Term::var(0));
        assert_eq!(Term::or([Term::var(0), Term::True]), Term::True);
        assert_eq!(Term::implies(Term::var(1), Term::var(1)), Term::True);
        assert_eq!(Term::iff(Term::False, Term::var(2)), Term::not(Term::var(2)));
        assert_eq!(Term::gt(3, 3), Term::False);
        assert_eq!(Term::not(Term::not(Term::var(4))), Term::var(4));
    }

    #[test]
    fn renders_smtlib() {
        let syms = vec![
            Symbol { name: "a".into(), sort: Sort::Bool },
            Symbol { name: "b".into(), sort: Sort::Bool },
            Symbol { name: "k".into(), sort: Sort::Int { lo: 0, hi: 3 } },
            Symbol { name: "m".into(), sort: Sort::Int { lo: 0, hi: 3 } },
        ];
        let t = Term::implies(Term::and([Term::var(0), Term::not(Term::var(1))]), Term::gt(2, 3));
        assert_eq!(t.to_smtlib(&syms), "(=> (and a (not b)) (> k m))");
        let v = |id| match id {
            0 => Value::Bool(true),
            1 => Value::Bool(false),
            2 => Value::Int(1),
            _ => Value::Int(2),
        };
        assert!(!t.eval(&v));
    }
}
