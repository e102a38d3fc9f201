//! Input-side domain types and structural validation of synthesis problems.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formula::{Formula, FormulaError, GroundEnv};

/// A state variable with a finite, explicitly enumerated domain.
///
/// Internally every variable is handled through its value indices
/// `0..domain_size`; `values[k]` is the integer that formulas see.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub values: Vec<i64>,
}

impl VarDecl {
    /// Variable over `0..size`.
    pub fn with_size(name: impl Into<String>, size: usize) -> Self {
        VarDecl {
            name: name.into(),
            values: (0..size as i64).collect(),
        }
    }

    pub fn domain_size(&self) -> usize {
        self.values.len()
    }

    /// Value index of a declared value.
    pub fn index_of_value(&self, value: i64) -> Option<usize> {
        self.values.iter().position(|&v| v == value)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub vars: Vec<VarDecl>,
    pub process_count: usize,
    /// Sorted variable indices per process.
    pub read_sets: Vec<Vec<usize>>,
    pub write_sets: Vec<Vec<usize>>,
}

impl Topology {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    Process(usize),
    /// Reads every variable.
    Global,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub owner: Owner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    SelfStabilizing,
    IdealStabilizing,
    MonotonicStabilizing,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    #[default]
    Asynchronous,
    Synchronous,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    #[default]
    Asymmetric,
    Symmetric,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    #[default]
    Strong,
    Weak,
}

/// One member of a symmetry class. `view[k]` is the variable playing role
/// `k`; renaming between members maps `view_a[k]` to `view_b[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMember {
    pub process: usize,
    pub view: Vec<usize>,
    /// Predicates in role order, matched positionally across members.
    pub predicates: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryClass {
    pub members: Vec<ClassMember>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeConfig {
    pub goal: Goal,
    pub timing: Timing,
    pub symmetry: Symmetry,
    pub convergence: Convergence,
    pub classes: Vec<SymmetryClass>,
}

impl ModeConfig {
    pub fn new(goal: Goal) -> Self {
        ModeConfig {
            goal,
            timing: Timing::default(),
            symmetry: Symmetry::default(),
            convergence: Convergence::default(),
            classes: Vec::new(),
        }
    }

    pub fn has_legitimate_states(&self) -> bool {
        self.goal != Goal::IdealStabilizing
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesisProblem {
    pub topology: Topology,
    pub predicates: Vec<PredicateDecl>,
    /// Constraint defining the role of the uninterpreted predicates.
    pub phi: Formula,
    /// Behavioral requirement.
    pub psi: Formula,
    /// When present, the legitimate states are exactly the states
    /// satisfying this temporal-free formula instead of being synthesized.
    pub legitimate: Option<Formula>,
    pub mode: ModeConfig,
}

impl SynthesisProblem {
    pub fn ground_env(&self) -> GroundEnv<'_> {
        GroundEnv::new(&self.topology.vars, &self.predicates, self.topology.process_count)
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    EmptyTopology,
    EmptyDomain,
    DuplicateValue,
    DuplicateName,
    InvalidName,
    ProcessSetMismatch,
    VarIndexOutOfRange,
    WriteNotInRead,
    WriteOverlap,
    OwnerOutOfRange,
    ParseError,
    NestedTemporal,
    UnsupportedTemporal,
    UnknownIdentifier,
    IndexOutOfRange,
    ValueOutOfDomain,
    TypeError,
    SymmetryClassesMissing,
    ClassMapInvalid,
    LegitimateWithoutLs,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::EmptyTopology => "EMPTY_TOPOLOGY",
            IssueCode::EmptyDomain => "EMPTY_DOMAIN",
            IssueCode::DuplicateValue => "DUPLICATE_VALUE",
            IssueCode::DuplicateName => "DUPLICATE_NAME",
            IssueCode::InvalidName => "INVALID_NAME",
            IssueCode::ProcessSetMismatch => "PROCESS_SET_MISMATCH",
            IssueCode::VarIndexOutOfRange => "VAR_INDEX_OUT_OF_RANGE",
            IssueCode::WriteNotInRead => "WRITE_NOT_IN_READ",
            IssueCode::WriteOverlap => "WRITE_OVERLAP",
            IssueCode::OwnerOutOfRange => "OWNER_OUT_OF_RANGE",
            IssueCode::ParseError => "PARSE_ERROR",
            IssueCode::NestedTemporal => "NESTED_TEMPORAL",
            IssueCode::UnsupportedTemporal => "UNSUPPORTED_TEMPORAL",
            IssueCode::UnknownIdentifier => "UNKNOWN_IDENTIFIER",
            IssueCode::IndexOutOfRange => "INDEX_OUT_OF_RANGE",
            IssueCode::ValueOutOfDomain => "VALUE_OUT_OF_DOMAIN",
            IssueCode::TypeError => "TYPE_ERROR",
            IssueCode::SymmetryClassesMissing => "SYMMETRY_CLASSES_MISSING",
            IssueCode::ClassMapInvalid => "CLASS_MAP_INVALID",
            IssueCode::LegitimateWithoutLs => "LEGITIMATE_WITHOUT_LS",
        }
    }

    fn from_formula_error(e: &FormulaError) -> Self {
        match e {
            FormulaError::Parse { .. } => IssueCode::ParseError,
            FormulaError::NestedTemporal(_) => IssueCode::NestedTemporal,
            FormulaError::UnsupportedTemporal(_) => IssueCode::UnsupportedTemporal,
            FormulaError::UnknownIdentifier(_) => IssueCode::UnknownIdentifier,
            FormulaError::IndexOutOfRange(_) => IssueCode::IndexOutOfRange,
            FormulaError::ValueOutOfDomain(_) => IssueCode::ValueOutOfDomain,
            FormulaError::Type(_) => IssueCode::TypeError,
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    /// Dotted path to the offending element, e.g. `processes[1].write`.
    pub location: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }

    fn push(&mut self, code: IssueCode, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            code,
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, issue) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{} at {}: {}", issue.code, issue.location, issue.message)?;
        }
        Ok(())
    }
}

const KEYWORDS: &[&str] = &[
    "forall", "exists", "in", "dom", "mod", "n", "true", "false", "X", "F", "G", "U", "enabled",
    "and", "or", "not",
];

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
}

/// Checks every structural invariant of a problem. Never fails; problems are
/// reported in the returned report.
pub fn validate_problem(p: &SynthesisProblem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let topo = &p.topology;
    let nvars = topo.vars.len();

    if topo.process_count == 0 {
        report.push(IssueCode::EmptyTopology, "processes", "at least one process is required");
    }

    let mut names = HashSet::new();
    for (k, var) in topo.vars.iter().enumerate() {
        let loc = format!("variables[{k}]");
        if !is_identifier(&var.name) {
            report.push(IssueCode::InvalidName, &loc, format!("`{}` is not a valid name", var.name));
        }
        if !names.insert(var.name.as_str()) {
            report.push(IssueCode::DuplicateName, &loc, format!("`{}` declared twice", var.name));
        }
        if var.values.is_empty() {
            report.push(IssueCode::EmptyDomain, &loc, format!("`{}` has an empty domain", var.name));
        }
        let distinct: BTreeSet<_> = var.values.iter().collect();
        if distinct.len() != var.values.len() {
            report.push(IssueCode::DuplicateValue, &loc, format!("`{}` repeats a value", var.name));
        }
    }

    if topo.read_sets.len() != topo.process_count || topo.write_sets.len() != topo.process_count {
        report.push(
            IssueCode::ProcessSetMismatch,
            "processes",
            format!(
                "{} processes but {} read sets and {} write sets",
                topo.process_count,
                topo.read_sets.len(),
                topo.write_sets.len()
            ),
        );
    }

    let mut writer: Vec<Option<usize>> = vec![None; nvars];
    for (i, (read, write)) in topo.read_sets.iter().zip(&topo.write_sets).enumerate() {
        for (kind, set) in [("read", read), ("write", write)] {
            for &v in set {
                if v >= nvars {
                    report.push(
                        IssueCode::VarIndexOutOfRange,
                        format!("processes[{i}].{kind}"),
                        format!("variable index {v} out of range"),
                    );
                }
            }
        }
        for &v in write {
            if v >= nvars {
                continue;
            }
            if !read.contains(&v) {
                report.push(
                    IssueCode::WriteNotInRead,
                    format!("processes[{i}].write"),
                    format!("`{}` is written but not read", topo.vars[v].name),
                );
            }
            match writer[v] {
                Some(j) if j != i => report.push(
                    IssueCode::WriteOverlap,
                    format!("processes[{i}].write"),
                    format!("`{}` is also written by process {j}", topo.vars[v].name),
                ),
                _ => writer[v] = Some(i),
            }
        }
    }

    for (k, pred) in p.predicates.iter().enumerate() {
        let loc = format!("predicates[{k}]");
        if !is_identifier(&pred.name) {
            report.push(IssueCode::InvalidName, &loc, format!("`{}` is not a valid name", pred.name));
        }
        if !names.insert(pred.name.as_str()) {
            report.push(IssueCode::DuplicateName, &loc, format!("`{}` declared twice", pred.name));
        }
        if let Owner::Process(o) = pred.owner {
            if o >= topo.process_count {
                report.push(IssueCode::OwnerOutOfRange, &loc, format!("owner {o} out of range"));
            }
        }
    }

    // Formula checks need a sane topology for name resolution.
    let structural_ok = !report.has(IssueCode::VarIndexOutOfRange) && !report.has(IssueCode::EmptyDomain);
    if structural_ok {
        let env = p.ground_env();
        for (field, f) in [("phi", &p.phi), ("psi", &p.psi)] {
            let res = f.check_temporal_shape().and_then(|_| env.ground(f));
            if let Err(e) = res {
                report.push(IssueCode::from_formula_error(&e), field, e.to_string());
            }
        }
        if let Some(f) = &p.legitimate {
            match env.ground(f) {
                Err(e) => report.push(IssueCode::from_formula_error(&e), "legitimate", e.to_string()),
                Ok(g) if !g.is_temporal_free() => report.push(
                    IssueCode::UnsupportedTemporal,
                    "legitimate",
                    "the legitimate-state formula must not use temporal operators",
                ),
                Ok(_) => {}
            }
        }
    }
    if p.legitimate.is_some() && !p.mode.has_legitimate_states() {
        report.push(
            IssueCode::LegitimateWithoutLs,
            "legitimate",
            "ideal stabilization has no legitimate states to fix",
        );
    }

    validate_symmetry(p, &mut report);
    report
}

fn validate_symmetry(p: &SynthesisProblem, report: &mut ValidationReport) {
    let topo = &p.topology;
    if p.mode.symmetry == Symmetry::Symmetric && p.mode.classes.is_empty() {
        report.push(
            IssueCode::SymmetryClassesMissing,
            "mode.classes",
            "symmetric mode needs at least one symmetry class",
        );
    }
    let mut seen = HashSet::new();
    for (c, class) in p.mode.classes.iter().enumerate() {
        let loc = format!("mode.classes[{c}]");
        let mut bad = |msg: String| report.push(IssueCode::ClassMapInvalid, &loc, msg);
        let Some(first) = class.members.first() else {
            bad("class has no members".into());
            continue;
        };
        for m in &class.members {
            if m.process >= topo.process_count || m.process >= topo.read_sets.len() {
                bad(format!("process {} out of range", m.process));
                continue;
            }
            if !seen.insert(m.process) {
                bad(format!("process {} appears in more than one class", m.process));
            }
            let mut view: Vec<usize> = m.view.clone();
            view.sort_unstable();
            if view != topo.read_sets[m.process] {
                bad(format!(
                    "view of process {} is not a permutation of its read set",
                    m.process
                ));
                continue;
            }
            if m.view.len() != first.view.len() || m.predicates.len() != first.predicates.len() {
                bad(format!("member {} has a different shape than the first member", m.process));
                continue;
            }
            for (&a, &b) in first.view.iter().zip(&m.view) {
                if topo.vars[a].values != topo.vars[b].values {
                    bad(format!(
                        "`{}` and `{}` have different domains",
                        topo.vars[a].name, topo.vars[b].name
                    ));
                }
                let wa = topo.write_sets[first.process].contains(&a);
                let wb = topo.write_sets[m.process].contains(&b);
                if wa != wb {
                    bad(format!(
                        "renaming `{}` -> `{}` does not preserve write access",
                        topo.vars[a].name, topo.vars[b].name
                    ));
                }
            }
            if topo.write_sets[first.process].len() != topo.write_sets[m.process].len() {
                bad(format!("process {} has a different write-set size", m.process));
            }
            for &pr in &m.predicates {
                match p.predicates.get(pr) {
                    Some(decl) if decl.owner == Owner::Process(m.process) => {}
                    _ => bad(format!("predicate #{pr} is not owned by process {}", m.process)),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring3() -> SynthesisProblem {
        let vars = (0..3).map(|i| VarDecl::with_size(format!("x{i}"), 3)).collect();
        SynthesisProblem {
            topology: Topology {
                vars,
                process_count: 3,
                read_sets: vec![vec![0, 1, 2]; 3],
                write_sets: vec![vec![0], vec![1], vec![2]],
            },
            predicates: Vec::new(),
            phi: Formula::Bool(true),
            psi: Formula::Bool(true),
            legitimate: None,
            mode: ModeConfig::new(Goal::SelfStabilizing),
        }
    }

    #[test]
    fn well_formed_ring_is_ok() {
        assert!(validate_problem(&ring3()).is_ok());
    }

    #[test]
    fn write_outside_read_set() {
        let mut p = ring3();
        p.topology.read_sets[0] = vec![1, 2];
        let report = validate_problem(&p);
        assert!(report.has(IssueCode::WriteNotInRead));
        assert_eq!(report.issues[0].location, "processes[0].write");
    }

    #[test]
    fn overlapping_writers() {
        let mut p = ring3();
        p.topology.write_sets[1] = vec![0, 1];
        assert!(validate_problem(&p).has(IssueCode::WriteOverlap));
    }

    #[test]
    fn nested_temporal_is_a_validation_error() {
        let mut p = ring3();
        p.psi = Formula::finally(Formula::Next(Box::new(Formula::Bool(true))));
        assert!(validate_problem(&p).has(IssueCode::NestedTemporal));
    }

    #[test]
    fn symmetric_without_classes() {
        let mut p = ring3();
        p.mode.symmetry = Symmetry::Symmetric;
        assert!(validate_problem(&p).has(IssueCode::SymmetryClassesMissing));
    }

    #[test]
    fn class_view_must_match_domains() {
        let mut p = ring3();
        p.topology.vars[2] = VarDecl::with_size("x2", 2);
        p.mode.symmetry = Symmetry::Symmetric;
        p.mode.classes = vec![SymmetryClass {
            members: vec![
                ClassMember { process: 0, view: vec![2, 0, 1], predicates: vec![] },
                ClassMember { process: 1, view: vec![0, 1, 2], predicates: vec![] },
            ],
        }];
        assert!(validate_problem(&p).has(IssueCode::ClassMapInvalid));
    }
}
