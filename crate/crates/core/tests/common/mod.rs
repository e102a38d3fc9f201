#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use stabsynth_core::encoder::UnknownTable;
use stabsynth_core::parser::parse_problem;
use stabsynth_core::problem::SynthesisProblem;
use stabsynth_core::protocol::{parse_protocol, Protocol};
use stabsynth_core::smt::{Sort, Value};
use stabsynth_core::solver::Witness;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/corpus")
}

pub fn corpus_names() -> Vec<String> {
    let text = std::fs::read_to_string(corpus_dir().join("manifest.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap().to_string())
        .collect()
}

pub fn corpus_problem(name: &str) -> SynthesisProblem {
    let path = corpus_dir().join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_problem(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn corpus_protocol(name: &str, problem: &SynthesisProblem) -> Protocol {
    let path = corpus_dir().join("protocols").join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap();
    parse_protocol(&text, problem).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn problem(json: &str) -> SynthesisProblem {
    parse_problem(json).unwrap_or_else(|e| panic!("{e}\n{json}"))
}

/// Uniformly random Booleans; integers drawn from their declared range.
pub fn random_witness(table: &UnknownTable, rng: &mut impl Rng, density: f64) -> Witness {
    Witness::from_fn(table, |id| match table.symbols[id].sort {
        Sort::Bool => Value::Bool(rng.gen_bool(density)),
        Sort::Int { lo, hi } => Value::Int(rng.gen_range(lo..=hi)),
    })
}

/// Ring of `n` processes over variables `x0..` of size `d`, each process
/// reading its neighbours. `extra` is spliced into the document.
pub fn ring_doc(n: usize, d: usize, predicates: bool, extra: &str) -> String {
    let vars: Vec<String> = (0..n).map(|i| format!(r#"{{"name": "x{i}", "domain": {d}}}"#)).collect();
    let procs: Vec<String> = (0..n)
        .map(|i| {
            let l = (i + n - 1) % n;
            let r = (i + 1) % n;
            format!(r#"{{"read": ["x{l}", "x{i}", "x{r}"], "write": ["x{i}"]}}"#)
        })
        .collect();
    let preds: Vec<String> = if predicates {
        (0..n).map(|i| format!(r#"{{"name": "tok{i}", "owner": {i}}}"#)).collect()
    } else {
        Vec::new()
    };
    format!(
        r#"{{"variables": [{}], "processes": [{}], "predicates": [{}], {extra}}}"#,
        vars.join(", "),
        procs.join(", "),
        preds.join(", ")
    )
}
