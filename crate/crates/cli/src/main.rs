use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use stabsynth_core::encoder::{build_instance_with, EncoderOptions, DEFAULT_MAX_STATES};
use stabsynth_core::parser::parse_problem;
use stabsynth_core::pipeline::{synthesize_with, SynthesisOptions, SynthesisResult};
use stabsynth_core::problem::SynthesisProblem;
use stabsynth_core::protocol::{parse_protocol, protocol_to_json, render};
use stabsynth_core::solver::{emit_with_logic, SolverConfig};
use stabsynth_core::verifier::{verify, Verdict};

// Stdout writes that tolerate a closed pipe (e.g. `| head`).
macro_rules! outln {
    ($($arg:tt)*) => {{ let _ = writeln!(std::io::stdout(), $($arg)*); }};
}
macro_rules! out {
    ($($arg:tt)*) => {{ let _ = write!(std::io::stdout(), $($arg)*); }};
}

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_UNSAT: u8 = 20;
const EXIT_UNKNOWN: u8 = 30;
const EXIT_VERIFY_FAILED: u8 = 40;
const EXIT_CORPUS_MISMATCH: u8 = 50;

#[derive(Parser)]
#[command(name = "stabsynth", version, about = "Synthesize and verify stabilizing distributed protocols")]
struct Cli {
    /// Only print verdicts and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a protocol for a problem file.
    Synth(SynthArgs),
    /// Check a protocol document against its problem.
    Verify(VerifyArgs),
    /// Write the SMT-LIB instance of a problem without solving it.
    DumpSmt(DumpArgs),
    /// Run the bundled case-study corpus against its expected verdicts.
    Corpus(CorpusArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Solver command line reading SMT-LIB on stdin.
    #[arg(long, env = "STABSYNTH_SOLVER", value_name = "CMD")]
    solver: Option<String>,
    /// Solver time limit in seconds.
    #[arg(long, value_name = "SECS")]
    timeout: Option<u64>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig::resolve(self.solver.as_deref(), self.timeout.map(Duration::from_secs))
    }
}

#[derive(Args, Clone)]
struct EncodeArgs {
    /// Upper bound of the ranking functions (defaults to the state count).
    #[arg(long, value_name = "K")]
    rank_bound: Option<i64>,
    /// Refuse problems with more global states than this.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,
}

impl EncodeArgs {
    fn options(&self) -> EncoderOptions {
        EncoderOptions { rank_bound: self.rank_bound, max_states: self.max_states }
    }
}

#[derive(Args)]
struct SynthArgs {
    problem: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    encode: EncodeArgs,
    /// Also write the emitted SMT-LIB instance here.
    #[arg(long, value_name = "PATH")]
    dump_smt: Option<PathBuf>,
    /// Skip the explicit-state check of the result.
    #[arg(long)]
    no_verify: bool,
    /// Write the protocol document here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the verifier verdict here.
    #[arg(long, value_name = "PATH")]
    verdict: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    protocol: PathBuf,
    problem: PathBuf,
    /// Where to write the verdict with counterexamples on failure
    /// (default: next to the protocol, with a `.verdict.json` suffix).
    #[arg(long, value_name = "PATH")]
    verdict: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    problem: PathBuf,
    #[command(flatten)]
    encode: EncodeArgs,
    /// Output file (default: standard output).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Glob over entry names; a pattern without wildcards matches substrings.
    #[arg(long, value_name = "GLOB")]
    filter: Option<String>,
    /// Number of entries solved in parallel (default: logical cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, env = "STABSYNTH_CORPUS", value_name = "DIR")]
    corpus_dir: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    no_verify: bool,
    /// Directory receiving one protocol document per sat entry.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Write a JSON summary of the run here.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

/// An error with a stable machine-readable code.
#[derive(Debug)]
struct Coded {
    code: &'static str,
    message: String,
}

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for Coded {}

fn coded(code: &'static str, message: impl fmt::Display) -> anyhow::Error {
    Coded { code, message: message.to_string() }.into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a, cli.quiet),
        Command::Verify(a) => cmd_verify(a, cli.quiet),
        Command::DumpSmt(a) => cmd_dump_smt(a, cli.quiet),
        Command::Corpus(a) => cmd_corpus(a, cli.quiet),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match e.downcast_ref::<Coded>() {
                Some(c) => eprintln!("error[{}]: {}", c.code, c.message),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn load_problem(path: &Path) -> Result<SynthesisProblem> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_problem(&text).map_err(|e| coded(e.code(), format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn print_verdict(verdict: &Verdict, problem: &SynthesisProblem) {
    for c in &verdict.checks {
        if c.pass {
            outln!("  pass  {}", c.name);
            continue;
        }
        outln!(
            "  FAIL  {} [{}] {}",
            c.name,
            c.code.as_deref().unwrap_or("?"),
            c.detail.as_deref().unwrap_or("")
        );
        for step in &c.trace {
            let vals: Vec<String> = problem
                .topology
                .vars
                .iter()
                .zip(&step.values)
                .map(|(v, x)| format!("{}={x}", v.name))
                .collect();
            let by = if step.acting.is_empty() {
                String::new()
            } else {
                let ps: Vec<String> = step.acting.iter().map(|i| format!("p{i}")).collect();
                format!("  --{}-->", ps.join(","))
            };
            outln!("        ({}){by}", vals.join(", "));
        }
    }
}

fn verdict_json(verdict: &Verdict) -> String {
    serde_json::to_string_pretty(verdict).expect("verdicts serialize") + "\n"
}

fn cmd_synth(a: &SynthArgs, quiet: bool) -> Result<u8> {
    let problem = load_problem(&a.problem)?;
    let opts = SynthesisOptions { encoder: a.encode.options(), solver: a.solver.config(), skip_verify: a.no_verify };
    let mut dump_result = Ok(());
    let run = synthesize_with(&problem, &opts, |smt| {
        if let Some(path) = &a.dump_smt {
            dump_result = write_file(path, smt);
        }
    })
    .map_err(|e| coded(e.code(), e))?;
    dump_result?;
    if !quiet {
        eprintln!("{} constraints, solved in {:.2?}", run.constraint_count, run.solve_time);
    }
    match run.result {
        SynthesisResult::Unsat => {
            outln!("unsat");
            Ok(EXIT_UNSAT)
        }
        SynthesisResult::Unknown(reason) => {
            outln!("unknown ({reason})");
            Ok(EXIT_UNKNOWN)
        }
        SynthesisResult::Sat { protocol, verdict } => {
            outln!("sat");
            if let Some(path) = &a.out {
                write_file(path, &protocol_to_json(&protocol, &problem))?;
            }
            if !quiet {
                out!("{}", render(&protocol, &problem));
            }
            let Some(verdict) = verdict else { return Ok(EXIT_OK) };
            if let Some(path) = &a.verdict {
                write_file(path, &verdict_json(&verdict))?;
            }
            if !quiet || !verdict.pass {
                outln!("verification: {}", if verdict.pass { "pass" } else { "FAIL" });
                print_verdict(&verdict, &problem);
            }
            Ok(if verdict.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
    }
}

fn cmd_verify(a: &VerifyArgs, quiet: bool) -> Result<u8> {
    let problem = load_problem(&a.problem)?;
    let text = fs::read_to_string(&a.protocol).with_context(|| format!("cannot read {}", a.protocol.display()))?;
    let protocol =
        parse_protocol(&text, &problem).map_err(|e| coded(e.code(), format!("{}: {e}", a.protocol.display())))?;
    let verdict = verify(&protocol, &problem).map_err(|e| coded(e.code(), e))?;
    outln!("verification: {}", if verdict.pass { "pass" } else { "FAIL" });
    if !quiet || !verdict.pass {
        print_verdict(&verdict, &problem);
    }
    if verdict.pass {
        return Ok(EXIT_OK);
    }
    let path = a.verdict.clone().unwrap_or_else(|| a.protocol.with_extension("verdict.json"));
    write_file(&path, &verdict_json(&verdict))?;
    if !quiet {
        eprintln!("counterexamples written to {}", path.display());
    }
    Ok(EXIT_VERIFY_FAILED)
}

fn cmd_dump_smt(a: &DumpArgs, quiet: bool) -> Result<u8> {
    let problem = load_problem(&a.problem)?;
    let inst = build_instance_with(&problem, &a.encode.options()).map_err(|e| coded(e.code(), e))?;
    let text = emit_with_logic(&inst, &SolverConfig::default().logic);
    match &a.out {
        Some(path) => write_file(path, &text)?,
        None => out!("{text}"),
    }
    if !quiet {
        eprintln!(
            "{} symbols, {} constraints over {} states",
            inst.table.symbols.len(),
            inst.constraints.len(),
            inst.state_count
        );
    }
    Ok(EXIT_OK)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Expected {
    Sat,
    Unsat,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    name: String,
    file: String,
    expected: Expected,
    #[serde(default)]
    note: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize)]
struct EntryReport {
    name: String,
    expected: Expected,
    got: String,
    /// `None` when the entry was not sat or verification was skipped.
    verified: Option<bool>,
    ok: bool,
    seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn default_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn matches_filter(filter: Option<&str>, name: &str) -> bool {
    match filter {
        None | Some("") => true,
        Some(f) if f.contains(['*', '?', '[']) => glob::Pattern::new(f).is_ok_and(|p| p.matches(name)),
        Some(f) => name.contains(f),
    }
}

fn run_entry(entry: &ManifestEntry, dir: &Path, a: &CorpusArgs) -> EntryReport {
    let started = Instant::now();
    let mut report = EntryReport {
        name: entry.name.clone(),
        expected: entry.expected,
        got: "error".into(),
        verified: None,
        ok: false,
        seconds: 0.0,
        error: None,
        note: entry.note.clone(),
    };
    let outcome = (|| -> Result<()> {
        let problem = load_problem(&dir.join(&entry.file))?;
        let opts = SynthesisOptions {
            encoder: EncoderOptions::default(),
            solver: a.solver.config(),
            skip_verify: a.no_verify,
        };
        let run = synthesize_with(&problem, &opts, |_| {}).map_err(|e| coded(e.code(), e))?;
        report.got = run.result.verdict_str().into();
        if let SynthesisResult::Sat { protocol, verdict } = &run.result {
            report.verified = verdict.as_ref().map(|v| v.pass);
            if let Some(out) = &a.out {
                write_file(&out.join(format!("{}.protocol.json", entry.name)), &protocol_to_json(protocol, &problem))?;
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        report.error = Some(format!("{e:#}"));
    }
    let expected = match entry.expected {
        Expected::Sat => "sat",
        Expected::Unsat => "unsat",
    };
    report.ok = report.got == expected && report.verified != Some(false);
    report.seconds = started.elapsed().as_secs_f64();
    report
}

fn cmd_corpus(a: &CorpusArgs, quiet: bool) -> Result<u8> {
    let dir = a.corpus_dir.clone().unwrap_or_else(default_corpus_dir);
    let manifest_path = dir.join("manifest.json");
    let text =
        fs::read_to_string(&manifest_path).with_context(|| format!("cannot read {}", manifest_path.display()))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| coded("PARSE_ERROR", format!("{}: {e}", manifest_path.display())))?;
    let selected: Vec<&ManifestEntry> =
        manifest.entries.iter().filter(|e| matches_filter(a.filter.as_deref(), &e.name)).collect();
    if selected.is_empty() {
        return Err(coded("EMPTY_SELECTION", "no corpus entry matches the filter"));
    }
    if let Some(out) = &a.out {
        fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs.unwrap_or(0)).build()?;
    let reports: Vec<EntryReport> = pool.install(|| selected.par_iter().map(|e| run_entry(e, &dir, a)).collect());

    outln!("{:<28} {:<8} {:<8} {:<8} {:>9}  status", "entry", "expected", "got", "verify", "time");
    for r in &reports {
        let verify = match r.verified {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "-",
        };
        let expected = serde_json::to_value(r.expected).expect("serializes");
        outln!(
            "{:<28} {:<8} {:<8} {:<8} {:>8.2}s  {}",
            r.name,
            expected.as_str().unwrap_or("?"),
            r.got,
            verify,
            r.seconds,
            if r.ok { "ok" } else { "MISMATCH" }
        );
        if let (Some(err), false) = (&r.error, quiet) {
            outln!("    {err}");
        }
    }
    let failed = reports.iter().filter(|r| !r.ok).count();
    outln!("{} of {} entries match", reports.len() - failed, reports.len());
    if let Some(path) = &a.report {
        write_file(path, &(serde_json::to_string_pretty(&reports)? + "\n"))?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CORPUS_MISMATCH })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_semantics() {
        assert!(matches_filter(None, "anything"));
        assert!(matches_filter(Some("mis_ring"), "mis_ring_n3_async"));
        assert!(!matches_filter(Some("mis_ring"), "mis_uni_n3_async"));
        assert!(matches_filter(Some("grundy_*_sym"), "grundy_ring_n4_async_sym"));
        assert!(!matches_filter(Some("grundy_*_sym"), "grundy_ring_n4_async"));
    }
}
