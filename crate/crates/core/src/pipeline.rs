//! End-to-end synthesis: encode, solve, decode, compact, verify.

use std::time::{Duration, Instant};

use crate::decoder::{decode, simplify_guards, DecodeError};
use crate::encoder::{build_instance_with, EncodeError, EncoderOptions};
use crate::problem::SynthesisProblem;
use crate::protocol::Protocol;
use crate::solver::{emit_with_logic, run_solver, SolverConfig, SolverOutcome};
use crate::verifier::{verify, Verdict, VerifyError};

#[derive(Clone, Debug, Default)]
pub struct SynthesisOptions {
    pub encoder: EncoderOptions,
    pub solver: SolverConfig,
    pub skip_verify: bool,
}

#[derive(Clone, Debug)]
pub enum SynthesisResult {
    Sat { protocol: Protocol, verdict: Option<Verdict> },
    Unsat,
    Unknown(String),
}

impl SynthesisResult {
    pub fn verdict_str(&self) -> &'static str {
        match self {
            SynthesisResult::Sat { .. } => "sat",
            SynthesisResult::Unsat => "unsat",
            SynthesisResult::Unknown(_) => "unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Run {
    /// The emitted SMT-LIB text.
    pub smt: String,
    pub constraint_count: usize,
    pub result: SynthesisResult,
    pub solve_time: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("solver failed: {0}")]
    Solver(String),
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Encode(e) => e.code(),
            PipelineError::Decode(e) => e.code(),
            PipelineError::Verify(e) => e.code(),
            PipelineError::Solver(_) => "SOLVER_ERROR",
        }
    }
}

/// Encodes `problem` and hands the instance to the configured solver. The
/// `on_smt` callback sees the emitted text before solving starts.
pub fn synthesize_with(
    problem: &SynthesisProblem,
    opts: &SynthesisOptions,
    on_smt: impl FnOnce(&str),
) -> Result<Run, PipelineError> {
    let inst = build_instance_with(problem, &opts.encoder)?;
    let smt = emit_with_logic(&inst, &opts.solver.logic);
    on_smt(&smt);
    let started = Instant::now();
    let outcome = run_solver(&opts.solver, &smt, &inst.table);
    let solve_time = started.elapsed();
    log::info!("solver answered {} after {:.2?}", outcome.verdict(), solve_time);
    let result = match outcome {
        SolverOutcome::Sat(w) => {
            let raw = decode(&w, problem)?;
            let protocol = simplify_guards(&raw, problem);
            let verdict = if opts.skip_verify { None } else { Some(verify(&protocol, problem)?) };
            SynthesisResult::Sat { protocol, verdict }
        }
        SolverOutcome::Unsat => SynthesisResult::Unsat,
        SolverOutcome::Unknown(reason) => SynthesisResult::Unknown(reason),
        SolverOutcome::SolverError(msg) => return Err(PipelineError::Solver(msg)),
    };
    Ok(Run { smt, constraint_count: inst.constraints.len(), result, solve_time })
}

pub fn synthesize(problem: &SynthesisProblem, opts: &SynthesisOptions) -> Result<Run, PipelineError> {
    synthesize_with(problem, opts, |_| {})
}
