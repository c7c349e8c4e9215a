use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::story::Location;
use crate::trace::{Trace, TraceStep};
use crate::verifier::Verifier;

use super::bon::group_sums;
use super::{CandidateGenerator, Method, Problem, ScalingError, Selection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamConfig {
    /// Beams kept after each step.
    pub k: usize,
    /// Candidates proposed per beam per step.
    pub b: usize,
    /// Defaults to one step per story line.
    #[serde(default)]
    pub max_depth: Option<usize>,
}

impl BeamConfig {
    pub fn new(k: usize, b: usize) -> Self {
        BeamConfig { k, b, max_depth: None }
    }
}

struct Path<T> {
    steps: Vec<TraceStep>,
    score: T,
}

/// Keeps the `k` best paths by newest-step score; the sort is stable, so
/// ties keep the earlier path.
fn prune<T: Scalar>(mut paths: Vec<Path<T>>, k: usize) -> Vec<Path<T>> {
    paths.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
    paths.truncate(k);
    paths
}

/// Step-level beam search. Every path is ranked only by the verifier score
/// of its most recent step. Returns the selection and the winning path as
/// a trace.
pub fn beam_search<T: Scalar, G: CandidateGenerator + ?Sized>(
    problem: &Problem,
    generator: &G,
    verifier: &Verifier,
    cfg: BeamConfig,
) -> Result<(Selection<T>, Trace), ScalingError> {
    if cfg.k == 0 || cfg.b == 0 {
        return Err(ScalingError::InvalidConfig("beam width k and expansion b must be at least 1".into()));
    }
    let depth = cfg.max_depth.unwrap_or(problem.num_steps());
    if depth == 0 {
        return Err(ScalingError::DepthExhausted);
    }
    let ctx = problem.score_context();

    let first = generator.propose_steps(problem, &[], 0, cfg.k)?;
    if first.is_empty() {
        return Err(ScalingError::GeneratorFailure {
            wanted: cfg.k,
            got: 0,
            reason: Some("no first-step candidates".into()),
        });
    }
    let mut beams = Vec::with_capacity(first.len());
    for (i, step) in first.into_iter().enumerate() {
        let score = verifier.score_step::<T>(&ctx.with_trace(i as u64), &[], &step, 0)?.value();
        beams.push(Path { steps: vec![step], score });
    }
    beams = prune(beams, cfg.k);

    for d in 1..depth {
        let mut expanded = Vec::with_capacity(beams.len() * cfg.b);
        for (bi, beam) in beams.iter().enumerate() {
            let path_id = ((d as u64) << 32) | bi as u64;
            let proposals = generator.propose_steps(problem, &beam.steps, path_id, cfg.b)?;
            for (j, step) in proposals.into_iter().take(cfg.b).enumerate() {
                let tctx = ctx.with_trace((bi * cfg.b + j) as u64);
                let score = verifier.score_step::<T>(&tctx, &beam.steps, &step, d)?.value();
                let mut steps = beam.steps.clone();
                steps.push(step);
                expanded.push(Path { steps, score });
            }
        }
        if expanded.is_empty() {
            return Err(ScalingError::GeneratorFailure {
                wanted: cfg.b,
                got: 0,
                reason: Some(format!("no candidates at step {}", d + 1)),
            });
        }
        beams = prune(expanded, cfg.k);
    }

    // best surviving path that actually commits to a container
    let chosen = beams
        .iter()
        .position(|p| p.steps.last().and_then(|s| s.statement.location()).is_some_and(|l| !l.is_null()))
        .ok_or(ScalingError::DepthExhausted)?;
    let answer = beams[chosen].steps.last().and_then(|s| s.statement.location()).cloned().unwrap_or(Location::Null);
    let groups = group_sums(beams.iter().filter_map(|p| {
        let loc = p.steps.last()?.statement.location()?.clone();
        Some((loc, p.score))
    }));
    let selection = Selection {
        answer: answer.clone(),
        method: Method::Beam,
        rule: None,
        scores: beams.iter().map(|p| p.score).collect(),
        groups,
        chosen: Some(chosen),
    };
    let trace = Trace {
        steps: beams.swap_remove(chosen).steps,
        final_answer: answer,
    };
    Ok((selection, trace))
}

pub fn run_beam<T: Scalar, G: CandidateGenerator + ?Sized>(
    problem: &Problem,
    generator: &G,
    verifier: &Verifier,
    cfg: BeamConfig,
) -> Result<Selection<T>, ScalingError> {
    beam_search(problem, generator, verifier, cfg).map(|(s, _)| s)
}
