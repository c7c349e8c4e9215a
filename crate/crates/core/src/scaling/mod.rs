//! Inference-time scaling: best-of-N reranking (vanilla and answer-weighted,
//! four aggregation rules), the majority-vote baseline, and beam search,
//! over pluggable candidate generators.

mod beam;
mod bon;
mod generator;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::story::{GoldTrace, Location, Name, Question, StoryBundle};
use crate::verifier::{ScoreContext, StepScore, VerifierError};

pub use beam::{beam_search, run_beam, BeamConfig};
pub use bon::{aggregate, majority, run_bon, score_candidates, select, ScoredCandidate};
pub use generator::{CandidateGenerator, RemoteGenerator, RemoteGeneratorConfig, ScriptedGenerator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("cannot aggregate an empty score list")]
    EmptyTrace,
    #[error("generator produced {got} of {wanted} candidates{}", reason.as_deref().map(|r| format!(": {r}")).unwrap_or_default())]
    GeneratorFailure {
        wanted: usize,
        got: usize,
        reason: Option<String>,
    },
    #[error("no beam path reached a final answer")]
    DepthExhausted,
    #[error("invalid scaling parameters: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationRule {
    Last,
    Min,
    Avg,
    Prod,
}

impl AggregationRule {
    pub const ALL: [AggregationRule; 4] = [
        AggregationRule::Last,
        AggregationRule::Min,
        AggregationRule::Avg,
        AggregationRule::Prod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregationRule::Last => "last",
            AggregationRule::Min => "min",
            AggregationRule::Avg => "avg",
            AggregationRule::Prod => "prod",
        }
    }
}

impl std::str::FromStr for AggregationRule {
    type Err = ScalingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AggregationRule::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ScalingError::InvalidConfig(format!("unknown aggregation rule `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ranking {
    /// Highest aggregate trace wins.
    Vanilla,
    /// Answer with the highest summed aggregate wins.
    Weighted,
}

impl std::str::FromStr for Ranking {
    type Err = ScalingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" => Ok(Ranking::Vanilla),
            "weighted" => Ok(Ranking::Weighted),
            _ => Err(ScalingError::InvalidConfig(format!("unknown ranking `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    VanillaBoN,
    WeightedBoN,
    Majority,
    Beam,
}

/// Outcome of one selection procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection<T> {
    pub answer: Location,
    pub method: Method,
    pub rule: Option<AggregationRule>,
    /// Per-candidate aggregate (vanilla and weighted), final-step score (beam)
    /// or 1 per vote (majority), in candidate order.
    pub scores: Vec<T>,
    /// Summed score per answer.
    pub groups: BTreeMap<Location, T>,
    /// Index of the winning candidate, when a single one wins.
    pub chosen: Option<usize>,
}

/// One question to answer: the story, the question and its gold trace.
#[derive(Debug, Clone)]
pub struct Problem {
    pub story_id: u64,
    /// Numbered story lines.
    pub story_lines: Arc<[String]>,
    pub question: Question,
    pub gold: GoldTrace,
    /// Answer candidates.
    pub containers: Arc<[Name]>,
    /// Source bundle, needed to render prompts for remote generation.
    pub bundle: Option<Arc<StoryBundle>>,
}

impl Problem {
    pub fn from_bundle(bundle: Arc<StoryBundle>, qi: usize) -> Self {
        Problem {
            story_id: bundle.id,
            story_lines: bundle.story_lines().into(),
            question: bundle.questions[qi].clone(),
            gold: bundle.gold[qi].clone(),
            containers: bundle.containers.clone().into(),
            bundle: Some(bundle),
        }
    }

    /// A story-free problem with `k` steps and `l` answer candidates
    /// `c0..c{l-1}`; the gold state cycles through the candidates and the
    /// final answer is the last state.
    pub fn synthetic(story_id: u64, k: usize, l: usize) -> Self {
        let containers: Arc<[Name]> = (0..l).map(|i| Name::from(format!("c{i}"))).collect();
        let states: Vec<Location> = (0..k).map(|i| Location::At(containers[i % l].clone())).collect();
        let final_answer = containers[(k.max(1) - 1) % l].clone();
        Problem {
            story_id,
            story_lines: Arc::from(Vec::new()),
            question: Question::new(Vec::new(), "x"),
            gold: GoldTrace { states, final_answer },
            containers,
            bundle: None,
        }
    }

    pub fn num_steps(&self) -> usize {
        self.gold.states.len()
    }

    pub fn gold_answer(&self) -> Location {
        Location::At(self.gold.final_answer.clone())
    }

    /// Story line `i` (0-based) without its number.
    pub fn action_text(&self, i: usize) -> &str {
        self.story_lines
            .get(i)
            .map(|l| l.split_once(' ').map_or(l.as_str(), |(_, rest)| rest))
            .unwrap_or("")
    }

    pub fn score_context(&self) -> ScoreContext<'_> {
        ScoreContext::new(self.story_id, &self.story_lines, &self.question, &self.gold)
    }
}

pub(crate) fn to_values<T: Scalar>(scores: &[StepScore<T>]) -> impl Iterator<Item = T> + '_ {
    scores.iter().map(|s| s.value())
}
