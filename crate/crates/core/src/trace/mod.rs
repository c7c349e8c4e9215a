//! Step-trace text format, prompt rendering, step labeling and dataset
//! records.

mod codec;
mod dataset;
mod prompt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::Agent;
use crate::story::{Location, Name, Question, StoryBundle};

pub use codec::{parse_step, parse_trace, render_step, render_trace};
pub use dataset::{assemble_dataset, dataset_record, label_steps, CandidateTrace, DatasetRecord, LabeledStep};
pub use prompt::{render_prompt, template, ONE_SHOT_V1};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
    #[error("no story {story_id} with an order-{order} question")]
    OrphanTrace { story_id: u64, order: usize },
}

/// The closing line of a step: `A thinks B thinks the X is in [L]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Statement {
    Belief {
        chain: Vec<Agent>,
        object: Name,
        location: Location,
    },
    /// The step had no bracketed location; it always scores 0.
    Malformed,
}

impl Statement {
    pub fn location(&self) -> Option<&Location> {
        match self {
            Statement::Belief { location, .. } => Some(location),
            Statement::Malformed => None,
        }
    }

    pub fn for_question(question: &Question, location: Location) -> Self {
        Statement::Belief {
            chain: question.chain.clone(),
            object: question.object.clone(),
            location,
        }
    }

    pub fn text(&self) -> Option<String> {
        match self {
            Statement::Belief {
                chain,
                object,
                location,
            } => Some(crate::story::text::statement_text(chain, object, location)),
            Statement::Malformed => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// 1-based.
    pub index: usize,
    pub action_echo: String,
    pub rationale: String,
    pub statement: Statement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub final_answer: Location,
}

impl Trace {
    /// A trace stating `states[i]` after story line `i + 1`, echoing each line.
    pub fn from_states(bundle: &StoryBundle, question: &Question, states: &[Location], final_answer: Location) -> Self {
        let steps = states
            .iter()
            .enumerate()
            .map(|(i, loc)| {
                let rationale = match (i, states.get(i.wrapping_sub(1))) {
                    (0, _) => "Start of the story.",
                    (_, Some(prev)) if prev == loc => "No change.",
                    _ => "Belief updated.",
                };
                TraceStep {
                    index: i + 1,
                    action_echo: bundle.story.get(i).map(|a| a.text()).unwrap_or_default(),
                    rationale: rationale.to_string(),
                    statement: Statement::for_question(question, loc.clone()),
                }
            })
            .collect();
        Trace { steps, final_answer }
    }

    /// The gold trace for question `qi` of `bundle`, as trace text would carry it.
    pub fn gold(bundle: &StoryBundle, qi: usize) -> Self {
        let gold = &bundle.gold[qi];
        Trace::from_states(
            bundle,
            &bundle.questions[qi],
            &gold.states,
            Location::At(gold.final_answer.clone()),
        )
    }

    pub fn locations(&self) -> impl Iterator<Item = Option<&Location>> {
        self.steps.iter().map(|s| s.statement.location())
    }
}
