use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::story::{GoldTrace, Location, Name, StoryBundle};

use super::{Trace, TraceError, TraceStep};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledStep {
    pub step: TraceStep,
    pub label: bool,
}

/// Step `i` is correct iff it states gold state `i`. Steps past the end of
/// the gold trace are incorrect; gold states the trace never reached get no
/// label.
pub fn label_steps(trace: &Trace, gold: &GoldTrace) -> Vec<LabeledStep> {
    trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, step)| LabeledStep {
            step: step.clone(),
            label: step.statement.location().is_some_and(|l| gold.states.get(i) == Some(l)),
        })
        .collect()
}

/// A candidate trace keyed to a story and the question of a given order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub story_id: u64,
    pub order: usize,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub story_id: u64,
    pub story_lines: Vec<String>,
    pub question: String,
    pub order: usize,
    pub gold_states: Vec<Location>,
    pub candidate_steps: Vec<TraceStep>,
    pub step_labels: Vec<u8>,
    pub final_answer: Location,
    pub gold_answer: Name,
}

pub fn dataset_record(bundle: &StoryBundle, qi: usize, trace: Trace) -> DatasetRecord {
    let question = &bundle.questions[qi];
    let gold = &bundle.gold[qi];
    let step_labels = label_steps(&trace, gold).iter().map(|l| u8::from(l.label)).collect();
    DatasetRecord {
        story_id: bundle.id,
        story_lines: bundle.story_lines(),
        question: question.text(),
        order: question.order,
        gold_states: gold.states.clone(),
        candidate_steps: trace.steps,
        step_labels,
        final_answer: trace.final_answer,
        gold_answer: gold.final_answer.clone(),
    }
}

/// One record per candidate, in candidate order.
pub fn assemble_dataset<'a, I>(
    bundles: &'a [StoryBundle],
    candidates: I,
) -> impl Iterator<Item = Result<DatasetRecord, TraceError>> + 'a
where
    I: IntoIterator<Item = CandidateTrace>,
    I::IntoIter: 'a,
{
    let by_id: HashMap<u64, &StoryBundle> = bundles.iter().map(|b| (b.id, b)).collect();
    candidates.into_iter().map(move |c| {
        let orphan = TraceError::OrphanTrace {
            story_id: c.story_id,
            order: c.order,
        };
        let bundle = by_id.get(&c.story_id).ok_or(orphan.clone())?;
        let qi = bundle.questions.iter().position(|q| q.order == c.order).ok_or(orphan)?;
        Ok(dataset_record(bundle, qi, c.trace))
    })
}
