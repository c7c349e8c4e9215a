//! Compiles physical story actions to event models and folds them through
//! the product update, giving a belief-tracking path that is independent of
//! the chain rules in `gold`.

use std::collections::BTreeMap;

use crate::event::{bisim_minimize, prune_reachable, product_update, EventModel, PointedEventModel, PostCondition};
use crate::logic::{chain_formula, eval, Agent, EpistemicModel, Formula, PointedEpistemicModel, Prop};

use super::{ActionKind, Location, Name, Question, StoryAction, StoryBundle, StoryError};

#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    /// Quotient by bisimulation after every update.
    pub minimize: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { minimize: true }
    }
}

/// Event model for one physical action.
///
/// A move in room `r` has an acting event and a skip event; agents in `r`
/// tell them apart, everyone else takes the skip event for what happened.
/// Entering, exiting and placing the object are public single-event
/// updates; no-ops and distractors are the identity.
pub fn compile_physical_action(
    action: &StoryAction,
    presence: &BTreeMap<Agent, Option<Name>>,
    object_location: Option<&Name>,
) -> Result<PointedEventModel, StoryError> {
    let agents = presence.keys().cloned();
    let model = match &action.kind {
        ActionKind::Noop { .. } | ActionKind::Distractor { .. } => EventModel::identity(agents),
        ActionKind::EnterAll { agents: who, room } => {
            let post = PostCondition::new(who.iter().map(|a| Prop::present(a, room)), [])?;
            EventModel::public(agents, None, post)?
        }
        ActionKind::Exit { actor, room } => {
            let post = PostCondition::new([], [Prop::present(actor, room)])?;
            EventModel::public(agents, None, post)?
        }
        ActionKind::ObjectAt { object, container } => {
            let cleared = object_location
                .filter(|old| *old != container)
                .map(|old| Prop::at(object, old));
            let post = PostCondition::new([Prop::at(object, container)], cleared)?;
            EventModel::public(agents, None, post)?
        }
        ActionKind::Move {
            actor,
            object,
            container,
        } => {
            let room = presence
                .get(actor)
                .cloned()
                .flatten()
                .ok_or_else(|| StoryError::ActorAbsent(actor.to_string(), action.index))?;
            let current = object_location.ok_or(StoryError::NoObjectLocation(action.index))?;
            let pre = Formula::atom(Prop::at(object, current));
            let post = PostCondition::new([Prop::at(object, container)], [Prop::at(object, current)])?;
            let mut m = EventModel::new(agents, vec![(Some(pre), post), (None, PostCondition::identity())])?;
            for (agent, at) in presence {
                if at.as_ref() == Some(&room) {
                    m.add_indist(agent, 0, 0)?;
                } else {
                    m.add_indist(agent, 0, 1)?;
                }
                m.add_indist(agent, 1, 1)?;
            }
            m
        }
        ActionKind::PublicClaim { .. } | ActionKind::PrivateTell { .. } => {
            return Err(StoryError::UnsupportedAction {
                index: action.index,
                kind: action.kind.tag(),
            })
        }
    };
    Ok(PointedEventModel::new(model, 0)?)
}

/// The unique container `l` with `state ⊨ chain_formula(chain, object, l)`,
/// `Null` if there is none.
fn resolve(
    state: &PointedEpistemicModel,
    question: &Question,
    containers: &[Name],
    index: usize,
) -> Result<Location, StoryError> {
    let mut hits = Vec::new();
    for c in containers {
        if eval(state, &chain_formula(&question.chain, &question.object, c)?)? {
            hits.push(c);
        }
    }
    match hits.as_slice() {
        [] => Ok(Location::Null),
        [one] => Ok(Location::At((*one).clone())),
        many => Err(StoryError::AmbiguousBelief {
            index,
            count: many.len(),
        }),
    }
}

/// Per-line chain states computed by product updates from a single world in
/// which everyone sees everyone. Worlds beyond the question's belief order
/// are pruned after every update.
pub fn kernel_states(bundle: &StoryBundle, question: &Question, opts: KernelOptions) -> Result<Vec<Location>, StoryError> {
    if let Some(a) = bundle.story.iter().find(|a| a.kind.is_communication()) {
        return Err(StoryError::UnsupportedAction {
            index: a.index,
            kind: a.kind.tag(),
        });
    }
    for agent in &question.chain {
        if !bundle.agents.contains(agent) {
            return Err(StoryError::UnknownAgent(agent.to_string()));
        }
    }
    let model = EpistemicModel::singleton(bundle.agents.iter().cloned(), []);
    let mut state = PointedEpistemicModel::new(model, 0)?;
    let mut object_location: Option<Name> = None;
    let mut out = Vec::with_capacity(bundle.story.len());
    let empty = BTreeMap::new();
    for (i, action) in bundle.story.iter().enumerate() {
        let presence = bundle.presence_log.get(i).unwrap_or(&empty);
        let event = compile_physical_action(action, presence, object_location.as_ref())?;
        state = product_update(&state, &event)?.state;
        state = prune_reachable(&state, question.order);
        if opts.minimize {
            state = bisim_minimize(&state);
        }
        match &action.kind {
            ActionKind::ObjectAt { object, container } | ActionKind::Move { object, container, .. }
                if *object == question.object =>
            {
                object_location = Some(container.clone());
            }
            _ => {}
        }
        out.push(resolve(&state, question, &bundle.containers, action.index)?);
    }
    Ok(out)
}

/// Final answer to `question` according to the DEL kernel.
pub fn kernel_check(bundle: &StoryBundle, question: &Question) -> Result<Name, StoryError> {
    let states = kernel_states(bundle, question, KernelOptions::default())?;
    match states.last() {
        Some(Location::At(c)) => Ok(c.clone()),
        _ => Err(StoryError::AmbiguousBelief {
            index: bundle.story.len(),
            count: 0,
        }),
    }
}
