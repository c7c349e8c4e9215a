//! Event models, the product update, and model-size control.

mod bisim;
mod prune;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{Agent, EpistemicModel, Formula, LogicError, PointedEpistemicModel, Prop, WorldId};

pub use bisim::bisim_minimize;
pub use prune::prune_reachable;

pub type EventId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("precondition of the actual event is false at the actual world")]
    PreconditionFailed,
    #[error("event model has no indistinguishability relation for agent `{0}`")]
    MissingAgent(String),
    #[error("postcondition sets `{0}` both true and false")]
    ContradictoryLiteral(String),
    #[error("postcondition of event {0} sets `{1}` both true and false")]
    ContradictoryPost(EventId, String),
    #[error("event {event} out of range (model has {events} events)")]
    EventOutOfRange { event: EventId, events: usize },
    #[error("event model must have at least one event")]
    NoEvents,
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// A conjunction of signed literals: the facts an event makes true or false.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostCondition {
    set_true: BTreeSet<Prop>,
    set_false: BTreeSet<Prop>,
}

impl PostCondition {
    pub fn new(
        set_true: impl IntoIterator<Item = Prop>,
        set_false: impl IntoIterator<Item = Prop>,
    ) -> Result<Self, EventError> {
        let post = PostCondition {
            set_true: set_true.into_iter().collect(),
            set_false: set_false.into_iter().collect(),
        };
        if let Some(p) = post.set_true.intersection(&post.set_false).next() {
            return Err(EventError::ContradictoryLiteral(p.to_string()));
        }
        Ok(post)
    }

    pub fn identity() -> Self {
        PostCondition::default()
    }

    /// `post ⊨ p`.
    pub fn entails(&self, p: &Prop) -> bool {
        self.set_true.contains(p)
    }

    /// `post ⊨ ¬p`.
    pub fn entails_not(&self, p: &Prop) -> bool {
        self.set_false.contains(p)
    }

    pub fn set_true(&self) -> &BTreeSet<Prop> {
        &self.set_true
    }

    pub fn set_false(&self) -> &BTreeSet<Prop> {
        &self.set_false
    }
}

/// `(E, Q, pre, post)` over dense event ids. A `None` precondition is `⊤`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventModel {
    indist: BTreeMap<Agent, Vec<Vec<EventId>>>,
    pre: Vec<Option<Formula>>,
    post: Vec<PostCondition>,
}

impl EventModel {
    /// Events with the given pre/postconditions and empty `Q_a` for each agent.
    pub fn new(
        agents: impl IntoIterator<Item = Agent>,
        events: Vec<(Option<Formula>, PostCondition)>,
    ) -> Result<Self, EventError> {
        if events.is_empty() {
            return Err(EventError::NoEvents);
        }
        let n = events.len();
        let (pre, post): (Vec<_>, Vec<_>) = events.into_iter().unzip();
        for (e, p) in post.iter().enumerate() {
            if let Some(prop) = p.set_true.intersection(&p.set_false).next() {
                return Err(EventError::ContradictoryPost(e, prop.to_string()));
            }
        }
        Ok(EventModel {
            indist: agents.into_iter().map(|a| (a, vec![Vec::new(); n])).collect(),
            pre,
            post,
        })
    }

    /// A single event observed by every agent.
    pub fn public(
        agents: impl IntoIterator<Item = Agent>,
        pre: Option<Formula>,
        post: PostCondition,
    ) -> Result<Self, EventError> {
        let mut m = EventModel::new(agents, vec![(pre, post)])?;
        for q in m.indist.values_mut() {
            q[0].push(0);
        }
        Ok(m)
    }

    /// The public event with precondition `⊤` and no postcondition.
    pub fn identity(agents: impl IntoIterator<Item = Agent>) -> Self {
        EventModel::public(agents, None, PostCondition::identity()).expect("one event, empty post")
    }

    pub fn num_events(&self) -> usize {
        self.pre.len()
    }

    pub fn add_indist(&mut self, agent: &Agent, from: EventId, to: EventId) -> Result<(), EventError> {
        let n = self.num_events();
        for e in [from, to] {
            if e >= n {
                return Err(EventError::EventOutOfRange { event: e, events: n });
            }
        }
        let q = self
            .indist
            .get_mut(agent)
            .ok_or_else(|| EventError::MissingAgent(agent.to_string()))?;
        if let Err(pos) = q[from].binary_search(&to) {
            q[from].insert(pos, to);
        }
        Ok(())
    }

    pub fn pre(&self, e: EventId) -> Option<&Formula> {
        self.pre[e].as_ref()
    }

    pub fn post(&self, e: EventId) -> &PostCondition {
        &self.post[e]
    }

    pub fn indist(&self, agent: &Agent, e: EventId) -> Option<&[EventId]> {
        self.indist.get(agent).map(|q| q[e].as_slice())
    }
}

/// An action: an event model with the event that actually occurs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointedEventModel {
    model: EventModel,
    actual: EventId,
}

impl PointedEventModel {
    pub fn new(model: EventModel, actual: EventId) -> Result<Self, EventError> {
        if actual >= model.num_events() {
            return Err(EventError::EventOutOfRange {
                event: actual,
                events: model.num_events(),
            });
        }
        Ok(PointedEventModel { model, actual })
    }

    pub fn model(&self) -> &EventModel {
        &self.model
    }

    pub fn actual(&self) -> EventId {
        self.actual
    }
}

/// The updated state plus the `(old world, event)` pair each new world came
/// from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateResult {
    pub state: PointedEpistemicModel,
    pub world_origin: Vec<(WorldId, EventId)>,
}

fn pre_holds(model: &EpistemicModel, w: WorldId, pre: Option<&Formula>) -> Result<bool, LogicError> {
    match pre {
        None => Ok(true),
        Some(phi) => model.satisfies(w, phi),
    }
}

/// Product update `(M, w) ⊗ (ε, e)`.
///
/// New worlds are the pairs `(w', e')` whose precondition holds, numbered in
/// lexicographic `(w', e')` order. `R'_a` relates pairs whose components are
/// related by `R_a` and `Q_a`. A proposition holds at `(w', e')` if the
/// postcondition sets it, or it held at `w'` and the postcondition does not
/// clear it.
pub fn product_update(
    state: &PointedEpistemicModel,
    action: &PointedEventModel,
) -> Result<UpdateResult, EventError> {
    let m = state.model();
    let ev = action.model();
    for agent in m.agents() {
        if !ev.indist.contains_key(agent) {
            return Err(EventError::MissingAgent(agent.to_string()));
        }
    }
    if !pre_holds(m, state.actual(), ev.pre(action.actual()))? {
        return Err(EventError::PreconditionFailed);
    }

    let n_events = ev.num_events();
    // index[w * n_events + e] = new id of (w, e), if it survives
    let mut index = vec![usize::MAX; m.num_worlds() * n_events];
    let mut origin = Vec::new();
    for w in 0..m.num_worlds() {
        for e in 0..n_events {
            if pre_holds(m, w, ev.pre(e))? {
                index[w * n_events + e] = origin.len();
                origin.push((w, e));
            }
        }
    }

    let relations: BTreeMap<Agent, Vec<Vec<WorldId>>> = m
        .relation_lists()
        .iter()
        .map(|(agent, succ)| {
            let q = &ev.indist[agent];
            let lists = origin
                .iter()
                .map(|&(w, e)| {
                    let mut out = Vec::new();
                    for &v in &succ[w] {
                        for &f in &q[e] {
                            let id = index[v * n_events + f];
                            if id != usize::MAX {
                                out.push(id);
                            }
                        }
                    }
                    out
                })
                .collect();
            (agent.clone(), lists)
        })
        .collect();

    let mut props: BTreeSet<&Prop> = m.valuation_sets().keys().collect();
    for post in &ev.post {
        props.extend(post.set_true.iter());
    }
    let mut valuation = BTreeMap::new();
    for p in props {
        let worlds: BTreeSet<WorldId> = origin
            .iter()
            .enumerate()
            .filter(|(_, &(w, e))| {
                let post = ev.post(e);
                post.entails(p) || (m.holds(p, w) && !post.entails_not(p))
            })
            .map(|(id, _)| id)
            .collect();
        if !worlds.is_empty() {
            valuation.insert(p.clone(), worlds);
        }
    }

    let actual = index[state.actual() * n_events + action.actual()];
    let model = EpistemicModel::from_parts(origin.len(), relations, valuation)?;
    Ok(UpdateResult {
        state: PointedEpistemicModel::new(model, actual)?,
        world_origin: origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{chain_formula, eval};

    fn a(s: &str) -> Agent {
        Agent::new(s)
    }

    fn p(s: &str) -> Prop {
        Prop::new(s, &[])
    }

    #[test]
    fn identity_action_preserves_model() {
        let agents = [a("x"), a("y")];
        let mut m = EpistemicModel::new(3, agents.clone());
        m.set_true(p("p"), 1).unwrap();
        m.add_edge(&agents[0], 0, 1).unwrap();
        m.add_edge(&agents[1], 1, 2).unwrap();
        m.add_edge(&agents[1], 2, 2).unwrap();
        let s = PointedEpistemicModel::new(m, 0).unwrap();
        let act = PointedEventModel::new(EventModel::identity(agents), 0).unwrap();
        let out = product_update(&s, &act).unwrap();
        assert_eq!(out.state, s);
        assert_eq!(out.world_origin, vec![(0, 0), (1, 0), (2, 0)]);
    }

    #[test]
    fn public_announcement_eliminates_worlds() {
        // {w: p, v: ¬p}, R_a total; announce p.
        let ag = a("a");
        let mut m = EpistemicModel::new(2, [ag.clone()]);
        m.set_true(p("p"), 0).unwrap();
        for w in 0..2 {
            for v in 0..2 {
                m.add_edge(&ag, w, v).unwrap();
            }
        }
        let s = PointedEpistemicModel::new(m, 0).unwrap();
        let believes_p = Formula::believes(ag.clone(), Formula::atom(p("p")));
        assert!(!eval(&s, &believes_p).unwrap());

        let ev = EventModel::public([ag.clone()], Some(Formula::atom(p("p"))), PostCondition::identity()).unwrap();
        let out = product_update(&s, &PointedEventModel::new(ev, 0).unwrap()).unwrap();
        assert_eq!(out.state.model().num_worlds(), 1);
        assert_eq!(out.world_origin, vec![(0, 0)]);
        assert!(eval(&out.state, &believes_p).unwrap());
    }

    #[test]
    fn precondition_failure_is_reported() {
        let ag = a("a");
        let s = PointedEpistemicModel::new(EpistemicModel::singleton([ag.clone()], []), 0).unwrap();
        let ev = EventModel::public([ag], Some(Formula::atom(p("p"))), PostCondition::identity()).unwrap();
        let err = product_update(&s, &PointedEventModel::new(ev, 0).unwrap()).unwrap_err();
        assert_eq!(err, EventError::PreconditionFailed);
    }

    #[test]
    fn missing_agent_relation_is_reported() {
        let s = PointedEpistemicModel::new(EpistemicModel::singleton([a("a"), a("b")], []), 0).unwrap();
        let ev = EventModel::identity([a("a")]);
        let err = product_update(&s, &PointedEventModel::new(ev, 0).unwrap()).unwrap_err();
        assert_eq!(err, EventError::MissingAgent("b".into()));
    }

    #[test]
    fn contradictory_post_rejected() {
        assert!(PostCondition::new([p("p")], [p("p")]).is_err());
    }

    #[test]
    fn private_move_leaves_absent_agent_behind() {
        // State 4: one table-world, Mary and Alice both see it.
        let (mary, alice) = (a("Mary"), a("Alice"));
        let agents = [mary.clone(), alice.clone()];
        let table = Prop::at("chocolate", "table");
        let cupboard = Prop::at("chocolate", "cupboard");
        let s4 = PointedEpistemicModel::new(EpistemicModel::singleton(agents.clone(), [table.clone()]), 0).unwrap();

        // Action 5: Mary exits, public, facts unchanged.
        let e5 = EventModel::public(agents.clone(), None, PostCondition::identity()).unwrap();
        let s5 = product_update(&s4, &PointedEventModel::new(e5, 0).unwrap()).unwrap().state;

        // Action 6: Alice moves it to the cupboard; Mary thinks nothing happened.
        let post = PostCondition::new([cupboard.clone()], [table.clone()]).unwrap();
        let mut e6 = EventModel::new(agents, vec![(None, post), (None, PostCondition::identity())]).unwrap();
        e6.add_indist(&alice, 0, 0).unwrap();
        e6.add_indist(&alice, 1, 1).unwrap();
        e6.add_indist(&mary, 0, 1).unwrap();
        e6.add_indist(&mary, 1, 1).unwrap();
        let out = product_update(&s5, &PointedEventModel::new(e6, 0).unwrap()).unwrap();
        let s6 = &out.state;

        assert!(eval(s6, &Formula::atom(cupboard)).unwrap());
        let phi = chain_formula(&[mary.clone(), alice.clone()], "chocolate", "table").unwrap();
        assert!(eval(s6, &phi).unwrap());
        let alice_cupboard = chain_formula(&[alice], "chocolate", "cupboard").unwrap();
        assert!(eval(s6, &alice_cupboard).unwrap());
        // Mary's relation does not reach the actual world.
        assert!(!s6.model().successors(&mary, s6.actual()).unwrap().contains(&s6.actual()));
    }
}
