use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Agent, Formula, LogicError, Prop};

pub type WorldId = usize;

/// A Kripke structure `(W, R, V)` over dense world ids `0..worlds`.
///
/// Relations are stored as sorted successor lists. No frame conditions are
/// imposed: an agent may have no successors at a world, or may not consider
/// the world it is in possible at all (which is how false beliefs arise).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpistemicModel {
    worlds: usize,
    relations: BTreeMap<Agent, Vec<Vec<WorldId>>>,
    valuation: BTreeMap<Prop, BTreeSet<WorldId>>,
}

impl EpistemicModel {
    /// A model with `worlds` worlds, empty relations for each agent and an
    /// empty valuation.
    pub fn new(worlds: usize, agents: impl IntoIterator<Item = Agent>) -> Self {
        let relations = agents
            .into_iter()
            .map(|a| (a, vec![Vec::new(); worlds]))
            .collect();
        EpistemicModel {
            worlds,
            relations,
            valuation: BTreeMap::new(),
        }
    }

    /// A single world where every agent considers exactly that world possible.
    pub fn singleton(agents: impl IntoIterator<Item = Agent>, facts: impl IntoIterator<Item = Prop>) -> Self {
        let mut m = EpistemicModel::new(1, agents);
        for succ in m.relations.values_mut() {
            succ[0].push(0);
        }
        for p in facts {
            m.valuation.entry(p).or_default().insert(0);
        }
        m
    }

    pub fn num_worlds(&self) -> usize {
        self.worlds
    }

    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.relations.keys()
    }

    pub fn has_agent(&self, agent: &Agent) -> bool {
        self.relations.contains_key(agent)
    }

    fn check_world(&self, w: WorldId) -> Result<(), LogicError> {
        if w < self.worlds {
            Ok(())
        } else {
            Err(LogicError::WorldOutOfRange {
                world: w,
                worlds: self.worlds,
            })
        }
    }

    pub fn add_edge(&mut self, agent: &Agent, from: WorldId, to: WorldId) -> Result<(), LogicError> {
        self.check_world(from)?;
        self.check_world(to)?;
        let succ = self
            .relations
            .get_mut(agent)
            .ok_or_else(|| LogicError::UnknownAgent(agent.to_string()))?;
        if let Err(pos) = succ[from].binary_search(&to) {
            succ[from].insert(pos, to);
        }
        Ok(())
    }

    pub fn set_true(&mut self, prop: Prop, world: WorldId) -> Result<(), LogicError> {
        self.check_world(world)?;
        self.valuation.entry(prop).or_default().insert(world);
        Ok(())
    }

    /// Sorted `R_a` successors of `w`.
    pub fn successors(&self, agent: &Agent, w: WorldId) -> Result<&[WorldId], LogicError> {
        self.check_world(w)?;
        self.relations
            .get(agent)
            .map(|succ| succ[w].as_slice())
            .ok_or_else(|| LogicError::UnknownAgent(agent.to_string()))
    }

    pub fn holds(&self, prop: &Prop, w: WorldId) -> bool {
        self.valuation.get(prop).is_some_and(|ws| ws.contains(&w))
    }

    /// Propositions that are true somewhere in the model.
    pub fn props(&self) -> impl Iterator<Item = &Prop> {
        self.valuation.iter().filter(|(_, ws)| !ws.is_empty()).map(|(p, _)| p)
    }

    /// Propositions true at `w`, sorted.
    pub fn facts_at(&self, w: WorldId) -> Vec<&Prop> {
        self.valuation
            .iter()
            .filter(|(_, ws)| ws.contains(&w))
            .map(|(p, _)| p)
            .collect()
    }

    pub(crate) fn relation_lists(&self) -> &BTreeMap<Agent, Vec<Vec<WorldId>>> {
        &self.relations
    }

    pub(crate) fn valuation_sets(&self) -> &BTreeMap<Prop, BTreeSet<WorldId>> {
        &self.valuation
    }

    /// Assembles a model from already-built parts, validating world ids.
    pub fn from_parts(
        worlds: usize,
        mut relations: BTreeMap<Agent, Vec<Vec<WorldId>>>,
        mut valuation: BTreeMap<Prop, BTreeSet<WorldId>>,
    ) -> Result<Self, LogicError> {
        for succ in relations.values_mut() {
            if succ.len() != worlds {
                return Err(LogicError::WorldOutOfRange {
                    world: succ.len(),
                    worlds,
                });
            }
            for list in succ.iter_mut() {
                list.sort_unstable();
                list.dedup();
                if let Some(&w) = list.last() {
                    if w >= worlds {
                        return Err(LogicError::WorldOutOfRange { world: w, worlds });
                    }
                }
            }
        }
        for ws in valuation.values() {
            if let Some(&w) = ws.last() {
                if w >= worlds {
                    return Err(LogicError::WorldOutOfRange { world: w, worlds });
                }
            }
        }
        valuation.retain(|_, ws| !ws.is_empty());
        Ok(EpistemicModel {
            worlds,
            relations,
            valuation,
        })
    }

    /// `M, w ⊨ φ`.
    pub fn satisfies(&self, w: WorldId, phi: &Formula) -> Result<bool, LogicError> {
        self.check_world(w)?;
        for agent in phi.agents() {
            if !self.has_agent(agent) {
                return Err(LogicError::UnknownAgent(agent.to_string()));
            }
        }
        Ok(self.sat(w, phi))
    }

    // Agents are checked up front by `satisfies`.
    fn sat(&self, w: WorldId, phi: &Formula) -> bool {
        match phi {
            Formula::Atom(p) => self.holds(p, w),
            Formula::Not(inner) => !self.sat(w, inner),
            Formula::And(a, b) => self.sat(w, a) && self.sat(w, b),
            Formula::Believes(agent, inner) => self.relations[agent][w].iter().all(|&v| self.sat(v, inner)),
        }
    }
}

/// A state: an epistemic model with a designated actual world.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointedEpistemicModel {
    model: EpistemicModel,
    actual: WorldId,
}

impl PointedEpistemicModel {
    pub fn new(model: EpistemicModel, actual: WorldId) -> Result<Self, LogicError> {
        model.check_world(actual)?;
        Ok(PointedEpistemicModel { model, actual })
    }

    pub fn model(&self) -> &EpistemicModel {
        &self.model
    }

    pub fn actual(&self) -> WorldId {
        self.actual
    }

    pub fn into_parts(self) -> (EpistemicModel, WorldId) {
        (self.model, self.actual)
    }

    /// Line-oriented dump with stable ordering: a header, one line per world
    /// listing its true propositions, then one line per relation pair.
    pub fn dump(&self) -> String {
        let m = &self.model;
        let mut out = format!("worlds {} actual {}\n", m.worlds, self.actual);
        for w in 0..m.worlds {
            out.push_str(&format!("w{w}:"));
            for p in m.facts_at(w) {
                out.push(' ');
                out.push_str(p.as_str());
            }
            out.push('\n');
        }
        for (agent, succ) in &m.relations {
            for (w, list) in succ.iter().enumerate() {
                for v in list {
                    out.push_str(&format!("R {agent} {w} {v}\n"));
                }
            }
        }
        out
    }
}

/// `M, w ⊨ φ` at the actual world of `state`.
pub fn eval(state: &PointedEpistemicModel, phi: &Formula) -> Result<bool, LogicError> {
    state.model.satisfies(state.actual, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::chain_formula;

    fn agent(s: &str) -> Agent {
        Agent::new(s)
    }

    #[test]
    fn atom_true_in_single_world() {
        let p = Prop::new("p", &[]);
        let m = EpistemicModel::singleton([agent("a")], [p.clone()]);
        let s = PointedEpistemicModel::new(m, 0).unwrap();
        assert!(eval(&s, &Formula::atom(p)).unwrap());
    }

    #[test]
    fn unvalued_atom_is_false() {
        let m = EpistemicModel::singleton([agent("a")], []);
        let s = PointedEpistemicModel::new(m, 0).unwrap();
        assert!(!eval(&s, &Formula::atom(Prop::new("q", &[]))).unwrap());
    }

    #[test]
    fn belief_with_no_successors_is_vacuous() {
        let m = EpistemicModel::new(1, [agent("a")]);
        let s = PointedEpistemicModel::new(m, 0).unwrap();
        let phi = Formula::believes(agent("a"), Formula::atom(Prop::new("p", &[])));
        assert!(eval(&s, &phi).unwrap());
        let neg = Formula::believes(agent("a"), Formula::not(Formula::atom(Prop::new("p", &[]))));
        assert!(eval(&s, &neg).unwrap());
    }

    #[test]
    fn unknown_agent_is_an_error() {
        let m = EpistemicModel::singleton([agent("a")], []);
        let s = PointedEpistemicModel::new(m, 0).unwrap();
        let phi = Formula::believes(agent("b"), Formula::atom(Prop::new("p", &[])));
        assert_eq!(eval(&s, &phi), Err(LogicError::UnknownAgent("b".into())));
    }

    #[test]
    fn actual_must_exist() {
        let m = EpistemicModel::new(2, [agent("a")]);
        assert!(PointedEpistemicModel::new(m, 2).is_err());
    }

    #[test]
    fn false_belief_from_non_reflexive_relation() {
        // Actual world has the chocolate in the cupboard, Mary only sees a
        // table-world where Alice sees that same table-world.
        let (mary, alice) = (agent("Mary"), agent("Alice"));
        let mut m = EpistemicModel::new(2, [mary.clone(), alice.clone()]);
        m.set_true(Prop::at("chocolate", "cupboard"), 0).unwrap();
        m.set_true(Prop::at("chocolate", "table"), 1).unwrap();
        m.add_edge(&alice, 0, 0).unwrap();
        m.add_edge(&mary, 0, 1).unwrap();
        m.add_edge(&mary, 1, 1).unwrap();
        m.add_edge(&alice, 1, 1).unwrap();
        let s = PointedEpistemicModel::new(m, 0).unwrap();
        let phi = chain_formula(&[mary, alice], "chocolate", "table").unwrap();
        assert!(eval(&s, &phi).unwrap());
        assert!(eval(&s, &Formula::atom(Prop::at("chocolate", "cupboard"))).unwrap());
    }

    #[test]
    fn dump_is_sorted_and_stable() {
        let a = agent("a");
        let mut m = EpistemicModel::new(2, [a.clone()]);
        m.set_true(Prop::new("q", &[]), 1).unwrap();
        m.set_true(Prop::new("p", &[]), 1).unwrap();
        m.add_edge(&a, 1, 0).unwrap();
        m.add_edge(&a, 0, 1).unwrap();
        let s = PointedEpistemicModel::new(m, 0).unwrap();
        assert_eq!(s.dump(), "worlds 2 actual 0\nw0:\nw1: p q\nR a 0 1\nR a 1 0\n");
    }

    #[test]
    fn from_parts_validates_ids() {
        let mut rel = BTreeMap::new();
        rel.insert(agent("a"), vec![vec![3]]);
        assert!(EpistemicModel::from_parts(1, rel, BTreeMap::new()).is_err());
    }
}
