use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{EpistemicModel, PointedEpistemicModel, WorldId};

/// Keeps the actual world and every world reachable from it in at most
/// `depth` relation steps (through any agents), renumbering survivors densely
/// in their original order. Formulas of belief order `<= depth` evaluate the
/// same at the actual world before and after.
pub fn prune_reachable(state: &PointedEpistemicModel, depth: usize) -> PointedEpistemicModel {
    let m = state.model();
    let rel = m.relation_lists();
    let mut keep = vec![false; m.num_worlds()];
    keep[state.actual()] = true;
    let mut frontier = vec![state.actual()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &w in &frontier {
            for succ in rel.values() {
                for &v in &succ[w] {
                    if !keep[v] {
                        keep[v] = true;
                        next.push(v);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    restrict(state, &keep)
}

/// Sub-model on the worlds flagged in `keep`, renumbered in ascending order.
pub(crate) fn restrict(state: &PointedEpistemicModel, keep: &[bool]) -> PointedEpistemicModel {
    let m = state.model();
    if keep.iter().all(|&k| k) {
        return state.clone();
    }
    let mut new_id = vec![usize::MAX; m.num_worlds()];
    let mut count = 0;
    for (w, &k) in keep.iter().enumerate() {
        if k {
            new_id[w] = count;
            count += 1;
        }
    }
    let relations = m
        .relation_lists()
        .iter()
        .map(|(agent, succ)| {
            let lists = (0..m.num_worlds())
                .filter(|&w| keep[w])
                .map(|w| {
                    succ[w]
                        .iter()
                        .filter(|&&v| keep[v])
                        .map(|&v| new_id[v])
                        .collect::<Vec<WorldId>>()
                })
                .collect();
            (agent.clone(), lists)
        })
        .collect();
    let valuation: BTreeMap<_, BTreeSet<WorldId>> = m
        .valuation_sets()
        .iter()
        .map(|(p, ws)| {
            let ws = ws.iter().filter(|&&w| keep[w]).map(|&w| new_id[w]).collect();
            (p.clone(), ws)
        })
        .collect();
    let model = EpistemicModel::from_parts(count, relations, valuation).expect("restriction keeps ids in range");
    PointedEpistemicModel::new(model, new_id[state.actual()]).expect("actual world is always kept")
}
