use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::logic::{EpistemicModel, PointedEpistemicModel, Prop, WorldId};

/// Quotient by the coarsest bisimulation that respects the valuation and
/// every agent's relation.
///
/// Naive signature refinement: start from blocks of equal valuation, then
/// repeatedly split blocks by the set of successor blocks per agent until the
/// partition stops changing. Blocks are numbered by their smallest member so
/// the result is deterministic.
pub fn bisim_minimize(state: &PointedEpistemicModel) -> PointedEpistemicModel {
    let m = state.model();
    let n = m.num_worlds();
    let rel = m.relation_lists();

    let mut block = initial_blocks(m);
    let mut num_blocks = count_blocks(&block);
    loop {
        let mut sig_ids: HashMap<(usize, Vec<Vec<usize>>), usize> = HashMap::new();
        let mut next = vec![0; n];
        for w in 0..n {
            let succ_blocks: Vec<Vec<usize>> = rel
                .values()
                .map(|succ| {
                    let set: BTreeSet<usize> = succ[w].iter().map(|&v| block[v]).collect();
                    set.into_iter().collect()
                })
                .collect();
            let fresh = sig_ids.len();
            next[w] = *sig_ids.entry((block[w], succ_blocks)).or_insert(fresh);
        }
        let next = canonical(&next);
        let next_count = count_blocks(&next);
        block = next;
        if next_count == num_blocks {
            break;
        }
        num_blocks = next_count;
    }

    // Representative of each block = its smallest world.
    let mut rep = vec![usize::MAX; num_blocks];
    for w in 0..n {
        if rep[block[w]] == usize::MAX {
            rep[block[w]] = w;
        }
    }
    let relations = rel
        .iter()
        .map(|(agent, succ)| {
            let lists = rep
                .iter()
                .map(|&w| succ[w].iter().map(|&v| block[v]).collect::<Vec<WorldId>>())
                .collect();
            (agent.clone(), lists)
        })
        .collect();
    let valuation: BTreeMap<Prop, BTreeSet<WorldId>> = m
        .valuation_sets()
        .iter()
        .map(|(p, ws)| (p.clone(), ws.iter().map(|&w| block[w]).collect()))
        .collect();
    let model = EpistemicModel::from_parts(num_blocks, relations, valuation).expect("quotient ids in range");
    PointedEpistemicModel::new(model, block[state.actual()]).expect("actual block exists")
}

fn initial_blocks(m: &EpistemicModel) -> Vec<usize> {
    let mut ids: HashMap<Vec<&Prop>, usize> = HashMap::new();
    let raw: Vec<usize> = (0..m.num_worlds())
        .map(|w| {
            let fresh = ids.len();
            *ids.entry(m.facts_at(w)).or_insert(fresh)
        })
        .collect();
    canonical(&raw)
}

/// Renumbers block labels in order of first appearance.
fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let fresh = map.len();
            *map.entry(*l).or_insert(fresh)
        })
        .collect()
}

fn count_blocks(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}
