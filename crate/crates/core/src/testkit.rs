//! Random small models and formulas for brute-force equivalence checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::logic::{Agent, EpistemicModel, Formula, PointedEpistemicModel, Prop};

pub fn agents(n: usize) -> Vec<Agent> {
    (0..n).map(|i| Agent::new(format!("a{i}"))).collect()
}

pub fn props(n: usize) -> Vec<Prop> {
    (0..n).map(|i| Prop::new(&format!("p{i}"), &[])).collect()
}

/// A random pointed model with `worlds` worlds over `agents` and `props`;
/// each edge and each fact is present with probability `density`.
pub fn random_model(rng: &mut impl Rng, worlds: usize, agents: &[Agent], props: &[Prop], density: f64) -> PointedEpistemicModel {
    let mut m = EpistemicModel::new(worlds, agents.iter().cloned());
    for a in agents {
        for w in 0..worlds {
            for v in 0..worlds {
                if rng.random_bool(density) {
                    m.add_edge(a, w, v).expect("ids in range");
                }
            }
        }
    }
    for p in props {
        for w in 0..worlds {
            if rng.random_bool(0.5) {
                m.set_true(p.clone(), w).expect("ids in range");
            }
        }
    }
    let actual = rng.random_range(0..worlds);
    PointedEpistemicModel::new(m, actual).expect("actual in range")
}

/// A random formula with belief order at most `max_order`.
pub fn random_formula(rng: &mut impl Rng, agents: &[Agent], props: &[Prop], max_order: usize, size: usize) -> Formula {
    if size <= 1 {
        return Formula::atom(props[rng.random_range(0..props.len())].clone());
    }
    let choice = rng.random_range(0..if max_order > 0 { 4 } else { 3 });
    match choice {
        0 => Formula::atom(props[rng.random_range(0..props.len())].clone()),
        1 => Formula::not(random_formula(rng, agents, props, max_order, size - 1)),
        2 => {
            let left = rng.random_range(1..size);
            Formula::and(
                random_formula(rng, agents, props, max_order, left),
                random_formula(rng, agents, props, max_order, size - left),
            )
        }
        _ => Formula::believes(
            agents[rng.random_range(0..agents.len())].clone(),
            random_formula(rng, agents, props, max_order - 1, size - 1),
        ),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
