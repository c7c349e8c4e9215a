use std::sync::LazyLock;

use serde::Deserialize;

/// Name, object, container and room pools. Versioned so that a given
/// `(config, seed)` keeps producing the same story across releases.
#[derive(Debug, Clone, Deserialize)]
pub struct Vocabulary {
    pub version: u32,
    pub names: Vec<String>,
    pub objects: Vec<String>,
    pub containers: Vec<String>,
    pub default_containers: Vec<String>,
    pub default_rooms: [String; 2],
    /// Distractor predicates; `{container}` and `{object}` are filled from the pools.
    pub distractors: Vec<String>,
}

const VOCAB_V1: &str = include_str!("../../data/vocab_v1.json");

pub static VOCABULARY: LazyLock<Vocabulary> =
    LazyLock::new(|| serde_json::from_str(VOCAB_V1).expect("bundled vocabulary is valid JSON"));

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn pools_are_distinct_and_nonempty() {
        let v = &*VOCABULARY;
        assert_eq!(v.version, 1);
        for pool in [&v.names, &v.objects, &v.containers, &v.distractors] {
            assert!(!pool.is_empty());
            assert_eq!(pool.iter().collect::<BTreeSet<_>>().len(), pool.len());
        }
        assert!(v.default_containers.iter().all(|c| v.containers.contains(c)));
        assert!(v.names.iter().all(|n| n.chars().all(|c| c.is_ascii_alphabetic())));
    }
}
