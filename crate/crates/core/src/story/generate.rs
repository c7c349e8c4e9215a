use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::logic::Agent;

use super::gold::chain_states;
use super::{
    gold_trace, replay_presence, ActionKind, Location, Name, Question, StoryAction, StoryBundle, StoryError,
    VOCABULARY,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoryConfig {
    pub num_agents: usize,
    /// Answer candidates; their count is `L`.
    pub containers: Vec<String>,
    /// Action room, then reunion room.
    pub rooms: [String; 2],
    pub num_moves: usize,
    pub num_noops: usize,
    pub num_distractors: usize,
    pub enable_public_claims: bool,
    pub enable_private_tells: bool,
    /// Claims and tells state a container other than the speaker's own belief.
    pub enable_deception: bool,
    pub max_order: usize,
    pub seed: u64,
}

impl Default for StoryConfig {
    fn default() -> Self {
        StoryConfig {
            num_agents: 5,
            containers: VOCABULARY.default_containers.clone(),
            rooms: VOCABULARY.default_rooms.clone(),
            num_moves: 2,
            num_noops: 3,
            num_distractors: 1,
            enable_public_claims: true,
            enable_private_tells: true,
            enable_deception: true,
            max_order: 4,
            seed: 0,
        }
    }
}

impl StoryConfig {
    /// A config with no claims or tells, so every question can be
    /// cross-checked by the DEL kernel.
    pub fn physical_only() -> Self {
        StoryConfig {
            enable_public_claims: false,
            enable_private_tells: false,
            ..StoryConfig::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        StoryConfig { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), StoryError> {
        let fail = |msg: String| Err(StoryError::Config(msg));
        if self.num_agents < 2 {
            return fail(format!("num_agents must be >= 2, got {}", self.num_agents));
        }
        if self.num_agents > VOCABULARY.names.len() {
            return fail(format!(
                "num_agents {} exceeds the name pool ({})",
                self.num_agents,
                VOCABULARY.names.len()
            ));
        }
        if self.containers.len() < 2 {
            return fail("at least two containers are required".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.containers {
            if c.is_empty() || c.eq_ignore_ascii_case("null") || c.contains(char::is_whitespace) {
                return fail(format!("invalid container name `{c}`"));
            }
            if !seen.insert(c) {
                return fail(format!("duplicate container `{c}`"));
            }
        }
        if self.rooms[0] == self.rooms[1] {
            return fail("action room and reunion room must differ".into());
        }
        if self.max_order > 4 {
            return fail(format!("max_order must be in 0..=4, got {}", self.max_order));
        }
        if self.max_order >= self.num_agents {
            return fail(format!(
                "max_order {} needs more than {} agents",
                self.max_order, self.num_agents
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Exit,
    Move,
    Noop,
    Distractor,
}

fn distractor_text(rng: &mut ChaCha8Rng, object: &str) -> String {
    let v = &*VOCABULARY;
    let template = v.distractors.choose(rng).expect("non-empty pool");
    let container = v.containers.choose(rng).expect("non-empty pool");
    let other = v
        .objects
        .iter()
        .filter(|o| *o != object)
        .collect::<Vec<_>>()
        .choose(rng)
        .map(|s| s.as_str())
        .unwrap_or(object)
        .to_string();
    template.replace("{container}", container).replace("{object}", &other)
}

/// Generates one story bundle; fully determined by `config` (including its seed).
///
/// Layout: everyone enters the action room, the object is placed, then
/// no-ops, distractors, exits and moves are interleaved (every agent exits
/// exactly once, and every non-exit line has a present actor), then everyone
/// enters the reunion room, followed by an optional public claim and an
/// optional private tell.
pub fn generate_story(config: &StoryConfig) -> Result<StoryBundle, StoryError> {
    config.validate()?;
    let v = &*VOCABULARY;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let agents: Vec<Agent> = v
        .names
        .choose_multiple(&mut rng, config.num_agents)
        .map(Agent::new)
        .collect();
    let object: Name = Name::from(v.objects.choose(&mut rng).expect("non-empty pool").as_str());
    let containers: Vec<Name> = config.containers.iter().map(|c| Name::from(c.as_str())).collect();
    let action_room = Name::from(config.rooms[0].as_str());
    let reunion_room = Name::from(config.rooms[1].as_str());

    let mut kinds = vec![
        ActionKind::EnterAll {
            agents: agents.clone(),
            room: action_room.clone(),
        },
    ];
    let mut location = containers.choose(&mut rng).expect("validated non-empty").clone();
    kinds.push(ActionKind::ObjectAt {
        object: object.clone(),
        container: location.clone(),
    });

    let mut slots = Vec::new();
    slots.extend(std::iter::repeat_n(Slot::Exit, config.num_agents));
    slots.extend(std::iter::repeat_n(Slot::Move, config.num_moves));
    slots.extend(std::iter::repeat_n(Slot::Noop, config.num_noops));
    slots.extend(std::iter::repeat_n(Slot::Distractor, config.num_distractors));
    let mut present = agents.clone();
    while !slots.is_empty() {
        let others_left = slots.iter().any(|s| *s != Slot::Exit);
        // the last agent in the room stays until every other line is placed
        let allowed: Vec<usize> = (0..slots.len())
            .filter(|&i| slots[i] != Slot::Exit || present.len() > 1 || !others_left)
            .collect();
        let pick = *allowed.choose(&mut rng).expect("some slot is always allowed");
        let slot = slots.swap_remove(pick);
        let actor_idx = rng.random_range(0..present.len());
        let actor = present[actor_idx].clone();
        kinds.push(match slot {
            Slot::Exit => {
                present.remove(actor_idx);
                ActionKind::Exit {
                    actor,
                    room: action_room.clone(),
                }
            }
            Slot::Move => {
                let targets: Vec<&Name> = containers.iter().filter(|c| **c != location).collect();
                location = (*targets.choose(&mut rng).expect("at least two containers")).clone();
                ActionKind::Move {
                    actor,
                    object: object.clone(),
                    container: location.clone(),
                }
            }
            Slot::Noop => ActionKind::Noop {
                actor,
                room: action_room.clone(),
            },
            Slot::Distractor => ActionKind::Distractor {
                actor,
                text: distractor_text(&mut rng, &object),
            },
        });
    }

    kinds.push(ActionKind::EnterAll {
        agents: agents.clone(),
        room: reunion_room,
    });

    let mut story: Vec<StoryAction> = kinds
        .into_iter()
        .enumerate()
        .map(|(i, k)| StoryAction::new(i + 1, k))
        .collect();

    if config.enable_public_claims {
        let speaker = agents.choose(&mut rng).expect("agents").clone();
        let claimed = claimed_location(&mut rng, &story, &speaker, &object, &containers, config.enable_deception);
        let index = story.len() + 1;
        story.push(StoryAction::new(
            index,
            ActionKind::PublicClaim {
                speaker,
                object: object.clone(),
                container: claimed,
            },
        ));
    }
    if config.enable_private_tells {
        let pair: Vec<&Agent> = agents.choose_multiple(&mut rng, 2).collect();
        let (speaker, listener) = (pair[0].clone(), pair[1].clone());
        let claimed = claimed_location(&mut rng, &story, &speaker, &object, &containers, config.enable_deception);
        let index = story.len() + 1;
        story.push(StoryAction::new(
            index,
            ActionKind::PrivateTell {
                speaker,
                listener,
                object: object.clone(),
                container: claimed,
            },
        ));
    }

    let mut questions = Vec::with_capacity(config.max_order + 1);
    for order in 0..=config.max_order {
        let mut chain: Vec<Agent> = agents.choose_multiple(&mut rng, order).cloned().collect();
        chain.shuffle(&mut rng);
        questions.push(Question {
            order,
            chain,
            object: object.clone(),
        });
    }

    let (presence_log, exit_order) = replay_presence(&story);
    let gold = questions
        .iter()
        .map(|q| gold_trace(&story, q, &exit_order, &presence_log))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(StoryBundle {
        id: 0,
        seed: config.seed,
        agents,
        object,
        containers,
        story,
        questions,
        gold,
        presence_log,
        exit_order,
    })
}

/// The speaker's own first-order belief, or under deception a different
/// container chosen uniformly.
fn claimed_location(
    rng: &mut ChaCha8Rng,
    story: &[StoryAction],
    speaker: &Agent,
    object: &Name,
    containers: &[Name],
    deceive: bool,
) -> Name {
    let (log, exits) = replay_presence(story);
    let states = chain_states(story, std::slice::from_ref(speaker), object, &exits, &log);
    let belief = match states.last() {
        Some(Location::At(c)) => c.clone(),
        _ => containers[0].clone(),
    };
    if !deceive {
        return belief;
    }
    let others: Vec<&Name> = containers.iter().filter(|c| **c != belief).collect();
    (*others.choose(rng).expect("at least two containers")).clone()
}
