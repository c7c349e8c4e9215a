use std::collections::BTreeMap;

use crate::logic::Agent;

use super::{ActionKind, GoldTrace, Location, Name, Question, StoryAction, StoryError};

/// `log[i]` maps every agent to the room they occupy while line `i + 1`
/// happens (after it, for enter/exit lines); `None` means absent.
pub type PresenceLog = Vec<BTreeMap<Agent, Option<Name>>>;

/// Replays enter/exit lines. Returns the presence log and, for each agent,
/// the line on which they first exited a room.
pub fn replay_presence(story: &[StoryAction]) -> (PresenceLog, BTreeMap<Agent, usize>) {
    let mut current: BTreeMap<Agent, Option<Name>> = BTreeMap::new();
    for a in story {
        if let ActionKind::EnterAll { agents, .. } = &a.kind {
            for ag in agents {
                current.entry(ag.clone()).or_insert(None);
            }
        }
    }
    let mut log = Vec::with_capacity(story.len());
    let mut exit_order = BTreeMap::new();
    for a in story {
        match &a.kind {
            ActionKind::EnterAll { agents, room } => {
                for ag in agents {
                    current.insert(ag.clone(), Some(room.clone()));
                }
            }
            ActionKind::Exit { actor, .. } => {
                current.insert(actor.clone(), None);
                exit_order.entry(actor.clone()).or_insert(a.index);
            }
            _ => {}
        }
        log.push(current.clone());
    }
    (log, exit_order)
}

fn exit_rank(exit_order: &BTreeMap<Agent, usize>, agent: &Agent) -> usize {
    // never exited counts as exiting last
    exit_order.get(agent).copied().unwrap_or(usize::MAX)
}

fn all_in(presence: &BTreeMap<Agent, Option<Name>>, chain: &[Agent], room: &Name) -> bool {
    chain
        .iter()
        .all(|a| presence.get(a).and_then(Option::as_ref) == Some(room))
}

/// The chain state after each line of `story`.
pub(super) fn chain_states(
    story: &[StoryAction],
    chain: &[Agent],
    object: &Name,
    exit_order: &BTreeMap<Agent, usize>,
    presence_log: &PresenceLog,
) -> Vec<Location> {
    let mut state = Location::Null;
    let mut room: Option<Name> = None;
    let mut out = Vec::with_capacity(story.len());
    let empty = BTreeMap::new();
    for (i, action) in story.iter().enumerate() {
        let presence = presence_log.get(i).unwrap_or(&empty);
        match &action.kind {
            ActionKind::EnterAll { room: r, .. } => room = Some(r.clone()),
            ActionKind::ObjectAt { object: o, container } if o == object => {
                let observed = match &room {
                    Some(r) => all_in(presence, chain, r),
                    None => chain.is_empty(),
                };
                if chain.is_empty() || observed {
                    state = Location::At(container.clone());
                }
            }
            ActionKind::Move {
                actor,
                object: o,
                container,
            } if o == object => {
                let observed = match presence.get(actor).and_then(Option::as_ref) {
                    Some(r) => all_in(presence, chain, r),
                    None => false,
                };
                if chain.is_empty() || observed {
                    state = Location::At(container.clone());
                }
            }
            ActionKind::PublicClaim {
                speaker,
                object: o,
                container,
            } if o == object => {
                let believes = match chain {
                    [x] => exit_rank(exit_order, x) < exit_rank(exit_order, speaker),
                    [first, second] => first == speaker || second == speaker,
                    _ => false,
                };
                if believes {
                    state = Location::At(container.clone());
                }
            }
            ActionKind::PrivateTell {
                speaker,
                listener,
                object: o,
                container,
            } if o == object => {
                let listener_first = exit_rank(exit_order, listener) < exit_rank(exit_order, speaker);
                let believes = match chain {
                    [x] => x == listener && listener_first,
                    [x, y] if x == listener && y == speaker => listener_first,
                    [x, y] => x == speaker && y == listener,
                    _ => false,
                };
                if believes {
                    state = Location::At(container.clone());
                }
            }
            _ => {}
        }
        out.push(state.clone());
    }
    out
}

/// Gold chain-belief trace for `question`.
///
/// * Object placement and moves update a chain when every agent in it is in
///   the room where it happens; order 0 always follows the object.
/// * Exits, no-ops and distractors change nothing; an agent who left simply
///   stops observing.
/// * A public claim of `l` by `s` sets `(x)` when `x` exited before `s`, and
///   sets `(s, x)` and `(x, s)` unconditionally.
/// * A private tell of `l` from `s` to `x` sets `(x)` and `(x, s)` when `x`
///   exited before `s`, and sets `(s, x)` unconditionally.
/// * Communication never affects order 0 or chains of order 3 and above.
pub fn gold_trace(
    story: &[StoryAction],
    question: &Question,
    exit_order: &BTreeMap<Agent, usize>,
    presence_log: &PresenceLog,
) -> Result<GoldTrace, StoryError> {
    let known = presence_log.first();
    for agent in &question.chain {
        if !known.is_some_and(|p| p.contains_key(agent)) {
            return Err(StoryError::UnknownAgent(agent.to_string()));
        }
    }
    let states = chain_states(story, &question.chain, &question.object, exit_order, presence_log);
    let final_answer = states
        .iter()
        .rev()
        .find_map(|s| s.name().cloned())
        .ok_or(StoryError::NoAnswer)?;
    Ok(GoldTrace { states, final_answer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::story::parse_story_text;

    const CELERY_STORY: &str = "\
1 Amelia, Chloe, Liam, Owen and Benjamin entered the TV_room.
2 The celery is in the red_envelope.
3 Amelia made no movements and stayed in the TV_room for 1 minute.
4 Chloe lost his watch.
5 Amelia exited the TV_room.
6 Chloe moved the celery to the green_bucket.
7 Chloe exited the TV_room.
8 Liam moved the celery to the red_bathtub.
9 Liam exited the TV_room.
10 Owen made no movements and stayed in the TV_room for 1 minute.
11 Owen exited the TV_room.
12 Benjamin made no movements and stayed in the TV_room for 1 minute.
13 Benjamin exited the TV_room.
14 Amelia, Chloe, Liam, Owen and Benjamin entered the waiting_room.
15 Liam publicly claimed that celery is in the white_bathtub now.
16 Benjamin privately told Liam that the celery is in the blue_drawer now.";

    fn agents(names: &[&str]) -> Vec<Agent> {
        names.iter().map(Agent::new).collect()
    }

    fn trace(chain: &[&str]) -> GoldTrace {
        let story = parse_story_text(CELERY_STORY).unwrap();
        let (log, exits) = replay_presence(&story);
        gold_trace(&story, &Question::new(agents(chain), "celery"), &exits, &log).unwrap()
    }

    fn locs(states: &[&str]) -> Vec<Location> {
        states.iter().map(|s| Location::parse(s)).collect()
    }

    #[test]
    fn celery_third_order_trace() {
        let g = trace(&["Owen", "Liam", "Chloe"]);
        let mut expected = vec!["Null", "red_envelope", "red_envelope", "red_envelope", "red_envelope"];
        expected.extend(std::iter::repeat_n("green_bucket", 11));
        assert_eq!(g.states, locs(&expected));
        assert_eq!(&*g.final_answer, "green_bucket");
    }

    #[test]
    fn celery_zeroth_order_trace() {
        let g = trace(&[]);
        assert_eq!(g.states[1], Location::at("red_envelope"));
        assert_eq!(g.states[5], Location::at("green_bucket"));
        assert_eq!(g.states[7], Location::at("red_bathtub"));
        assert_eq!(g.states[15], Location::at("red_bathtub"));
        assert_eq!(&*g.final_answer, "red_bathtub");
    }

    #[test]
    fn exit_order_and_presence() {
        let story = parse_story_text(CELERY_STORY).unwrap();
        let (log, exits) = replay_presence(&story);
        assert_eq!(exits[&Agent::new("Amelia")], 5);
        assert_eq!(exits[&Agent::new("Benjamin")], 13);
        assert_eq!(log[5][&Agent::new("Amelia")], None);
        assert_eq!(log[5][&Agent::new("Chloe")].as_deref(), Some("TV_room"));
        assert_eq!(log[13][&Agent::new("Amelia")].as_deref(), Some("waiting_room"));
    }

    #[test]
    fn public_claim_rules() {
        // Liam (exit 9) claims white_bathtub at line 15.
        // Chloe exited at 7 < 9: believes it.
        assert_eq!(trace(&["Chloe"]).states[14], Location::at("white_bathtub"));
        // Owen exited at 11 > 9: keeps red_bathtub.
        assert_eq!(trace(&["Owen"]).states[14], Location::at("red_bathtub"));
        // The speaker keeps his own belief.
        assert_eq!(trace(&["Liam"]).states[14], Location::at("red_bathtub"));
        // (speaker, x) and (x, speaker) take the claim.
        assert_eq!(trace(&["Liam", "Owen"]).states[14], Location::at("white_bathtub"));
        assert_eq!(trace(&["Owen", "Liam"]).states[14], Location::at("white_bathtub"));
        // Second-order chain without the speaker is untouched.
        assert_eq!(trace(&["Owen", "Benjamin"]).states[14], Location::at("red_bathtub"));
    }

    #[test]
    fn private_tell_rules() {
        // Benjamin (exit 13) tells Liam (exit 9) blue_drawer at line 16.
        assert_eq!(trace(&["Liam"]).states[15], Location::at("blue_drawer"));
        assert_eq!(trace(&["Liam", "Benjamin"]).states[15], Location::at("blue_drawer"));
        assert_eq!(trace(&["Benjamin", "Liam"]).states[15], Location::at("blue_drawer"));
        // Benjamin himself and bystanders keep their beliefs.
        assert_eq!(trace(&["Benjamin"]).states[15], Location::at("red_bathtub"));
        assert_eq!(trace(&["Owen", "Liam"]).states[15], Location::at("white_bathtub"));
    }

    #[test]
    fn unknown_chain_agent() {
        let story = parse_story_text(CELERY_STORY).unwrap();
        let (log, exits) = replay_presence(&story);
        let q = Question::new(agents(&["Zed"]), "celery");
        assert_eq!(
            gold_trace(&story, &q, &exits, &log),
            Err(StoryError::UnknownAgent("Zed".into()))
        );
    }
}
