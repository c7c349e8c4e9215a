//! Fixed sentence templates for story lines, questions and trace statements.

use crate::logic::Agent;

use super::{ActionKind, Location, Name, Question, StoryAction, StoryError};

fn join_names(agents: &[Agent]) -> String {
    match agents {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => {
            let head: Vec<&str> = init.iter().map(Agent::as_str).collect();
            format!("{} and {}", head.join(", "), last)
        }
    }
}

pub(super) fn render_action(kind: &ActionKind) -> String {
    match kind {
        ActionKind::EnterAll { agents, room } => format!("{} entered the {}.", join_names(agents), room),
        ActionKind::ObjectAt { object, container } => format!("The {object} is in the {container}."),
        ActionKind::Noop { actor, room } => {
            format!("{actor} made no movements and stayed in the {room} for 1 minute.")
        }
        ActionKind::Distractor { actor, text } => format!("{actor} {text}."),
        ActionKind::Exit { actor, room } => format!("{actor} exited the {room}."),
        ActionKind::Move { actor, object, container } => format!("{actor} moved the {object} to the {container}."),
        ActionKind::PublicClaim { speaker, object, container } => {
            format!("{speaker} publicly claimed that {object} is in the {container} now.")
        }
        ActionKind::PrivateTell {
            speaker,
            listener,
            object,
            container,
        } => format!("{speaker} privately told {listener} that the {object} is in the {container} now."),
    }
}

pub(super) fn question_text(q: &Question) -> String {
    match q.chain.split_first() {
        None => format!("Where is the {} really?", q.object),
        Some((first, rest)) => {
            let mut s = format!("Where does {first} think");
            for a in rest {
                s.push_str(&format!(" {a} thinks"));
            }
            s.push_str(&format!(" the {} is?", q.object));
            s
        }
    }
}

pub(crate) fn statement_text(chain: &[Agent], object: &str, location: &Location) -> String {
    let mut s = String::new();
    for a in chain {
        s.push_str(a.as_str());
        s.push_str(" thinks ");
    }
    if chain.is_empty() {
        s.push_str("The ");
    } else {
        s.push_str("the ");
    }
    s.push_str(object);
    s.push_str(" is in [");
    s.push_str(&location.to_string());
    s.push(']');
    s
}

fn name(s: &str) -> Name {
    Name::from(s)
}

/// Parses one story line (without its number) back into an action.
/// Anything that matches no template is read as a distractor by its first
/// word.
pub fn parse_story_line(index: usize, line: &str) -> Result<StoryAction, StoryError> {
    let err = || StoryError::Parse {
        index,
        line: line.to_string(),
    };
    let body = line.trim().strip_suffix('.').ok_or_else(err)?;

    let kind = if let Some((who, room)) = body.split_once(" entered the ") {
        let agents = match who.rsplit_once(" and ") {
            Some((head, last)) => head
                .split(", ")
                .chain(std::iter::once(last))
                .map(Agent::new)
                .collect(),
            None => vec![Agent::new(who)],
        };
        ActionKind::EnterAll { agents, room: name(room) }
    } else if let Some(rest) = body.strip_prefix("The ") {
        let (object, container) = rest.split_once(" is in the ").ok_or_else(err)?;
        ActionKind::ObjectAt {
            object: name(object),
            container: name(container),
        }
    } else if let Some((actor, rest)) = body.split_once(" made no movements and stayed in the ") {
        let room = rest.strip_suffix(" for 1 minute").ok_or_else(err)?;
        ActionKind::Noop {
            actor: Agent::new(actor),
            room: name(room),
        }
    } else if let Some((actor, room)) = body.split_once(" exited the ") {
        ActionKind::Exit {
            actor: Agent::new(actor),
            room: name(room),
        }
    } else if let Some((actor, rest)) = body.split_once(" moved the ") {
        let (object, container) = rest.split_once(" to the ").ok_or_else(err)?;
        ActionKind::Move {
            actor: Agent::new(actor),
            object: name(object),
            container: name(container),
        }
    } else if let Some((speaker, rest)) = body.split_once(" publicly claimed that ") {
        let rest = rest.strip_suffix(" now").ok_or_else(err)?;
        let (object, container) = rest.split_once(" is in the ").ok_or_else(err)?;
        let object = object.strip_prefix("the ").unwrap_or(object);
        ActionKind::PublicClaim {
            speaker: Agent::new(speaker),
            object: name(object),
            container: name(container),
        }
    } else if let Some((speaker, rest)) = body.split_once(" privately told ") {
        let (listener, rest) = rest.split_once(" that the ").ok_or_else(err)?;
        let rest = rest.strip_suffix(" now").ok_or_else(err)?;
        let (object, container) = rest.split_once(" is in the ").ok_or_else(err)?;
        ActionKind::PrivateTell {
            speaker: Agent::new(speaker),
            listener: Agent::new(listener),
            object: name(object),
            container: name(container),
        }
    } else {
        let (actor, text) = body.split_once(' ').ok_or_else(err)?;
        ActionKind::Distractor {
            actor: Agent::new(actor),
            text: text.to_string(),
        }
    };
    Ok(StoryAction::new(index, kind))
}

/// Parses numbered story lines (`"6 Chloe moved the celery to the green_bucket."`).
/// Blank lines are skipped.
pub fn parse_story_text(text: &str) -> Result<Vec<StoryAction>, StoryError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| {
            let (num, rest) = line.split_once(' ').ok_or_else(|| StoryError::Parse {
                index: i + 1,
                line: line.to_string(),
            })?;
            let index = num.parse().map_err(|_| StoryError::Parse {
                index: i + 1,
                line: line.to_string(),
            })?;
            parse_story_line(index, rest)
        })
        .collect()
}
