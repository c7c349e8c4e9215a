//! One-chapter unexpected-transfer stories, questions at belief orders 0-4,
//! gold per-step chain-belief traces, and the DEL cross-check.

mod generate;
mod gold;
mod kernel;
pub(crate) mod text;
mod vocab;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::event::EventError;
use crate::logic::{Agent, LogicError};

pub use generate::{generate_story, StoryConfig};
pub use gold::{gold_trace, replay_presence, PresenceLog};
pub use kernel::{compile_physical_action, kernel_check, kernel_states, KernelOptions};
pub use text::{parse_story_line, parse_story_text};
pub use vocab::{Vocabulary, VOCABULARY};

/// Shared, cheaply clonable identifier for objects, containers and rooms.
pub type Name = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoryError {
    #[error("invalid story config: {0}")]
    Config(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("action {index} ({kind}) cannot be compiled to an event model")]
    UnsupportedAction { index: usize, kind: &'static str },
    #[error("{0} is not present in any room at step {1}")]
    ActorAbsent(String, usize),
    #[error("object location unknown at step {0}")]
    NoObjectLocation(usize),
    #[error("belief chain resolves to {count} locations at step {index}")]
    AmbiguousBelief { index: usize, count: usize },
    #[error("cannot parse story line {index}: `{line}`")]
    Parse { index: usize, line: String },
    #[error("object never placed; no final answer")]
    NoAnswer,
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Event(#[from] EventError),
}

/// The tracked location of a belief chain; `Null` before the chain's
/// viewpoint has learned where the object is.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Null,
    At(Name),
}

pub type ChainBeliefState = Location;

impl Location {
    /// Normalized form of a location token: lowercase, spaces to
    /// underscores, `null` in any case becomes `Null`.
    pub fn parse(token: &str) -> Location {
        let t = token.trim();
        if t.eq_ignore_ascii_case("null") {
            return Location::Null;
        }
        let norm: String = t
            .chars()
            .map(|c| if c.is_whitespace() { '_' } else { c.to_ascii_lowercase() })
            .collect();
        Location::At(Name::from(norm))
    }

    pub fn at(name: &str) -> Location {
        Location::At(Name::from(name))
    }

    pub fn name(&self) -> Option<&Name> {
        match self {
            Location::Null => None,
            Location::At(n) => Some(n),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Location::Null)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Null => f.write_str("Null"),
            Location::At(n) => f.write_str(n),
        }
    }
}

impl fmt::Debug for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

impl Serialize for Location {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Location {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(if s == "Null" { Location::Null } else { Location::At(Name::from(s)) })
    }
}

/// What happens on one story line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ActionKind {
    EnterAll { agents: Vec<Agent>, room: Name },
    ObjectAt { object: Name, container: Name },
    Noop { actor: Agent, room: Name },
    Distractor { actor: Agent, text: String },
    Exit { actor: Agent, room: Name },
    Move { actor: Agent, object: Name, container: Name },
    PublicClaim { speaker: Agent, object: Name, container: Name },
    PrivateTell { speaker: Agent, listener: Agent, object: Name, container: Name },
}

impl ActionKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ActionKind::EnterAll { .. } => "EnterAll",
            ActionKind::ObjectAt { .. } => "ObjectAt",
            ActionKind::Noop { .. } => "Noop",
            ActionKind::Distractor { .. } => "Distractor",
            ActionKind::Exit { .. } => "Exit",
            ActionKind::Move { .. } => "Move",
            ActionKind::PublicClaim { .. } => "PublicClaim",
            ActionKind::PrivateTell { .. } => "PrivateTell",
        }
    }

    pub fn is_communication(&self) -> bool {
        matches!(self, ActionKind::PublicClaim { .. } | ActionKind::PrivateTell { .. })
    }
}

/// A numbered story line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryAction {
    /// 1-based line number.
    pub index: usize,
    #[serde(flatten)]
    pub kind: ActionKind,
}

impl StoryAction {
    pub fn new(index: usize, kind: ActionKind) -> Self {
        StoryAction { index, kind }
    }

    /// The line as it appears in a story file, without its number.
    pub fn text(&self) -> String {
        text::render_action(&self.kind)
    }

    /// `"<index> <text>"`.
    pub fn numbered(&self) -> String {
        format!("{} {}", self.index, self.text())
    }
}

/// A belief question; `chain` has one agent per belief order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Question {
    pub order: usize,
    pub chain: Vec<Agent>,
    pub object: Name,
}

impl Question {
    pub fn new(chain: Vec<Agent>, object: &str) -> Self {
        Question {
            order: chain.len(),
            chain,
            object: Name::from(object),
        }
    }

    pub fn text(&self) -> String {
        text::question_text(self)
    }

    /// The statement closing each trace step, e.g.
    /// `Owen thinks Liam thinks the celery is in [green_bucket]`.
    pub fn statement(&self, location: &Location) -> String {
        text::statement_text(&self.chain, &self.object, location)
    }
}

/// Gold chain-belief state after each story line, plus the final answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldTrace {
    pub states: Vec<Location>,
    pub final_answer: Name,
}

/// A generated story with its questions and gold traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryBundle {
    pub id: u64,
    pub seed: u64,
    pub agents: Vec<Agent>,
    pub object: Name,
    pub containers: Vec<Name>,
    pub story: Vec<StoryAction>,
    pub questions: Vec<Question>,
    /// `gold[i]` answers `questions[i]`.
    pub gold: Vec<GoldTrace>,
    pub presence_log: PresenceLog,
    pub exit_order: BTreeMap<Agent, usize>,
}

impl StoryBundle {
    /// Builds a bundle around hand-written or parsed story lines: agents come
    /// from the first `EnterAll`, containers from every location mentioned,
    /// and gold traces are computed for `questions`.
    pub fn from_actions(id: u64, story: Vec<StoryAction>, questions: Vec<Question>) -> Result<Self, StoryError> {
        let agents = story
            .iter()
            .find_map(|a| match &a.kind {
                ActionKind::EnterAll { agents, .. } => Some(agents.clone()),
                _ => None,
            })
            .unwrap_or_default();
        let mut containers: Vec<Name> = Vec::new();
        let mut object = None;
        for a in &story {
            let (o, c) = match &a.kind {
                ActionKind::ObjectAt { object, container }
                | ActionKind::Move { object, container, .. }
                | ActionKind::PublicClaim { object, container, .. }
                | ActionKind::PrivateTell { object, container, .. } => (object, container),
                _ => continue,
            };
            object.get_or_insert_with(|| o.clone());
            if !containers.contains(c) {
                containers.push(c.clone());
            }
        }
        let object = object.ok_or(StoryError::NoAnswer)?;
        let (presence_log, exit_order) = replay_presence(&story);
        let gold = questions
            .iter()
            .map(|q| gold_trace(&story, q, &exit_order, &presence_log))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StoryBundle {
            id,
            seed: 0,
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

    pub fn story_lines(&self) -> Vec<String> {
        self.story.iter().map(StoryAction::numbered).collect()
    }

    pub fn story_text(&self) -> String {
        self.story_lines().join("\n")
    }

    pub fn has_communication(&self) -> bool {
        self.story.iter().any(|a| a.kind.is_communication())
    }

    pub fn gold_for(&self, question: &Question) -> Option<&GoldTrace> {
        self.questions.iter().position(|q| q == question).map(|i| &self.gold[i])
    }

    pub fn question_by_order(&self, order: usize) -> Option<(&Question, &GoldTrace)> {
        self.questions
            .iter()
            .position(|q| q.order == order)
            .map(|i| (&self.questions[i], &self.gold[i]))
    }
}
