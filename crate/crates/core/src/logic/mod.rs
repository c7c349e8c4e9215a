//! The epistemic language and pointed Kripke models.
//!
//! Formulas are built from atoms, negation, conjunction and the belief
//! operator `B[agent](φ)`. Satisfaction follows the usual possible-worlds
//! reading: `B[a](φ)` holds at `w` when `φ` holds at every `R_a`-successor of
//! `w`. Atoms missing from the valuation are false everywhere.

mod formula;
mod model;

use thiserror::Error;

pub use formula::{chain_formula, Agent, Formula, Prop};
pub use model::{eval, EpistemicModel, PointedEpistemicModel, WorldId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("agent `{0}` appears more than once in a belief chain")]
    DuplicateAgent(String),
    #[error("world {world} out of range (model has {worlds} worlds)")]
    WorldOutOfRange { world: usize, worlds: usize },
    #[error("formula parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}
