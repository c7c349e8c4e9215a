use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::LogicError;

/// An agent name, e.g. `Mary`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Agent(Arc<str>);

impl Agent {
    pub fn new(name: impl AsRef<str>) -> Self {
        Agent(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Agent {
    fn from(s: &str) -> Self {
        Agent::new(s)
    }
}

/// An atomic proposition in canonical `name(arg,arg,...)` form, or a bare
/// `name` when it has no arguments.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prop(Arc<str>);

impl Prop {
    pub fn new(name: &str, args: &[&str]) -> Self {
        if args.is_empty() {
            Prop(Arc::from(name))
        } else {
            Prop(Arc::from(format!("{}({})", name, args.join(","))))
        }
    }

    /// `at(object,location)`: the object is at the location.
    pub fn at(object: &str, location: &str) -> Self {
        Prop::new("at", &[object, location])
    }

    /// `in(agent,room)`: the agent is present in the room.
    pub fn present(agent: &Agent, room: &str) -> Self {
        Prop::new("in", &[agent.as_str(), room])
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Splits the canonical key back into its name and arguments.
    pub fn components(&self) -> (&str, Vec<&str>) {
        match self.0.split_once('(') {
            Some((name, rest)) => {
                let inner = rest.strip_suffix(')').unwrap_or(rest);
                (name, inner.split(',').collect())
            }
            None => (&self.0, Vec::new()),
        }
    }
}

impl fmt::Debug for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A formula of the epistemic language: atoms, negation, conjunction and the
/// belief operator.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Formula {
    Atom(Prop),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Believes(Agent, Box<Formula>),
}

impl Formula {
    pub fn atom(p: Prop) -> Self {
        Formula::Atom(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: Formula) -> Self {
        Formula::Not(Box::new(phi))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn believes(agent: Agent, phi: Formula) -> Self {
        Formula::Believes(agent, Box::new(phi))
    }

    /// Maximum nesting depth of belief operators.
    pub fn order(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(phi) => phi.order(),
            Formula::And(a, b) => a.order().max(b.order()),
            Formula::Believes(_, phi) => 1 + phi.order(),
        }
    }

    pub fn agents(&self) -> BTreeSet<&Agent> {
        let mut out = BTreeSet::new();
        self.collect_agents(&mut out);
        out
    }

    fn collect_agents<'a>(&'a self, out: &mut BTreeSet<&'a Agent>) {
        match self {
            Formula::Atom(_) => {}
            Formula::Not(phi) => phi.collect_agents(out),
            Formula::And(a, b) => {
                a.collect_agents(out);
                b.collect_agents(out);
            }
            Formula::Believes(agent, phi) => {
                out.insert(agent);
                phi.collect_agents(out);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(phi) => write!(f, "!{phi}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Believes(agent, phi) => write!(f, "B[{agent}]({phi})"),
        }
    }
}

impl FromStr for Formula {
    type Err = LogicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser { src: s.as_bytes(), pos: 0 };
        let phi = parser.formula()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(phi)
    }
}

/// Builds the order-k query `B[a1](B[a2](... at(object,location)))`.
pub fn chain_formula(chain: &[Agent], object: &str, location: &str) -> Result<Formula, LogicError> {
    let mut seen = BTreeSet::new();
    for agent in chain {
        if !seen.insert(agent) {
            return Err(LogicError::DuplicateAgent(agent.to_string()));
        }
    }
    let base = Formula::atom(Prop::at(object, location));
    Ok(chain
        .iter()
        .rev()
        .fold(base, |phi, agent| Formula::believes(agent.clone(), phi)))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> LogicError {
        LogicError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), LogicError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn ident(&mut self) -> Result<&str, LogicError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || matches!(self.src[self.pos], b'_' | b'-'))
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected identifier"));
        }
        // ASCII-only slice of valid UTF-8
        Ok(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier"))
    }

    fn formula(&mut self) -> Result<Formula, LogicError> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Formula::not(self.formula()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let a = self.formula()?;
                self.expect(b'&')?;
                let b = self.formula()?;
                self.expect(b')')?;
                Ok(Formula::and(a, b))
            }
            Some(_) => {
                let name = self.ident()?.to_string();
                if name == "B" && self.peek() == Some(b'[') {
                    self.pos += 1;
                    let agent = Agent::new(self.ident()?);
                    self.expect(b']')?;
                    self.expect(b'(')?;
                    let phi = self.formula()?;
                    self.expect(b')')?;
                    return Ok(Formula::believes(agent, phi));
                }
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    let mut args = vec![self.ident()?.to_string()];
                    while self.peek() == Some(b',') {
                        self.pos += 1;
                        args.push(self.ident()?.to_string());
                    }
                    self.expect(b')')?;
                    let args: Vec<&str> = args.iter().map(String::as_str).collect();
                    Ok(Formula::atom(Prop::new(&name, &args)))
                } else {
                    Ok(Formula::atom(Prop::new(&name, &[])))
                }
            }
            None => Err(self.error("unexpected end of input")),
        }
    }
}
