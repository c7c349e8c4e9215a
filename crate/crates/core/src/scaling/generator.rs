use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::http::JsonClient;
use crate::story::{Location, Name};
use crate::trace::{parse_step, parse_trace, render_prompt, render_step, Statement, Trace, TraceStep};
use crate::verifier::mix64;

use super::{Problem, ScalingError};

/// Produces candidate belief traces for a problem.
pub trait CandidateGenerator: Send + Sync {
    /// Complete traces numbered `start..start + n`. A generator may return
    /// fewer than `n` when some candidates fail; the caller decides what a
    /// shortfall means.
    fn sample_traces(&self, problem: &Problem, start: u64, n: usize) -> Result<Vec<Trace>, ScalingError>;

    /// Up to `count` candidates for the step after `prefix`. `path` identifies
    /// the partial path being expanded.
    fn propose_steps(
        &self,
        problem: &Problem,
        prefix: &[TraceStep],
        path: u64,
        count: usize,
    ) -> Result<Vec<TraceStep>, ScalingError>;

    /// Preferred number of traces per `sample_traces` call.
    fn batch_size(&self) -> usize {
        64
    }
}

/// Each step is independently correct with probability `q`; a wrong step
/// states a uniformly chosen container other than the gold one. The final
/// answer is gold iff every step is correct, otherwise a uniformly chosen
/// wrong container.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedGenerator {
    q: f64,
    seed: u64,
}

/// Uniform over `containers`, skipping `avoid` when it is one of them.
fn pick_other(rng: &mut ChaCha8Rng, containers: &[Name], avoid: Option<&Name>) -> Name {
    let skip = avoid.and_then(|a| containers.iter().position(|c| c == a));
    let n = containers.len() - usize::from(skip.is_some());
    let mut i = rng.random_range(0..n);
    if skip.is_some_and(|s| i >= s) {
        i += 1;
    }
    containers[i].clone()
}

impl ScriptedGenerator {
    pub fn new(q: f64, seed: u64) -> Result<Self, ScalingError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(ScalingError::InvalidConfig(format!("step accuracy q = {q} outside [0, 1]")));
        }
        Ok(ScriptedGenerator { q, seed })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    fn rng(&self, parts: [u64; 3]) -> ChaCha8Rng {
        let s = parts.into_iter().fold(mix64(self.seed), |h, x| mix64(h ^ x));
        ChaCha8Rng::seed_from_u64(s)
    }

    fn step(&self, rng: &mut ChaCha8Rng, problem: &Problem, i: usize) -> TraceStep {
        let gold = problem.gold.states.get(i);
        let location = match gold {
            Some(g) if rng.random_bool(self.q) => g.clone(),
            _ => Location::At(pick_other(rng, &problem.containers, gold.and_then(Location::name))),
        };
        TraceStep {
            index: i + 1,
            action_echo: problem.action_text(i).to_string(),
            rationale: String::new(),
            statement: Statement::for_question(&problem.question, location),
        }
    }

    /// Trace number `idx` for `problem`.
    pub fn trace(&self, problem: &Problem, idx: u64) -> Trace {
        let mut rng = self.rng([problem.story_id, idx, 0]);
        let mut all_correct = true;
        let steps: Vec<TraceStep> = (0..problem.num_steps())
            .map(|i| {
                let s = self.step(&mut rng, problem, i);
                all_correct &= s.statement.location() == problem.gold.states.get(i);
                s
            })
            .collect();
        let final_answer = if all_correct {
            problem.gold_answer()
        } else {
            Location::At(pick_other(&mut rng, &problem.containers, Some(&problem.gold.final_answer)))
        };
        Trace { steps, final_answer }
    }
}

impl CandidateGenerator for ScriptedGenerator {
    fn sample_traces(&self, problem: &Problem, start: u64, n: usize) -> Result<Vec<Trace>, ScalingError> {
        Ok((start..start + n as u64).map(|i| self.trace(problem, i)).collect())
    }

    fn propose_steps(
        &self,
        problem: &Problem,
        prefix: &[TraceStep],
        path: u64,
        count: usize,
    ) -> Result<Vec<TraceStep>, ScalingError> {
        let depth = prefix.len();
        let mut rng = self.rng([problem.story_id, path, depth as u64 + 1]);
        Ok((0..count).map(|_| self.step(&mut rng, problem, depth)).collect())
    }
}

/// Chat-completion endpoint settings for LLM-backed generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteGeneratorConfig {
    pub url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    /// Completions requested per HTTP call.
    pub n_per_request: usize,
    pub max_in_flight: usize,
    pub timeout_ms: u64,
    pub template_id: String,
    pub note: String,
}

impl Default for RemoteGeneratorConfig {
    fn default() -> Self {
        RemoteGeneratorConfig {
            url: String::new(),
            model: String::new(),
            temperature: 1.0,
            max_tokens: None,
            n_per_request: 8,
            max_in_flight: 4,
            timeout_ms: 120_000,
            template_id: "one_shot_v1".into(),
            note: String::new(),
        }
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

/// Samples traces from a chat-completion model prompted with the one-shot
/// template. Failed requests and unparseable replies are dropped with a
/// warning.
#[derive(Debug, Clone)]
pub struct RemoteGenerator {
    config: RemoteGeneratorConfig,
    client: JsonClient,
}

impl RemoteGenerator {
    pub fn new(config: RemoteGeneratorConfig) -> Result<Self, ScalingError> {
        if config.url.is_empty() {
            return Err(ScalingError::InvalidConfig("remote generator needs a url".into()));
        }
        if config.n_per_request == 0 || config.max_in_flight == 0 {
            return Err(ScalingError::InvalidConfig(
                "n_per_request and max_in_flight must be positive".into(),
            ));
        }
        let client = JsonClient::new(config.timeout_ms);
        Ok(RemoteGenerator { config, client })
    }

    fn prompt(&self, problem: &Problem) -> Result<String, ScalingError> {
        let bundle = problem
            .bundle
            .as_ref()
            .ok_or_else(|| ScalingError::InvalidConfig("remote generation needs a story bundle".into()))?;
        render_prompt(bundle, &problem.question, &self.config.template_id, &self.config.note)
            .map_err(|e| ScalingError::InvalidConfig(e.to_string()))
    }

    fn complete(&self, prompt: &str, n: usize) -> Result<Vec<String>, String> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: self.config.temperature,
            n,
            max_tokens: self.config.max_tokens,
        };
        let resp: ChatResponse = self.client.post(&self.config.url, &body)?;
        Ok(resp.choices.into_iter().filter_map(|c| c.message.content).collect())
    }

    /// Runs `n` completions split into requests, at most `max_in_flight` at
    /// a time; replies come back in request order.
    fn complete_many(&self, prompt: &str, n: usize) -> Vec<String> {
        let per = self.config.n_per_request;
        let sizes: Vec<usize> = (0..n).step_by(per).map(|s| per.min(n - s)).collect();
        let mut out = Vec::with_capacity(n);
        for wave in sizes.chunks(self.config.max_in_flight) {
            let replies: Vec<Result<Vec<String>, String>> = std::thread::scope(|scope| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|&k| scope.spawn(move || self.complete(prompt, k)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().unwrap_or_else(|_| Err("request thread panicked".into())))
                    .collect()
            });
            for r in replies {
                match r {
                    Ok(texts) => out.extend(texts),
                    Err(e) => log::warn!("generation request failed: {e}"),
                }
            }
        }
        out.truncate(n);
        out
    }
}

impl CandidateGenerator for RemoteGenerator {
    fn sample_traces(&self, problem: &Problem, _start: u64, n: usize) -> Result<Vec<Trace>, ScalingError> {
        let prompt = self.prompt(problem)?;
        Ok(self
            .complete_many(&prompt, n)
            .into_iter()
            .filter_map(|text| match parse_trace(&text) {
                Ok(t) => Some(t),
                Err(e) => {
                    log::warn!("story {} order {}: dropping reply: {e}", problem.story_id, problem.question.order);
                    None
                }
            })
            .collect())
    }

    fn propose_steps(
        &self,
        problem: &Problem,
        prefix: &[TraceStep],
        _path: u64,
        count: usize,
    ) -> Result<Vec<TraceStep>, ScalingError> {
        let mut prompt = self.prompt(problem)?;
        prompt.extend(prefix.iter().map(render_step));
        let index = prefix.len() + 1;
        prompt.push_str(&format!("## Step {index} ##\n"));
        Ok(self
            .complete_many(&prompt, count)
            .iter()
            .map(|text| parse_step(index, text))
            .collect())
    }

    fn batch_size(&self) -> usize {
        self.config.n_per_request * self.config.max_in_flight
    }
}
