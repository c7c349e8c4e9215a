//! Step-level belief verifiers: exact (gold labels), noisy (gold labels
//! flipped at a per-order error rate) and remote (an HTTP scorer).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::JsonClient;
use crate::scalar::Scalar;
use crate::story::{GoldTrace, Question};
use crate::trace::{Trace, TraceStep};

/// Per-order step accuracy of the 8B-parameter process belief model.
pub const PBM_8B_ACCURACY: [f64; 5] = [0.992, 0.946, 0.890, 0.870, 0.799];
/// Per-order step accuracy of the 3B-parameter process belief model.
pub const PBM_3B_ACCURACY: [f64; 5] = [0.991, 0.919, 0.849, 0.838, 0.738];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifierError {
    #[error("accuracy {0} outside [0, 1]")]
    InvalidAccuracy(f64),
    #[error("remote scorer unavailable: {0}")]
    RemoteUnavailable(String),
}

/// A step score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepScore<T>(T);

impl<T: Scalar> StepScore<T> {
    pub fn new(value: T) -> Option<Self> {
        (value >= T::zero() && value <= T::one()).then_some(StepScore(value))
    }

    /// NaN maps to 0.
    pub fn clamped(value: T) -> Self {
        if value.is_nan() {
            return StepScore(T::zero());
        }
        StepScore(value.max(T::zero()).min(T::one()))
    }

    pub fn zero() -> Self {
        StepScore(T::zero())
    }

    pub fn one() -> Self {
        StepScore(T::one())
    }

    pub fn from_label(correct: bool) -> Self {
        if correct {
            Self::one()
        } else {
            Self::zero()
        }
    }

    pub fn value(self) -> T {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteScorerConfig {
    pub url: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VerifierSpec {
    Exact,
    Noisy { accuracy: [f64; 5], seed: u64 },
    Remote(RemoteScorerConfig),
}

impl VerifierSpec {
    pub fn noisy_8b(seed: u64) -> Self {
        VerifierSpec::Noisy {
            accuracy: PBM_8B_ACCURACY,
            seed,
        }
    }

    pub fn noisy_3b(seed: u64) -> Self {
        VerifierSpec::Noisy {
            accuracy: PBM_3B_ACCURACY,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), VerifierError> {
        if let VerifierSpec::Noisy { accuracy, .. } = self {
            if let Some(&bad) = accuracy.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(VerifierError::InvalidAccuracy(bad));
            }
        }
        Ok(())
    }
}

/// Identity of the (story, question, trace) whose steps are being scored.
#[derive(Debug, Clone, Copy)]
pub struct ScoreContext<'a> {
    pub story_id: u64,
    pub story_lines: &'a [String],
    pub question: &'a Question,
    pub gold: &'a GoldTrace,
    pub trace_idx: u64,
    question_hash: u64,
}

impl<'a> ScoreContext<'a> {
    pub fn new(story_id: u64, story_lines: &'a [String], question: &'a Question, gold: &'a GoldTrace) -> Self {
        ScoreContext {
            story_id,
            story_lines,
            question,
            gold,
            trace_idx: 0,
            question_hash: question_hash(question),
        }
    }

    pub fn with_trace(self, trace_idx: u64) -> Self {
        ScoreContext { trace_idx, ..self }
    }

    /// Whether `step` at 0-based `step_index` states the gold location.
    pub fn is_correct(&self, step: &TraceStep, step_index: usize) -> bool {
        match (step.statement.location(), self.gold.states.get(step_index)) {
            (Some(got), Some(want)) => got == want,
            _ => false,
        }
    }
}

/// FNV-1a over the question text.
pub fn question_hash(q: &Question) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    q.text()
        .bytes()
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` for one step, a pure function of its identity.
///
/// `h0 = mix64(seed)`, then `h = mix64(h ^ (x + 0x9e3779b97f4a7c15))` for
/// `x` in (story id, question hash, trace index, step index); the top 53
/// bits of `h` scaled by `2^-53`.
pub fn step_uniform(seed: u64, story_id: u64, question_hash: u64, trace_idx: u64, step_idx: u64) -> f64 {
    const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
    let h = [story_id, question_hash, trace_idx, step_idx]
        .into_iter()
        .fold(mix64(seed), |h, x| mix64(h ^ x.wrapping_add(GAMMA)));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    question: String,
    story_lines: &'a [String],
    step_text: String,
    prefix: Vec<String>,
}

#[derive(Deserialize)]
struct RemoteResponse {
    score: f64,
}

fn step_text(step: &TraceStep) -> String {
    let mut lines = vec![step.action_echo.clone()];
    if !step.rationale.is_empty() {
        lines.push(step.rationale.clone());
    }
    lines.extend(step.statement.text());
    lines.join("\n")
}

/// A constructed verifier; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Verifier {
    spec: VerifierSpec,
    client: Option<JsonClient>,
}

impl Verifier {
    pub fn new(spec: VerifierSpec) -> Result<Self, VerifierError> {
        spec.validate()?;
        let client = match &spec {
            VerifierSpec::Remote(cfg) => Some(JsonClient::new(cfg.timeout_ms)),
            _ => None,
        };
        Ok(Verifier { spec, client })
    }

    pub fn exact() -> Self {
        Verifier {
            spec: VerifierSpec::Exact,
            client: None,
        }
    }

    pub fn spec(&self) -> &VerifierSpec {
        &self.spec
    }

    /// Scores the step at 0-based `step_index`; `prefix` holds the steps
    /// before it (used only by the remote scorer). Steps past the gold
    /// trace and malformed steps score 0 under exact and noisy scoring.
    pub fn score_step<T: Scalar>(
        &self,
        ctx: &ScoreContext<'_>,
        prefix: &[TraceStep],
        step: &TraceStep,
        step_index: usize,
    ) -> Result<StepScore<T>, VerifierError> {
        match &self.spec {
            VerifierSpec::Exact => Ok(StepScore::from_label(ctx.is_correct(step, step_index))),
            VerifierSpec::Noisy { accuracy, seed } => {
                let correct = ctx.is_correct(step, step_index);
                let acc = accuracy[ctx.question.order.min(accuracy.len() - 1)];
                let u = step_uniform(*seed, ctx.story_id, ctx.question_hash, ctx.trace_idx, step_index as u64);
                Ok(StepScore::from_label(if u < acc { correct } else { !correct }))
            }
            VerifierSpec::Remote(cfg) => {
                let client = self.client.as_ref().expect("remote verifier has a client");
                let body = RemoteRequest {
                    question: ctx.question.text(),
                    story_lines: ctx.story_lines,
                    step_text: step_text(step),
                    prefix: prefix.iter().map(step_text).collect(),
                };
                let resp: RemoteResponse = client.post(&cfg.url, &body).map_err(VerifierError::RemoteUnavailable)?;
                Ok(StepScore::clamped(T::of(resp.score)))
            }
        }
    }

    pub fn score_trace<T: Scalar>(
        &self,
        ctx: &ScoreContext<'_>,
        trace: &Trace,
    ) -> Result<Vec<StepScore<T>>, VerifierError> {
        trace
            .steps
            .iter()
            .enumerate()
            .map(|(i, step)| self.score_step(ctx, &trace.steps[..i], step, i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Agent;
    use crate::story::Location;
    use crate::trace::Statement;

    fn fixture() -> (Question, GoldTrace) {
        let q = Question::new(vec![Agent::new("A")], "ball");
        let gold = GoldTrace {
            states: vec![Location::Null, Location::at("box"), Location::at("box")],
            final_answer: "box".into(),
        };
        (q, gold)
    }

    fn step(q: &Question, i: usize, loc: &str) -> TraceStep {
        TraceStep {
            index: i + 1,
            action_echo: String::new(),
            rationale: String::new(),
            statement: Statement::for_question(q, Location::parse(loc)),
        }
    }

    #[test]
    fn exact_scores() {
        let (q, gold) = fixture();
        let ctx = ScoreContext::new(0, &[], &q, &gold);
        let v = Verifier::exact();
        let trace = Trace {
            steps: vec![step(&q, 0, "Null"), step(&q, 1, "box"), step(&q, 2, "bag"), step(&q, 3, "box")],
            final_answer: Location::at("box"),
        };
        let s: Vec<f64> = v.score_trace(&ctx, &trace).unwrap().into_iter().map(StepScore::value).collect();
        assert_eq!(s, [1.0, 1.0, 0.0, 0.0]);
        let mal = TraceStep {
            statement: Statement::Malformed,
            ..step(&q, 0, "Null")
        };
        assert_eq!(v.score_step::<f32>(&ctx, &[], &mal, 0).unwrap().value(), 0.0);
    }

    #[test]
    fn noisy_with_perfect_accuracy_is_exact() {
        let (q, gold) = fixture();
        let noisy = Verifier::new(VerifierSpec::Noisy {
            accuracy: [1.0; 5],
            seed: 9,
        })
        .unwrap();
        for t in 0..50 {
            let ctx = ScoreContext::new(3, &[], &q, &gold).with_trace(t);
            for (i, loc) in ["Null", "bag", "box"].iter().enumerate() {
                let s = step(&q, i, loc);
                let a: StepScore<f64> = noisy.score_step(&ctx, &[], &s, i).unwrap();
                let b: StepScore<f64> = Verifier::exact().score_step(&ctx, &[], &s, i).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn uniform_is_in_unit_interval_and_deterministic() {
        for i in 0..1000 {
            let u = step_uniform(1, 2, 3, 4, i);
            assert!((0.0..1.0).contains(&u));
            assert_eq!(u, step_uniform(1, 2, 3, 4, i));
        }
        assert_ne!(step_uniform(1, 2, 3, 4, 5), step_uniform(2, 2, 3, 4, 5));
    }

    #[test]
    fn invalid_accuracy_rejected() {
        let spec = VerifierSpec::Noisy {
            accuracy: [1.0, 1.1, 1.0, 1.0, 1.0],
            seed: 0,
        };
        assert_eq!(Verifier::new(spec).unwrap_err(), VerifierError::InvalidAccuracy(1.1));
    }

    #[test]
    fn step_score_bounds() {
        assert!(StepScore::new(1.5f64).is_none());
        assert_eq!(StepScore::clamped(-0.2f32).value(), 0.0);
        assert_eq!(StepScore::clamped(f64::NAN).value(), 0.0);
        assert_eq!(StepScore::clamped(2.0f64).value(), 1.0);
    }

    #[test]
    fn spec_json_shape() {
        let s = serde_json::to_string(&VerifierSpec::noisy_8b(7)).unwrap();
        assert_eq!(s, r#"{"kind":"noisy","accuracy":[0.992,0.946,0.89,0.87,0.799],"seed":7}"#);
        let r: VerifierSpec = serde_json::from_str(r#"{"kind":"remote","url":"http://x/score"}"#).unwrap();
        assert_eq!(
            r,
            VerifierSpec::Remote(RemoteScorerConfig {
                url: "http://x/score".into(),
                timeout_ms: 30_000
            })
        );
    }
}
