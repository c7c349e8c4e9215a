use std::collections::BTreeMap;

use crate::scalar::Scalar;
use crate::story::Location;
use crate::verifier::{StepScore, Verifier};

use super::{to_values, AggregationRule, CandidateGenerator, Method, Problem, Ranking, ScalingError, Selection};

/// Collapses per-step scores into one trace score.
pub fn aggregate<T: Scalar>(scores: &[StepScore<T>], rule: AggregationRule) -> Result<T, ScalingError> {
    let c = ScoredCandidate::from_values(Location::Null, to_values(scores))?;
    Ok(c.aggregate(rule))
}

/// A scored candidate trace reduced to its answer and running aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate<T> {
    pub answer: Location,
    pub steps: usize,
    last: T,
    min: T,
    sum: T,
    prod: T,
}

impl<T: Scalar> ScoredCandidate<T> {
    pub fn from_values(answer: Location, values: impl IntoIterator<Item = T>) -> Result<Self, ScalingError> {
        let mut c = ScoredCandidate {
            answer,
            steps: 0,
            last: T::zero(),
            min: T::infinity(),
            sum: T::zero(),
            prod: T::one(),
        };
        for v in values {
            c.push(v);
        }
        if c.steps == 0 {
            return Err(ScalingError::EmptyTrace);
        }
        Ok(c)
    }

    fn push(&mut self, v: T) {
        self.steps += 1;
        self.last = v;
        self.min = self.min.min(v);
        self.sum = self.sum + v;
        self.prod = self.prod * v;
    }

    pub fn aggregate(&self, rule: AggregationRule) -> T {
        match rule {
            AggregationRule::Last => self.last,
            AggregationRule::Min => self.min,
            AggregationRule::Avg => self.sum / T::of(self.steps as f64),
            AggregationRule::Prod => self.prod,
        }
    }
}

/// Samples `n` traces and scores every step, keeping only each trace's
/// answer and aggregates. Candidate `i` is scored as trace `i`, so results
/// do not depend on batching.
pub fn score_candidates<T: Scalar, G: CandidateGenerator + ?Sized>(
    problem: &Problem,
    generator: &G,
    verifier: &Verifier,
    n: usize,
) -> Result<Vec<ScoredCandidate<T>>, ScalingError> {
    if n == 0 {
        return Err(ScalingError::InvalidConfig("N must be at least 1".into()));
    }
    let ctx = problem.score_context();
    let batch = generator.batch_size().max(1);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let want = batch.min(n - out.len());
        let traces = generator.sample_traces(problem, out.len() as u64, want)?;
        let short = traces.len() < want;
        for trace in traces.into_iter().take(want) {
            let tctx = ctx.with_trace(out.len() as u64);
            let mut values = Vec::with_capacity(trace.steps.len());
            for (i, step) in trace.steps.iter().enumerate() {
                values.push(verifier.score_step::<T>(&tctx, &trace.steps[..i], step, i)?.value());
            }
            out.push(ScoredCandidate::from_values(trace.final_answer, values)?);
        }
        if short {
            return Err(ScalingError::GeneratorFailure {
                wanted: n,
                got: out.len(),
                reason: None,
            });
        }
    }
    Ok(out)
}

pub(super) fn group_sums<T: Scalar>(pairs: impl Iterator<Item = (Location, T)>) -> BTreeMap<Location, T> {
    let mut groups = BTreeMap::new();
    for (answer, v) in pairs {
        let e = groups.entry(answer).or_insert_with(T::zero);
        *e = *e + v;
    }
    groups
}

/// Highest group sum; ties go to the smallest answer (`Null` sorts first,
/// then container names in byte order).
fn best_group<T: Scalar>(groups: &BTreeMap<Location, T>) -> Location {
    let mut best: Option<(&Location, T)> = None;
    for (answer, &v) in groups {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((answer, v));
        }
    }
    best.map(|(a, _)| a.clone()).expect("non-empty candidate set")
}

/// Reranks scored candidates.
///
/// Vanilla picks the highest aggregate (ties to the lowest index); weighted
/// sums aggregates per answer and picks the best group.
pub fn select<T: Scalar>(candidates: &[ScoredCandidate<T>], rule: AggregationRule, ranking: Ranking) -> Selection<T> {
    assert!(!candidates.is_empty(), "select needs at least one candidate");
    let scores: Vec<T> = candidates.iter().map(|c| c.aggregate(rule)).collect();
    let groups = group_sums(candidates.iter().map(|c| c.answer.clone()).zip(scores.iter().copied()));
    match ranking {
        Ranking::Vanilla => {
            let mut chosen = 0;
            for (i, &s) in scores.iter().enumerate() {
                if s > scores[chosen] {
                    chosen = i;
                }
            }
            Selection {
                answer: candidates[chosen].answer.clone(),
                method: Method::VanillaBoN,
                rule: Some(rule),
                scores,
                groups,
                chosen: Some(chosen),
            }
        }
        Ranking::Weighted => Selection {
            answer: best_group(&groups),
            method: Method::WeightedBoN,
            rule: Some(rule),
            scores,
            groups,
            chosen: None,
        },
    }
}

/// Most frequent answer; ties go to the smallest answer.
pub fn majority<'a, T: Scalar>(answers: impl IntoIterator<Item = &'a Location>) -> Selection<T> {
    let answers: Vec<&Location> = answers.into_iter().collect();
    assert!(!answers.is_empty(), "majority needs at least one answer");
    let groups = group_sums(answers.iter().map(|&a| (a.clone(), T::one())));
    Selection {
        answer: best_group(&groups),
        method: Method::Majority,
        rule: None,
        scores: vec![T::one(); answers.len()],
        groups,
        chosen: None,
    }
}

/// Best-of-N: sample `n` traces, score, aggregate with `rule`, rerank.
pub fn run_bon<T: Scalar, G: CandidateGenerator + ?Sized>(
    problem: &Problem,
    generator: &G,
    verifier: &Verifier,
    n: usize,
    rule: AggregationRule,
    ranking: Ranking,
) -> Result<Selection<T>, ScalingError> {
    let candidates = score_candidates(problem, generator, verifier, n)?;
    Ok(select(&candidates, rule, ranking))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> Vec<StepScore<f64>> {
        v.iter().map(|&x| StepScore::new(x).unwrap()).collect()
    }

    #[test]
    fn aggregation_rules() {
        let s = scores(&[0.9, 0.2, 0.8]);
        assert_eq!(aggregate(&s, AggregationRule::Last).unwrap(), 0.8);
        assert_eq!(aggregate(&s, AggregationRule::Min).unwrap(), 0.2);
        assert!((aggregate(&s, AggregationRule::Avg).unwrap() - 1.9 / 3.0).abs() < 1e-12);
        assert!((aggregate(&s, AggregationRule::Prod).unwrap() - 0.144).abs() < 1e-12);
        assert_eq!(aggregate::<f64>(&[], AggregationRule::Min), Err(ScalingError::EmptyTrace));
        for rule in AggregationRule::ALL {
            assert_eq!(aggregate(&scores(&[1.0; 7]), rule).unwrap(), 1.0);
            assert_eq!(aggregate(&scores(&[0.37]), rule).unwrap(), 0.37);
        }
    }

    fn cand(answer: &str, agg: f64) -> ScoredCandidate<f64> {
        ScoredCandidate::from_values(Location::at(answer), [agg]).unwrap()
    }

    #[test]
    fn vanilla_and_weighted_disagree() {
        let cs = [cand("drawer", 0.9), cand("table", 0.5), cand("table", 0.5)];
        let v = select(&cs, AggregationRule::Min, Ranking::Vanilla);
        assert_eq!(v.answer, Location::at("drawer"));
        assert_eq!(v.chosen, Some(0));
        let w = select(&cs, AggregationRule::Min, Ranking::Weighted);
        assert_eq!(w.answer, Location::at("table"));
        assert_eq!(w.groups[&Location::at("table")], 1.0);
    }

    #[test]
    fn ties() {
        let cs = [cand("b", 0.5), cand("a", 0.5)];
        assert_eq!(select(&cs, AggregationRule::Last, Ranking::Vanilla).chosen, Some(0));
        assert_eq!(select(&cs, AggregationRule::Last, Ranking::Weighted).answer, Location::at("a"));
        let answers = [Location::at("b"), Location::at("a"), Location::at("b"), Location::at("a")];
        assert_eq!(majority::<f32>(&answers).answer, Location::at("a"));
    }
}
