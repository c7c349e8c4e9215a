use rand::seq::SliceRandom;

use deltom::logic::Agent;
use deltom::scaling::{CandidateGenerator, Problem, ScriptedGenerator};
use deltom::story::{GoldTrace, Location, Question};
use deltom::testkit::rng;
use deltom::trace::{Statement, TraceStep};
use deltom::verifier::{step_uniform, ScoreContext, Verifier, VerifierError, VerifierSpec};

fn noisy(acc: f64, seed: u64) -> Verifier {
    Verifier::new(VerifierSpec::Noisy {
        accuracy: [acc; 5],
        seed,
    })
    .unwrap()
}

fn fixture(len: usize) -> (Question, GoldTrace, Vec<TraceStep>) {
    let q = Question::new(vec![Agent::new("A"), Agent::new("B")], "ball");
    let states: Vec<Location> = (0..len).map(|i| Location::At(format!("c{}", i % 3).into())).collect();
    let steps = states
        .iter()
        .enumerate()
        .map(|(i, l)| TraceStep {
            index: i + 1,
            action_echo: format!("{} line", i + 1),
            rationale: String::new(),
            statement: Statement::for_question(&q, l.clone()),
        })
        .collect();
    let gold = GoldTrace {
        final_answer: "c0".into(),
        states,
    };
    (q, gold, steps)
}

#[test]
fn flip_rate_matches_accuracy() {
    let (q, gold, steps) = fixture(100);
    let v = noisy(0.9, 123);
    let ctx = ScoreContext::new(5, &[], &q, &gold);
    let mut flips = 0;
    for t in 0..100 {
        let scores = v.score_trace::<f64>(&ctx.with_trace(t), &deltom::trace::Trace {
            steps: steps.clone(),
            final_answer: Location::at("c0"),
        })
        .unwrap();
        flips += scores.iter().filter(|s| s.value() != 1.0).count();
    }
    let rate = flips as f64 / 10_000.0;
    assert!((rate - 0.10).abs() <= 0.01, "flip rate {rate}");
}

#[test]
fn lower_accuracy_only_adds_flips() {
    let g = ScriptedGenerator::new(0.6, 1).unwrap();
    let p = Problem::synthetic(9, 40, 3);
    let ctx = p.score_context();
    let traces = g.sample_traces(&p, 0, 100).unwrap();
    let (hi, lo) = (noisy(0.95, 7), noisy(0.7, 7));
    for (t, tr) in traces.iter().enumerate() {
        let c = ctx.with_trace(t as u64);
        for (i, s) in tr.steps.iter().enumerate() {
            let label = c.is_correct(s, i);
            let a = hi.score_step::<f64>(&c, &[], s, i).unwrap().value() == f64::from(u8::from(label));
            let b = lo.score_step::<f64>(&c, &[], s, i).unwrap().value() == f64::from(u8::from(label));
            // a step the worse verifier gets right, the better one gets right too
            assert!(a || !b);
        }
    }
}

#[test]
fn scores_do_not_depend_on_call_order() {
    let (q, gold, steps) = fixture(30);
    let ctx = ScoreContext::new(2, &[], &q, &gold);
    let v = Verifier::new(VerifierSpec::noisy_3b(11)).unwrap();
    let mut jobs: Vec<(u64, usize)> = (0..20).flat_map(|t| (0..30).map(move |i| (t, i))).collect();
    let score = |&(t, i): &(u64, usize)| v.score_step::<f64>(&ctx.with_trace(t), &[], &steps[i], i).unwrap().value();
    let forward: Vec<f64> = jobs.iter().map(score).collect();
    let mut keyed: Vec<((u64, usize), f64)> = jobs.iter().copied().zip(forward).collect();
    jobs.shuffle(&mut rng(4));
    let shuffled: Vec<((u64, usize), f64)> = jobs.iter().map(|j| (*j, score(j))).collect();
    let mut sorted = shuffled.clone();
    sorted.sort_by_key(|(k, _)| *k);
    keyed.sort_by_key(|(k, _)| *k);
    assert_eq!(keyed, sorted);
}

#[test]
fn uniform_draws_look_uniform() {
    let n = 100_000;
    let mut buckets = [0u32; 10];
    for i in 0..n {
        let u = step_uniform(1, i / 100, 77, i % 100, i % 7);
        assert!((0.0..1.0).contains(&u));
        buckets[(u * 10.0) as usize] += 1;
    }
    for b in buckets {
        assert!((b as f64 - 10_000.0).abs() < 500.0, "{buckets:?}");
    }
}

#[test]
fn out_of_range_accuracy_rejected() {
    let err = Verifier::new(VerifierSpec::Noisy {
        accuracy: [0.9, 0.9, 1.2, 0.9, 0.9],
        seed: 0,
    })
    .unwrap_err();
    assert_eq!(err, VerifierError::InvalidAccuracy(1.2));
}
