//! Remote scorer and generator against a throwaway local HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};

use deltom::scaling::{
    run_bon, score_candidates, AggregationRule, CandidateGenerator, Problem, Ranking, RemoteGenerator,
    RemoteGeneratorConfig, ScalingError,
};
use deltom::story::{generate_story, StoryConfig};
use deltom::trace::{render_trace, Trace};
use deltom::verifier::{RemoteScorerConfig, Verifier, VerifierError, VerifierSpec};

type Handler = dyn Fn(&Value) -> (u16, Value) + Send + Sync;

/// Serves JSON POSTs on a random port until the process exits. Returns the
/// base url and a log of received bodies.
fn serve(handler: Arc<Handler>) -> (String, Arc<Mutex<Vec<Value>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let log = Arc::new(Mutex::new(Vec::new()));
    let seen = log.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let handler = handler.clone();
            let seen = seen.clone();
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = line.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            len = v.trim().parse().unwrap();
                        }
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let req: Value = serde_json::from_slice(&body).unwrap();
                let (status, reply) = handler(&req);
                seen.lock().unwrap().push(req);
                let text = reply.to_string();
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                );
            });
        }
    });
    (url, log)
}

fn problem(seed: u64, qi: usize) -> Problem {
    Problem::from_bundle(Arc::new(generate_story(&StoryConfig::default().with_seed(seed)).unwrap()), qi)
}

#[test]
fn remote_scorer_round_trip() {
    let (url, log) = serve(Arc::new(|req: &Value| {
        // longer prefixes score lower; out-of-range values get clamped
        let depth = req["prefix"].as_array().unwrap().len() as f64;
        (200, json!({ "score": 1.5 - 0.25 * depth }))
    }));
    let v = Verifier::new(VerifierSpec::Remote(RemoteScorerConfig {
        url: format!("{url}/score"),
        timeout_ms: 5_000,
    }))
    .unwrap();
    let p = problem(1, 2);
    let gold = Trace::gold(p.bundle.as_ref().unwrap(), 2);
    let scores = v.score_trace::<f64>(&p.score_context(), &gold).unwrap();
    assert_eq!(scores.len(), gold.steps.len());
    assert_eq!(scores[0].value(), 1.0);
    assert_eq!(scores[3].value(), 0.75);
    assert!(scores.iter().skip(7).all(|s| s.value() == 0.0));

    let log = log.lock().unwrap();
    assert_eq!(log.len(), gold.steps.len());
    let first = log.iter().find(|r| r["prefix"].as_array().unwrap().is_empty()).unwrap();
    assert_eq!(first["question"], json!(p.question.text()));
    assert_eq!(first["story_lines"].as_array().unwrap().len(), p.story_lines.len());
    assert!(first["step_text"].as_str().unwrap().ends_with(&gold.steps[0].statement.text().unwrap()));
}

#[test]
fn remote_scorer_failure_is_reported() {
    let (url, _) = serve(Arc::new(|_: &Value| (500, json!({ "error": "down" }))));
    let v = Verifier::new(VerifierSpec::Remote(RemoteScorerConfig {
        url,
        timeout_ms: 5_000,
    }))
    .unwrap();
    let p = problem(2, 0);
    let gold = Trace::gold(p.bundle.as_ref().unwrap(), 0);
    let err = v.score_step::<f64>(&p.score_context(), &[], &gold.steps[0], 0).unwrap_err();
    assert!(matches!(err, VerifierError::RemoteUnavailable(_)));
}

fn chat_reply(texts: &[String]) -> Value {
    json!({ "choices": texts.iter().map(|t| json!({ "message": { "role": "assistant", "content": t } })).collect::<Vec<_>>() })
}

#[test]
fn remote_generator_samples_and_scores() {
    let p = problem(3, 1);
    let gold_text = render_trace(&Trace::gold(p.bundle.as_ref().unwrap(), 1));
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let (url, log) = serve(Arc::new(move |req: &Value| {
        let n = req["n"].as_u64().unwrap() as usize;
        // every third call returns one garbage completion
        let k = counter.fetch_add(1, Ordering::SeqCst);
        let mut texts = vec![gold_text.clone(); n];
        if k.is_multiple_of(3) {
            texts[0] = "I cannot answer that.".into();
        }
        (200, chat_reply(&texts))
    }));
    let cfg = RemoteGeneratorConfig {
        url: format!("{url}/v1/chat/completions"),
        model: "test-model".into(),
        n_per_request: 4,
        max_in_flight: 2,
        timeout_ms: 5_000,
        ..RemoteGeneratorConfig::default()
    };
    let g = RemoteGenerator::new(cfg).unwrap();
    let traces = g.sample_traces(&p, 0, 10).unwrap();
    assert!(traces.len() < 10 && !traces.is_empty());
    assert!(traces.iter().all(|t| t.final_answer == p.gold_answer()));

    let req = log.lock().unwrap()[0].clone();
    assert_eq!(req["model"], "test-model");
    let prompt = req["messages"][0]["content"].as_str().unwrap();
    assert!(prompt.contains(&p.question.text()));
    assert!(prompt.ends_with("<trace>\n"));

    // dropped replies surface as a shortfall to best-of-N
    let err = score_candidates::<f64, _>(&p, &g, &Verifier::exact(), 12).unwrap_err();
    assert!(matches!(err, ScalingError::GeneratorFailure { wanted: 12, .. }));
}

#[test]
fn remote_generator_drives_best_of_n() {
    let p = problem(4, 4);
    let gold_text = render_trace(&Trace::gold(p.bundle.as_ref().unwrap(), 4));
    let (url, _) = serve(Arc::new(move |req: &Value| {
        let n = req["n"].as_u64().unwrap() as usize;
        (200, chat_reply(&vec![gold_text.clone(); n]))
    }));
    let g = RemoteGenerator::new(RemoteGeneratorConfig {
        url,
        timeout_ms: 5_000,
        ..RemoteGeneratorConfig::default()
    })
    .unwrap();
    let s = run_bon::<f64, _>(&p, &g, &Verifier::exact(), 5, AggregationRule::Min, Ranking::Vanilla).unwrap();
    assert_eq!(s.answer, p.gold_answer());
}

#[test]
fn remote_generator_continues_a_prefix() {
    let p = problem(5, 2);
    let gold = Trace::gold(p.bundle.as_ref().unwrap(), 2);
    let next = gold.steps[3].clone();
    let reply = format!(
        "{}\n{}\n{}\n\n## Step 5 ##\nrunaway text\n",
        next.action_echo,
        next.rationale,
        next.statement.text().unwrap()
    );
    let (url, log) = serve(Arc::new(move |req: &Value| {
        let n = req["n"].as_u64().unwrap() as usize;
        (200, chat_reply(&vec![reply.clone(); n]))
    }));
    let g = RemoteGenerator::new(RemoteGeneratorConfig {
        url,
        timeout_ms: 5_000,
        ..RemoteGeneratorConfig::default()
    })
    .unwrap();
    let steps = g.propose_steps(&p, &gold.steps[..3], 0, 2).unwrap();
    assert_eq!(steps, vec![next.clone(), next]);
    let prompt = log.lock().unwrap()[0]["messages"][0]["content"].as_str().unwrap().to_string();
    assert!(prompt.ends_with("## Step 4 ##\n"));
    assert!(prompt.contains("## Step 3 ##"));
}

#[test]
fn unreachable_generator_yields_nothing() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let g = RemoteGenerator::new(RemoteGeneratorConfig {
        url,
        timeout_ms: 2_000,
        ..RemoteGeneratorConfig::default()
    })
    .unwrap();
    assert!(g.sample_traces(&problem(6, 0), 0, 3).unwrap().is_empty());
}
