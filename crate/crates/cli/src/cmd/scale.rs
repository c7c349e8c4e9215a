use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use deltom::scaling::{
    majority, run_beam, score_candidates, select, AggregationRule, CandidateGenerator, Problem, Ranking, Selection,
};
use deltom::story::Location;
use deltom::verifier::Verifier;

use crate::config::{MethodKind, RunConfig};
use crate::failure::{Failure, ResultExt};
use crate::io::{read_stories, OutDir};

use super::{build_generator, problems};

#[derive(Debug, Clone, Serialize)]
struct ResultRow {
    question_id: String,
    order: usize,
    method: String,
    rule: String,
    chosen: String,
    gold: String,
    correct: bool,
    error: String,
}

#[derive(Serialize)]
struct SelectionRecord {
    question_id: String,
    method: String,
    rule: String,
    answer: Location,
    groups: BTreeMap<String, f64>,
    chosen: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
    questions: usize,
    accuracy: BTreeMap<String, Accuracy>,
    selections: Vec<SelectionRecord>,
}

#[derive(Serialize, Default, Clone)]
struct Accuracy {
    per_order: BTreeMap<usize, f64>,
    average: f64,
}

fn method_name(ranking: Ranking) -> &'static str {
    match ranking {
        Ranking::Vanilla => "bon_vanilla",
        Ranking::Weighted => "bon_weighted",
    }
}

fn question_id(p: &Problem) -> String {
    format!("{}_o{}", p.story_id, p.question.order)
}

fn row(p: &Problem, method: &str, rule: &str, sel: &Selection<f64>) -> (ResultRow, SelectionRecord) {
    let gold = p.gold_answer();
    let r = ResultRow {
        question_id: question_id(p),
        order: p.question.order,
        method: method.into(),
        rule: rule.into(),
        chosen: sel.answer.to_string(),
        gold: gold.to_string(),
        correct: sel.answer == gold,
        error: String::new(),
    };
    let s = SelectionRecord {
        question_id: r.question_id.clone(),
        method: method.into(),
        rule: rule.into(),
        answer: sel.answer.clone(),
        groups: sel.groups.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        chosen: sel.chosen,
    };
    (r, s)
}

fn failed(p: &Problem, method: &str, rule: &str, err: &str) -> ResultRow {
    ResultRow {
        question_id: question_id(p),
        order: p.question.order,
        method: method.into(),
        rule: rule.into(),
        chosen: String::new(),
        gold: p.gold_answer().to_string(),
        correct: false,
        error: err.into(),
    }
}

/// The (method, rule) pairs a run reports.
fn arms(cfg: &RunConfig) -> Vec<(String, String)> {
    match cfg.method.kind {
        MethodKind::Beam => vec![("beam".into(), "newest".into())],
        MethodKind::Bon => {
            let rules = cfg.method.rule.map_or(AggregationRule::ALL.to_vec(), |r| vec![r]);
            let rankings = cfg.method.ranking.map_or(vec![Ranking::Vanilla, Ranking::Weighted], |r| vec![r]);
            let mut out: Vec<(String, String)> = rankings
                .iter()
                .flat_map(|&rk| rules.iter().map(move |r| (method_name(rk).to_string(), r.name().to_string())))
                .collect();
            out.push(("majority".into(), "-".into()));
            out
        }
    }
}

fn run_one(
    cfg: &RunConfig,
    p: &Problem,
    generator: &dyn CandidateGenerator,
    verifier: &Verifier,
) -> (Vec<ResultRow>, Vec<SelectionRecord>) {
    let mut rows = Vec::new();
    let mut sels = Vec::new();
    match cfg.method.kind {
        MethodKind::Beam => match run_beam::<f64, _>(p, generator, verifier, cfg.method.beam) {
            Ok(sel) => {
                let (r, s) = row(p, "beam", "newest", &sel);
                rows.push(r);
                sels.push(s);
            }
            Err(e) => {
                log::warn!("{}: {e}", question_id(p));
                rows.push(failed(p, "beam", "newest", &e.to_string()));
            }
        },
        MethodKind::Bon => match score_candidates::<f64, _>(p, generator, verifier, cfg.method.n) {
            Ok(cands) => {
                let rules = cfg.method.rule.map_or(AggregationRule::ALL.to_vec(), |r| vec![r]);
                let rankings = cfg.method.ranking.map_or(vec![Ranking::Vanilla, Ranking::Weighted], |r| vec![r]);
                for &rk in &rankings {
                    for &rule in &rules {
                        let (r, s) = row(p, method_name(rk), rule.name(), &select(&cands, rule, rk));
                        rows.push(r);
                        sels.push(s);
                    }
                }
                let (r, s) = row(p, "majority", "-", &majority(cands.iter().map(|c| &c.answer)));
                rows.push(r);
                sels.push(s);
            }
            Err(e) => {
                log::warn!("{}: {e}", question_id(p));
                for (m, r) in arms(cfg) {
                    rows.push(failed(p, &m, &r, &e.to_string()));
                }
            }
        },
    }
    (rows, sels)
}

fn accuracy(rows: &[ResultRow]) -> BTreeMap<String, Accuracy> {
    let mut tally: BTreeMap<String, BTreeMap<usize, (u64, u64)>> = BTreeMap::new();
    for r in rows {
        let key = format!("{}/{}", r.method, r.rule);
        let e = tally.entry(key).or_default().entry(r.order).or_default();
        e.0 += u64::from(r.correct);
        e.1 += 1;
    }
    tally
        .into_iter()
        .map(|(k, orders)| {
            let per_order: BTreeMap<usize, f64> =
                orders.iter().map(|(&o, &(c, n))| (o, c as f64 / n as f64)).collect();
            let average = per_order.values().sum::<f64>() / per_order.len() as f64;
            (k, Accuracy { per_order, average })
        })
        .collect()
}

pub fn run(cfg: &RunConfig, stories: &Path, out: &OutDir) -> Result<(), Failure> {
    cfg.validate().config()?;
    let generator = build_generator(&cfg.generator, cfg.seed)?;
    let verifier = Verifier::new(cfg.verifier.clone()).config()?;
    let problems = problems(read_stories(stories).data()?);

    let results: Vec<(Vec<ResultRow>, Vec<SelectionRecord>)> = problems
        .par_iter()
        .map(|p| run_one(cfg, p, generator.as_ref(), &verifier))
        .collect();
    let (rows, selections): (Vec<ResultRow>, Vec<SelectionRecord>) = results
        .into_iter()
        .fold((Vec::new(), Vec::new()), |(mut r, mut s), (rr, ss)| {
            r.extend(rr);
            s.extend(ss);
            (r, s)
        });

    let mut w = csv::Writer::from_writer(out.create("results.csv").data()?);
    for r in &rows {
        w.serialize(r).data()?;
    }
    w.flush().data()?;
    let accuracy = accuracy(&rows);
    out.write_json(
        "manifest.json",
        &Manifest {
            command: "scale",
            config: cfg,
            questions: problems.len(),
            accuracy: accuracy.clone(),
            selections,
        },
    )
    .data()?;

    println!("{:<24} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}", "method/rule", "0-th", "1-th", "2-th", "3-th", "4-th", "avg");
    for (k, a) in &accuracy {
        let cell = |o: usize| a.per_order.get(&o).map_or("-".to_string(), |v| format!("{:.1}", 100.0 * v));
        println!(
            "{:<24} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7.1}",
            k,
            cell(0),
            cell(1),
            cell(2),
            cell(3),
            cell(4),
            100.0 * a.average
        );
    }
    let errors = rows.iter().filter(|r| !r.error.is_empty()).count();
    if errors > 0 {
        println!("{errors} result rows failed; see the error column in results.csv");
    }
    Ok(())
}
