use std::io::Write;
use std::path::Path;

use serde::Serialize;

use deltom::trace::{assemble_dataset, parse_trace, CandidateTrace};

use crate::failure::{Failure, ResultExt};
use crate::io::{read_jsonl, read_stories, OutDir, TraceRecord};

const ORDERS: usize = 5;

#[derive(Serialize, Default)]
struct Summary {
    records: usize,
    malformed: usize,
    orphans: usize,
    /// Correct and total step labels per belief order.
    steps_correct: [u64; ORDERS],
    steps_total: [u64; ORDERS],
    answers_correct: u64,
}

fn pct(num: u64, den: u64) -> String {
    if den == 0 {
        "-".into()
    } else {
        format!("{:.1}", 100.0 * num as f64 / den as f64)
    }
}

pub fn run(stories: &Path, traces: &Path, out: &OutDir) -> Result<(), Failure> {
    let bundles = read_stories(stories).data()?;
    let records: Vec<TraceRecord> = read_jsonl(traces).data()?;
    let mut summary = Summary::default();
    let mut candidates = Vec::with_capacity(records.len());
    for (i, r) in records.into_iter().enumerate() {
        match parse_trace(&r.trace) {
            Ok(trace) => candidates.push(CandidateTrace {
                story_id: r.story_id,
                order: r.order,
                trace,
            }),
            Err(e) => {
                log::warn!("trace record {}: {e}", i + 1);
                summary.malformed += 1;
            }
        }
    }
    let mut dataset = out.create("dataset.jsonl").data()?;
    for rec in assemble_dataset(&bundles, candidates) {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{e}");
                summary.orphans += 1;
                continue;
            }
        };
        let o = rec.order.min(ORDERS - 1);
        summary.records += 1;
        summary.steps_correct[o] += rec.step_labels.iter().map(|&l| u64::from(l)).sum::<u64>();
        summary.steps_total[o] += rec.step_labels.len() as u64;
        summary.answers_correct += u64::from(rec.final_answer.name() == Some(&rec.gold_answer));
        serde_json::to_writer(&mut dataset, &rec).data()?;
        writeln!(dataset).data()?;
    }
    dataset.flush().data()?;
    out.write_json("verify_summary.json", &summary).data()?;

    println!("step accuracy (%) by belief order");
    println!("{:>8} {:>8} {:>8} {:>8} {:>8} {:>8}", "0-th", "1-th", "2-th", "3-th", "4-th", "avg");
    let cells: Vec<String> = (0..ORDERS)
        .map(|o| pct(summary.steps_correct[o], summary.steps_total[o]))
        .collect();
    let avg = pct(summary.steps_correct.iter().sum(), summary.steps_total.iter().sum());
    println!(
        "{:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        cells[0], cells[1], cells[2], cells[3], cells[4], avg
    );
    println!(
        "{} records labeled, {} malformed, {} orphaned; final-answer accuracy {}%",
        summary.records,
        summary.malformed,
        summary.orphans,
        pct(summary.answers_correct, summary.records as u64)
    );
    Ok(())
}
