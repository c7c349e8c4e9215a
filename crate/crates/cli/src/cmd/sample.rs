use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use deltom::trace::render_trace;

use crate::config::RunConfig;
use crate::failure::{Failure, ResultExt};
use crate::io::{read_stories, OutDir, TraceRecord};

use super::{build_generator, problems};

/// Writes `n` candidate traces per question to `traces.jsonl`.
pub fn run(cfg: &RunConfig, stories: &Path, n: usize, out: &OutDir) -> Result<(), Failure> {
    cfg.validate().config()?;
    let generator = build_generator(&cfg.generator, cfg.seed)?;
    let problems = problems(read_stories(stories).data()?);
    let lines: Vec<Vec<String>> = problems
        .par_iter()
        .map(|p| -> anyhow::Result<Vec<String>> {
            let traces = match generator.sample_traces(p, 0, n) {
                Ok(t) => t,
                Err(e) => {
                    log::warn!("story {} order {}: {e}", p.story_id, p.question.order);
                    Vec::new()
                }
            };
            traces
                .iter()
                .map(|t| {
                    Ok(serde_json::to_string(&TraceRecord {
                        story_id: p.story_id,
                        order: p.question.order,
                        trace: render_trace(t),
                    })?)
                })
                .collect()
        })
        .collect::<anyhow::Result<_>>()
        .data()?;
    let mut w = out.create("traces.jsonl").data()?;
    let mut total = 0;
    for l in lines.iter().flatten() {
        writeln!(w, "{l}").data()?;
        total += 1;
    }
    w.flush().data()?;
    println!("wrote {total} traces for {} questions", problems.len());
    Ok(())
}
