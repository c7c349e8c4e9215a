use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use deltom::story::generate_story;
use deltom::trace::render_prompt;
use deltom::verifier::mix64;

use crate::config::RunConfig;
use crate::failure::{Failure, ResultExt};
use crate::io::OutDir;

/// Stories generated and written per batch; bounds memory at large counts.
const CHUNK: u64 = 512;

pub fn story_seed(root: u64, id: u64) -> u64 {
    mix64(root ^ mix64(id))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
    count: u64,
    questions: u64,
    with_communication: u64,
}

struct Rendered {
    json: String,
    prompts: Vec<(String, String)>,
    questions: u64,
    communication: bool,
}

pub fn run(cfg: &RunConfig, count: u64, out: &OutDir) -> Result<(), Failure> {
    cfg.validate().config()?;
    let mut stories = out.create("stories.jsonl").data()?;
    let (mut questions, mut communication) = (0, 0);
    let mut start = 0;
    while start < count {
        let end = (start + CHUNK).min(count);
        let batch: Vec<Rendered> = (start..end)
            .into_par_iter()
            .map(|id| -> anyhow::Result<Rendered> {
                let mut b = generate_story(&cfg.story.with_seed(story_seed(cfg.seed, id)))?;
                b.id = id;
                let prompts = b
                    .questions
                    .iter()
                    .map(|q| {
                        let text = render_prompt(&b, q, &cfg.prompt.template_id, &cfg.prompt.note)?;
                        Ok((format!("prompts/{id:06}_o{}.txt", q.order), text))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                Ok(Rendered {
                    json: serde_json::to_string(&b)?,
                    prompts,
                    questions: b.questions.len() as u64,
                    communication: b.has_communication(),
                })
            })
            .collect::<anyhow::Result<_>>()
            .invariant()?;
        for r in batch {
            writeln!(stories, "{}", r.json).data()?;
            for (name, text) in &r.prompts {
                let mut f = out.create(name).data()?;
                f.write_all(text.as_bytes()).data()?;
                f.flush().data()?;
            }
            questions += r.questions;
            communication += u64::from(r.communication);
        }
        log::info!("generated {end}/{count} stories");
        start = end;
    }
    stories.flush().data()?;
    out.write_json(
        "manifest.json",
        &Manifest {
            command: "gen",
            config: cfg,
            count,
            questions,
            with_communication: communication,
        },
    )
    .data()?;
    println!(
        "wrote {count} stories, {questions} questions ({communication} stories with claims or tells) to {}",
        out.path("").display()
    );
    Ok(())
}
