pub mod analyze;
pub mod gen;
pub mod sample;
pub mod scale;
pub mod verify;

use std::sync::Arc;

use deltom::scaling::{CandidateGenerator, Problem, RemoteGenerator, ScriptedGenerator};
use deltom::story::StoryBundle;

use crate::config::GeneratorSpec;
use crate::failure::{Failure, ResultExt};

pub fn build_generator(spec: &GeneratorSpec, seed: u64) -> Result<Box<dyn CandidateGenerator>, Failure> {
    Ok(match spec {
        GeneratorSpec::Scripted { q } => Box::new(ScriptedGenerator::new(*q, seed).config()?),
        GeneratorSpec::Remote(cfg) => Box::new(RemoteGenerator::new(cfg.clone()).config()?),
    })
}

/// Every (story, question) pair, in file order.
pub fn problems(bundles: Vec<StoryBundle>) -> Vec<Problem> {
    bundles
        .into_iter()
        .flat_map(|b| {
            let b = Arc::new(b);
            (0..b.questions.len()).map(move |qi| Problem::from_bundle(b.clone(), qi))
        })
        .collect()
}
