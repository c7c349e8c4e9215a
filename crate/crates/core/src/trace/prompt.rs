use crate::story::{Question, StoryBundle};

use super::TraceError;

/// One-shot prompt with a fully worked order-3 example.
pub const ONE_SHOT_V1: &str = include_str!("../../data/templates/one_shot_v1.txt");

pub fn template(id: &str) -> Option<&'static str> {
    match id {
        "one_shot_v1" => Some(ONE_SHOT_V1),
        _ => None,
    }
}

/// Fills `{note}`, `{story}` and `{question}` in a single pass, so
/// substituted text is never itself expanded.
pub fn render_prompt(
    bundle: &StoryBundle,
    question: &Question,
    template_id: &str,
    note: &str,
) -> Result<String, TraceError> {
    let tpl = template(template_id).ok_or_else(|| TraceError::UnknownTemplate(template_id.to_string()))?;
    let story = bundle.story_text();
    let question = question.text();
    let mut out = String::with_capacity(tpl.len() + story.len() + note.len());
    let mut rest = tpl;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let (value, len) = [("{note}", note), ("{story}", story.as_str()), ("{question}", question.as_str())]
            .into_iter()
            .find(|(key, _)| tail.starts_with(key))
            .map_or(("{", 1), |(key, v)| (v, key.len()));
        out.push_str(value);
        rest = &tail[len..];
    }
    out.push_str(rest);
    Ok(out)
}
