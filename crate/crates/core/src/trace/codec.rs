use crate::logic::Agent;
use crate::story::{Location, Name};

use super::{Statement, Trace, TraceError, TraceStep};

fn step_header(line: &str) -> Option<usize> {
    let n = line.trim().strip_prefix("## Step ")?.strip_suffix(" ##")?;
    n.trim().parse().ok()
}

/// Position of the last `[x]` in `s`, as (line start of `[`, inner text).
fn last_bracket(s: &str) -> Option<(usize, &str)> {
    let open = s.rfind('[')?;
    let close = s[open..].find(']')? + open;
    Some((open, &s[open + 1..close]))
}

fn parse_statement(line: &str) -> Statement {
    let Some((open, token)) = last_bracket(line) else {
        return Statement::Malformed;
    };
    let location = Location::parse(token);
    let head = line[..open].trim_end();
    let head = head.strip_suffix(" is in").unwrap_or(head);
    let mut parts: Vec<&str> = head.split(" thinks ").collect();
    let object = parts.pop().unwrap_or_default().trim();
    let object = object
        .strip_prefix("the ")
        .or_else(|| object.strip_prefix("The "))
        .unwrap_or(object);
    Statement::Belief {
        chain: parts.into_iter().map(|a| Agent::new(a.trim())).collect(),
        object: Name::from(object),
        location,
    }
}

fn parse_block(index: usize, lines: &[&str]) -> TraceStep {
    let lines: Vec<&str> = lines.iter().map(|l| l.trim()).filter(|l| !l.is_empty()).collect();
    // last bracketed line is the statement; rationale prose may carry brackets too
    let stmt_at = lines.iter().rposition(|l| last_bracket(l).is_some());
    let (statement, body): (Statement, Vec<&str>) = match stmt_at {
        Some(i) => {
            let mut body = lines[..i].to_vec();
            body.extend_from_slice(&lines[i + 1..]);
            (parse_statement(lines[i]), body)
        }
        None => (Statement::Malformed, lines),
    };
    let (action_echo, rationale) = match body.split_first() {
        Some((echo, rest)) => (echo.to_string(), rest.join("\n")),
        None => (String::new(), String::new()),
    };
    TraceStep {
        index,
        action_echo,
        rationale,
        statement,
    }
}

/// Parses the `## Step k ##` block format. Text before the first header is
/// ignored; a block with no bracketed location becomes a
/// [`Statement::Malformed`] step.
pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    let lines: Vec<&str> = text.lines().collect();
    let final_at = lines.iter().rposition(|l| l.trim_start().starts_with("Final Answer:"));
    let final_answer = final_at
        .and_then(|i| last_bracket(lines[i]))
        .map(|(_, tok)| Location::parse(tok))
        .ok_or_else(|| TraceError::MalformedTrace("no final answer".into()))?;
    let end = final_at.unwrap_or(lines.len());

    let headers: Vec<(usize, usize)> = lines[..end]
        .iter()
        .enumerate()
        .filter_map(|(i, l)| step_header(l).map(|k| (i, k)))
        .collect();
    if headers.is_empty() {
        return Err(TraceError::MalformedTrace("no steps".into()));
    }
    let steps = headers
        .iter()
        .enumerate()
        .map(|(n, &(at, k))| {
            let stop = headers.get(n + 1).map_or(end, |h| h.0);
            parse_block(k, &lines[at + 1..stop])
        })
        .collect();
    Ok(Trace { steps, final_answer })
}

/// One `## Step k ##` block followed by a blank line.
pub fn render_step(step: &TraceStep) -> String {
    let mut out = format!("## Step {} ##\n", step.index);
    if !step.action_echo.is_empty() {
        out.push_str(&step.action_echo);
        out.push('\n');
    }
    if !step.rationale.is_empty() {
        out.push_str(&step.rationale);
        out.push('\n');
    }
    if let Some(s) = step.statement.text() {
        out.push_str(&s);
        out.push('\n');
    }
    out.push('\n');
    out
}

/// Inverse of [`parse_trace`] for well-formed traces.
pub fn render_trace(trace: &Trace) -> String {
    let mut out: String = trace.steps.iter().map(render_step).collect();
    out.push_str(&format!("Final Answer: [{}]\n", trace.final_answer));
    out
}

/// Reads a single step from a continuation: an optional leading header,
/// then lines up to the next header or final-answer line.
pub fn parse_step(index: usize, text: &str) -> TraceStep {
    let mut lines: Vec<&str> = text.lines().skip_while(|l| l.trim().is_empty()).collect();
    if lines.first().is_some_and(|l| step_header(l).is_some()) {
        lines.remove(0);
    }
    let stop = lines
        .iter()
        .position(|l| step_header(l).is_some() || l.trim_start().starts_with("Final Answer:"))
        .unwrap_or(lines.len());
    parse_block(index, &lines[..stop])
}
