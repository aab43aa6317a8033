use std::collections::HashMap;

use serde::Serialize;

use super::{block, Closed, Engine, EngineError, Opened, Round};
use crate::frame::Role;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("line {line}: expected `manager: <text>` or `customer: <text>`")]
    Syntax { line: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptLine {
    pub role: Role,
    pub text: String,
}

/// Script lines are `manager: text` or `customer: text`; blank lines and
/// `#` comments are skipped.
pub fn parse_script(src: &str) -> Result<Vec<ScriptLine>, ReplayError> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (who, text) = line.split_once(':').ok_or(ReplayError::Syntax { line: i + 1 })?;
        let role = who.trim().parse::<Role>().map_err(|_| ReplayError::Syntax { line: i + 1 })?;
        out.push(ScriptLine { role, text: text.trim().to_string() });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum Event {
    Open(Opened),
    Round(Round),
    Close(Closed),
}

/// Run a script. Each role talks to its own session, opened on first use
/// and again after a quit; sessions still open at the end are closed.
pub fn replay(engine: &Engine, script: &[ScriptLine]) -> Result<Vec<Event>, ReplayError> {
    let mut events = Vec::new();
    let mut open: HashMap<Role, String> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for line in script {
        let id = match open.get(&line.role) {
            Some(id) => id.clone(),
            None => {
                let o = engine.open_session(line.role)?;
                open.insert(line.role, o.id.clone());
                order.push(o.id.clone());
                events.push(Event::Open(o.clone()));
                o.id
            }
        };
        let round = engine.run_round(&id, &line.text)?;
        let closed = round.closed;
        events.push(Event::Round(round));
        if closed {
            open.remove(&line.role);
            if let Some(c) = engine.with_session(&id, |s| s.closed.clone())? {
                events.push(Event::Close(c));
            }
        }
    }
    for id in order {
        if open.values().any(|v| *v == id) {
            events.push(Event::Close(engine.close_session(&id)?));
        }
    }
    Ok(events)
}

/// Line-delimited JSON, one event per line. Without `timings` the output
/// depends only on the script and the backends.
pub fn to_jsonl(events: &[Event], timings: bool) -> String {
    let mut out = String::new();
    for e in events {
        let mut v = serde_json::to_value(e).expect("events serialize");
        if !timings {
            if let Some(o) = v.as_object_mut() {
                o.remove("timing");
            }
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

fn speakers(role: Role) -> (&'static str, &'static str) {
    match role {
        Role::Manager => ("Employee", "ManagerBot"),
        Role::Customer => ("Customer", "ServiceBot"),
    }
}

/// Human-readable transcript without timings.
pub fn render(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        match e {
            Event::Open(o) => {
                out.push_str(&format!("-- {} opens a {} session --\n", o.id, o.role));
                out.push_str(&format!("{}: {}\n", speakers(o.role).1, o.greeting));
            }
            Event::Round(r) => {
                let (user, bot) = speakers(r.role);
                out.push_str(&format!("{user}: {}\n", r.utterance));
                out.push_str(&format!("    semantics: {}\n", block(&r.frames)));
                out.push_str(&format!("    next action: {}\n", block(&r.predicates)));
                out.push_str(&format!("{bot}: {}\n", r.text));
            }
            Event::Close(c) => {
                let mut line = format!("-- {} closed (kb v{}, state v{})", c.id, c.kb_version, c.state_version);
                if let Some(t) = &c.ticket {
                    line.push_str(&format!(", ticket total {}", t.total));
                }
                out.push_str(&line);
                out.push_str(" --\n");
            }
        }
    }
    out
}
