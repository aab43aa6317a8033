//! HTTP+JSON surface over an [`Engine`], independent of any server
//! framework. Every response body is an object carrying the current
//! `kb_version` and `state_version`.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::frame::Role;
use crate::orchestrator::{block, Engine, EngineError};

#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub status: u16,
    pub body: Value,
}

#[derive(Deserialize)]
struct OpenBody {
    role: Role,
}

#[derive(Deserialize)]
struct MessageBody {
    text: String,
}

fn error(status: u16, msg: impl Into<String>) -> (u16, Value) {
    (status, json!({ "error": msg.into() }))
}

fn engine_error(e: EngineError) -> (u16, Value) {
    match e {
        EngineError::UnknownSession(_) => error(404, e.to_string()),
        EngineError::Closed(_) => error(409, e.to_string()),
        EngineError::Store(_) => error(500, e.to_string()),
    }
}

fn parse_body<'a, T: Deserialize<'a>>(body: &'a [u8]) -> Result<T, (u16, Value)> {
    serde_json::from_slice(body).map_err(|e| error(400, format!("bad request body: {e}")))
}

/// Route one request. `path` excludes the query string; `query` holds
/// decoded parameters.
pub fn handle(engine: &Engine, method: &str, path: &str, query: &BTreeMap<String, String>, body: &[u8]) -> Response {
    let segments: Vec<&str> = path.trim_matches('/').split('/').filter(|s| !s.is_empty()).collect();
    let (status, mut body) = match route(engine, method, &segments, query, body) {
        Ok(v) => v,
        Err(e) => e,
    };
    let (kb_version, state_version) = engine.store().versions();
    if let Some(o) = body.as_object_mut() {
        o.insert("kb_version".into(), kb_version.into());
        o.insert("state_version".into(), state_version.into());
    }
    Response { status, body }
}

type Routed = Result<(u16, Value), (u16, Value)>;

fn route(engine: &Engine, method: &str, seg: &[&str], query: &BTreeMap<String, String>, body: &[u8]) -> Routed {
    match (method, seg) {
        ("POST", ["sessions"]) => {
            let b: OpenBody = parse_body(body)?;
            let o = engine.open_session(b.role).map_err(engine_error)?;
            Ok((201, json!({ "id": o.id, "role": o.role, "greeting": o.greeting })))
        }
        ("GET", ["sessions"]) => {
            let sessions: Vec<Value> = engine
                .session_ids()
                .iter()
                .filter_map(|id| {
                    engine
                        .with_session(id, |s| json!({ "id": s.id, "role": s.role, "closed": s.closed.is_some() }))
                        .ok()
                })
                .collect();
            Ok((200, json!({ "sessions": sessions })))
        }
        ("POST", ["sessions", id, "message"]) => {
            let b: MessageBody = parse_body(body)?;
            let r = engine.run_round(id, &b.text).map_err(engine_error)?;
            let ticket = if r.closed { engine.with_session(id, |s| s.ticket().cloned()).map_err(engine_error)? } else { None };
            Ok((
                200,
                json!({
                    "session": r.session,
                    "reply": r.text,
                    "frames": r.frames,
                    "predicates": r.predicates,
                    "semantics": block(&r.frames),
                    "next_action": block(&r.predicates),
                    "timings": r.timing,
                    "closed": r.closed,
                    "ticket": ticket,
                    "error": r.error,
                }),
            ))
        }
        ("GET", ["sessions", id, "transcript"]) => engine
            .with_session(id, |s| {
                (200, json!({ "session": s.id, "role": s.role, "greeting": s.greeting, "rounds": s.rounds, "closed": s.closed.is_some() }))
            })
            .map_err(engine_error),
        ("GET", ["sessions", id, "ticket"]) => match engine.with_session(id, |s| s.ticket().cloned()).map_err(engine_error)? {
            Some(t) => Ok((200, json!({ "session": id, "ticket": t }))),
            None => Err(error(404, "order in progress")),
        },
        ("DELETE", ["sessions", id]) => {
            let c = engine.close_session(id).map_err(engine_error)?;
            Ok((200, json!({ "session": c.id, "role": c.role, "outcome": c.outcome, "ticket": c.ticket })))
        }
        ("GET", ["kb"]) => {
            let snap = engine.store().snapshot();
            let pred = query.get("predicate").map(String::as_str);
            let facts: Vec<String> =
                snap.kb.facts().filter(|f| pred.is_none_or(|p| &*f.pred == p)).map(|f| f.to_string()).collect();
            Ok((200, json!({ "count": facts.len(), "facts": facts })))
        }
        ("GET", ["state"]) => {
            let snap = engine.store().snapshot();
            let unavailable = snap.unavailability(None).map_err(|e| error(500, e.to_string()))?;
            let unavailable: Vec<Value> =
                unavailable.iter().map(|(f, r)| json!({ "food": f, "reason": r.plain().to_string() })).collect();
            Ok((
                200,
                json!({
                    "runout": snap.state.runout,
                    "unavailable": unavailable,
                    "active_sessions": engine.store().active_sessions(),
                }),
            ))
        }
        (_, ["sessions"] | ["sessions", _, "message" | "transcript" | "ticket"] | ["sessions", _] | ["kb"] | ["state"]) => {
            Err(error(405, format!("{method} not allowed here")))
        }
        _ => Err(error(404, "no such endpoint")),
    }
}
