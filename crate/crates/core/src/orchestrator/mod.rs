//! Session lifecycle and the round loop: parse, reason against one shared
//! snapshot, generate. Both agents live in one engine over one store.

pub mod bench;
mod replay;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Instant;

use serde::Serialize;

use crate::assets;
use crate::frame::{CustomerFrame, Frame, ManagerFrame, Role};
use crate::kb::MenuKb;
use crate::manager_agent::ManagerAgent;
use crate::nl::{
    CustomerContext, Generator, NlError, ParseContext, Parser, RulesParser, TemplateGenerator,
};
use crate::service_agent::{ServiceAgent, Ticket};
use crate::shared_state::{CloseOutcome, SharedStore, ShortageState, Snapshot, StateDelta, StoreError};
use crate::term::{Literal, Sym};

pub use replay::{parse_script, render, replay, to_jsonl, Event, ReplayError, ScriptLine};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("no session {0}")]
    UnknownSession(String),
    #[error("session {0} is closed")]
    Closed(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Wall-clock cost of one round, in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RoundTiming {
    pub parse_ms: f64,
    pub reasoning_ms: f64,
    pub generate_ms: f64,
    pub total_ms: f64,
}

/// One transcript entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Round {
    pub session: String,
    pub role: Role,
    /// 1-based, strictly increasing within a session.
    pub index: usize,
    pub utterance: String,
    /// Parsed frames, one rendered literal each.
    pub frames: Vec<String>,
    /// Response predicates, one rendered literal each.
    pub predicates: Vec<String>,
    pub text: String,
    /// Versions of the snapshot the round read.
    pub kb_version: u64,
    pub state_version: u64,
    pub timing: RoundTiming,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Whether this round ended the session.
    pub closed: bool,
}

/// `a(x). b.` from rendered literals.
pub fn block(lits: &[String]) -> String {
    lits.iter().map(|l| format!("{l}.")).collect::<Vec<_>>().join(" ")
}

fn rendered(lits: &[Literal]) -> Vec<String> {
    lits.iter().map(Literal::plain).collect()
}

enum Agent {
    Manager(Box<ManagerAgent>),
    Service(Box<ServiceAgent>),
}

pub struct Session {
    pub id: String,
    pub role: Role,
    pub greeting: String,
    pub rounds: Vec<Round>,
    pub closed: Option<Closed>,
    agent: Agent,
}

impl Session {
    /// The finalized order, once the customer reached checkout.
    pub fn ticket(&self) -> Option<&Ticket> {
        match &self.agent {
            Agent::Service(a) => a.ticket.as_ref(),
            Agent::Manager(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Opened {
    pub id: String,
    pub role: Role,
    pub greeting: String,
    pub kb_version: u64,
    pub state_version: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Closed {
    pub id: String,
    pub role: Role,
    pub outcome: CloseOutcome,
    /// Final ticket of a customer session.
    pub ticket: Option<Ticket>,
    pub kb_version: u64,
    pub state_version: u64,
}

pub struct Engine {
    store: SharedStore,
    parser: Box<dyn Parser>,
    generator: Box<dyn Generator>,
    templates: TemplateGenerator,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Run `f`, retrying once on a transport failure.
fn retry<T>(what: &str, f: impl Fn() -> Result<T, NlError>) -> Result<T, NlError> {
    match f() {
        Err(NlError::Transport(e)) => {
            log::warn!("{what} backend failed, retrying: {e}");
            f()
        }
        other => other,
    }
}

fn ordered(agent: &ServiceAgent) -> Vec<(Sym, usize)> {
    let mut out: Vec<(Sym, usize)> = Vec::new();
    for l in &agent.lines {
        match out.iter_mut().find(|(f, _)| *f == l.food) {
            Some((_, n)) => *n += 1,
            None => out.push((l.food.clone(), 1)),
        }
    }
    out
}

impl Engine {
    pub fn new(store: SharedStore, parser: Box<dyn Parser>, generator: Box<dyn Generator>) -> Self {
        Engine {
            store,
            parser,
            generator,
            templates: TemplateGenerator::default(),
            sessions: Mutex::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    /// Rules parser and template generator over `kb` with no shortages.
    pub fn deterministic(kb: MenuKb) -> Self {
        let store = SharedStore::new(kb, ShortageState::default(), assets::rules());
        Engine::new(store, Box::new(RulesParser::default()), Box::new(TemplateGenerator::default()))
    }

    pub fn store(&self) -> &SharedStore {
        &self.store
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, EngineError> {
        lock(&self.sessions).get(id).cloned().ok_or_else(|| EngineError::UnknownSession(id.to_string()))
    }

    /// Apply `f` to a session, open or closed.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&Session) -> T) -> Result<T, EngineError> {
        let s = self.session(id)?;
        let g = lock(&s);
        Ok(f(&g))
    }

    pub fn session_ids(&self) -> Vec<String> {
        lock(&self.sessions).keys().cloned().collect()
    }

    pub fn open_session(&self, role: Role) -> Result<Opened, EngineError> {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        self.store.open(&id)?;
        let agent = match role {
            Role::Manager => Agent::Manager(Box::new(ManagerAgent::new(&id))),
            Role::Customer => Agent::Service(Box::default()),
        };
        let greeting = self.templates.greeting(role).to_string();
        let session = Session { id: id.clone(), role, greeting: greeting.clone(), rounds: Vec::new(), closed: None, agent };
        lock(&self.sessions).insert(id.clone(), Arc::new(Mutex::new(session)));
        let (kb_version, state_version) = self.store.versions();
        Ok(Opened { id, role, greeting, kb_version, state_version })
    }

    /// One round from user text.
    pub fn run_round(&self, id: &str, utterance: &str) -> Result<Round, EngineError> {
        self.round(id, utterance, None)
    }

    /// One round from already-parsed frames; parse time is zero.
    pub fn run_frames(&self, id: &str, frames: Vec<Frame>) -> Result<Round, EngineError> {
        let text = frames.iter().map(|f| format!("{}.", f.to_literal().plain())).collect::<Vec<_>>().join(" ");
        self.round(id, &text, Some(frames))
    }

    fn round(&self, id: &str, utterance: &str, given: Option<Vec<Frame>>) -> Result<Round, EngineError> {
        let handle = self.session(id)?;
        let mut s = lock(&handle);
        if s.closed.is_some() {
            return Err(EngineError::Closed(id.to_string()));
        }
        let start = Instant::now();
        let snap = self.store.begin_round(id)?;
        let mut round = Round {
            session: id.to_string(),
            role: s.role,
            index: s.rounds.len() + 1,
            utterance: utterance.to_string(),
            frames: Vec::new(),
            predicates: Vec::new(),
            text: String::new(),
            kb_version: snap.kb.version(),
            state_version: snap.state.version,
            timing: RoundTiming::default(),
            error: None,
            closed: false,
        };

        let t = Instant::now();
        let parsed = match given {
            Some(f) => Ok(f),
            None => self.parse(&s, &snap, utterance),
        };
        round.timing.parse_ms = ms(t);

        let mut delta = StateDelta::new(id);
        match parsed {
            Ok(frames) => {
                round.frames = rendered(&frames.iter().map(Frame::to_literal).collect::<Vec<_>>());
                let t = Instant::now();
                let stepped = step(&mut s.agent, &snap, frames);
                round.timing.reasoning_ms = ms(t);
                match stepped {
                    Ok((preds, d)) => {
                        round.predicates = rendered(&preds);
                        if let Some(d) = d {
                            delta = d;
                        }
                        let t = Instant::now();
                        match retry("generator", || self.generator.generate(s.role, &preds)) {
                            Ok(text) => round.text = text,
                            Err(e) => {
                                log::error!("{id}: generation failed: {e}");
                                round.error = Some(e.to_string());
                            }
                        }
                        round.timing.generate_ms = ms(t);
                    }
                    Err(e) => {
                        log::error!("{id}: agent failed: {e}");
                        round.error = Some(e);
                    }
                }
            }
            Err(e) => {
                log::error!("{id}: parse failed: {e}");
                round.error = Some(e.to_string());
            }
        }
        if round.error.is_some() {
            round.text = self.templates.apology().to_string();
        }
        let t = Instant::now();
        self.store.end_round(id, &delta)?;
        round.timing.reasoning_ms += ms(t);

        if round.predicates.iter().any(|p| p == "quit") {
            let closed = self.close_locked(&mut s, &self.store.snapshot())?;
            s.closed = Some(closed);
            round.closed = true;
        }
        round.timing.total_ms = ms(start);
        s.rounds.push(round.clone());
        Ok(round)
    }

    fn parse(&self, s: &Session, snap: &Snapshot, utterance: &str) -> Result<Vec<Frame>, NlError> {
        let ctx = match &s.agent {
            Agent::Manager(a) => ParseContext {
                role: Role::Manager,
                menu: a.menu(snap),
                manager: a.context(),
                customer: CustomerContext::default(),
            },
            Agent::Service(a) => ParseContext {
                role: Role::Customer,
                menu: &snap.kb,
                manager: Default::default(),
                customer: CustomerContext {
                    question: a.question_context(snap),
                    focus: a.focus.clone(),
                    focus_topping: a.focus_topping.clone(),
                    ordered: ordered(a),
                },
            },
        };
        retry("parser", || self.parser.parse(utterance, &ctx))
    }

    /// Close a session and hand its menu changes to the store. Closing
    /// twice is an error.
    pub fn close_session(&self, id: &str) -> Result<Closed, EngineError> {
        let handle = self.session(id)?;
        let mut s = lock(&handle);
        if s.closed.is_some() {
            return Err(EngineError::Closed(id.to_string()));
        }
        let closed = self.close_locked(&mut s, &self.store.snapshot())?;
        s.closed = Some(closed.clone());
        Ok(closed)
    }

    fn close_locked(&self, s: &mut Session, snap: &Snapshot) -> Result<Closed, EngineError> {
        let (handover, ticket) = match &mut s.agent {
            Agent::Manager(a) => {
                if let Some(c) = &a.ckt {
                    log::warn!("{}: closing with unfinished {} {}; partial entry discarded", s.id, c.kind, c.food);
                }
                (a.handover(), None)
            }
            Agent::Service(a) => {
                let ticket = match &a.ticket {
                    Some(t) => Some(t.clone()),
                    None => match a.build_ticket(snap) {
                        Ok(t) => Some(t),
                        Err(e) => {
                            log::error!("{}: cannot price final order: {e}", s.id);
                            None
                        }
                    },
                };
                (None, ticket)
            }
        };
        let outcome = self.store.close(&s.id, handover)?;
        let (kb_version, state_version) = self.store.versions();
        Ok(Closed { id: s.id.clone(), role: s.role, outcome, ticket, kb_version, state_version })
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Response predicates and, for the manager, the shortage delta to stage.
fn step(agent: &mut Agent, snap: &Snapshot, frames: Vec<Frame>) -> Result<(Vec<Literal>, Option<StateDelta>), String> {
    match agent {
        Agent::Manager(a) => {
            let frames: Vec<ManagerFrame> = frames
                .into_iter()
                .filter_map(|f| match f {
                    Frame::Manager(m) => Some(m),
                    Frame::Customer(_) => None,
                })
                .collect();
            let (preds, delta) = a.step(snap, &frames);
            Ok((preds, Some(delta)))
        }
        Agent::Service(a) => {
            let frames: Vec<CustomerFrame> = frames
                .into_iter()
                .filter_map(|f| match f {
                    Frame::Customer(c) => Some(c),
                    Frame::Manager(_) => None,
                })
                .collect();
            a.step(snap, &frames).map(|p| (p, None)).map_err(|e| e.to_string())
        }
    }
}

#[cfg(test)]
mod tests;
