use std::collections::{BTreeSet, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::{commit, reconcile, ShortageState, Snapshot, StateDelta, StateError};
use crate::kb::{FoodKind, MenuKb, MutationSet};
use crate::reasoner::RuleSet;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("session {0} is already open")]
    AlreadyOpen(String),
    #[error("session {0} is not open")]
    NotOpen(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("cannot write state file: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-session instrumentation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub rounds: u64,
    pub reads: u64,
    pub reconciles: u64,
    pub checks: u64,
}

/// Append-only log of staged shortage facts plus a materialized snapshot.
#[derive(Clone, Debug)]
pub struct DeltaLog {
    dir: PathBuf,
}

impl DeltaLog {
    pub fn new(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(DeltaLog { dir: dir.as_ref().to_path_buf() })
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join("deltas.log")
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.dir.join("state.lp")
    }

    fn append(&self, delta: &StateDelta) -> std::io::Result<()> {
        if delta.is_empty() {
            return Ok(());
        }
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
        let mut f = OpenOptions::new().create(true).append(true).open(self.log_path())?;
        for fact in &delta.staged {
            writeln!(f, "{ts}\t{}\t{fact}.", delta.origin)?;
        }
        Ok(())
    }

    fn write_snapshot(&self, kb_version: u64, state: &ShortageState) -> std::io::Result<()> {
        let mut out = format!("% kb_version {kb_version}\n% state_version {}\n", state.version);
        for f in state.facts().iter() {
            out.push_str(&format!("{f}.\n"));
        }
        let tmp = self.dir.join("state.lp.tmp");
        fs::write(&tmp, out)?;
        fs::rename(tmp, self.snapshot_path())
    }
}

struct Inner {
    kb: Arc<MenuKb>,
    state: Arc<ShortageState>,
    active: BTreeSet<String>,
    queued: Vec<(MutationSet, StateDelta)>,
    history: Vec<(u64, u64)>,
    counters: HashMap<String, Counters>,
}

/// Outcome of closing a session.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CloseOutcome {
    /// Version pairs produced by commits that ran on this close.
    pub committed: Vec<(u64, u64)>,
    /// Commits rejected on this close, with reasons.
    pub rejected: Vec<String>,
    /// Whether changes are waiting for other sessions to close.
    pub deferred: bool,
}

/// Owner of the current (menu, shortage) pair. Rounds and commits are
/// serialized through one lock, so every observed version pair belongs to
/// a single history.
pub struct SharedStore {
    rules: Arc<RuleSet>,
    inner: Mutex<Inner>,
    log: Option<DeltaLog>,
}

impl SharedStore {
    pub fn new(kb: MenuKb, state: ShortageState, rules: Arc<RuleSet>) -> Self {
        let history = vec![(kb.version(), state.version)];
        SharedStore {
            rules,
            inner: Mutex::new(Inner {
                kb: Arc::new(kb),
                state: Arc::new(state),
                active: BTreeSet::new(),
                queued: Vec::new(),
                history,
                counters: HashMap::new(),
            }),
            log: None,
        }
    }

    pub fn with_log(mut self, log: DeltaLog) -> Result<Self, StoreError> {
        {
            let g = self.lock();
            log.write_snapshot(g.kb.version(), &g.state)?;
        }
        self.log = Some(log);
        Ok(self)
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn rules(&self) -> &Arc<RuleSet> {
        &self.rules
    }

    /// Current snapshot, without counting a round read.
    pub fn snapshot(&self) -> Snapshot {
        let g = self.lock();
        Snapshot::new(g.kb.clone(), g.state.clone(), self.rules.clone())
    }

    pub fn versions(&self) -> (u64, u64) {
        let g = self.lock();
        (g.kb.version(), g.state.version)
    }

    pub fn history(&self) -> Vec<(u64, u64)> {
        self.lock().history.clone()
    }

    pub fn counters(&self, session: &str) -> Counters {
        self.lock().counters.get(session).copied().unwrap_or_default()
    }

    pub fn active_sessions(&self) -> Vec<String> {
        self.lock().active.iter().cloned().collect()
    }

    pub fn open(&self, session: &str) -> Result<(), StoreError> {
        let mut g = self.lock();
        if !g.active.insert(session.to_string()) {
            return Err(StoreError::AlreadyOpen(session.to_string()));
        }
        g.counters.insert(session.to_string(), Counters::default());
        Ok(())
    }

    /// Start a round: the one snapshot read the round is allowed.
    pub fn begin_round(&self, session: &str) -> Result<Snapshot, StoreError> {
        let mut g = self.lock();
        if !g.active.contains(session) {
            return Err(StoreError::NotOpen(session.to_string()));
        }
        let c = g.counters.entry(session.to_string()).or_default();
        c.rounds += 1;
        c.reads += 1;
        Ok(Snapshot::new(g.kb.clone(), g.state.clone(), self.rules.clone()))
    }

    /// Finish a round: one reconcile of the staged delta and one
    /// consistency check of the result. The state version advances even
    /// for an empty delta. On error nothing changes.
    pub fn end_round(&self, session: &str, delta: &StateDelta) -> Result<Arc<ShortageState>, StoreError> {
        let mut g = self.lock();
        if !g.active.contains(session) {
            return Err(StoreError::NotOpen(session.to_string()));
        }
        let c = g.counters.entry(session.to_string()).or_default();
        c.reconciles += 1;
        c.checks += 1;
        let next = reconcile(&self.rules, &g.kb, &g.state, delta)?;
        check_consistency(&Snapshot::new(g.kb.clone(), Arc::new(next.clone()), self.rules.clone()))?;
        if let Some(log) = &self.log {
            log.append(delta)?;
            log.write_snapshot(g.kb.version(), &next)?;
        }
        g.state = Arc::new(next);
        let pair = (g.kb.version(), g.state.version);
        g.history.push(pair);
        Ok(g.state.clone())
    }

    /// Close a session, handing over any menu changes it produced. Queued
    /// changes commit once no session remains open.
    pub fn close(
        &self,
        session: &str,
        handover: Option<(MutationSet, StateDelta)>,
    ) -> Result<CloseOutcome, StoreError> {
        let mut g = self.lock();
        if !g.active.remove(session) {
            return Err(StoreError::NotOpen(session.to_string()));
        }
        if let Some((m, d)) = handover {
            if !m.is_empty() || !d.is_empty() {
                g.queued.push((m, d));
            }
        }
        let mut out = CloseOutcome::default();
        if !g.active.is_empty() {
            out.deferred = !g.queued.is_empty();
            return Ok(out);
        }
        for (m, d) in std::mem::take(&mut g.queued) {
            match commit(&self.rules, &g.kb, &g.state, &m, &d) {
                Ok((kb, state)) => {
                    if let Some(log) = &self.log {
                        log.append(&d)?;
                        log.write_snapshot(kb.version(), &state)?;
                    }
                    g.kb = Arc::new(kb);
                    g.state = Arc::new(state);
                    let pair = (g.kb.version(), g.state.version);
                    g.history.push(pair);
                    out.committed.push(pair);
                }
                Err(e) => {
                    log::warn!("commit from {} rejected: {e}", m.provenance);
                    out.rejected.push(e.to_string());
                }
            }
        }
        Ok(out)
    }
}

/// Shared-rule consistency: no constraint fires and every shortage names
/// an ingredient or sauce of the paired menu.
fn check_consistency(snap: &Snapshot) -> Result<(), StateError> {
    for name in &snap.state.runout {
        if !snap.kb.kind_of(name).is_some_and(FoodKind::is_topping) {
            return Err(StateError::UnknownName(name.to_string()));
        }
    }
    if let Some(v) = snap.program().violations()?.first() {
        return Err(StateError::Inconsistent(v.conclusion()));
    }
    Ok(())
}
