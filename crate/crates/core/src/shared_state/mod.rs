//! Shortage state shared by both agents, staged `new_` deltas, and the
//! store that serializes rounds and menu commits.

mod store;

use std::collections::HashSet;
use std::sync::Arc;

use serde::Serialize;

use crate::kb::{FoodKind, KbError, MenuKb, MutationSet};
use crate::reasoner::{FactStore, Program, ReasonError, RuleSet};
use crate::term::{Fact, Literal, Sym, Term};

pub use store::{CloseOutcome, Counters, DeltaLog, SharedStore, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error("{0} is not an ingredient or sauce on the menu")]
    UnknownName(String),
    #[error("unknown food {0}")]
    UnknownFood(String),
    #[error("staged fact {0} is not a recognised new_ fact")]
    BadStaged(String),
    #[error("inconsistent staged facts: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Reason(#[from] ReasonError),
    #[error(transparent)]
    Kb(#[from] KbError),
}

/// Ingredients and sauces currently out of stock.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShortageState {
    pub runout: Vec<Sym>,
    pub version: u64,
}

impl Default for ShortageState {
    fn default() -> Self {
        ShortageState::new(Vec::new())
    }
}

impl ShortageState {
    pub fn new(runout: Vec<Sym>) -> Self {
        ShortageState { runout, version: 1 }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.runout.iter().any(|r| &**r == name)
    }

    pub fn facts(&self) -> FactStore {
        FactStore::from_facts(self.runout.iter().map(|r| Fact::new("runout", vec![Term::Atom(r.clone())])))
    }
}

/// Staged facts from one round, all carrying the `new_` prefix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateDelta {
    pub staged: Vec<Fact>,
    pub origin: String,
}

impl StateDelta {
    pub fn new(origin: &str) -> Self {
        StateDelta { staged: Vec::new(), origin: origin.to_string() }
    }

    pub fn runout(mut self, name: &str) -> Self {
        self.staged.push(Fact::new("new_runout", vec![Term::atom(name)]));
        self
    }

    pub fn restore(mut self, name: &str) -> Self {
        self.staged.push(Fact::new("new_restore", vec![Term::atom(name)]));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.staged.is_empty()
    }
}

/// One immutable view of the menu, the shortage state and the shared rules.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub kb: Arc<MenuKb>,
    pub state: Arc<ShortageState>,
    pub rules: Arc<RuleSet>,
    runout: Arc<FactStore>,
}

impl Snapshot {
    pub fn new(kb: Arc<MenuKb>, state: Arc<ShortageState>, rules: Arc<RuleSet>) -> Self {
        let runout = Arc::new(state.facts());
        Snapshot { kb, state, rules, runout }
    }

    /// The shared program over this snapshot's menu and shortages.
    pub fn program(&self) -> Program {
        Program::new(self.rules.clone(), vec![self.kb.store().clone(), self.runout.clone()])
    }

    /// Program with extra session facts layered on top.
    pub fn program_with(&self, overlay: FactStore) -> Result<Program, ReasonError> {
        self.program().with_overlay(overlay)
    }

    pub fn unavailability(&self, food: Option<&str>) -> Result<Vec<(Sym, Term)>, StateError> {
        unavailability(&self.program(), &self.kb, food)
    }

    /// Reasons `food` is unavailable, empty when it is available.
    pub fn reasons(&self, food: &str) -> Result<Vec<Term>, StateError> {
        Ok(self.unavailability(Some(food))?.into_iter().map(|(_, r)| r).collect())
    }

    pub fn is_unavailable(&self, food: &str) -> Result<bool, StateError> {
        let goal = Literal::new("unavailable", vec![Term::atom(food)]);
        Ok(crate::reasoner::holds(&self.program(), &goal)?.0)
    }
}

const STAGED: &[(&str, usize)] = &[
    ("new_runout", 1),
    ("new_restore", 1),
    ("new_order", 2),
    ("new_update", 3),
    ("new_specify", 2),
];

fn check_staged(kb: &MenuKb, delta: &StateDelta) -> Result<(), StateError> {
    for f in &delta.staged {
        if !f.is_ground() || !STAGED.contains(&(&*f.pred, f.args.len())) {
            return Err(StateError::BadStaged(f.to_string()));
        }
        if matches!(&*f.pred, "new_runout" | "new_restore") {
            let name = f.name_arg(0).ok_or_else(|| StateError::BadStaged(f.to_string()))?;
            if !kb.kind_of(name).is_some_and(FoodKind::is_topping) {
                return Err(StateError::UnknownName(name.to_string()));
            }
        }
    }
    Ok(())
}

/// Fold a delta into the shortage state through the `updated_runout` rules.
/// Survivors keep their position; new shortages follow in staging order.
pub fn reconcile(
    rules: &Arc<RuleSet>,
    kb: &MenuKb,
    state: &ShortageState,
    delta: &StateDelta,
) -> Result<ShortageState, StateError> {
    check_staged(kb, delta)?;
    let program = Program::new(rules.clone(), vec![Arc::new(state.facts())])
        .with_overlay(FactStore::from_facts(delta.staged.iter().cloned()))?;
    let violations = program.violations()?;
    if let Some(v) = violations.first() {
        let leaves: Vec<String> = v.leaves().iter().map(|l| l.plain()).collect();
        return Err(StateError::Inconsistent(leaves.join(", ")));
    }
    let goal = Literal::new("updated_runout", vec![Term::var("X")]);
    let mut seen = HashSet::new();
    let runout = crate::reasoner::solve(&program, &goal)?
        .into_iter()
        .filter_map(|a| a.get("X").and_then(Term::as_atom).cloned())
        .filter(|n| seen.insert(n.clone()))
        .collect();
    Ok(ShortageState { runout, version: state.version + 1 })
}

/// Unavailable foods with their reasons, from the shared rules. `None`
/// means every food.
pub fn unavailability(
    program: &Program,
    kb: &MenuKb,
    food: Option<&str>,
) -> Result<Vec<(Sym, Term)>, StateError> {
    let subject = match food {
        Some(name) if kb.kind_of(name).is_none() => return Err(StateError::UnknownFood(name.to_string())),
        Some(name) => Term::atom(name),
        None => Term::var("Food"),
    };
    let goal = Literal::new("unavailable", vec![subject.clone(), Term::var("Reason")]);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for a in crate::reasoner::solve(program, &goal)? {
        let name = match &subject {
            Term::Atom(n) => n.clone(),
            _ => a.get("Food").and_then(Term::as_atom).cloned().expect("food is bound"),
        };
        let reason = a.get("Reason").cloned().expect("reason is bound");
        if seen.insert((name.clone(), reason.clone())) {
            out.push((name, reason));
        }
    }
    Ok(out)
}

/// Apply pending menu mutations and the shortage changes that wait on
/// them, together. Shortages naming foods the new menu no longer has are
/// dropped. Either both results are returned or nothing changes.
pub fn commit(
    rules: &Arc<RuleSet>,
    kb: &MenuKb,
    state: &ShortageState,
    pending: &MutationSet,
    shortage: &StateDelta,
) -> Result<(MenuKb, ShortageState), StateError> {
    let next_kb = kb.apply(pending)?;
    let mut next = reconcile(rules, &next_kb, state, shortage)?;
    next.runout.retain(|n| next_kb.kind_of(n).is_some_and(FoodKind::is_topping));
    Ok((next_kb, next))
}

#[cfg(test)]
mod tests;
