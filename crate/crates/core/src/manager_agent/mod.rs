//! Manager-facing agent: shortage reports, menu edits on a session scratch
//! copy of the KB, and slot filling for new dishes and combos.

use std::sync::Arc;

use crate::frame::{atom, pred, ManagerFrame};
use crate::kb::{signature, Arg, FoodKind, KbError, MenuKb, MutationSet, CATEGORIES};
use crate::shared_state::{Snapshot, StateDelta};
use crate::term::{Fact, Literal, Sym, Term};

/// Manager property words and the menu predicates they edit.
pub const PROPERTIES: &[(&str, &str)] = &[
    ("price", "original_price"),
    ("calories", "original_cal"),
    ("category", "category"),
    ("ingredient", "included_ingredient"),
    ("topping", "available_topping"),
    ("popular", "popular_topping"),
    ("style", "available_special_style"),
    ("contain", "combo_contain"),
    ("veggie", "veggie"),
    ("best_seller", "best_seller"),
    ("cantina_chicken", "cantina_chicken"),
];

/// Menu predicate for a property word. Raw predicate names about a food
/// are accepted too.
pub fn property_pred(property: &str) -> Option<&'static str> {
    if let Some((_, p)) = PROPERTIES.iter().find(|(w, _)| *w == property) {
        return Some(p);
    }
    PROPERTIES.iter().map(|(_, p)| *p).find(|p| *p == property)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Slot {
    property: &'static str,
    multi: bool,
}

const DISH_SLOTS: &[Slot] = &[
    Slot { property: "category", multi: false },
    Slot { property: "price", multi: false },
    Slot { property: "ingredient", multi: true },
    Slot { property: "calories", multi: false },
    Slot { property: "popular", multi: true },
];

const COMBO_SLOTS: &[Slot] = &[
    Slot { property: "price", multi: false },
    Slot { property: "calories", multi: false },
    Slot { property: "contain", multi: true },
];

/// A new dish or combo being filled in slot by slot.
#[derive(Clone, Debug)]
pub struct Ckt {
    pub kind: FoodKind,
    pub food: Sym,
    slots: &'static [Slot],
    values: Vec<Vec<Term>>,
    closed: Vec<bool>,
}

impl Ckt {
    fn new(kind: FoodKind, food: Sym) -> Self {
        let slots = if kind == FoodKind::Combo { COMBO_SLOTS } else { DISH_SLOTS };
        Ckt { kind, food, slots, values: vec![Vec::new(); slots.len()], closed: vec![false; slots.len()] }
    }

    /// Index of the slot being asked.
    pub fn current(&self) -> Option<usize> {
        self.closed.iter().position(|c| !c)
    }

    pub fn asking(&self) -> Option<&'static str> {
        self.current().map(|i| self.slots[i].property)
    }

    fn slot(&self, property: &str) -> Option<usize> {
        let pred = property_pred(property)?;
        self.slots.iter().position(|s| property_pred(s.property) == Some(pred))
    }

    /// The new food's facts in canonical order.
    fn mutations(&self, provenance: &str) -> MutationSet {
        let mut m = MutationSet::new(provenance);
        let name = Term::Atom(self.food.clone());
        m.adds.push(Fact::new(self.kind.pred(), vec![name.clone()]));
        for (slot, values) in self.slots.iter().zip(&self.values) {
            let p = property_pred(slot.property).expect("slot properties are mapped");
            let mut vs = values.clone();
            if slot.multi && slot.property != "contain" {
                vs.sort();
            }
            for v in vs {
                m.adds.push(Fact::new(p, vec![name.clone(), v]));
            }
        }
        m
    }
}

/// What the manager parser needs to resolve short answers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ManagerContext {
    /// Food being added, or awaiting its type.
    pub food: Option<Sym>,
    /// Property being asked, or `type`.
    pub asking: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct ManagerAgent {
    /// Menu as first edited in this session, and the edited copy.
    base: Option<Arc<MenuKb>>,
    scratch: Option<MenuKb>,
    /// Shortage changes naming foods that exist only in the scratch menu.
    deferred: Vec<Fact>,
    pending_type: Option<Sym>,
    pub ckt: Option<Ckt>,
    pub done: bool,
    provenance: String,
    /// Slot asked when the current round began.
    asked: Option<usize>,
}

/// Convert a frame value to the form its menu argument expects. Prices in
/// frames are dollars.
fn coerce(kind: Arg, v: &Term) -> Option<Term> {
    match (kind, v) {
        (Arg::Money, Term::Decimal(d)) => d.exact_cents().filter(|c| *c >= 0).map(Term::Int),
        (Arg::Money, Term::Int(n)) if *n >= 0 => Some(Term::Int(n * 100)),
        (Arg::Calories, Term::Int(n)) if *n >= 0 => Some(Term::Int(*n)),
        (Arg::Calories, Term::Decimal(d)) => d.exact_cents().filter(|c| c % 100 == 0 && *c >= 0).map(|c| Term::Int(c / 100)),
        (Arg::Category, Term::Atom(a)) if CATEGORIES.contains(&&**a) => Some(v.clone()),
        (Arg::Money | Arg::Calories | Arg::Category, _) => None,
        (_, Term::Atom(_)) => Some(v.clone()),
        _ => None,
    }
}

fn confirm(a: &str, b: Term) -> Literal {
    pred("confirm", vec![atom(a), b])
}

fn push_unique(v: &mut Vec<Literal>, l: Literal) {
    if !v.contains(&l) {
        v.push(l);
    }
}

impl ManagerAgent {
    pub fn new(session: &str) -> Self {
        ManagerAgent { provenance: session.to_string(), ..Default::default() }
    }

    /// The menu this session sees: its scratch copy once edited.
    pub fn menu<'a>(&'a self, snap: &'a Snapshot) -> &'a MenuKb {
        self.scratch.as_ref().unwrap_or(&snap.kb)
    }

    pub fn context(&self) -> ManagerContext {
        match (&self.ckt, &self.pending_type) {
            (Some(c), _) => ManagerContext { food: Some(c.food.clone()), asking: c.asking().map(str::to_string) },
            (None, Some(f)) => ManagerContext { food: Some(f.clone()), asking: Some("type".into()) },
            _ => ManagerContext::default(),
        }
    }

    fn edit(&mut self, snap: &Snapshot, m: MutationSet) -> Result<(), KbError> {
        let next = self.menu(snap).apply(&m)?;
        self.base.get_or_insert_with(|| snap.kb.clone());
        self.scratch = Some(next);
        Ok(())
    }

    /// Net menu change and deferred shortage changes for the shared store.
    pub fn handover(&self) -> Option<(MutationSet, StateDelta)> {
        let (base, scratch) = (self.base.as_ref()?, self.scratch.as_ref()?);
        let m = base.diff(scratch, &self.provenance);
        let delta = StateDelta { staged: self.deferred.clone(), origin: self.provenance.clone() };
        (!m.is_empty() || !delta.is_empty()).then_some((m, delta))
    }

    /// One manager round: response predicates and the shortage delta to
    /// stage in the shared state.
    pub fn step(&mut self, snap: &Snapshot, frames: &[ManagerFrame]) -> (Vec<Literal>, StateDelta) {
        let mut out: Vec<Literal> = Vec::new();
        let mut delta = StateDelta::new(&self.provenance);
        let mut quit = false;
        self.asked = self.ckt.as_ref().and_then(Ckt::current);

        let mut runouts: Vec<(bool, Sym)> = Vec::new();
        for f in frames {
            match f {
                ManagerFrame::Runout(x) => runouts.push((true, x.clone())),
                ManagerFrame::Restore(x) => runouts.push((false, x.clone())),
                _ => {}
            }
        }

        for f in frames {
            match f {
                ManagerFrame::Runout(x) | ManagerFrame::Restore(x) => {
                    let out_of_stock = matches!(f, ManagerFrame::Runout(_));
                    if runouts.iter().any(|(r, n)| n == x && *r != out_of_stock) {
                        push_unique(&mut out, confirm("conflict", Term::Atom(x.clone())));
                        continue;
                    }
                    let verb = if out_of_stock { "runout" } else { "restore" };
                    let fact = Fact::new(&format!("new_{verb}"), vec![Term::Atom(x.clone())]);
                    if snap.kb.kind_of(x).is_some_and(FoodKind::is_topping) {
                        delta.staged.push(fact);
                    } else if self.menu(snap).kind_of(x).is_some_and(FoodKind::is_topping) {
                        self.deferred.retain(|d| d.args != fact.args);
                        self.deferred.push(fact);
                    } else {
                        push_unique(&mut out, confirm("unknown", Term::Atom(x.clone())));
                        continue;
                    }
                    push_unique(&mut out, confirm(verb, Term::Atom(x.clone())));
                }
                ManagerFrame::Add { kind, food } => self.add(snap, kind.as_deref(), food, &mut out),
                ManagerFrame::AddProperty { food, property, value } => {
                    self.add_property(snap, food, property, value, &mut out)
                }
                ManagerFrame::Edit { food, property, value } => {
                    let r = self.replace(snap, food, property, None, value);
                    self.report(r, "edit", property, &mut out);
                }
                ManagerFrame::EditValue { food, property, old, new } => {
                    let r = self.replace(snap, food, property, Some(old), new);
                    self.report(r, "edit", property, &mut out);
                }
                ManagerFrame::Delete(food) => {
                    let r = self.delete_food(snap, food);
                    self.report(r, "delete", food, &mut out);
                }
                ManagerFrame::DeleteProperty { food, property } => {
                    let r = self.remove(snap, food, property, None);
                    self.report(r, "delete", property, &mut out);
                }
                ManagerFrame::DeleteValue { food, property, value } => {
                    let r = self.remove(snap, food, property, Some(value));
                    self.report(r, "delete", property, &mut out);
                }
                ManagerFrame::Done => match self.ckt.as_mut().and_then(|c| c.current().map(|i| (c, i))) {
                    Some((c, i)) if c.slots[i].multi => c.closed[i] = true,
                    _ => push_unique(&mut out, confirm("done", atom("none"))),
                },
                ManagerFrame::Quit => quit = true,
                ManagerFrame::Irrelevant => push_unique(&mut out, confirm("irrelevant", atom("none"))),
            }
        }

        if quit {
            if let Some(c) = self.ckt.take() {
                log::warn!("abandoning unfinished {} {}", c.kind, c.food);
            }
            self.pending_type = None;
            self.done = true;
            out.push(confirm("quit", atom("none")));
            out.push(pred("quit", vec![]));
            return (out, delta);
        }
        self.advance(snap, &mut out);
        if out.is_empty() {
            out.push(pred("else", vec![]));
        }
        (out, delta)
    }

    fn add(&mut self, snap: &Snapshot, kind: Option<&str>, food: &Sym, out: &mut Vec<Literal>) {
        if self.menu(snap).kind_of(food).is_some() {
            push_unique(out, confirm("exists", Term::Atom(food.clone())));
            return;
        }
        match kind.and_then(FoodKind::from_pred) {
            None => self.pending_type = Some(food.clone()),
            Some(k) if k.is_topping() => {
                self.pending_type = None;
                let mut m = MutationSet::new(&self.provenance);
                m.adds.push(Fact::new(k.pred(), vec![Term::Atom(food.clone())]));
                match self.edit(snap, m) {
                    Ok(()) => push_unique(out, confirm("add", Term::Atom(food.clone()))),
                    Err(_) => push_unique(out, confirm("invalid", Term::Atom(food.clone()))),
                }
            }
            Some(k) => {
                self.pending_type = None;
                if let Some(c) = self.ckt.take() {
                    log::warn!("abandoning unfinished {} {}", c.kind, c.food);
                }
                self.ckt = Some(Ckt::new(k, food.clone()));
            }
        }
    }

    fn add_property(&mut self, snap: &Snapshot, food: &Sym, property: &Sym, value: &Term, out: &mut Vec<Literal>) {
        if let Some(c) = self.ckt.as_mut().filter(|c| &c.food == food) {
            let Some(i) = c.slot(property) else {
                push_unique(out, confirm("invalid", Term::Atom(property.clone())));
                return;
            };
            let p = property_pred(property).expect("slot exists");
            let arg = signature(p, 2).map(|s| s[1]);
            let menu = self.scratch.as_ref().unwrap_or(&snap.kb);
            let v = arg.and_then(|a| coerce(a, value)).filter(|v| value_fits(menu, p, v));
            let Some(v) = v else {
                push_unique(out, confirm("invalid", Term::Atom(property.clone())));
                return;
            };
            let slot = c.slots[i];
            if slot.multi {
                if !c.values[i].contains(&v) {
                    c.values[i].push(v);
                }
                if self.asked != Some(i) {
                    c.closed[i] = true;
                }
            } else {
                c.values[i] = vec![v];
                c.closed[i] = true;
            }
            push_unique(out, confirm("add", Term::Atom(property.clone())));
            return;
        }
        let r = self.insert(snap, food, property, value);
        self.report(r, "add", property, out);
    }

    /// Close the slot flow if every slot is filled, else ask the next one.
    fn advance(&mut self, snap: &Snapshot, out: &mut Vec<Literal>) {
        if let Some(food) = &self.pending_type {
            out.push(pred("ask", vec![Term::Atom(food.clone()), atom("type")]));
            return;
        }
        let Some(c) = &self.ckt else { return };
        if let Some(p) = c.asking() {
            out.push(pred("ask", vec![Term::Atom(c.food.clone()), atom(p)]));
            return;
        }
        let c = self.ckt.take().expect("checked");
        let m = c.mutations(&self.provenance);
        match self.edit(snap, m) {
            Ok(()) => out.push(confirm("add", Term::Atom(c.food.clone()))),
            Err(e) => {
                log::info!("rejected new {} {}: {e}", c.kind, c.food);
                out.push(confirm("invalid", Term::Atom(c.food.clone())));
            }
        }
    }

    fn report(&self, r: Result<(), Outcome>, verb: &str, what: &Sym, out: &mut Vec<Literal>) {
        let tag = match r {
            Ok(()) => verb,
            Err(Outcome::NotFound) => "not_found",
            Err(Outcome::Unknown) => "unknown",
            Err(Outcome::Invalid) => "invalid",
        };
        push_unique(out, confirm(tag, Term::Atom(what.clone())));
    }

    fn resolve(&self, snap: &Snapshot, food: &str, property: &str) -> Result<&'static str, Outcome> {
        if self.menu(snap).kind_of(food).is_none() {
            return Err(Outcome::Unknown);
        }
        property_pred(property).ok_or(Outcome::Invalid)
    }

    fn fact(&self, snap: &Snapshot, p: &str, food: &str, value: Option<&Term>) -> Result<Fact, Outcome> {
        let name = Term::atom(food);
        match signature(p, 1) {
            Some(_) => Ok(Fact::new(p, vec![name])),
            None => {
                let arg = signature(p, 2).ok_or(Outcome::Invalid)?[1];
                let v = value.and_then(|v| coerce(arg, v)).ok_or(Outcome::Invalid)?;
                if !value_fits(self.menu(snap), p, &v) {
                    return Err(Outcome::Invalid);
                }
                Ok(Fact::new(p, vec![name, v]))
            }
        }
    }

    fn existing(&self, snap: &Snapshot, p: &str, food: &str) -> Vec<Fact> {
        self.menu(snap).about(p, food).cloned().collect()
    }

    fn commit(&mut self, snap: &Snapshot, m: MutationSet) -> Result<(), Outcome> {
        self.edit(snap, m).map_err(|_| Outcome::Invalid)
    }

    fn insert(&mut self, snap: &Snapshot, food: &str, property: &str, value: &Term) -> Result<(), Outcome> {
        let p = self.resolve(snap, food, property)?;
        let fact = self.fact(snap, p, food, Some(value))?;
        let mut m = MutationSet::new(&self.provenance);
        if !self.menu(snap).contains(&fact) {
            m.adds.push(fact);
        }
        self.commit(snap, m)
    }

    /// Replace `old` (or every value) of a property with `new`.
    fn replace(&mut self, snap: &Snapshot, food: &str, property: &str, old: Option<&Term>, new: &Term) -> Result<(), Outcome> {
        let p = self.resolve(snap, food, property)?;
        let mut m = MutationSet::new(&self.provenance);
        m.removes = match old {
            Some(o) => vec![self.fact(snap, p, food, Some(o))?],
            None => self.existing(snap, p, food),
        };
        if m.removes.iter().any(|f| !self.menu(snap).contains(f)) || m.removes.is_empty() && old.is_some() {
            return Err(Outcome::NotFound);
        }
        let fact = self.fact(snap, p, food, Some(new))?;
        m.extend(MutationSet { adds: vec![fact], ..MutationSet::default() });
        self.commit(snap, m)
    }

    fn remove(&mut self, snap: &Snapshot, food: &str, property: &str, value: Option<&Term>) -> Result<(), Outcome> {
        let p = self.resolve(snap, food, property)?;
        let mut m = MutationSet::new(&self.provenance);
        m.removes = match value {
            Some(v) => vec![self.fact(snap, p, food, Some(v))?],
            None => self.existing(snap, p, food),
        };
        if m.removes.is_empty() || m.removes.iter().any(|f| !self.menu(snap).contains(f)) {
            return Err(Outcome::NotFound);
        }
        self.commit(snap, m)
    }

    /// Remove a food and every fact naming it; option groups lose the member.
    fn delete_food(&mut self, snap: &Snapshot, food: &str) -> Result<(), Outcome> {
        let menu = self.menu(snap);
        if menu.kind_of(food).is_none() {
            return Err(Outcome::Unknown);
        }
        let mut m = MutationSet::new(&self.provenance);
        for f in menu.facts().filter(|f| f.mentions(food)) {
            m.removes.push(f.clone());
            if &*f.pred == "combo_option_group" {
                if let Some(items) = f.args[1].as_list() {
                    let rest: Vec<Term> = items.iter().filter(|t| t.as_atom().map(|a| &**a) != Some(food)).cloned().collect();
                    if !rest.is_empty() && f.args[0].as_atom().map(|a| &**a) != Some(food) {
                        m.adds.push(Fact::new("combo_option_group", vec![f.args[0].clone(), Term::List(rest)]));
                    }
                }
            }
        }
        self.commit(snap, m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    NotFound,
    Unknown,
    Invalid,
}

/// Referential check for a value before it reaches the menu.
fn value_fits(menu: &MenuKb, p: &str, v: &Term) -> bool {
    let Some(arg) = signature(p, 2).map(|s| s[1]) else { return true };
    let kind = v.as_atom().and_then(|a| menu.kind_of(a));
    match arg {
        Arg::Topping => kind.is_some_and(FoodKind::is_topping),
        Arg::Dish => kind == Some(FoodKind::Dish),
        Arg::DishOrGroup => {
            kind == Some(FoodKind::Dish) || v.as_atom().is_some_and(|a| menu.value("combo_option_group", a).is_some())
        }
        Arg::Style => v.as_atom().is_some_and(|a| crate::kb::STYLES.contains(&&**a)),
        _ => true,
    }
}

#[cfg(test)]
mod tests;
