//! Independent oracles and generators for the integration suites. Nothing
//! here calls the reasoner; menu facts are read raw.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use duotalk_core::kb::FoodKind;
use duotalk_core::order::OrderLine;
use duotalk_core::reasoner::{Program, RuleSet};
use duotalk_core::service_agent::ServiceAgent;
use duotalk_core::{assets, CustomerFrame, Literal, MenuKb, Op, ShortageState, Snapshot, Sym, Term};
use rand::seq::{IndexedMutRandom, IndexedRandom};
use rand::Rng;

// ---------------------------------------------------------------------------
// Random stratified programs and a bottom-up perfect-model oracle.

#[derive(Clone, Debug)]
pub enum Arg {
    Var(u8),
    Const(u8),
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub pred: usize,
    pub args: Vec<Arg>,
}

#[derive(Clone, Debug)]
pub struct GenRule {
    pub head: Atom,
    pub pos: Vec<Atom>,
    pub neg: Vec<Atom>,
}

/// Predicates `0..EDB` are extensional; the rest are defined by rules.
pub const EDB: usize = 2;

#[derive(Clone, Debug)]
pub struct GenProgram {
    pub consts: u8,
    pub arity: Vec<usize>,
    /// Stratum per predicate; extensional predicates sit at 0 and rules
    /// only negate predicates of a strictly lower stratum.
    pub stratum: Vec<usize>,
    pub facts: Vec<(usize, Vec<u8>)>,
    pub rules: Vec<GenRule>,
}

fn pred_name(p: usize) -> String {
    if p < EDB { format!("e{p}") } else { format!("p{}", p - EDB) }
}

fn render_atom(a: &Atom) -> String {
    let args: Vec<String> = a
        .args
        .iter()
        .map(|x| match x {
            Arg::Var(v) => format!("X{v}"),
            Arg::Const(c) => format!("c{c}"),
        })
        .collect();
    format!("{}({})", pred_name(a.pred), args.join(", "))
}

impl GenProgram {
    pub fn random(rng: &mut impl Rng) -> GenProgram {
        let consts = rng.random_range(2..=8u8);
        let idb = rng.random_range(2..=4usize);
        let mut arity = vec![1, 2];
        let mut stratum = vec![0, 0];
        let mut strata: Vec<usize> = (0..idb).map(|_| rng.random_range(1..=3)).collect();
        strata.sort();
        for s in strata {
            arity.push(rng.random_range(1..=2));
            stratum.push(s);
        }
        let mut facts = Vec::new();
        for p in 0..EDB {
            let n = rng.random_range(1..=(consts as usize * 2));
            for _ in 0..n {
                facts.push((p, (0..arity[p]).map(|_| rng.random_range(0..consts)).collect()));
            }
        }
        let total = rng.random_range(idb..=12);
        let mut rules = Vec::new();
        for i in 0..total {
            let head = if i < idb { EDB + i } else { rng.random_range(EDB..EDB + idb) };
            rules.push(Self::random_rule(rng, head, &arity, &stratum, consts));
        }
        GenProgram { consts, arity, stratum, facts, rules }
    }

    fn random_rule(rng: &mut impl Rng, head: usize, arity: &[usize], stratum: &[usize], consts: u8) -> GenRule {
        let s = stratum[head];
        let pos_preds: Vec<usize> = (0..arity.len()).filter(|&p| stratum[p] <= s).collect();
        let neg_preds: Vec<usize> = (0..arity.len()).filter(|&p| p < EDB || stratum[p] < s).collect();
        let arg = |rng: &mut dyn rand::RngCore, vars: Option<&[u8]>| -> Arg {
            if rng.random_bool(0.2) {
                return Arg::Const(rng.random_range(0..consts));
            }
            match vars {
                Some(v) if !v.is_empty() => Arg::Var(*v.choose(rng).unwrap()),
                Some(_) => Arg::Const(rng.random_range(0..consts)),
                None => Arg::Var(rng.random_range(0..3)),
            }
        };
        // The first positive literal is extensional so every rule has a
        // finite grounding.
        let npos = rng.random_range(1..=3);
        let mut pos = Vec::new();
        for k in 0..npos {
            let p = if k == 0 { rng.random_range(0..EDB) } else { *pos_preds.choose(rng).unwrap() };
            pos.push(Atom { pred: p, args: (0..arity[p]).map(|_| arg(rng, None)).collect() });
        }
        let bound: Vec<u8> = {
            let mut v: Vec<u8> = pos
                .iter()
                .flat_map(|a| a.args.iter())
                .filter_map(|a| match a {
                    Arg::Var(x) => Some(*x),
                    Arg::Const(_) => None,
                })
                .collect();
            v.sort();
            v.dedup();
            v
        };
        let mut neg = Vec::new();
        if rng.random_bool(0.5) {
            let p = *neg_preds.choose(rng).unwrap();
            neg.push(Atom { pred: p, args: (0..arity[p]).map(|_| arg(rng, Some(&bound))).collect() });
        }
        let head = Atom { pred: head, args: (0..arity[head]).map(|_| arg(rng, Some(&bound))).collect() };
        GenRule { head, pos, neg }
    }

    pub fn source(&self) -> String {
        let mut out = String::new();
        for (p, args) in &self.facts {
            let a: Vec<String> = args.iter().map(|c| format!("c{c}")).collect();
            out.push_str(&format!("{}({}).\n", pred_name(*p), a.join(", ")));
        }
        for r in &self.rules {
            let mut body: Vec<String> = r.pos.iter().map(render_atom).collect();
            body.extend(r.neg.iter().map(|a| format!("not {}", render_atom(a))));
            out.push_str(&format!("{} :- {}.\n", render_atom(&r.head), body.join(", ")));
        }
        out
    }

    /// Perfect model by naive bottom-up evaluation, stratum by stratum.
    pub fn model(&self) -> HashSet<(usize, Vec<u8>)> {
        let mut model: HashSet<(usize, Vec<u8>)> = self.facts.iter().cloned().collect();
        let top = self.stratum.iter().copied().max().unwrap_or(0);
        for s in 1..=top {
            loop {
                let mut new = Vec::new();
                for r in self.rules.iter().filter(|r| self.stratum[r.head.pred] == s) {
                    let mut env = [None; 3];
                    join(&model, r, 0, &mut env, &mut new);
                }
                let before = model.len();
                model.extend(new);
                if model.len() == before {
                    break;
                }
            }
        }
        model
    }

    /// Every ground atom of a rule-defined predicate.
    pub fn ground_atoms(&self) -> Vec<(usize, Vec<u8>)> {
        let mut out = Vec::new();
        for p in EDB..self.arity.len() {
            let n = self.consts;
            match self.arity[p] {
                1 => out.extend((0..n).map(|a| (p, vec![a]))),
                _ => out.extend((0..n).flat_map(|a| (0..n).map(move |b| (p, vec![a, b])))),
            }
        }
        out
    }
}

fn matches(atom: &Atom, tuple: &[u8], env: &mut [Option<u8>; 3]) -> bool {
    for (a, &c) in atom.args.iter().zip(tuple) {
        match a {
            Arg::Const(k) if *k != c => return false,
            Arg::Const(_) => {}
            Arg::Var(v) => match env[*v as usize] {
                Some(b) if b != c => return false,
                Some(_) => {}
                None => env[*v as usize] = Some(c),
            },
        }
    }
    true
}

fn ground(atom: &Atom, env: &[Option<u8>; 3]) -> (usize, Vec<u8>) {
    let args = atom
        .args
        .iter()
        .map(|a| match a {
            Arg::Const(c) => *c,
            Arg::Var(v) => env[*v as usize].expect("safe rule"),
        })
        .collect();
    (atom.pred, args)
}

fn join(
    model: &HashSet<(usize, Vec<u8>)>,
    r: &GenRule,
    i: usize,
    env: &mut [Option<u8>; 3],
    out: &mut Vec<(usize, Vec<u8>)>,
) {
    if i == r.pos.len() {
        if r.neg.iter().all(|n| !model.contains(&ground(n, env))) {
            out.push(ground(&r.head, env));
        }
        return;
    }
    let atom = &r.pos[i];
    for (p, tuple) in model.iter() {
        if *p != atom.pred {
            continue;
        }
        let saved = *env;
        if matches(atom, tuple, env) {
            join(model, r, i + 1, env, out);
        }
        *env = saved;
    }
}

pub fn ground_literal(p: usize, args: &[u8]) -> Literal {
    Literal::new(&pred_name(p), args.iter().map(|c| Term::atom(&format!("c{c}"))).collect())
}

/// Number of ground atoms where top-down solving and the oracle disagree.
pub fn reasoner_mismatches(g: &GenProgram) -> Result<usize, String> {
    let rules = RuleSet::from_source(&g.source()).map_err(|e| format!("{e}\n{}", g.source()))?;
    let program = Program::new(Arc::new(rules), Vec::new());
    let mut solver = program.solver();
    let model = g.model();
    let mut bad = 0;
    for (p, args) in g.ground_atoms() {
        let top_down = !solver.query(&ground_literal(p, &args)).map_err(|e| e.to_string())?.is_empty();
        if top_down != model.contains(&(p, args)) {
            bad += 1;
        }
    }
    Ok(bad)
}

// ---------------------------------------------------------------------------
// Raw menu view.

fn atom_arg(f: &Literal, i: usize) -> String {
    f.args[i].as_atom().map(|s| s.to_string()).unwrap_or_default()
}

/// Menu facts walked once into plain maps.
#[derive(Default)]
pub struct RawMenu {
    pub kinds: HashMap<String, &'static str>,
    pub included: BTreeMap<String, Vec<String>>,
    pub toppings: BTreeMap<String, Vec<String>>,
    pub contains: BTreeMap<String, Vec<String>>,
    pub groups: BTreeMap<String, Vec<String>>,
    pub styles: BTreeSet<(String, String)>,
    pub replaceable: Vec<(String, String, String)>,
    pub drinks: BTreeSet<String>,
    pub original: HashMap<String, i64>,
    pub upgrade: HashMap<(String, String), i64>,
    pub extra: HashMap<String, i64>,
    pub replacement: HashMap<(String, String, String), i64>,
    pub style_price: HashMap<(String, String), i64>,
    pub size_up: Option<i64>,
    pub group_up: HashMap<(String, String), i64>,
}

impl RawMenu {
    pub fn new(kb: &MenuKb) -> RawMenu {
        let mut m = RawMenu::default();
        for f in kb.facts() {
            let a = |i| atom_arg(f, i);
            let n = |i: usize| f.args[i].as_int().expect("cents");
            match (&*f.pred, f.args.len()) {
                ("dish", 1) => drop(m.kinds.insert(a(0), "dish")),
                ("combo", 1) => drop(m.kinds.insert(a(0), "combo")),
                ("ingredient", 1) => drop(m.kinds.insert(a(0), "ingredient")),
                ("sauce", 1) => drop(m.kinds.insert(a(0), "sauce")),
                ("included_ingredient", 2) => m.included.entry(a(0)).or_default().push(a(1)),
                ("available_topping", 2) => m.toppings.entry(a(0)).or_default().push(a(1)),
                ("combo_contain", 2) => m.contains.entry(a(0)).or_default().push(a(1)),
                ("combo_option_group", 2) => {
                    let members = f.args[1].as_list().unwrap().iter().map(|t| t.as_atom().unwrap().to_string()).collect();
                    m.groups.insert(a(0), members);
                }
                ("available_special_style", 2) => drop(m.styles.insert((a(0), a(1)))),
                ("replaceable_ingredient", 3) => m.replaceable.push((a(0), a(1), a(2))),
                ("size_changable_drink", 1) => drop(m.drinks.insert(a(0))),
                ("original_price", 2) => drop(m.original.insert(a(0), n(1))),
                ("upgrade_price", 3) => drop(m.upgrade.insert((a(0), a(1)), n(2))),
                ("extra_price", 2) => drop(m.extra.insert(a(0), n(1))),
                ("replacement_price", 4) => drop(m.replacement.insert((a(0), a(1), a(2)), n(3))),
                ("special_style_price", 3) => drop(m.style_price.insert((a(0), a(1)), n(2))),
                ("upgrade_size_price", 1) => m.size_up = Some(n(0)),
                ("group_upgrade_price", 3) => drop(m.group_up.insert((a(0), a(1)), n(2))),
                _ => {}
            }
        }
        m
    }

    pub fn is(&self, name: &str, kind: &str) -> bool {
        self.kinds.get(name) == Some(&kind)
    }

    pub fn of_kind(&self, kind: &str) -> Vec<String> {
        let mut v: Vec<String> = self.kinds.iter().filter(|(_, k)| **k == kind).map(|(n, _)| n.clone()).collect();
        v.sort();
        v
    }

    pub fn toppings_all(&self) -> Vec<String> {
        let mut v = self.of_kind("ingredient");
        v.extend(self.of_kind("sauce"));
        v
    }

    /// `(food, reason)` pairs by transitive closure over the shortage set.
    pub fn unavailable(&self, runout: &BTreeSet<String>) -> BTreeSet<(String, String)> {
        let mut reasons: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for r in runout {
            if self.is(r, "ingredient") || self.is(r, "sauce") {
                reasons.entry(r.clone()).or_default().insert("runout(none)".into());
            }
        }
        for (dish, ings) in &self.included {
            if !self.is(dish, "dish") {
                continue;
            }
            for i in ings.iter().filter(|i| runout.contains(*i)) {
                reasons.entry(dish.clone()).or_default().insert(format!("runout({i})"));
            }
        }
        loop {
            let mut grew = false;
            for (combo, parts) in &self.contains {
                if !self.is(combo, "combo") {
                    continue;
                }
                let mut add = BTreeSet::new();
                for part in parts {
                    if self.is(part, "dish") {
                        add.extend(reasons.get(part).cloned().unwrap_or_default());
                    } else if let Some(members) = self.groups.get(part).filter(|m| !m.is_empty()) {
                        if members.iter().all(|d| reasons.get(d).is_some_and(|r| !r.is_empty())) {
                            add.extend(reasons[&members[0]].clone());
                        }
                    }
                }
                let entry = reasons.entry(combo.clone()).or_default();
                let before = entry.len();
                entry.extend(add);
                grew |= entry.len() > before;
            }
            if !grew {
                break;
            }
        }
        reasons.into_iter().flat_map(|(f, rs)| rs.into_iter().map(move |r| (f.clone(), r))).collect()
    }

    pub fn unavailable_foods(&self, runout: &BTreeSet<String>) -> BTreeSet<String> {
        self.unavailable(runout).into_iter().map(|(f, _)| f).collect()
    }

    /// Price of order lines by summing the raw price facts.
    pub fn price(&self, lines: &[OrderLine]) -> Option<i64> {
        let mut total = 0;
        for line in lines {
            total += self.original.get(&*line.food)?;
            for item in &line.items {
                let Some(dish) = item.dish.as_deref() else { continue };
                if let Some(g) = item.group.as_deref() {
                    total += self.group_up.get(&(g.to_string(), dish.to_string())).copied().unwrap_or(0);
                }
                for m in &item.modifiers {
                    let opt = m.option.to_string();
                    total += match m.op {
                        Op::Add => *self.upgrade.get(&(dish.to_string(), opt))?,
                        Op::Extra => *self.extra.get(&opt)?,
                        Op::Change => {
                            let (d, from, to) = self.replaceable.iter().find(|(d, _, to)| d == dish && *to == opt)?;
                            *self.replacement.get(&(d.clone(), from.clone(), to.clone()))?
                        }
                        Op::No | Op::Less => 0,
                        Op::Size if opt == "large" => self.size_up?,
                        Op::Size => 0,
                        style if opt == "yes" => *self.style_price.get(&(dish.to_string(), style.as_str().to_string()))?,
                        _ => 0,
                    };
                }
            }
        }
        Some(total)
    }

    pub fn applicable(&self, dish: &str, op: Op, option: &str) -> bool {
        let has = |v: Option<&Vec<String>>| v.is_some_and(|v| v.iter().any(|x| x == option));
        match op {
            Op::Add => has(self.toppings.get(dish)),
            Op::Extra => has(self.included.get(dish)) || has(self.toppings.get(dish)),
            Op::No | Op::Less => has(self.included.get(dish)),
            Op::Change => self.replaceable.iter().any(|(d, _, to)| d == dish && to == option),
            Op::Size => self.drinks.contains(dish) && matches!(option, "regular" | "large"),
            style => self.styles.contains(&(dish.to_string(), style.as_str().to_string())) && matches!(option, "yes" | "no"),
        }
    }
}

// ---------------------------------------------------------------------------
// Update admission.

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Admission {
    /// 1-based instance index.
    Admit(usize),
    NotOrdered,
    Unavailable,
    NotApplicable,
    Duplicate,
}

/// Items holding `dish`: standalone lines first, then combo members.
pub fn instances(lines: &[OrderLine], dish: &str) -> Vec<(usize, usize)> {
    let mut solo = Vec::new();
    let mut member = Vec::new();
    for (li, l) in lines.iter().enumerate() {
        for (ii, item) in l.items.iter().enumerate() {
            if item.dish.as_deref() == Some(dish) {
                if l.combo { member.push((li, ii)) } else { solo.push((li, ii)) }
            }
        }
    }
    solo.extend(member);
    solo
}

/// Admitted iff the dish is ordered, neither it nor the option is
/// unavailable, and some instance can still take the operation.
pub fn expected_admission(
    menu: &RawMenu,
    runout: &BTreeSet<String>,
    lines: &[OrderLine],
    dish: &str,
    op: Op,
    option: &str,
) -> Admission {
    if !menu.is(dish, "dish") {
        return Admission::NotApplicable;
    }
    let inst = instances(lines, dish);
    if inst.is_empty() {
        return Admission::NotOrdered;
    }
    let out = menu.unavailable_foods(runout);
    if out.contains(dish) || out.contains(option) {
        return Admission::Unavailable;
    }
    if !menu.applicable(dish, op, option) {
        return Admission::NotApplicable;
    }
    for (i, (li, ii)) in inst.iter().enumerate() {
        let mods = &lines[*li].items[*ii].modifiers;
        let taken = mods.iter().any(|m| m.op == op && (&*m.option == option || op.is_choice()));
        if !taken {
            return Admission::Admit(i + 1);
        }
    }
    Admission::Duplicate
}

pub fn snapshot(kb: &MenuKb, runout: &BTreeSet<String>) -> Snapshot {
    let state = ShortageState::new(runout.iter().map(|s| Sym::from(s.as_str())).collect());
    Snapshot::new(Arc::new(kb.clone()), Arc::new(state), assets::rules())
}

pub fn random_runout(rng: &mut impl Rng, menu: &RawMenu, max: usize) -> BTreeSet<String> {
    let all = menu.toppings_all();
    let n = rng.random_range(0..=max);
    (0..n).map(|_| all.choose(rng).unwrap().clone()).collect()
}

/// Random order lines, with random combo slot picks and modifiers that
/// were never admission-checked.
pub fn random_lines(rng: &mut impl Rng, menu: &RawMenu) -> Vec<OrderLine> {
    let kb = assets::menu();
    let dishes = menu.of_kind("dish");
    let combos = menu.of_kind("combo");
    let mut lines: Vec<OrderLine> = Vec::new();
    for _ in 0..rng.random_range(0..=4) {
        let name = if rng.random_bool(0.8) { dishes.choose(rng).unwrap() } else { combos.choose(rng).unwrap() };
        let instance = lines.iter().filter(|l| &*l.food == name).count() as u32 + 1;
        let mut line = if menu.is(name, "combo") { OrderLine::combo(&kb, name, instance) } else { OrderLine::dish(name, instance) };
        for item in &mut line.items {
            if let Some(g) = item.group.clone() {
                if rng.random_bool(0.8) {
                    item.dish = menu.groups.get(&*g).and_then(|m| m.choose(rng)).map(|d| Sym::from(d.as_str()));
                }
            }
        }
        lines.push(line);
    }
    for _ in 0..rng.random_range(0..=3) {
        let Some(line) = lines.choose_mut(rng) else { break };
        let Some(item) = line.items.choose_mut(rng) else { continue };
        let Some(dish) = item.dish.clone() else { continue };
        let (op, option) = random_update(rng, menu, &dish);
        item.modifiers.push(duotalk_core::order::Modifier::new(op, &option));
    }
    lines
}

/// An operation and option for `dish`, usually a plausible one.
pub fn random_update(rng: &mut impl Rng, menu: &RawMenu, dish: &str) -> (Op, String) {
    let op = *Op::ALL.choose(rng).unwrap();
    let option = match op {
        o if o.is_style() => ["yes", "no"].choose(rng).unwrap().to_string(),
        Op::Size => ["regular", "large"].choose(rng).unwrap().to_string(),
        _ => {
            let mut pool: Vec<String> = Vec::new();
            pool.extend(menu.toppings.get(dish).cloned().unwrap_or_default());
            pool.extend(menu.included.get(dish).cloned().unwrap_or_default());
            pool.extend(menu.replaceable.iter().filter(|r| r.0 == dish).map(|r| r.2.clone()));
            if pool.is_empty() || rng.random_bool(0.15) {
                menu.toppings_all().choose(rng).unwrap().clone()
            } else {
                pool.choose(rng).unwrap().clone()
            }
        }
    };
    (op, option)
}

/// A random customer conversation, as frame batches, over foods that are
/// actually on the menu.
pub fn random_conversation(rng: &mut impl Rng, menu: &RawMenu) -> Vec<Vec<CustomerFrame>> {
    let dishes = menu.of_kind("dish");
    let combos = menu.of_kind("combo");
    let mut batches = Vec::new();
    let mut ordered: Vec<(String, bool)> = Vec::new();
    for _ in 0..rng.random_range(1..=6) {
        let mut batch = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let roll = rng.random_range(0..10);
            if roll < 4 || ordered.is_empty() {
                let combo = rng.random_bool(0.25);
                let name = if combo { combos.choose(rng).unwrap() } else { dishes.choose(rng).unwrap() };
                batch.push(CustomerFrame::Order { food: name.as_str().into(), number: rng.random_range(1..=2) });
                ordered.push((name.clone(), combo));
            } else {
                let (name, combo) = ordered.choose(rng).unwrap().clone();
                if combo {
                    let group = menu.contains[&name].iter().find(|p| menu.groups.contains_key(*p)).cloned();
                    if let Some(g) = group {
                        let pick = menu.groups[&g].choose(rng).unwrap();
                        batch.push(CustomerFrame::Specify { combo: name.as_str().into(), dish: pick.as_str().into() });
                        continue;
                    }
                    let Some(d) = menu.contains[&name].choose(rng) else { continue };
                    let (op, option) = random_update(rng, menu, d);
                    batch.push(CustomerFrame::Update { dish: d.as_str().into(), op, option: option.as_str().into() });
                } else {
                    let (op, option) = random_update(rng, menu, &name);
                    batch.push(CustomerFrame::Update { dish: name.as_str().into(), op, option: option.as_str().into() });
                }
            }
        }
        batches.push(batch);
    }
    batches
}

/// Drive a fresh agent through a conversation; returns the admitted lines.
pub fn admitted_order(snap: &Snapshot, batches: &[Vec<CustomerFrame>]) -> Vec<OrderLine> {
    let mut agent = ServiceAgent::new();
    for b in batches {
        agent.step(snap, b).expect("agent step");
    }
    agent.lines
}

pub fn kind_names(kb: &MenuKb, kinds: &[FoodKind]) -> Vec<String> {
    kb.names(kinds).iter().map(|s| s.to_string()).collect()
}
