//! Menu fact schema and whole-KB validation.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::term::{Fact, Sym, Term};

/// Dish categories accepted by `category/2`.
pub const CATEGORIES: &[&str] =
    &["taco", "burrito", "quesadilla", "nachos", "bowl", "specialty", "side", "drink", "dessert"];

/// Special preparation styles accepted by `available_special_style/2`.
pub const STYLES: &[&str] = &["fresco", "supreme", "grill"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FoodKind {
    Dish,
    Combo,
    Ingredient,
    Sauce,
}

impl FoodKind {
    pub fn pred(self) -> &'static str {
        match self {
            FoodKind::Dish => "dish",
            FoodKind::Combo => "combo",
            FoodKind::Ingredient => "ingredient",
            FoodKind::Sauce => "sauce",
        }
    }

    pub fn from_pred(p: &str) -> Option<FoodKind> {
        Some(match p {
            "dish" => FoodKind::Dish,
            "combo" => FoodKind::Combo,
            "ingredient" => FoodKind::Ingredient,
            "sauce" => FoodKind::Sauce,
            _ => return None,
        })
    }

    pub fn is_topping(self) -> bool {
        matches!(self, FoodKind::Ingredient | FoodKind::Sauce)
    }
}

impl fmt::Display for FoodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.pred())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arg {
    /// The declared name itself (`dish/1` and friends).
    Decl,
    /// Any declared food.
    Food,
    /// Dish or combo.
    Orderable,
    Dish,
    Combo,
    /// Ingredient or sauce.
    Topping,
    DishOrGroup,
    Group,
    DishList,
    Money,
    Calories,
    Category,
    Style,
}

/// Predicates allowed in a menu KB, with argument kinds.
pub const SCHEMA: &[(&str, &[Arg])] = &[
    ("dish", &[Arg::Decl]),
    ("combo", &[Arg::Decl]),
    ("ingredient", &[Arg::Decl]),
    ("sauce", &[Arg::Decl]),
    ("original_price", &[Arg::Orderable, Arg::Money]),
    ("original_cal", &[Arg::Orderable, Arg::Calories]),
    ("category", &[Arg::Dish, Arg::Category]),
    ("included_ingredient", &[Arg::Dish, Arg::Topping]),
    ("replaceable_ingredient", &[Arg::Dish, Arg::Topping, Arg::Topping]),
    ("replacement_price", &[Arg::Dish, Arg::Topping, Arg::Topping, Arg::Money]),
    ("available_topping", &[Arg::Dish, Arg::Topping]),
    ("popular_topping", &[Arg::Dish, Arg::Topping]),
    ("upgrade_price", &[Arg::Dish, Arg::Topping, Arg::Money]),
    ("upgrade_cal", &[Arg::Dish, Arg::Topping, Arg::Calories]),
    ("available_special_style", &[Arg::Dish, Arg::Style]),
    ("special_style_price", &[Arg::Dish, Arg::Style, Arg::Money]),
    ("extra_price", &[Arg::Topping, Arg::Money]),
    ("extra_cal", &[Arg::Topping, Arg::Calories]),
    ("combo_contain", &[Arg::Combo, Arg::DishOrGroup]),
    ("combo_option_group", &[Arg::Group, Arg::DishList]),
    ("group_upgrade_price", &[Arg::Group, Arg::Dish, Arg::Money]),
    ("size_changable_drink", &[Arg::Dish]),
    ("upgrade_size_price", &[Arg::Money]),
    ("veggie", &[Arg::Orderable]),
    ("cantina_chicken", &[Arg::Orderable]),
    ("best_seller", &[Arg::Orderable]),
    ("runout", &[Arg::Topping]),
    ("restore", &[Arg::Topping]),
];

pub fn signature(pred: &str, arity: usize) -> Option<&'static [Arg]> {
    SCHEMA
        .iter()
        .find(|(p, args)| *p == pred && args.len() == arity)
        .map(|(_, args)| *args)
}

/// Position of a predicate in [`SCHEMA`]; unknown names sort last.
pub fn rank(pred: &str) -> usize {
    SCHEMA.iter().position(|(p, _)| *p == pred).unwrap_or(SCHEMA.len())
}

pub fn is_known_predicate(pred: &str) -> bool {
    SCHEMA.iter().any(|(p, _)| *p == pred)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Syntax,
    Schema,
    Type,
    Referential,
    Cardinality,
    Missing,
}

/// One broken invariant, reported by `kb validate` as a JSON line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fact: Option<String>,
    pub message: String,
}

impl Violation {
    fn new(kind: ViolationKind, fact: Option<&Fact>, message: String) -> Self {
        Violation { kind, line: None, fact: fact.map(|f| f.to_string()), message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

/// Rewrite decimal money arguments to integer cents in place. Returns a
/// message when a value cannot be represented exactly.
pub(crate) fn normalize_money(fact: &mut Fact) -> Result<(), String> {
    let Some(sig) = signature(&fact.pred, fact.args.len()) else { return Ok(()) };
    for (arg, kind) in fact.args.iter_mut().zip(sig) {
        if *kind != Arg::Money {
            continue;
        }
        if let Term::Decimal(d) = *arg {
            match d.exact_cents() {
                Some(cents) => *arg = Term::Int(cents),
                None => return Err(format!("{d} is not a whole number of cents")),
            }
        }
    }
    Ok(())
}

/// Check every invariant of a menu fact set and report all violations.
pub fn validate(facts: &[Fact]) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();
    let mut kinds: HashMap<Sym, Vec<FoodKind>> = HashMap::new();
    let mut groups: HashMap<Sym, Vec<Sym>> = HashMap::new();
    for f in facts {
        if let (Some(k), Some(Term::Atom(name))) = (FoodKind::from_pred(&f.pred), f.args.first()) {
            if f.args.len() == 1 {
                let ks = kinds.entry(name.clone()).or_default();
                if !ks.contains(&k) {
                    ks.push(k);
                }
            }
        }
        if &*f.pred == "combo_option_group" && f.args.len() == 2 {
            if let (Term::Atom(g), Term::List(items)) = (&f.args[0], &f.args[1]) {
                let names = items.iter().filter_map(|t| t.as_atom().cloned()).collect();
                if groups.insert(g.clone(), names).is_some() {
                    out.push(Violation::new(
                        Cardinality,
                        Some(f),
                        format!("option group {g} is defined more than once"),
                    ));
                }
            }
        }
    }
    let mut multi: Vec<_> = kinds.iter().filter(|(_, ks)| ks.len() > 1).collect();
    multi.sort();
    for (name, ks) in multi {
        let list: Vec<_> = ks.iter().map(|k| k.pred()).collect();
        out.push(Violation::new(
            Referential,
            None,
            format!("{name} is declared as more than one kind of food: {}", list.join(", ")),
        ));
    }
    let kind_of = |n: &Sym| kinds.get(n).and_then(|ks| ks.first().copied());

    let mut prices: HashMap<Sym, usize> = HashMap::new();
    let mut cals: HashMap<Sym, usize> = HashMap::new();
    let mut cats: HashMap<Sym, usize> = HashMap::new();
    let mut size_prices = 0;

    for f in facts {
        let Some(sig) = signature(&f.pred, f.args.len()) else {
            out.push(Violation::new(
                Schema,
                Some(f),
                format!("unknown predicate {}/{}", f.pred, f.args.len()),
            ));
            continue;
        };
        let mut ok = true;
        for (i, (arg, kind)) in f.args.iter().zip(sig).enumerate() {
            if let Err((k, msg)) = check_arg(arg, *kind, &kind_of, &groups) {
                out.push(Violation::new(k, Some(f), format!("argument {}: {msg}", i + 1)));
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let name = f.args.first().and_then(Term::as_atom);
        match (&*f.pred, name) {
            ("original_price", Some(n)) => *prices.entry(n.clone()).or_default() += 1,
            ("original_cal", Some(n)) => *cals.entry(n.clone()).or_default() += 1,
            ("category", Some(n)) => *cats.entry(n.clone()).or_default() += 1,
            ("upgrade_size_price", _) => size_prices += 1,
            ("group_upgrade_price", Some(g)) => {
                let d = f.args[1].as_atom().expect("checked");
                if !groups.get(g).is_some_and(|m| m.contains(d)) {
                    out.push(Violation::new(
                        Referential,
                        Some(f),
                        format!("{d} is not a member of option group {g}"),
                    ));
                }
            }
            _ => {}
        }
    }

    let mut names: Vec<(&Sym, FoodKind)> =
        kinds.iter().filter_map(|(n, ks)| ks.first().map(|k| (n, *k))).collect();
    names.sort();
    for (name, kind) in names {
        let needs = match kind {
            FoodKind::Dish => vec![("original_price", &prices), ("category", &cats)],
            FoodKind::Combo => vec![("original_price", &prices)],
            _ => vec![],
        };
        for (pred, counts) in needs {
            match counts.get(name).copied().unwrap_or(0) {
                1 => {}
                0 => out.push(Violation::new(Missing, None, format!("{kind} {name} has no {pred} fact"))),
                n => out.push(Violation::new(
                    Cardinality,
                    None,
                    format!("{kind} {name} has {n} {pred} facts, expected exactly one"),
                )),
            }
        }
        if cals.get(name).copied().unwrap_or(0) > 1 {
            out.push(Violation::new(
                Cardinality,
                None,
                format!("{kind} {name} has more than one original_cal fact"),
            ));
        }
    }
    if size_prices > 1 {
        out.push(Violation::new(
            Cardinality,
            None,
            "more than one upgrade_size_price fact".to_string(),
        ));
    }
    out
}

fn check_arg(
    arg: &Term,
    kind: Arg,
    kind_of: &dyn Fn(&Sym) -> Option<FoodKind>,
    groups: &HashMap<Sym, Vec<Sym>>,
) -> Result<(), (ViolationKind, String)> {
    use ViolationKind::*;
    let atom = |t: &Term| -> Result<Sym, (ViolationKind, String)> {
        t.as_atom().cloned().ok_or_else(|| (Type, format!("expected a name, found {t}")))
    };
    let want = |t: &Term, ok: &dyn Fn(FoodKind) -> bool, what: &str| {
        let n = atom(t)?;
        match kind_of(&n) {
            None => Err((Referential, format!("{n} is not declared as a dish, combo, ingredient or sauce"))),
            Some(k) if ok(k) => Ok(()),
            Some(k) => Err((Referential, format!("{n} is a {k}, expected {what}"))),
        }
    };
    match kind {
        Arg::Decl => atom(arg).map(|_| ()),
        Arg::Food => want(arg, &|_| true, "a food"),
        Arg::Orderable => want(arg, &|k| matches!(k, FoodKind::Dish | FoodKind::Combo), "a dish or combo"),
        Arg::Dish => want(arg, &|k| k == FoodKind::Dish, "a dish"),
        Arg::Combo => want(arg, &|k| k == FoodKind::Combo, "a combo"),
        Arg::Topping => want(arg, &FoodKind::is_topping, "an ingredient or sauce"),
        Arg::DishOrGroup => {
            let n = atom(arg)?;
            if groups.contains_key(&n) || kind_of(&n) == Some(FoodKind::Dish) {
                Ok(())
            } else {
                Err((Referential, format!("{n} is neither a dish nor an option group")))
            }
        }
        Arg::Group => atom(arg).map(|_| ()),
        Arg::DishList => {
            let items = arg.as_list().ok_or_else(|| (Type, format!("expected a list, found {arg}")))?;
            if items.is_empty() {
                return Err((Type, "option group list is empty".to_string()));
            }
            items.iter().try_for_each(|t| want(t, &|k| k == FoodKind::Dish, "a dish"))
        }
        Arg::Money | Arg::Calories => match arg {
            Term::Int(n) if *n >= 0 => Ok(()),
            Term::Int(n) => Err((Type, format!("{n} is negative"))),
            other => Err((Type, format!("expected a non-negative integer, found {other}"))),
        },
        Arg::Category => {
            let c = atom(arg)?;
            if CATEGORIES.contains(&&*c) {
                Ok(())
            } else {
                Err((Type, format!("unknown category {c}")))
            }
        }
        Arg::Style => {
            let s = atom(arg)?;
            if STYLES.contains(&&*s) {
                Ok(())
            } else {
                Err((Type, format!("unknown style {s}")))
            }
        }
    }
}
