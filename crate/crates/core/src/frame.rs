//! Semantic frames: one parsed user intention each, in the manager or the
//! customer vocabulary, plus the response predicates agents emit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::term::{sym, Decimal, Literal, Sym, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Manager,
    Customer,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Manager => "manager",
            Role::Customer => "customer",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "manager" => Ok(Role::Manager),
            "customer" => Ok(Role::Customer),
            other => Err(format!("unknown role {other}")),
        }
    }
}

/// Kinds a manager may add.
pub const ADD_TYPES: &[&str] = &["dish", "combo", "ingredient"];

#[derive(Clone, Debug, PartialEq)]
pub enum ManagerFrame {
    Runout(Sym),
    Restore(Sym),
    /// `add(Food)` when `kind` is `None`, else `add(Type, Food)`.
    Add { kind: Option<Sym>, food: Sym },
    AddProperty { food: Sym, property: Sym, value: Term },
    Edit { food: Sym, property: Sym, value: Term },
    EditValue { food: Sym, property: Sym, old: Term, new: Term },
    Delete(Sym),
    DeleteProperty { food: Sym, property: Sym },
    DeleteValue { food: Sym, property: Sym, value: Term },
    /// Closes a multi-valued slot ("that's all").
    Done,
    Quit,
    Irrelevant,
}

/// Update operations on an ordered dish.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Change,
    Add,
    No,
    Less,
    Extra,
    Fresco,
    Supreme,
    Grill,
    Size,
}

impl Op {
    pub const ALL: [Op; 9] =
        [Op::Change, Op::Add, Op::No, Op::Less, Op::Extra, Op::Fresco, Op::Supreme, Op::Grill, Op::Size];

    pub fn as_str(self) -> &'static str {
        match self {
            Op::Change => "change",
            Op::Add => "add",
            Op::No => "no",
            Op::Less => "less",
            Op::Extra => "extra",
            Op::Fresco => "fresco",
            Op::Supreme => "supreme",
            Op::Grill => "grill",
            Op::Size => "size",
        }
    }

    pub fn parse(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|o| o.as_str() == s)
    }

    pub fn is_style(self) -> bool {
        matches!(self, Op::Fresco | Op::Supreme | Op::Grill)
    }

    /// Operations with one answer per instance: styles and size.
    pub fn is_choice(self) -> bool {
        self.is_style() || self == Op::Size
    }

    /// Whether `option` is a legal option word for this operation. Topping
    /// operations take a food name, checked later against the menu.
    pub fn accepts(self, option: &str) -> bool {
        match self {
            o if o.is_style() => matches!(option, "yes" | "no"),
            Op::Size => matches!(option, "regular" | "large"),
            _ => !option.is_empty(),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const QUERY_CATEGORIES: &[&str] =
    &["price", "calories", "ingredient", "add-on", "replacement", "style", "combo-content", "category"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecommendKind {
    Category,
    Upgrade,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CustomerFrame {
    NeedRecommend { content: Sym, kind: RecommendKind },
    Order { food: Sym, number: u32 },
    Specify { combo: Sym, dish: Sym },
    /// `option` is `none` for an explicit topping decline.
    Update { dish: Sym, op: Op, option: Sym },
    Query { category: Sym, food: Sym },
    Completed,
    Quit,
    Irrelevant,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Frame {
    Manager(ManagerFrame),
    Customer(CustomerFrame),
}

fn a(s: &Sym) -> Term {
    Term::Atom(s.clone())
}

impl ManagerFrame {
    pub fn to_literal(&self) -> Literal {
        use ManagerFrame::*;
        match self {
            Runout(n) => Literal::new("runout", vec![a(n)]),
            Restore(n) => Literal::new("restore", vec![a(n)]),
            Add { kind: None, food } => Literal::new("add", vec![a(food)]),
            Add { kind: Some(k), food } => Literal::new("add", vec![a(k), a(food)]),
            AddProperty { food, property, value } => {
                Literal::new("add", vec![a(food), a(property), value.clone()])
            }
            Edit { food, property, value } => Literal::new("edit", vec![a(food), a(property), value.clone()]),
            EditValue { food, property, old, new } => {
                Literal::new("edit", vec![a(food), a(property), old.clone(), new.clone()])
            }
            Delete(f) => Literal::new("delete", vec![a(f)]),
            DeleteProperty { food, property } => Literal::new("delete", vec![a(food), a(property)]),
            DeleteValue { food, property, value } => {
                Literal::new("delete", vec![a(food), a(property), value.clone()])
            }
            Done => Literal::new("done", vec![]),
            Quit => Literal::new("quit", vec![]),
            Irrelevant => Literal::new("irrelevant", vec![]),
        }
    }

    /// Schema-check a literal from a parser backend.
    pub fn from_literal(l: &Literal) -> Option<ManagerFrame> {
        use ManagerFrame::*;
        let name = |i: usize| l.name_arg(i).cloned();
        let value = |i: usize| l.args.get(i).filter(|t| is_value(t)).cloned();
        Some(match (&*l.pred, l.args.len()) {
            ("runout", 1) => Runout(name(0)?),
            ("restore", 1) => Restore(name(0)?),
            ("add", 1) => Add { kind: None, food: name(0)? },
            ("add", 2) => {
                let k = name(0)?;
                if !ADD_TYPES.contains(&&*k) {
                    return None;
                }
                Add { kind: Some(k), food: name(1)? }
            }
            ("add", 3) => AddProperty { food: name(0)?, property: name(1)?, value: value(2)? },
            ("edit", 3) => Edit { food: name(0)?, property: name(1)?, value: value(2)? },
            ("edit", 4) => EditValue { food: name(0)?, property: name(1)?, old: value(2)?, new: value(3)? },
            ("delete", 1) => Delete(name(0)?),
            ("delete", 2) => DeleteProperty { food: name(0)?, property: name(1)? },
            ("delete", 3) => DeleteValue { food: name(0)?, property: name(1)?, value: value(2)? },
            ("done", 0) => Done,
            ("quit", 0) => Quit,
            ("irrelevant", 0) => Irrelevant,
            _ => return None,
        })
    }
}

fn is_value(t: &Term) -> bool {
    match t {
        Term::Atom(_) | Term::Int(_) | Term::Str(_) => true,
        Term::Decimal(d) => d.mantissa >= 0,
        _ => false,
    }
}

impl CustomerFrame {
    pub fn to_literal(&self) -> Literal {
        use CustomerFrame::*;
        match self {
            NeedRecommend { content, kind } => Literal::new(
                "need_recommend",
                vec![a(content), Term::atom(match kind {
                    RecommendKind::Category => "category",
                    RecommendKind::Upgrade => "upgrade",
                })],
            ),
            Order { food, number } => Literal::new("order", vec![a(food), Term::Int(i64::from(*number))]),
            Specify { combo, dish } => Literal::new("specify", vec![a(combo), a(dish)]),
            Update { dish, op, option } => Literal::new("update", vec![a(dish), Term::atom(op.as_str()), a(option)]),
            Query { category, food } => Literal::new("query", vec![a(category), a(food)]),
            Completed => Literal::new("completed", vec![]),
            Quit => Literal::new("quit", vec![]),
            Irrelevant => Literal::new("irrelevant", vec![]),
        }
    }

    pub fn from_literal(l: &Literal) -> Option<CustomerFrame> {
        use CustomerFrame::*;
        let name = |i: usize| l.name_arg(i).cloned();
        Some(match (&*l.pred, l.args.len()) {
            ("need_recommend", 2) => NeedRecommend {
                content: name(0)?,
                kind: match &*name(1)? {
                    "category" => RecommendKind::Category,
                    "upgrade" => RecommendKind::Upgrade,
                    _ => return None,
                },
            },
            ("order", 2) => {
                let n = l.args[1].as_int().filter(|n| (1..=99).contains(n))?;
                Order { food: name(0)?, number: n as u32 }
            }
            ("specify", 2) => Specify { combo: name(0)?, dish: name(1)? },
            ("update", 3) => {
                let op = Op::parse(&name(1)?)?;
                let option = name(2)?;
                if !(op.accepts(&option) || (op == Op::Add && &*option == "none")) {
                    return None;
                }
                Update { dish: name(0)?, op, option }
            }
            ("query", 2) => {
                let category = name(0)?;
                if !QUERY_CATEGORIES.contains(&&*category) {
                    return None;
                }
                Query { category, food: name(1)? }
            }
            ("completed" | "complete", 0) => Completed,
            ("quit", 0) => Quit,
            ("irrelevant", 0) => Irrelevant,
            _ => return None,
        })
    }
}

impl Frame {
    pub fn to_literal(&self) -> Literal {
        match self {
            Frame::Manager(m) => m.to_literal(),
            Frame::Customer(c) => c.to_literal(),
        }
    }

    pub fn from_literal(role: Role, l: &Literal) -> Option<Frame> {
        match role {
            Role::Manager => ManagerFrame::from_literal(l).map(Frame::Manager),
            Role::Customer => CustomerFrame::from_literal(l).map(Frame::Customer),
        }
    }

    pub fn irrelevant(role: Role) -> Frame {
        match role {
            Role::Manager => Frame::Manager(ManagerFrame::Irrelevant),
            Role::Customer => Frame::Customer(CustomerFrame::Irrelevant),
        }
    }

    pub fn is_quit(&self) -> bool {
        matches!(self, Frame::Manager(ManagerFrame::Quit) | Frame::Customer(CustomerFrame::Quit))
    }
}

/// Render frames or predicates as a transcript block: `a(x). b.`
pub fn render_block(lits: &[Literal]) -> String {
    lits.iter().map(|l| format!("{}.", l.plain())).collect::<Vec<_>>().join(" ")
}

/// `pred(args...)` builder for response predicates.
pub fn pred(name: &str, args: Vec<Term>) -> Literal {
    Literal { pred: sym(name), args }
}

pub fn atom(s: &str) -> Term {
    Term::atom(s)
}

pub fn money(cents: i64) -> Term {
    Term::Decimal(Decimal::cents(cents))
}
