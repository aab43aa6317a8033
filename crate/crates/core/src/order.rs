//! Order lines shared by the service agent, pricing and tickets.

use serde::Serialize;

use crate::frame::Op;
use crate::kb::MenuKb;
use crate::term::{Sym, Term};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Modifier {
    pub op: Op,
    pub option: Sym,
}

impl Modifier {
    pub fn new(op: Op, option: &str) -> Self {
        Modifier { op, option: option.into() }
    }
}

/// One dish on the order: a standalone dish line, or one slot of a combo.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Item {
    /// `None` until the customer picks from the option group.
    pub dish: Option<Sym>,
    /// Option group this slot is filled from, for combo slots.
    pub group: Option<Sym>,
    /// Applied modifiers, oldest first.
    pub modifiers: Vec<Modifier>,
    /// Set once the customer added a topping or declined toppings.
    pub toppings_done: bool,
}

impl Item {
    pub fn dish(name: &str) -> Self {
        Item { dish: Some(name.into()), group: None, modifiers: Vec::new(), toppings_done: false }
    }

    pub fn slot(group: &str) -> Self {
        Item { dish: None, group: Some(group.into()), modifiers: Vec::new(), toppings_done: false }
    }

    pub fn decided(&self, op: Op) -> bool {
        self.modifiers.iter().any(|m| m.op == op)
    }

    pub fn has(&self, m: &Modifier) -> bool {
        self.modifiers.contains(m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderLine {
    pub food: Sym,
    /// 1-based index among lines for the same food.
    pub instance: u32,
    pub combo: bool,
    pub items: Vec<Item>,
}

impl OrderLine {
    pub fn dish(name: &str, instance: u32) -> Self {
        OrderLine { food: name.into(), instance, combo: false, items: vec![Item::dish(name)] }
    }

    /// A combo line with one slot per `combo_contain/2` fact, in menu order.
    pub fn combo(kb: &MenuKb, name: &str, instance: u32) -> Self {
        let items = kb
            .about("combo_contain", name)
            .filter_map(|f| f.name_arg(1))
            .map(|part| match kb.kind_of(part) {
                Some(crate::kb::FoodKind::Dish) => Item::dish(part),
                _ => Item::slot(part),
            })
            .collect();
        OrderLine { food: name.into(), instance, combo: true, items }
    }

    /// Members of an option group, in list order.
    pub fn group_members(kb: &MenuKb, group: &str) -> Vec<Sym> {
        kb.value("combo_option_group", group)
            .and_then(Term::as_list)
            .map(|l| l.iter().filter_map(|t| t.as_atom().cloned()).collect())
            .unwrap_or_default()
    }
}
