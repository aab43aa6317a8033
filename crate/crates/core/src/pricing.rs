//! Exact price and calorie totals for order lines, in integer cents.

use serde::Serialize;

use crate::frame::Op;
use crate::kb::MenuKb;
use crate::order::{Item, Modifier, OrderLine};
use crate::term::{Fact, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PricingError {
    #[error("no {0} fact")]
    MissingFact(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PriceBreakdown {
    pub base: i64,
    /// Source fact and the cents it adds.
    pub adjustments: Vec<(String, i64)>,
    pub total: i64,
}

fn missing(pred: &str, args: &[&str]) -> PricingError {
    let args = args.iter().map(|a| Term::atom(a)).collect();
    PricingError::MissingFact(Fact::new(pred, args).to_string())
}

fn int_fact(kb: &MenuKb, pred: &str, args: &[&str]) -> Result<(Fact, i64), PricingError> {
    let key: Vec<Term> = args.iter().map(|a| Term::atom(a)).chain([Term::var("V")]).collect();
    let facts = kb.lookup(pred, &key).map_err(|_| missing(pred, args))?;
    let fact = facts.into_iter().next().ok_or_else(|| missing(pred, args))?;
    let v = fact.args.last().and_then(Term::as_int).ok_or_else(|| missing(pred, args))?;
    Ok((fact, v))
}

/// The menu fact pricing one modifier, or `None` when it is free.
fn modifier_price(kb: &MenuKb, dish: &str, m: &Modifier) -> Result<Option<(Fact, i64)>, PricingError> {
    let opt = &*m.option;
    Ok(match m.op {
        Op::Add => Some(int_fact(kb, "upgrade_price", &[dish, opt])?),
        Op::Extra => Some(int_fact(kb, "extra_price", &[opt])?),
        Op::Change => {
            let pattern = [Term::atom(dish), Term::var("O"), Term::atom(opt)];
            let from = kb
                .lookup("replaceable_ingredient", &pattern)
                .ok()
                .and_then(|f| f.into_iter().next())
                .and_then(|f| f.name_arg(1).cloned())
                .ok_or_else(|| missing("replaceable_ingredient", &[dish, "_", opt]))?;
            Some(int_fact(kb, "replacement_price", &[dish, &from, opt])?)
        }
        op if op.is_style() && opt == "yes" => Some(int_fact(kb, "special_style_price", &[dish, op.as_str()])?),
        Op::Size if opt == "large" => {
            if !kb.holds("size_changable_drink", &[Term::atom(dish)]) {
                return Err(missing("size_changable_drink", &[dish]));
            }
            Some(int_fact(kb, "upgrade_size_price", &[])?)
        }
        _ => None,
    })
}

fn item_adjustments(kb: &MenuKb, item: &Item, out: &mut Vec<(String, i64)>) -> Result<(), PricingError> {
    let Some(dish) = item.dish.as_deref() else { return Ok(()) };
    if let Some(group) = item.group.as_deref() {
        let key = [Term::atom(group), Term::atom(dish), Term::var("P")];
        if let Some(f) = kb.lookup("group_upgrade_price", &key).ok().and_then(|v| v.into_iter().next()) {
            let p = f.args[2].as_int().unwrap_or(0);
            out.push((f.to_string(), p));
        }
    }
    for m in &item.modifiers {
        if let Some((fact, p)) = modifier_price(kb, dish, m)? {
            out.push((fact.to_string(), p));
        }
    }
    Ok(())
}

pub fn price_line(kb: &MenuKb, line: &OrderLine) -> Result<PriceBreakdown, PricingError> {
    let (_, base) = int_fact(kb, "original_price", &[&line.food])?;
    let mut adjustments = Vec::new();
    for item in &line.items {
        item_adjustments(kb, item, &mut adjustments)?;
    }
    let total = base + adjustments.iter().map(|(_, p)| p).sum::<i64>();
    Ok(PriceBreakdown { base, adjustments, total })
}

pub fn price_order(kb: &MenuKb, lines: &[OrderLine]) -> Result<i64, PricingError> {
    lines.iter().map(|l| price_line(kb, l).map(|b| b.total)).sum()
}

/// Calories of a line: the food's own count plus added and extra toppings.
pub fn calories_line(kb: &MenuKb, line: &OrderLine) -> Result<i64, PricingError> {
    let (_, mut total) = int_fact(kb, "original_cal", &[&line.food])?;
    for item in &line.items {
        let Some(dish) = item.dish.as_deref() else { continue };
        for m in &item.modifiers {
            total += match m.op {
                Op::Add => int_fact(kb, "upgrade_cal", &[dish, &m.option])?.1,
                Op::Extra => int_fact(kb, "extra_cal", &[&m.option])?.1,
                _ => 0,
            };
        }
    }
    Ok(total)
}

/// `(dish, topping)` pairs priced by `upgrade_price/3` without a matching
/// `upgrade_cal/3`.
pub fn missing_upgrade_cal(kb: &MenuKb) -> Vec<(String, String)> {
    kb.facts()
        .filter(|f| &*f.pred == "upgrade_price" && f.args.len() == 3)
        .filter(|f| {
            let key = [f.args[0].clone(), f.args[1].clone(), Term::var("_C")];
            kb.lookup("upgrade_cal", &key).map_or(true, |v| v.is_empty())
        })
        .map(|f| (f.args[0].plain().to_string(), f.args[1].plain().to_string()))
        .collect()
}
