use crate::frame::{atom, money, pred};
use crate::kb::{FoodKind, MenuKb, CATEGORIES};
use crate::shared_state::Snapshot;
use crate::term::{Literal, Sym, Term};

/// Membership test for a recommendation category, or `None` when the
/// word names no category.
pub fn category_filter<'a>(kb: &'a MenuKb, content: &str) -> Option<Box<dyn Fn(&Sym) -> bool + 'a>> {
    let flag = |p: &'static str| -> Box<dyn Fn(&Sym) -> bool + 'a> {
        Box::new(move |f: &Sym| kb.holds(p, &[Term::Atom(f.clone())]))
    };
    Some(match content {
        "all" | "any" | "none" => Box::new(|_: &Sym| true),
        "combo" => Box::new(|f: &Sym| kb.kind_of(f) == Some(FoodKind::Combo)),
        "veggie" | "vegetarian" | "vegan" => flag("veggie"),
        "chicken" | "cantina_chicken" => flag("cantina_chicken"),
        "best_seller" | "popular" => flag("best_seller"),
        c if CATEGORIES.contains(&c) => {
            let c = c.to_string();
            Box::new(move |f: &Sym| kb.holds("category", &[Term::Atom(f.clone()), atom(&c)]))
        }
        _ => return None,
    })
}

/// `answer(Food, Category, Value)` predicates for a customer query. Errors
/// carry the unknown name.
pub fn answer_query(snap: &Snapshot, category: &str, food: &Sym) -> Result<Vec<Literal>, Sym> {
    let kb = &snap.kb;
    let kind = kb.kind_of(food).ok_or_else(|| food.clone())?;
    let f = Term::Atom(food.clone());
    let available = |name: &Sym| !snap.is_unavailable(name).unwrap_or(true);
    let names = |p: &str, i: usize| -> Vec<Sym> { kb.about(p, food).filter_map(|x| x.name_arg(i).cloned()).collect() };
    let mut values: Vec<Term> = Vec::new();
    match category {
        "price" => {
            let p = match kind {
                FoodKind::Dish | FoodKind::Combo => kb.price(food),
                _ => kb.value("extra_price", food).and_then(Term::as_int),
            };
            values.extend(p.map(money));
        }
        "calories" => {
            let c = match kind {
                FoodKind::Dish | FoodKind::Combo => kb.value("original_cal", food),
                _ => kb.value("extra_cal", food),
            };
            values.extend(c.cloned());
        }
        "ingredient" => values.extend(names("included_ingredient", 1).into_iter().map(Term::Atom)),
        "add-on" => {
            let mut tops = names("available_topping", 1);
            for inc in names("included_ingredient", 1) {
                if kb.value("extra_price", &inc).is_some() && !tops.contains(&inc) {
                    tops.push(inc);
                }
            }
            values.extend(tops.into_iter().filter(|t| available(t)).map(Term::Atom));
        }
        "replacement" => {
            for x in kb.about("replaceable_ingredient", food) {
                if let (Some(from), Some(to)) = (x.name_arg(1), x.name_arg(2)) {
                    if available(to) {
                        values.push(Term::compound("change", vec![Term::Atom(from.clone()), Term::Atom(to.clone())]));
                    }
                }
            }
        }
        "style" => values.extend(names("available_special_style", 1).into_iter().map(Term::Atom)),
        "combo-content" => values.extend(names("combo_contain", 1).into_iter().map(Term::Atom)),
        "category" => {
            values.extend(names("category", 1).into_iter().map(Term::Atom));
            if values.is_empty() {
                values.push(atom(kind.pred()));
            }
        }
        other => return Err(other.into()),
    }
    if values.is_empty() {
        values.push(atom("none"));
    }
    Ok(values.into_iter().map(|v| pred("answer", vec![f.clone(), atom(category), v])).collect())
}
