use std::sync::OnceLock;

use regex::Regex;

use super::phrasebook::Phrasebook;
use super::text::{cue_spans, find, first_number, has_any, normalize, Lexicon, Mention};
use super::{vocabulary, CustomerContext, NameCorrector, NlError, ParseContext, Parser};
use crate::frame::{CustomerFrame as C, Frame, ManagerFrame as M, Op, RecommendKind, Role};
use crate::kb::{FoodKind, MenuKb, CATEGORIES};
use crate::syntax::parse_term;
use crate::term::{Sym, Term};

/// Keyword and pattern parser over the phrasebook. Deterministic and
/// offline.
#[derive(Clone, Debug)]
pub struct RulesParser {
    pb: Phrasebook,
}

impl Default for RulesParser {
    fn default() -> Self {
        RulesParser { pb: Phrasebook::builtin().clone() }
    }
}

const QUESTION_WORDS: &[&str] = &["what", "whats", "how", "hows", "which", "does", "do", "is", "are", "tell"];
const FILLER: &[&str] =
    &["a", "an", "the", "some", "me", "please", "i", "can", "could", "have", "get", "want", "like", "id", "ill", "order", "take", "give", "with", "and", "hi", "hello", "hey"];

struct Utterance<'a> {
    raw: &'a str,
    toks: Vec<String>,
    mentions: Vec<Mention>,
    menu: &'a MenuKb,
}

impl Utterance<'_> {
    fn kind(&self, m: &Mention) -> Option<FoodKind> {
        self.menu.kind_of(&m.name)
    }

    fn of_kind(&self, ok: impl Fn(FoodKind) -> bool) -> Vec<&Mention> {
        self.mentions.iter().filter(|m| self.kind(m).is_some_and(&ok)).collect()
    }

    /// Whether token `i` lies inside a name mention.
    fn in_mention(&self, i: usize) -> bool {
        self.mentions.iter().any(|m| (m.start..m.end).contains(&i))
    }

    /// Cue occurrences outside name mentions.
    fn free_cues(&self, phrases: &[String]) -> Vec<(usize, usize)> {
        cue_spans(&self.toks, phrases).into_iter().filter(|(i, _)| !self.in_mention(*i)).collect()
    }

    fn has(&self, phrases: &[String]) -> bool {
        !self.free_cues(phrases).is_empty()
    }
}

impl RulesParser {
    pub fn new(pb: Phrasebook) -> Self {
        RulesParser { pb }
    }

    pub fn phrasebook(&self) -> &Phrasebook {
        &self.pb
    }

    fn lexicon(&self, menu: &MenuKb, role: Role) -> Lexicon {
        let mut aliases: Vec<(&str, &str)> = self.pb.aliases.iter().map(|(a, t)| (a.as_str(), t.as_str())).collect();
        if role == Role::Manager {
            aliases.extend(self.pb.manager_aliases.iter().map(|(a, t)| (a.as_str(), t.as_str())));
        }
        Lexicon::new(vocabulary(menu), &aliases)
    }

    /// A count word in the few tokens before `at`, not crossing `floor`.
    fn count_before(&self, u: &Utterance, at: usize, floor: usize) -> Option<u32> {
        (floor.max(at.saturating_sub(3))..at).rev().find_map(|i| self.pb.number(&u.toks[i]))
    }

    fn category_word(&self, u: &Utterance) -> Option<String> {
        u.toks
            .iter()
            .enumerate()
            .filter(|(i, _)| !u.in_mention(*i))
            .find_map(|(_, t)| self.pb.categories.get(t).cloned())
    }

    fn customer(&self, u: &Utterance, ctx: &CustomerContext) -> Vec<C> {
        let cues = &self.pb.cues;
        if u.toks.is_empty() {
            return vec![C::Irrelevant];
        }
        if u.has(&cues.quit) {
            return vec![C::Quit];
        }
        let foods = u.of_kind(|k| matches!(k, FoodKind::Dish | FoodKind::Combo));
        let tops = u.of_kind(FoodKind::is_topping);
        let question = ctx.question.as_ref();
        let asked_dish = question.filter(|q| q.topic != "choose").map(|q| q.subject.clone());
        // Bare modifiers go to the latest line that takes toppings.
        let last_ordered = ctx
            .ordered
            .iter()
            .rev()
            .find(|(d, _)| u.menu.about("available_topping", d).next().is_some())
            .or(ctx.ordered.last())
            .map(|(d, _)| d.clone());

        if u.has(&cues.completed) && foods.is_empty() && tops.is_empty() {
            return vec![C::Completed];
        }

        if u.has(&cues.recommend) {
            let named = foods.iter().find(|m| u.kind(m) == Some(FoodKind::Dish)).map(|m| m.name.clone());
            if u.has(&cues.upgrade) {
                let target = named.or(asked_dish).or(ctx.focus.clone()).or(last_ordered);
                return vec![C::NeedRecommend { content: target.unwrap_or_else(|| "none".into()), kind: RecommendKind::Upgrade }];
            }
            let content = self.category_word(u).unwrap_or_else(|| "all".into());
            return vec![C::NeedRecommend { content: content.into(), kind: RecommendKind::Category }];
        }

        if QUESTION_WORDS.contains(&u.toks[0].as_str()) {
            for (category, phrases) in &cues.query {
                if has_any(&u.toks, phrases) {
                    let food = foods.first().or(tops.first()).map(|m| m.name.clone()).or(ctx.focus.clone());
                    if let Some(food) = food {
                        return vec![C::Query { category: category.as_str().into(), food }];
                    }
                }
            }
        }

        if let Some(q) = question {
            match q.topic.as_str() {
                "choose" => {
                    let combo: Sym = q.combo.clone().unwrap_or_else(|| "none".into());
                    let picks: Vec<C> = foods
                        .iter()
                        .filter(|m| q.choices.contains(&m.name))
                        .map(|m| C::Specify { combo: combo.clone(), dish: m.name.clone() })
                        .collect();
                    if !picks.is_empty() {
                        return picks;
                    }
                }
                "add" => {
                    let pronoun = u.has(&cues.pronoun) && ctx.focus_topping.is_some() && u.has(&cues.upgrade);
                    if tops.is_empty() && foods.is_empty() && !pronoun && u.has(&cues.no) {
                        return vec![C::Update { dish: q.subject.clone(), op: Op::Add, option: "none".into() }];
                    }
                }
                "size" if foods.iter().all(|m| m.name == q.subject) => {
                    if let Some(opt) = self.size_word(u) {
                        return vec![C::Update { dish: q.subject.clone(), op: Op::Size, option: opt.into() }];
                    }
                }
                style => {
                    if let Some(op) = Op::parse(style).filter(|o| o.is_style()) {
                        if tops.is_empty() && foods.iter().all(|m| m.name == q.subject) {
                            let answer = if u.has(&cues.no) {
                                Some("no")
                            } else if u.has(&cues.yes) || u.has(&cues.styles[style]) {
                                Some("yes")
                            } else {
                                None
                            };
                            if let Some(a) = answer {
                                return vec![C::Update { dish: q.subject.clone(), op, option: a.into() }];
                            }
                        }
                    }
                }
            }
        }

        let mut orders: Vec<C> = Vec::new();
        let mut updates: Vec<C> = Vec::new();
        let ordered = |d: &Sym| ctx.ordered.iter().any(|(n, _)| n == d);

        // A named dish already on the order is the target of modifiers;
        // other named foods are new orders.
        let has_modifiers = !tops.is_empty() || self.size_word(u).is_some() || self.style_words(u).next().is_some();
        let mut target: Option<(Sym, u32)> = None;
        let mut floor = 0;
        for m in &foods {
            let n = self.count_before(u, m.start, floor);
            floor = m.end;
            if has_modifiers && ordered(&m.name) && u.kind(m) == Some(FoodKind::Dish) && target.is_none() {
                target = Some((m.name.clone(), n.unwrap_or(1)));
                continue;
            }
            let n = n.unwrap_or(1);
            if u.kind(m) == Some(FoodKind::Dish) && target.is_none() {
                target = Some((m.name.clone(), n));
            }
            orders.push(C::Order { food: m.name.clone(), number: n });
        }
        let (dish, times) = match target {
            Some((d, n)) => (Some(d), n),
            None => (asked_dish.clone().or(last_ordered.clone()), 1),
        };
        let times = if u.has(&cues.all) {
            dish.as_ref().and_then(|d| ctx.ordered.iter().find(|(n, _)| n == d)).map_or(times, |(_, c)| *c as u32)
        } else if !find(&u.toks, "both").is_empty() {
            2
        } else {
            times
        };

        if let Some(dish) = &dish {
            let mut emit = |op: Op, option: Sym| {
                for _ in 0..times.max(1) {
                    updates.push(C::Update { dish: dish.clone(), op, option: option.clone() });
                }
            };
            let changes = u.free_cues(&cues.ops["change"]);
            if let (Some(&(at, len)), 2..) = (changes.first(), tops.len()) {
                let instead = u.toks[at..at + len].join(" ") == "instead of";
                let option = if instead {
                    tops.iter().rev().find(|m| m.end <= at).unwrap_or(&tops[0])
                } else {
                    tops.iter().find(|m| m.start >= at + len).map_or(&tops[1], |first| {
                        tops.iter().find(|m| m.start > first.start).unwrap_or(first)
                    })
                };
                emit(Op::Change, option.name.clone());
            } else {
                for t in &tops {
                    emit(self.op_before(u, t.start), t.name.clone());
                }
                if tops.is_empty() && u.has(&cues.pronoun) && u.has(&cues.upgrade) {
                    if let Some(t) = &ctx.focus_topping {
                        emit(Op::Add, t.clone());
                    }
                }
            }
            for (op, yes) in self.style_words(u) {
                updates.push(C::Update { dish: dish.clone(), op, option: if yes { "yes" } else { "no" }.into() });
            }
        }
        if let Some(opt) = self.size_word(u) {
            let drink = foods
                .iter()
                .map(|m| m.name.clone())
                .chain(asked_dish.clone())
                .chain(ctx.ordered.iter().rev().map(|(d, _)| d.clone()))
                .find(|d| u.menu.holds("size_changable_drink", &[Term::Atom(d.clone())]));
            if let Some(d) = drink {
                updates.push(C::Update { dish: d, op: Op::Size, option: opt.into() });
            }
        }

        if orders.is_empty() && updates.is_empty() && u.has(&cues.order) {
            if let (Some(n), Some(f)) = (u.toks.iter().find_map(|t| self.pb.number(t)), &ctx.focus) {
                orders.push(C::Order { food: f.clone(), number: n });
            } else if let Some(f) = self.corrected_order(u) {
                let n = u.toks.iter().find_map(|t| self.pb.number(t)).unwrap_or(1);
                orders.push(C::Order { food: f, number: n });
            }
        }
        orders.extend(updates);
        if orders.is_empty() {
            if u.has(&cues.completed) || u.has(&cues.no) && question.is_none() {
                return vec![C::Completed];
            }
            orders.push(C::Irrelevant);
        }
        orders
    }

    /// Try name correction on what follows the order words.
    fn corrected_order(&self, u: &Utterance) -> Option<Sym> {
        let words: Vec<&str> = u
            .toks
            .iter()
            .map(String::as_str)
            .filter(|t| !FILLER.contains(t) && self.pb.number(t).is_none())
            .collect();
        if words.is_empty() {
            return None;
        }
        let corrector = NameCorrector::with_threshold(u.menu.orderables(), 0.75);
        corrector.correct(&words.join(" "))
    }

    fn op_before(&self, u: &Utterance, at: usize) -> Op {
        let mut best: Option<(usize, Op)> = None;
        for (name, phrases) in &self.pb.cues.ops {
            let Some(op) = Op::parse(name) else { continue };
            for (i, len) in u.free_cues(phrases) {
                let end = i + len;
                if end <= at && at - end <= 2 && best.is_none_or(|(b, _)| end > b) {
                    best = Some((end, op));
                }
            }
        }
        best.map_or(Op::Add, |(_, op)| op)
    }

    fn size_word(&self, u: &Utterance) -> Option<&'static str> {
        if u.has(&self.pb.cues.large) {
            Some("large")
        } else if u.has(&self.pb.cues.regular) {
            Some("regular")
        } else {
            None
        }
    }

    /// Style requests outside names: "make it fresco", "no fresco".
    fn style_words<'a>(&'a self, u: &'a Utterance) -> impl Iterator<Item = (Op, bool)> + 'a {
        self.pb.cues.styles.iter().filter_map(move |(name, words)| {
            let op = Op::parse(name)?;
            let (at, _) = *u.free_cues(words).first()?;
            let negated = at > 0 && matches!(u.toks[at - 1].as_str(), "no" | "not" | "without");
            Some((op, !negated))
        })
    }

    fn manager(&self, u: &Utterance, ctx: &crate::manager_agent::ManagerContext) -> Vec<M> {
        let cues = &self.pb.cues;
        if u.toks.is_empty() {
            return vec![M::Irrelevant];
        }
        if u.has(&cues.quit) {
            return vec![M::Quit];
        }
        let tops = u.of_kind(FoodKind::is_topping);
        let foods = u.of_kind(|k| matches!(k, FoodKind::Dish | FoodKind::Combo));
        let asking = ctx.asking.as_deref();

        if !tops.is_empty() && u.has(&cues.runout) {
            return tops.iter().map(|m| M::Runout(m.name.clone())).collect();
        }
        if !tops.is_empty() && u.has(&cues.restore) && asking.is_none() {
            return tops.iter().map(|m| M::Restore(m.name.clone())).collect();
        }

        if let (Some("type"), Some(food)) = (asking, &ctx.food) {
            if let Some(kind) = self.kind_word(u) {
                return vec![M::Add { kind: Some(kind.into()), food: food.clone() }];
            }
        }

        if u.has(&cues.delete) {
            if let (Some(dish), Some(t)) = (foods.first(), tops.first()) {
                return vec![M::DeleteValue { food: dish.name.clone(), property: "ingredient".into(), value: Term::Atom(t.name.clone()) }];
            }
            if let Some(m) = foods.first().or(tops.first()) {
                if let Some(p) = self.property_word(u) {
                    return vec![M::DeleteProperty { food: m.name.clone(), property: p.into() }];
                }
                return vec![M::Delete(m.name.clone())];
            }
        }

        if let (Some(m), true) = (foods.first(), u.has(&cues.edit)) {
            if tops.len() >= 2 {
                return vec![M::EditValue {
                    food: m.name.clone(),
                    property: "ingredient".into(),
                    old: Term::Atom(tops[0].name.clone()),
                    new: Term::Atom(tops[1].name.clone()),
                }];
            }
            let property = self.property_word(u).unwrap_or("price");
            if let Some(v) = first_number(&u.toks).and_then(|n| number_term(n, property)) {
                return vec![M::Edit { food: m.name.clone(), property: property.into(), value: v }];
            }
        }

        if let (Some(food), Some(slot)) = (&ctx.food, asking.filter(|a| *a != "type")) {
            let values = self.slot_values(u, food, slot);
            if !values.is_empty() {
                return values;
            }
            if u.has(&cues.done) || u.has(&cues.no) {
                return vec![M::Done];
            }
        }

        if u.has(&cues.add) {
            if let Some(name) = new_name(u.raw).filter(|n| u.menu.kind_of(n).is_none()) {
                let kind = self.kind_word(u).map(Sym::from);
                return vec![M::Add { kind, food: name.into() }];
            }
        }
        vec![M::Irrelevant]
    }

    /// Values for the asked slot plus any price, calories or category the
    /// manager volunteered.
    fn slot_values(&self, u: &Utterance, food: &Sym, slot: &str) -> Vec<M> {
        let mut out = Vec::new();
        let add = |property: &str, value: Term| M::AddProperty { food: food.clone(), property: property.into(), value };
        let words = |w: &[&str]| w.iter().any(|x| u.toks.iter().any(|t| t == x));
        let price_said = u.raw.contains('$') || words(&["dollars", "dollar", "bucks", "cost", "costs", "price"]);
        let cal_said = words(&["calories", "calorie", "cal", "kcal"]);
        let numbers: Vec<&str> = u.toks.iter().map(String::as_str).filter(|t| t.parse::<f64>().is_ok()).collect();
        let mut numbers = numbers.into_iter();
        for property in ["price", "calories"] {
            let said = if property == "price" { price_said } else { cal_said };
            if said || slot == property && !(price_said || cal_said) {
                if let Some(v) = numbers.next().and_then(|n| number_term(n, property)) {
                    out.push(add(property, v));
                }
            }
        }
        if let Some(c) = self.category_word(u).filter(|c| CATEGORIES.contains(&c.as_str())) {
            if slot == "category" || words(&["category"]) {
                out.push(add("category", Term::Atom(c.into())));
            }
        }
        match slot {
            "ingredient" | "popular" => {
                for m in u.of_kind(FoodKind::is_topping) {
                    out.push(add(slot, Term::Atom(m.name.clone())));
                }
            }
            "contain" => {
                for m in u.of_kind(|k| k == FoodKind::Dish) {
                    out.push(add(slot, Term::Atom(m.name.clone())));
                }
                for (i, t) in u.toks.iter().enumerate() {
                    if !u.in_mention(i) && u.menu.value("combo_option_group", t).is_some() {
                        out.push(add(slot, Term::atom(t)));
                    }
                }
            }
            _ => {}
        }
        out
    }

    fn kind_word(&self, u: &Utterance) -> Option<&'static str> {
        u.toks.iter().enumerate().filter(|(i, _)| !u.in_mention(*i)).find_map(|(_, t)| match t.as_str() {
            "dish" | "item" => Some("dish"),
            "combo" | "meal" => Some("combo"),
            "ingredient" | "topping" => Some("ingredient"),
            _ => None,
        })
    }

    fn property_word(&self, u: &Utterance) -> Option<&'static str> {
        u.toks.iter().find_map(|t| match t.as_str() {
            "price" | "cost" | "costs" | "dollars" => Some("price"),
            "calories" | "calorie" | "cal" => Some("calories"),
            "category" => Some("category"),
            "ingredients" | "ingredient" => Some("ingredient"),
            _ => None,
        })
    }
}

/// Money becomes a decimal in dollars; calories an integer.
fn number_term(tok: &str, property: &str) -> Option<Term> {
    let t = parse_term(tok).ok()?;
    match (property, &t) {
        ("calories", Term::Int(_)) => Some(t),
        ("calories", _) => None,
        (_, Term::Int(_) | Term::Decimal(_)) => Some(t),
        _ => None,
    }
}

/// The name a manager gives a new food: words after "called"/"named", or
/// else the first capitalized run after the opening word.
fn new_name(raw: &str) -> Option<String> {
    static CALLED: OnceLock<Regex> = OnceLock::new();
    static TITLE: OnceLock<Regex> = OnceLock::new();
    let called = CALLED.get_or_init(|| {
        Regex::new(r"(?i)\b(?:called|named)\s+(.+?)(?:[.,!?;]|\s+(?:to|with|for|at|on|which|that)\s|$)").expect("valid regex")
    });
    let title = TITLE.get_or_init(|| {
        Regex::new(r"\b([A-Z][\w'-]*(?:\s+(?:[A-Z0-9][\w'-]*|de|and|of|n))*)").expect("valid regex")
    });
    if let Some(c) = called.captures(raw) {
        return Some(c[1].trim().to_string());
    }
    let first_word_end = raw.find(char::is_whitespace).unwrap_or(raw.len());
    title.captures(&raw[first_word_end..]).map(|c| c[1].trim().to_string())
}

impl Parser for RulesParser {
    fn parse(&self, utterance: &str, ctx: &ParseContext<'_>) -> Result<Vec<Frame>, NlError> {
        let toks = normalize(utterance);
        let mentions = self.lexicon(ctx.menu, ctx.role).scan(&toks);
        let u = Utterance { raw: utterance, toks, mentions, menu: ctx.menu };
        Ok(match ctx.role {
            Role::Customer => self.customer(&u, &ctx.customer).into_iter().map(Frame::Customer).collect(),
            Role::Manager => self.manager(&u, &ctx.manager).into_iter().map(Frame::Manager).collect(),
        })
    }
}
