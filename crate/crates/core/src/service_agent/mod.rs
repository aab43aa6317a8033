//! Customer-facing order taking: admission through the shared and update
//! rules, the per-dish question loop, recommendations, answers and check
//! mode.

mod answer;

use serde::Serialize;

use crate::frame::{atom, money, pred, CustomerFrame, Op, RecommendKind};
use crate::kb::FoodKind;
use crate::order::{Modifier, OrderLine};
use crate::pricing::{self, PriceBreakdown, PricingError};
use crate::reasoner::{FactStore, ReasonError};
use crate::shared_state::{Snapshot, StateError};
use crate::term::{Fact, Literal, Sym, Term};

pub use answer::{answer_query, category_filter};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Reason(#[from] ReasonError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Listening,
    Asking,
    Checkout,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuestionKind {
    Toppings,
    Style(Op),
    Size,
    /// Pick a dish from a combo option group.
    Choose(Sym),
}

/// An open question about one item of one line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Question {
    pub line: usize,
    pub item: usize,
    pub kind: QuestionKind,
}

/// What the parser needs to resolve short answers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuestionContext {
    pub combo: Option<Sym>,
    /// The dish asked about, or the option group for a choice.
    pub subject: Sym,
    /// `add`, a style name, `size`, or `choose`.
    pub topic: String,
    pub choices: Vec<Sym>,
}

/// Why an update was not admitted.
#[derive(Clone, Debug, PartialEq)]
pub enum Rejection {
    NotOrdered,
    Unavailable(Vec<Term>),
    NotApplicable,
    Duplicate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TicketLine {
    pub food: Sym,
    pub instance: u32,
    pub predicates: Vec<String>,
    pub price: PriceBreakdown,
}

/// The finalized order, as shown in check mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ticket {
    pub lines: Vec<TicketLine>,
    pub total_cents: i64,
    pub total: String,
}

#[derive(Clone, Debug)]
pub struct ServiceAgent {
    pub lines: Vec<OrderLine>,
    pub phase: Phase,
    /// Foods the customer named or the bot recommended or answered about.
    pub mentioned: Vec<Sym>,
    pub question: Option<Question>,
    /// Last food recommended or ordered, for "I'd have two".
    pub focus: Option<Sym>,
    /// Last topping recommended, for "add them".
    pub focus_topping: Option<Sym>,
    pub ticket: Option<Ticket>,
    /// Lines admitted before the current round.
    settled: usize,
}

impl Default for ServiceAgent {
    fn default() -> Self {
        ServiceAgent {
            lines: Vec::new(),
            phase: Phase::Listening,
            mentioned: Vec::new(),
            question: None,
            focus: None,
            focus_topping: None,
            ticket: None,
            settled: 0,
        }
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

impl ServiceAgent {
    pub fn new() -> Self {
        Self::default()
    }

    fn mention(&mut self, name: &Sym) {
        if !self.mentioned.contains(name) {
            self.mentioned.push(name.clone());
        }
    }

    /// Items holding `dish`: standalone lines first, then combo members,
    /// each group in admission order. Position + 1 is the instance index.
    pub fn instances(&self, dish: &str) -> Vec<(usize, usize)> {
        let mut solo = Vec::new();
        let mut member = Vec::new();
        for (li, line) in self.lines.iter().enumerate() {
            for (ii, item) in line.items.iter().enumerate() {
                if item.dish.as_deref() == Some(dish) {
                    if line.combo { member.push((li, ii)) } else { solo.push((li, ii)) }
                }
            }
        }
        solo.extend(member);
        solo
    }

    /// Session facts for one update query, in the `new_` convention.
    fn overlay(&self, dish: &str, op: Op, option: &str) -> FactStore {
        let mut facts = FactStore::new();
        let mut counts: Vec<(Sym, bool, i64)> = Vec::new();
        let mut bump = |name: &Sym, fresh: bool| match counts.iter_mut().find(|(n, f, _)| n == name && *f == fresh) {
            Some(c) => c.2 += 1,
            None => counts.push((name.clone(), fresh, 1)),
        };
        for (li, line) in self.lines.iter().enumerate() {
            let fresh = li >= self.settled;
            bump(&line.food, fresh);
            if line.combo {
                for d in line.items.iter().filter_map(|i| i.dish.as_ref()) {
                    bump(d, fresh);
                }
            }
        }
        for (name, fresh, n) in counts {
            let p = if fresh { "new_order" } else { "updated_order" };
            facts.insert(Fact::new(p, vec![Term::Atom(name), Term::Int(n)]));
        }
        for (i, (li, ii)) in self.instances(dish).into_iter().enumerate() {
            let inst = Term::Int(i as i64 + 1);
            facts.insert(Fact::new("order_instance", vec![atom(dish), inst.clone()]));
            for m in &self.lines[li].items[ii].modifiers {
                facts.insert(Fact::new(
                    "applied",
                    vec![atom(dish), inst.clone(), atom(m.op.as_str()), Term::Atom(m.option.clone())],
                ));
            }
        }
        facts.insert(Fact::new("new_update", vec![atom(dish), atom(op.as_str()), atom(option)]));
        facts
    }

    /// Decide where an update lands: the lowest instance admitted by
    /// `updated_update/4`, or the reason it was refused.
    pub fn admit_update(
        &self,
        snap: &Snapshot,
        dish: &str,
        op: Op,
        option: &str,
    ) -> Result<Result<(usize, usize), Rejection>, AgentError> {
        let program = snap.program_with(self.overlay(dish, op, option))?;
        let mut solver = program.solver();
        let goal = Literal::new("updated_update", vec![atom(dish), atom(op.as_str()), atom(option), Term::var("I")]);
        let best = solver
            .query(&goal)?
            .iter()
            .filter_map(|a| a.get("I").and_then(Term::as_int))
            .min();
        if let Some(i) = best {
            return Ok(Ok(self.instances(dish)[i as usize - 1]));
        }
        if snap.kb.kind_of(dish) != Some(FoodKind::Dish) {
            return Ok(Err(Rejection::NotApplicable));
        }
        let ordered = Literal::new("all_order", vec![atom(dish), Term::var("N")]);
        if solver.query(&ordered)?.is_empty() {
            return Ok(Err(Rejection::NotOrdered));
        }
        let mut reasons = Vec::new();
        for name in [dish, option] {
            if snap.kb.kind_of(name).is_some() {
                for r in snap.reasons(name)? {
                    reasons.push(Term::compound("unavailable", vec![atom(name), r]));
                }
            }
        }
        if !reasons.is_empty() {
            return Ok(Err(Rejection::Unavailable(reasons)));
        }
        let applicable = Literal::new("applicable", vec![atom(dish), atom(op.as_str()), atom(option)]);
        if solver.query(&applicable)?.is_empty() {
            return Ok(Err(Rejection::NotApplicable));
        }
        Ok(Err(Rejection::Duplicate))
    }

    fn apply(&mut self, at: (usize, usize), op: Op, option: &Sym) {
        let item = &mut self.lines[at.0].items[at.1];
        item.modifiers.push(Modifier { op, option: option.clone() });
        if op == Op::Add {
            item.toppings_done = true;
        }
    }

    /// One customer round. Returns the response predicates.
    pub fn step(&mut self, snap: &Snapshot, frames: &[CustomerFrame]) -> Result<Vec<Literal>, AgentError> {
        let mut confirms: Vec<Literal> = Vec::new();
        let mut unavailable: Vec<Term> = Vec::new();
        let mut unavailable_at = None;
        let mut actions: Vec<Literal> = Vec::new();
        let mut quit = false;
        let mut reject = |confirms: &Vec<Literal>, unavailable: &mut Vec<Term>, reasons: Vec<Term>| {
            unavailable_at.get_or_insert(confirms.len());
            for r in reasons {
                if !unavailable.contains(&r) {
                    unavailable.push(r);
                }
            }
        };

        for frame in frames {
            match frame {
                CustomerFrame::Order { food, number } => {
                    let kind = snap.kb.kind_of(food);
                    if !matches!(kind, Some(FoodKind::Dish | FoodKind::Combo)) {
                        let tag = if kind.is_some() { "not_orderable" } else { "unknown" };
                        push_unique(&mut confirms, confirm(tag, Term::Atom(food.clone())));
                        continue;
                    }
                    self.mention(food);
                    let reasons = snap.reasons(food)?;
                    if !reasons.is_empty() {
                        let terms = reasons
                            .into_iter()
                            .map(|r| Term::compound("unavailable", vec![Term::Atom(food.clone()), r]))
                            .collect();
                        reject(&confirms, &mut unavailable, terms);
                        continue;
                    }
                    let mut instance = self.lines.iter().filter(|l| &l.food == food).count() as u32;
                    for _ in 0..*number {
                        instance += 1;
                        self.lines.push(if kind == Some(FoodKind::Combo) {
                            OrderLine::combo(&snap.kb, food, instance)
                        } else {
                            OrderLine::dish(food, instance)
                        });
                    }
                    self.focus = Some(food.clone());
                    if matches!(self.phase, Phase::Checkout) {
                        self.phase = Phase::Asking;
                    }
                    push_unique(&mut confirms, confirm("order", Term::Atom(food.clone())));
                }
                CustomerFrame::Specify { combo, dish } => {
                    if snap.kb.kind_of(dish) != Some(FoodKind::Dish) {
                        push_unique(&mut confirms, confirm("unknown", Term::Atom(dish.clone())));
                        continue;
                    }
                    self.mention(dish);
                    let Some(at) = self.open_slot(snap, combo, dish) else {
                        let what = Term::compound("specify", vec![Term::Atom(combo.clone()), Term::Atom(dish.clone())]);
                        push_unique(&mut confirms, confirm("not_applicable", what));
                        continue;
                    };
                    let reasons = snap.reasons(dish)?;
                    if !reasons.is_empty() {
                        let terms = reasons
                            .into_iter()
                            .map(|r| Term::compound("unavailable", vec![Term::Atom(dish.clone()), r]))
                            .collect();
                        reject(&confirms, &mut unavailable, terms);
                        continue;
                    }
                    self.lines[at.0].items[at.1].dish = Some(dish.clone());
                    push_unique(&mut confirms, confirm("specify", Term::Atom(dish.clone())));
                }
                CustomerFrame::Update { dish, op: Op::Add, option } if &**option == "none" => {
                    let targets: Vec<_> = self
                        .instances(dish)
                        .into_iter()
                        .filter(|&(l, i)| !self.lines[l].items[i].toppings_done)
                        .collect();
                    if self.instances(dish).is_empty() {
                        push_unique(&mut confirms, confirm("not_ordered", Term::Atom(dish.clone())));
                        continue;
                    }
                    for (l, i) in targets {
                        self.lines[l].items[i].toppings_done = true;
                    }
                    push_unique(&mut confirms, confirm("add", atom("none")));
                }
                CustomerFrame::Update { dish, op, option } => {
                    if snap.kb.kind_of(option).is_some() {
                        self.mention(option);
                    }
                    match self.admit_update(snap, dish, *op, option)? {
                        Ok(at) => {
                            self.apply(at, *op, option);
                            if op.is_choice() && self.answers_question(dish, *op) {
                                self.broadcast(snap, at, dish, *op, option)?;
                            }
                            push_unique(&mut confirms, confirm(op.as_str(), Term::Atom(option.clone())));
                        }
                        Err(Rejection::Unavailable(reasons)) => reject(&confirms, &mut unavailable, reasons),
                        Err(Rejection::NotOrdered) => {
                            push_unique(&mut confirms, confirm("not_ordered", Term::Atom(dish.clone())))
                        }
                        Err(r) => {
                            let tag = if r == Rejection::Duplicate { "duplicate" } else { "not_applicable" };
                            push_unique(&mut confirms, confirm(tag, frame.to_literal().to_term()));
                        }
                    }
                }
                CustomerFrame::NeedRecommend { content, kind } => {
                    let r = self.recommend(snap, content, *kind)?;
                    actions.push(r);
                }
                CustomerFrame::Query { category, food } => {
                    match answer_query(snap, category, food) {
                        Ok(answers) => {
                            if &**food != "all" {
                                self.mention(food);
                            }
                            actions.extend(answers);
                        }
                        Err(unknown) => push_unique(&mut confirms, confirm("unknown", Term::Atom(unknown))),
                    }
                }
                CustomerFrame::Completed => {
                    if self.phase == Phase::Listening {
                        self.phase = Phase::Asking;
                    }
                    push_unique(&mut confirms, pred("confirm", vec![atom("complete")]));
                }
                CustomerFrame::Quit => quit = true,
                CustomerFrame::Irrelevant => push_unique(&mut confirms, confirm("irrelevant", atom("none"))),
            }
        }
        self.settled = self.lines.len();

        let unavailable_confirm = (!unavailable.is_empty()).then(|| confirm("unavailable", Term::List(unavailable)));
        if let Some(c) = &unavailable_confirm {
            confirms.insert(unavailable_at.unwrap_or(0).min(confirms.len()), c.clone());
        }

        if quit {
            if self.ticket.is_none() && !self.lines.is_empty() && self.next_question(snap).is_none() {
                self.ticket = Some(self.build_ticket(snap)?);
            }
            self.phase = Phase::Done;
            self.question = None;
            confirms.push(confirm("quit", atom("none")));
            confirms.push(pred("quit", vec![]));
            return Ok(confirms);
        }
        if !actions.is_empty() {
            confirms.extend(actions);
            return Ok(confirms);
        }
        match self.phase {
            Phase::Listening => {
                confirms.push(pred("else", vec![]));
                Ok(confirms)
            }
            Phase::Asking | Phase::Checkout => match self.next_question(snap) {
                Some(q) => {
                    confirms.push(self.ask_predicate(snap, &q));
                    self.question = Some(q);
                    self.phase = Phase::Asking;
                    Ok(confirms)
                }
                None => {
                    self.question = None;
                    self.phase = Phase::Checkout;
                    let ticket = self.build_ticket(snap)?;
                    let mut out: Vec<Literal> = unavailable_confirm.into_iter().collect();
                    out.push(confirm("none", atom("complete")));
                    out.extend(self.check_listing());
                    out.push(pred("price", vec![money(ticket.total_cents)]));
                    self.ticket = Some(ticket);
                    Ok(out)
                }
            },
            Phase::Done => Ok(confirms),
        }
    }

    fn answers_question(&self, dish: &str, op: Op) -> bool {
        let Some(q) = &self.question else { return false };
        let asked = self.lines[q.line].items[q.item].dish.as_deref() == Some(dish);
        asked
            && match q.kind {
                QuestionKind::Style(s) => s == op,
                QuestionKind::Size => op == Op::Size,
                _ => false,
            }
    }

    /// Apply a choice answer to every other undecided item of the same food.
    fn broadcast(&mut self, snap: &Snapshot, first: (usize, usize), dish: &str, op: Op, option: &Sym) -> Result<(), AgentError> {
        let combo = self.lines[first.0].combo;
        let siblings: Vec<_> = self
            .instances(dish)
            .into_iter()
            .filter(|&(l, i)| (l, i) != first && self.lines[l].combo == combo && !self.lines[l].items[i].decided(op))
            .collect();
        for _ in siblings {
            match self.admit_update(snap, dish, op, option)? {
                Ok(at) => self.apply(at, op, option),
                Err(_) => break,
            }
        }
        Ok(())
    }

    /// First unfilled combo slot whose group offers `dish`.
    fn open_slot(&self, snap: &Snapshot, combo: &str, dish: &Sym) -> Option<(usize, usize)> {
        self.lines.iter().enumerate().filter(|(_, l)| l.combo && (combo == "none" || &*l.food == combo)).find_map(|(li, l)| {
            l.items.iter().position(|it| {
                it.dish.is_none()
                    && it.group.as_deref().is_some_and(|g| OrderLine::group_members(&snap.kb, g).contains(dish))
            })
            .map(|ii| (li, ii))
        })
    }

    /// The next open question in admission order, if any.
    pub fn next_question(&self, snap: &Snapshot) -> Option<Question> {
        let kb = &snap.kb;
        for (li, line) in self.lines.iter().enumerate() {
            for (ii, item) in line.items.iter().enumerate() {
                let q = |kind| Some(Question { line: li, item: ii, kind });
                let Some(dish) = item.dish.as_deref() else {
                    return q(QuestionKind::Choose(item.group.clone().expect("slot has a group")));
                };
                if !item.toppings_done && kb.about("available_topping", dish).next().is_some() {
                    return q(QuestionKind::Toppings);
                }
                for f in kb.about("available_special_style", dish) {
                    if let Some(op) = f.name_arg(1).and_then(|s| Op::parse(s)) {
                        if !item.decided(op) {
                            return q(QuestionKind::Style(op));
                        }
                    }
                }
                if kb.holds("size_changable_drink", &[atom(dish)]) && !item.decided(Op::Size) {
                    return q(QuestionKind::Size);
                }
            }
        }
        None
    }

    fn choices(&self, snap: &Snapshot, group: &str) -> Vec<Sym> {
        OrderLine::group_members(&snap.kb, group)
            .into_iter()
            .filter(|d| !snap.is_unavailable(d).unwrap_or(true))
            .collect()
    }

    pub fn ask_predicate(&self, snap: &Snapshot, q: &Question) -> Literal {
        let line = &self.lines[q.line];
        let combo = if line.combo { Term::Atom(line.food.clone()) } else { atom("none") };
        let item = &line.items[q.item];
        let (subject, option) = match &q.kind {
            QuestionKind::Choose(g) => {
                let options = self.choices(snap, g).into_iter().map(Term::Atom).collect();
                (Term::Atom(g.clone()), Term::compound("choose", vec![Term::List(options)]))
            }
            kind => {
                let text = match kind {
                    QuestionKind::Toppings => "add ingredients or sauces".to_string(),
                    QuestionKind::Style(s) => format!("make it {s}"),
                    _ => "choose size".to_string(),
                };
                (Term::Atom(item.dish.clone().expect("asked dish is chosen")), atom(&text))
            }
        };
        pred("ask", vec![Term::List(vec![combo, subject]), option])
    }

    /// The open question, for the parser.
    pub fn question_context(&self, snap: &Snapshot) -> Option<QuestionContext> {
        let q = self.question.as_ref()?;
        let line = self.lines.get(q.line)?;
        let item = line.items.get(q.item)?;
        let combo = line.combo.then(|| line.food.clone());
        Some(match &q.kind {
            QuestionKind::Choose(g) => QuestionContext {
                combo,
                subject: g.clone(),
                topic: "choose".into(),
                choices: self.choices(snap, g),
            },
            kind => QuestionContext {
                combo,
                subject: item.dish.clone()?,
                topic: match kind {
                    QuestionKind::Toppings => "add".into(),
                    QuestionKind::Style(s) => s.as_str().into(),
                    _ => "size".into(),
                },
                choices: Vec::new(),
            },
        })
    }

    /// Lines newest first; each line's modifiers newest first.
    pub fn check_listing(&self) -> Vec<Literal> {
        let mut out = Vec::new();
        for line in self.lines.iter().rev() {
            out.extend(line_predicates(line));
        }
        out
    }

    pub fn build_ticket(&self, snap: &Snapshot) -> Result<Ticket, AgentError> {
        let mut lines = Vec::new();
        for line in self.lines.iter().rev() {
            lines.push(TicketLine {
                food: line.food.clone(),
                instance: line.instance,
                predicates: line_predicates(line).iter().map(Literal::plain).collect(),
                price: pricing::price_line(&snap.kb, line)?,
            });
        }
        let total_cents = lines.iter().map(|l| l.price.total).sum();
        Ok(Ticket { lines, total_cents, total: crate::term::format_cents(total_cents) })
    }

    pub fn recommend(&mut self, snap: &Snapshot, content: &Sym, kind: RecommendKind) -> Result<Literal, AgentError> {
        match kind {
            RecommendKind::Category => {
                let Some(filter) = category_filter(&snap.kb, content) else {
                    return Ok(confirm("unknown", Term::Atom(content.clone())));
                };
                let mut candidates = Vec::new();
                for food in snap.kb.orderables() {
                    if filter(&food) && !self.mentioned.contains(&food) && !snap.is_unavailable(&food)? {
                        candidates.push(food);
                    }
                }
                candidates.sort_by_key(|f| !snap.kb.holds("best_seller", &[Term::Atom(f.clone())]));
                let pick = candidates.into_iter().next();
                if let Some(p) = &pick {
                    self.mention(p);
                    self.focus = Some(p.clone());
                }
                Ok(pred("recommend", vec![atom("category"), pick.map_or(atom("none"), Term::Atom)]))
            }
            RecommendKind::Upgrade => {
                let dish = if snap.kb.kind_of(content) == Some(FoodKind::Dish) {
                    content.clone()
                } else {
                    match self.question_context(snap) {
                        Some(q) if q.topic != "choose" => q.subject,
                        _ => match &self.focus {
                            Some(f) => f.clone(),
                            None => return Ok(pred("recommend", vec![atom("upgrade"), atom("none")])),
                        },
                    }
                };
                let on_order: Vec<Sym> = self
                    .instances(&dish)
                    .into_iter()
                    .flat_map(|(l, i)| self.lines[l].items[i].modifiers.clone())
                    .filter(|m| m.op == Op::Add)
                    .map(|m| m.option)
                    .collect();
                let mut pick = None;
                for f in snap.kb.about("popular_topping", &dish) {
                    let Some(t) = f.name_arg(1) else { continue };
                    if self.mentioned.contains(t) || on_order.contains(t) || snap.is_unavailable(t)? {
                        continue;
                    }
                    pick = Some(t.clone());
                    break;
                }
                if let Some(t) = &pick {
                    self.mention(t);
                    self.focus_topping = Some(t.clone());
                }
                Ok(pred("recommend", vec![atom("upgrade"), pick.map_or(atom("none"), Term::Atom)]))
            }
        }
    }
}

/// `order(Food)` then, per item, `specify(Dish)` for combo slots and the
/// modifiers newest first.
pub fn line_predicates(line: &OrderLine) -> Vec<Literal> {
    let mut out = vec![pred("order", vec![Term::Atom(line.food.clone())])];
    for item in &line.items {
        if line.combo {
            if let Some(d) = &item.dish {
                out.push(pred("specify", vec![Term::Atom(d.clone())]));
            }
        }
        for m in item.modifiers.iter().rev() {
            out.push(pred("update", vec![atom(m.op.as_str()), Term::Atom(m.option.clone())]));
        }
    }
    out
}
