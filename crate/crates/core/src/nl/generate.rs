use std::collections::HashMap;

use super::phrasebook::Phrasebook;
use super::text::join_list;
use super::{Generator, NlError};
use crate::frame::{Op, Role};
use crate::term::{Literal, Term};

/// Fills phrasebook templates; one sentence per response predicate, with
/// check-mode listings rendered as a single summary.
#[derive(Clone, Debug)]
pub struct TemplateGenerator {
    pb: Phrasebook,
}

impl Default for TemplateGenerator {
    fn default() -> Self {
        TemplateGenerator { pb: Phrasebook::builtin().clone() }
    }
}

fn show(t: &Term) -> String {
    t.plain().to_string()
}

/// `{key}` substitution. Each value also answers `{key_lc}` in lower case.
fn fill(tpl: &str, vars: &[(&str, String)]) -> String {
    let mut out = tpl.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}_lc}}"), &v.to_lowercase());
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

impl TemplateGenerator {
    pub fn new(pb: Phrasebook) -> Self {
        TemplateGenerator { pb }
    }

    pub fn greeting(&self, role: Role) -> &str {
        match role {
            Role::Manager => &self.pb.templates.greeting_manager,
            Role::Customer => &self.pb.templates.greeting_customer,
        }
    }

    pub fn apology(&self) -> &str {
        &self.pb.templates.error
    }

    fn table(&self, role: Role) -> &HashMap<String, String> {
        match role {
            Role::Manager => &self.pb.templates.manager,
            Role::Customer => &self.pb.templates.customer,
        }
    }

    fn say(&self, role: Role, key: &str, vars: &[(&str, String)]) -> Result<String, NlError> {
        let tpl = self.table(role).get(key).ok_or_else(|| NlError::MissingTemplate(format!("{role}:{key}")))?;
        Ok(fill(tpl, vars))
    }

    fn confirm(&self, role: Role, tag: &str, x: Option<&Term>) -> Result<String, NlError> {
        let xs = x.map(show).unwrap_or_default();
        match (tag, x) {
            ("unavailable", Some(Term::List(items))) => {
                let mut parts = Vec::new();
                for item in items {
                    let Term::Compound(_, args) = item else { continue };
                    let [food, Term::Compound(_, reason)] = args.as_slice() else { continue };
                    let food = show(food);
                    match reason.first() {
                        Some(Term::Atom(r)) if &**r == "none" => {
                            parts.push(self.say(role, "unavailable.self", &[("food", food)])?)
                        }
                        Some(r) => parts.push(self.say(role, "unavailable.runout", &[("food", food), ("reason", show(r))])?),
                        None => {}
                    }
                }
                Ok(parts.join(" "))
            }
            ("duplicate" | "not_applicable", Some(Term::Compound(_, args))) if args.len() == 3 => self.say(
                role,
                &format!("confirm.{tag}"),
                &[("dish", show(&args[0])), ("op", show(&args[1])), ("option", show(&args[2])), ("x", xs)],
            ),
            ("add", Some(Term::Atom(a))) if role == Role::Customer && &**a == "none" => {
                self.say(role, "confirm.add_none", &[])
            }
            (op, Some(v)) if role == Role::Customer && Op::parse(op).is_some_and(Op::is_style) => {
                let key = if show(v) == "yes" { "confirm.style_yes" } else { "confirm.style_no" };
                self.say(role, key, &[("op", op.to_string())])
            }
            _ => self.say(role, &format!("confirm.{tag}"), &[("x", xs)]),
        }
    }

    fn ask(&self, role: Role, args: &[Term]) -> Result<String, NlError> {
        match (role, args) {
            (Role::Customer, [Term::List(head), opt]) if head.len() == 2 => {
                let (combo, subject) = (show(&head[0]), show(&head[1]));
                match opt {
                    Term::Compound(f, choices) if &**f == "choose" => {
                        let options = match choices.first() {
                            Some(Term::List(l)) => join_list(&l.iter().map(show).collect::<Vec<_>>()),
                            _ => String::new(),
                        };
                        self.say(role, "ask.choose", &[("combo", combo), ("options", options)])
                    }
                    other => {
                        let text = show(other);
                        if let Some(style) = text.strip_prefix("make it ") {
                            self.say(role, "ask.style", &[("dish", subject), ("style", style.to_string())])
                        } else if text == "choose size" {
                            self.say(role, "ask.size", &[("dish", subject)])
                        } else {
                            self.say(role, "ask.toppings", &[("dish", subject)])
                        }
                    }
                }
            }
            (_, [food, what]) => self.say(role, &format!("ask.{}", show(what)), &[("food", show(food))]),
            _ => Err(NlError::MissingTemplate(format!("{role}:ask/{}", args.len()))),
        }
    }

    /// Sentences for a run of `answer/3` predicates about one food and
    /// category.
    fn answers(&self, role: Role, food: &Term, category: &Term, values: &[&Term]) -> Result<String, NlError> {
        let food = show(food);
        let category = show(category);
        if values.iter().all(|v| show(v) == "none") {
            return self.say(role, "answer.none", &[("food", food), ("category", category)]);
        }
        let shown: Vec<String> = values
            .iter()
            .map(|v| match v {
                Term::Compound(f, a) if &**f == "change" && a.len() == 2 => {
                    format!("swap {} for {}", show(&a[0]), show(&a[1]))
                }
                other => show(other),
            })
            .collect();
        self.say(role, &format!("answer.{category}"), &[("food", food), ("values", join_list(&shown))])
    }

    fn modifier(&self, role: Role, op: &Term, opt: &Term) -> Result<String, NlError> {
        let (op, x) = (show(op), show(opt));
        match Op::parse(&op) {
            Some(o) if o.is_style() => {
                let key = if x == "yes" { "mod.style_yes" } else { "mod.style_no" };
                self.say(role, key, &[("op", op)])
            }
            _ => self.say(role, &format!("mod.{op}"), &[("x", x)]),
        }
    }

    /// Check mode: one phrase per ordered line, then the total.
    fn check(&self, role: Role, preds: &[Literal]) -> Result<String, NlError> {
        let mut lines: Vec<(String, Vec<String>)> = Vec::new();
        let mut total = String::new();
        for p in preds {
            match (&*p.pred, p.args.as_slice()) {
                ("order", [f]) => lines.push((show(f), Vec::new())),
                ("specify", [d]) => {
                    if let Some(l) = lines.last_mut() {
                        l.1.push(self.say(role, "mod.specify", &[("x", show(d))])?);
                    }
                }
                ("update", [op, opt]) => {
                    let m = self.modifier(role, op, opt)?;
                    if let Some(l) = lines.last_mut() {
                        l.1.push(m);
                    }
                }
                ("price", [t]) => total = show(t),
                _ => {}
            }
        }
        let items: Vec<String> = lines
            .into_iter()
            .map(|(food, mods)| if mods.is_empty() { food } else { format!("{food} ({})", mods.join(", ")) })
            .collect();
        self.say(role, "check", &[("items", join_list(&items)), ("total", total)])
    }
}

impl Generator for TemplateGenerator {
    fn generate(&self, role: Role, preds: &[Literal]) -> Result<String, NlError> {
        if preds.is_empty() {
            return Err(NlError::Empty);
        }
        let is_check = |p: &Literal| &*p.pred == "confirm" && p.args.len() == 2 && show(&p.args[1]) == "complete";
        let mut out: Vec<String> = Vec::new();
        let mut i = 0;
        while i < preds.len() {
            let p = &preds[i];
            let args = p.args.as_slice();
            match (&*p.pred, args) {
                _ if is_check(p) => {
                    out.push(self.check(role, &preds[i + 1..])?);
                    break;
                }
                ("confirm", [tag]) => out.push(self.confirm(role, &show(tag), None)?),
                ("confirm", [tag, x]) => out.push(self.confirm(role, &show(tag), Some(x))?),
                ("ask", _) => out.push(self.ask(role, args)?),
                ("recommend", [kind, x]) => {
                    let kind = show(kind);
                    let key = if show(x) == "none" { format!("recommend.{kind}_none") } else { format!("recommend.{kind}") };
                    out.push(self.say(role, &key, &[("x", show(x))])?);
                }
                ("answer", [food, category, _]) => {
                    let mut values = Vec::new();
                    while let Some(q) = preds.get(i) {
                        match q.args.as_slice() {
                            [f, c, v] if &*q.pred == "answer" && f == food && c == category => values.push(v),
                            _ => break,
                        }
                        i += 1;
                    }
                    out.push(self.answers(role, food, category, &values)?);
                    continue;
                }
                ("else" | "quit", []) => out.push(self.say(role, &p.pred, &[])?),
                _ => return Err(NlError::MissingTemplate(format!("{role}:{}/{}", p.pred, args.len()))),
            }
            i += 1;
        }
        Ok(out.into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" "))
    }
}
