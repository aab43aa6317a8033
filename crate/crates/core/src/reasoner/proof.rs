use std::fmt::{self, Write};
use std::sync::Arc;

use crate::term::Literal;

/// How an answer was derived.
#[derive(Clone, Debug, PartialEq)]
pub enum Proof {
    /// A stored fact.
    Fact(Literal),
    /// A rule instance whose body premises are proved in order.
    Rule { head: Literal, rule: usize, premises: Vec<Arc<Proof>> },
    /// `not L` succeeded because `L` has no proof.
    Naf(Literal),
    /// A builtin test that evaluated to true.
    Builtin(String),
}

impl Proof {
    pub fn conclusion(&self) -> String {
        match self {
            Proof::Fact(l) | Proof::Rule { head: l, .. } => l.to_string(),
            Proof::Naf(l) => format!("not {l}"),
            Proof::Builtin(s) => s.clone(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Proof::Rule { premises, .. } => 1 + premises.iter().map(|p| p.size()).sum::<usize>(),
            _ => 1,
        }
    }

    /// Facts the proof rests on, in tree order.
    pub fn leaves(&self) -> Vec<&Literal> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Literal>) {
        match self {
            Proof::Fact(l) => out.push(l),
            Proof::Rule { premises, .. } => premises.iter().for_each(|p| p.collect_leaves(out)),
            _ => {}
        }
    }

    /// Indented ASCII tree.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, "", "");
        out
    }

    fn render_into(&self, out: &mut String, first: &str, rest: &str) {
        let _ = match self {
            Proof::Fact(l) => writeln!(out, "{first}{l}  [fact]"),
            Proof::Rule { head, rule, .. } => writeln!(out, "{first}{head}  [rule {rule}]"),
            Proof::Naf(l) => writeln!(out, "{first}not {l}  [no proof]"),
            Proof::Builtin(s) => writeln!(out, "{first}{s}  [builtin]"),
        };
        if let Proof::Rule { premises, .. } = self {
            for (i, p) in premises.iter().enumerate() {
                let last = i + 1 == premises.len();
                let (f, r) = if last { ("`- ", "   ") } else { ("|- ", "|  ") };
                p.render_into(out, &format!("{rest}{f}"), &format!("{rest}{r}"));
            }
        }
    }
}

impl fmt::Display for Proof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// One rule whose head matched a failed goal, and the body literal where
/// every derivation attempt stopped.
#[derive(Clone, Debug, PartialEq)]
pub struct Attempt {
    pub rule: usize,
    pub blocked_at: usize,
    pub blocked: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub goal: Literal,
    pub attempts: Vec<Attempt>,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}  [not provable]", self.goal)?;
        if self.attempts.is_empty() {
            return writeln!(f, "`- no matching fact or rule");
        }
        for (i, a) in self.attempts.iter().enumerate() {
            let branch = if i + 1 == self.attempts.len() { "`-" } else { "|-" };
            writeln!(f, "{branch} rule {}: fails at {}", a.rule, a.blocked)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Justification {
    Proved(Arc<Proof>),
    Failed(Failure),
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Proved(p) => p.fmt(f),
            Justification::Failed(x) => x.fmt(f),
        }
    }
}
