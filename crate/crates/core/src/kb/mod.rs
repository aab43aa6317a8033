//! Menu knowledge base: validated, indexed, immutable snapshots of ground
//! facts. Changes go through [`MutationSet`]s, which apply completely or not
//! at all and produce a new snapshot with the next version number.

mod schema;

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use crate::reasoner::FactStore;
use crate::syntax::{parse_program, Clause, ParseError};
use crate::term::{Fact, PredKey, Sym, Term};

pub use schema::{
    is_known_predicate, signature, validate, Arg, FoodKind, Violation, ViolationKind, CATEGORIES,
    SCHEMA, STYLES,
};

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("knowledge base is invalid ({} violation(s)); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
    #[error("cannot remove {0}: no such fact")]
    NoSuchFact(String),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
}

impl KbError {
    pub fn violations(&self) -> Vec<Violation> {
        match self {
            KbError::Invalid(v) => v.clone(),
            KbError::Syntax(e) => vec![Violation {
                kind: ViolationKind::Syntax,
                line: Some(e.line),
                fact: None,
                message: e.to_string(),
            }],
            other => vec![Violation {
                kind: ViolationKind::Schema,
                line: None,
                fact: None,
                message: other.to_string(),
            }],
        }
    }
}

/// A batch of fact additions and removals from one session.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MutationSet {
    pub adds: Vec<Fact>,
    pub removes: Vec<Fact>,
    pub provenance: String,
}

impl MutationSet {
    pub fn new(provenance: &str) -> Self {
        MutationSet { provenance: provenance.to_string(), ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.adds.is_empty() && self.removes.is_empty()
    }

    /// Fold another set into this one, cancelling add/remove pairs.
    pub fn extend(&mut self, other: MutationSet) {
        for f in other.removes {
            if let Some(i) = self.adds.iter().position(|a| *a == f) {
                self.adds.remove(i);
            } else if !self.removes.contains(&f) {
                self.removes.push(f);
            }
        }
        for f in other.adds {
            if let Some(i) = self.removes.iter().position(|r| *r == f) {
                self.removes.remove(i);
            } else if !self.adds.contains(&f) {
                self.adds.push(f);
            }
        }
    }
}

/// Immutable validated menu snapshot.
#[derive(Clone, Debug)]
pub struct MenuKb {
    store: Arc<FactStore>,
    kinds: HashMap<Sym, FoodKind>,
    version: u64,
}

/// Group facts by subject in first-appearance order, then by schema
/// position. Values of one predicate are sorted, except combo contents
/// whose order is the slot order.
fn canonical(facts: Vec<Fact>) -> Vec<Fact> {
    let mut subjects: Vec<Term> = Vec::new();
    for f in &facts {
        if let Some(s) = f.args.first() {
            if !subjects.contains(s) {
                subjects.push(s.clone());
            }
        }
    }
    let key = |f: &Fact| {
        let subject = f.args.first().and_then(|s| subjects.iter().position(|x| x == s)).unwrap_or(0);
        (subject, schema::rank(&f.pred))
    };
    let mut out = facts;
    out.sort_by(|a, b| {
        key(a).cmp(&key(b)).then_with(|| {
            if &*a.pred == "combo_contain" { std::cmp::Ordering::Equal } else { a.to_string().cmp(&b.to_string()) }
        })
    });
    out
}

impl MenuKb {
    pub fn load(path: impl AsRef<Path>) -> Result<MenuKb, KbError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path)
            .map_err(|source| KbError::Io { path: path.display().to_string(), source })?;
        MenuKb::parse(&src)
    }

    /// Parse and validate fact-file text. Rules are not allowed.
    pub fn parse(src: &str) -> Result<MenuKb, KbError> {
        let mut facts = Vec::new();
        let mut lines = Vec::new();
        let mut early = Vec::new();
        for c in parse_program(src)? {
            match c.item {
                Clause::Fact(mut f) => {
                    if let Err(msg) = schema::normalize_money(&mut f) {
                        early.push(Violation {
                            kind: ViolationKind::Type,
                            line: Some(c.line),
                            fact: Some(f.to_string()),
                            message: msg,
                        });
                    }
                    facts.push(f);
                    lines.push(c.line);
                }
                Clause::Rule(r) => early.push(Violation {
                    kind: ViolationKind::Schema,
                    line: Some(c.line),
                    fact: Some(r.to_string()),
                    message: "rules are not allowed in a menu file".to_string(),
                }),
            }
        }
        let mut violations = early;
        for mut v in validate(&facts) {
            if let Some(text) = &v.fact {
                v.line = facts.iter().position(|f| f.to_string() == *text).map(|i| lines[i]);
            }
            violations.push(v);
        }
        if !violations.is_empty() {
            return Err(KbError::Invalid(violations));
        }
        Ok(MenuKb::build(facts, 1))
    }

    /// Validate an in-memory fact list as a fresh KB (version 1).
    pub fn from_facts(facts: Vec<Fact>) -> Result<MenuKb, KbError> {
        let facts = normalized(facts)?;
        let violations = validate(&facts);
        if violations.is_empty() {
            Ok(MenuKb::build(facts, 1))
        } else {
            Err(KbError::Invalid(violations))
        }
    }

    fn build(facts: Vec<Fact>, version: u64) -> MenuKb {
        let store = FactStore::from_facts(facts);
        let mut kinds = HashMap::new();
        for f in store.iter() {
            if let (Some(k), [Term::Atom(n)]) = (FoodKind::from_pred(&f.pred), f.args.as_slice()) {
                kinds.entry(n.clone()).or_insert(k);
            }
        }
        MenuKb { store: Arc::new(store), kinds, version }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.store.iter()
    }

    /// Shared fact store, for use as a reasoner layer.
    pub fn store(&self) -> &Arc<FactStore> {
        &self.store
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.store.contains(fact)
    }

    pub fn kind_of(&self, name: &str) -> Option<FoodKind> {
        self.kinds.get(name).copied()
    }

    /// Declared names of the given kinds, in load order.
    pub fn names(&self, kinds: &[FoodKind]) -> Vec<Sym> {
        kinds
            .iter()
            .flat_map(|k| self.store.matching(&PredKey::new(k.pred(), 1), None))
            .filter_map(|f| f.name_arg(0).cloned())
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Vec::new(), |mut acc, n| {
                if !acc.contains(&n) {
                    acc.push(n);
                }
                acc
            })
    }

    /// Names in menu order: dishes and combos interleaved as declared.
    pub fn orderables(&self) -> Vec<Sym> {
        self.store
            .iter()
            .filter(|f| matches!(&*f.pred, "dish" | "combo") && f.args.len() == 1)
            .filter_map(|f| f.name_arg(0).cloned())
            .collect()
    }

    /// Facts matching a pattern. Variables in the pattern match anything;
    /// a repeated variable must match equal terms.
    pub fn lookup(&self, pred: &str, pattern: &[Term]) -> Result<Vec<Fact>, KbError> {
        if !is_known_predicate(pred) {
            return Err(KbError::UnknownPredicate(pred.to_string()));
        }
        let key = PredKey::new(pred, pattern.len());
        let first = pattern.first().filter(|t| t.is_ground());
        Ok(self
            .store
            .matching(&key, first)
            .filter(|f| matches_pattern(pattern, &f.args))
            .cloned()
            .collect())
    }

    /// Facts of a predicate whose first argument is `name`.
    pub fn about<'a>(&'a self, pred: &str, name: &str) -> impl Iterator<Item = &'a Fact> + 'a {
        let key = PredKey::new(pred, signature_arity(pred));
        let first = Term::atom(name);
        self.store.matching(&key, Some(&first)).collect::<Vec<_>>().into_iter()
    }

    /// The second argument of the first `pred(name, X)` fact.
    pub fn value(&self, pred: &str, name: &str) -> Option<&Term> {
        self.about(pred, name).next().and_then(|f| f.args.get(1))
    }

    pub fn holds(&self, pred: &str, args: &[Term]) -> bool {
        self.store.contains(&Fact { pred: crate::term::sym(pred), args: args.to_vec() })
    }

    pub fn price(&self, food: &str) -> Option<i64> {
        self.value("original_price", food).and_then(Term::as_int)
    }

    /// Apply a mutation set atomically. On any failure `self` is untouched
    /// and every violation is reported.
    pub fn apply(&self, m: &MutationSet) -> Result<MenuKb, KbError> {
        for r in &m.removes {
            if !self.store.contains(r) {
                return Err(KbError::NoSuchFact(r.to_string()));
            }
        }
        let adds = normalized(m.adds.clone())?;
        let facts: Vec<Fact> = self
            .store
            .iter()
            .filter(|f| !m.removes.contains(f))
            .cloned()
            .chain(adds)
            .collect();
        let violations = validate(&facts);
        if !violations.is_empty() {
            return Err(KbError::Invalid(violations));
        }
        Ok(MenuKb::build(facts, self.version + 1))
    }

    /// Mutations that turn `self` into `other`, each list in canonical
    /// order so equal edits give equal sets whatever order they were made in.
    pub fn diff(&self, other: &MenuKb, provenance: &str) -> MutationSet {
        MutationSet {
            removes: canonical(self.facts().filter(|f| !other.contains(f)).cloned().collect()),
            adds: canonical(other.facts().filter(|f| !self.contains(f)).cloned().collect()),
            provenance: provenance.to_string(),
        }
    }

    /// One fact per line, in load order.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for f in self.store.iter() {
            out.push_str(&f.to_string());
            out.push_str(".\n");
        }
        out
    }
}

fn signature_arity(pred: &str) -> usize {
    SCHEMA.iter().find(|(p, _)| *p == pred).map_or(0, |(_, a)| a.len())
}

fn normalized(mut facts: Vec<Fact>) -> Result<Vec<Fact>, KbError> {
    let mut bad = Vec::new();
    for f in &mut facts {
        if !f.is_ground() {
            bad.push(Violation {
                kind: ViolationKind::Type,
                line: None,
                fact: Some(f.to_string()),
                message: "facts must be ground".to_string(),
            });
        } else if let Err(message) = schema::normalize_money(f) {
            bad.push(Violation { kind: ViolationKind::Type, line: None, fact: Some(f.to_string()), message });
        }
    }
    if bad.is_empty() {
        Ok(facts)
    } else {
        Err(KbError::Invalid(bad))
    }
}

fn matches_pattern(pattern: &[Term], args: &[Term]) -> bool {
    let mut bound: HashMap<&Sym, &Term> = HashMap::new();
    fn go<'a>(p: &'a Term, t: &'a Term, bound: &mut HashMap<&'a Sym, &'a Term>) -> bool {
        match (p, t) {
            (Term::Var(v), _) if v.starts_with('_') => true,
            (Term::Var(v), _) => match bound.get(v) {
                Some(prev) => *prev == t,
                None => {
                    bound.insert(v, t);
                    true
                }
            },
            (Term::List(ps), Term::List(ts)) => {
                ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| go(p, t, bound))
            }
            (Term::Compound(f, ps), Term::Compound(g, ts)) => {
                f == g && ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| go(p, t, bound))
            }
            _ => p == t,
        }
    }
    pattern.len() == args.len() && pattern.iter().zip(args).all(|(p, t)| go(p, t, &mut bound))
}
