use std::collections::{HashMap, HashSet};

use crate::term::{Fact, PredKey, Term};

#[derive(Debug, Default, Clone)]
struct PredIndex {
    all: Vec<u32>,
    by_first: HashMap<Term, Vec<u32>>,
}

/// Insertion-ordered set of ground facts indexed by predicate and first
/// argument.
#[derive(Debug, Default, Clone)]
pub struct FactStore {
    facts: Vec<Fact>,
    seen: HashSet<Fact>,
    index: HashMap<PredKey, PredIndex>,
}

impl FactStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_facts(facts: impl IntoIterator<Item = Fact>) -> Self {
        let mut s = Self::new();
        for f in facts {
            s.insert(f);
        }
        s
    }

    /// Returns false when the fact was already present.
    pub fn insert(&mut self, fact: Fact) -> bool {
        if self.seen.contains(&fact) {
            return false;
        }
        let i = self.facts.len() as u32;
        let entry = self.index.entry(fact.key()).or_default();
        entry.all.push(i);
        if let Some(first) = fact.args.first() {
            entry.by_first.entry(first.clone()).or_default().push(i);
        }
        self.seen.insert(fact.clone());
        self.facts.push(fact);
        true
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.seen.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn count(&self, key: &PredKey) -> usize {
        self.index.get(key).map_or(0, |p| p.all.len())
    }

    /// Facts of a predicate, optionally narrowed by a ground first argument,
    /// in insertion order.
    pub fn matching<'a>(
        &'a self,
        key: &PredKey,
        first: Option<&Term>,
    ) -> impl Iterator<Item = &'a Fact> + 'a {
        let ids: &[u32] = match self.index.get(key) {
            None => &[],
            Some(p) => match first {
                None => &p.all,
                Some(t) => p.by_first.get(t).map(Vec::as_slice).unwrap_or(&[]),
            },
        };
        ids.iter().map(move |&i| &self.facts[i as usize])
    }

    pub fn predicates(&self) -> impl Iterator<Item = &PredKey> {
        self.index.keys()
    }
}
