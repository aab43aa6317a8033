//! Query-driven rule engine with negation as failure.
//!
//! Programs are stratified Horn clauses with `not` literals, a handful of
//! builtins (`=`, `\=`, `<`, `=<`, `>`, `>=`, `member/2`) and integrity
//! constraints written as `false :- Body.`. Evaluation is top-down from the
//! goal. Subgoals over derived predicates are tabled, so positive recursion
//! terminates and repeated subgoals are answered from memory. Every answer
//! carries a proof tree.
//!
//! ```
//! use duotalk_core::reasoner::{holds, Program, RuleSet};
//! use duotalk_core::syntax::parse_literal;
//!
//! let rules = RuleSet::from_source(
//!     "flies(X) :- bird(X), not abnormal_bird(X).
//!      abnormal_bird(X) :- penguin(X).
//!      bird(tweety).",
//! ).unwrap();
//! let program = Program::new(rules.into(), vec![]);
//! let (yes, _) = holds(&program, &parse_literal("flies(tweety)").unwrap()).unwrap();
//! assert!(yes);
//! ```

mod compile;
mod proof;
mod solver;
mod store;
mod strata;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::syntax::{parse_program, Clause, ParseError};
use crate::term::{Literal, PredKey, Term};

pub use proof::{Attempt, Failure, Justification, Proof};
pub use solver::{Answer, Solver};
pub use store::FactStore;
pub use strata::check_stratified;

use compile::CompiledRule;

/// Default bound on nested subgoal evaluation.
pub const DEFAULT_MAX_DEPTH: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "\\=",
            CmpOp::Lt => "<",
            CmpOp::Le => "=<",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BodyLit {
    Pos(Literal),
    Neg(Literal),
    Cmp(CmpOp, Term, Term),
}

impl fmt::Display for BodyLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyLit::Pos(l) => write!(f, "{l}"),
            BodyLit::Neg(l) => write!(f, "not {l}"),
            BodyLit::Cmp(op, a, b) => write!(f, "{a} {op} {b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub head: Literal,
    pub body: Vec<BodyLit>,
}

impl Rule {
    pub fn is_constraint(&self) -> bool {
        &*self.head.pred == "false" && self.head.args.is_empty()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, lit) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{lit}")?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ReasonError {
    #[error("program is not stratified: cycle through negation {}", .cycle.join(" -> "))]
    NotStratified { cycle: Vec<String> },
    #[error("unsafe rule `{rule}`: variable {var} is not bound by an earlier positive literal")]
    Unsafe { rule: String, var: String },
    #[error("builtin `{literal}` called with an unbound argument")]
    UnboundBuiltin { literal: String },
    #[error("recursion depth limit {limit} exceeded while solving {goal}")]
    DepthExceeded { limit: usize, goal: String },
    #[error("fact `{0}` is not ground")]
    NonGroundFact(String),
    #[error("syntax error: {0}")]
    Syntax(#[from] ParseError),
}

/// A checked, compiled set of rules, plus any facts that came with them.
#[derive(Debug)]
pub struct RuleSet {
    rules: Vec<Rule>,
    compiled: Vec<CompiledRule>,
    by_head: HashMap<PredKey, Vec<usize>>,
    strata: BTreeMap<PredKey, usize>,
    facts: Arc<FactStore>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, facts: Vec<Literal>) -> Result<Self, ReasonError> {
        let strata = check_stratified(&rules)?;
        let mut store = FactStore::new();
        for f in facts {
            if !f.is_ground() {
                return Err(ReasonError::NonGroundFact(f.to_string()));
            }
            store.insert(f);
        }
        let mut by_head: HashMap<PredKey, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_head.entry(r.head.key()).or_default().push(i);
        }
        let builtin_member = !by_head.contains_key(&PredKey::new("member", 2))
            && store.count(&PredKey::new("member", 2)) == 0;
        let compiled = rules
            .iter()
            .map(|r| compile::compile_rule(r, builtin_member))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RuleSet { rules, compiled, by_head, strata, facts: Arc::new(store) })
    }

    pub fn empty() -> Self {
        RuleSet::new(Vec::new(), Vec::new()).expect("empty rule set is valid")
    }

    pub fn from_source(src: &str) -> Result<Self, ReasonError> {
        Self::from_sources(&[src])
    }

    /// Concatenate several rule files into one program.
    pub fn from_sources(srcs: &[&str]) -> Result<Self, ReasonError> {
        let mut rules = Vec::new();
        let mut facts = Vec::new();
        for src in srcs {
            for c in parse_program(src)? {
                match c.item {
                    Clause::Fact(f) => facts.push(f),
                    Clause::Rule(r) => rules.push(r),
                }
            }
        }
        RuleSet::new(rules, facts)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn strata(&self) -> &BTreeMap<PredKey, usize> {
        &self.strata
    }

    pub fn facts(&self) -> &Arc<FactStore> {
        &self.facts
    }

    pub fn defines(&self, key: &PredKey) -> bool {
        self.by_head.contains_key(key)
    }

    pub(crate) fn rules_for(&self, key: &PredKey) -> &[usize] {
        self.by_head.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn compiled(&self, i: usize) -> &CompiledRule {
        &self.compiled[i]
    }
}

/// Rules plus layered fact stores. Layers are read in order; later layers
/// only add facts.
#[derive(Clone, Debug)]
pub struct Program {
    rules: Arc<RuleSet>,
    layers: Vec<Arc<FactStore>>,
    max_depth: usize,
}

impl Program {
    pub fn new(rules: Arc<RuleSet>, layers: Vec<Arc<FactStore>>) -> Self {
        let mut all = vec![rules.facts.clone()];
        all.extend(layers);
        Program { rules, layers: all, max_depth: DEFAULT_MAX_DEPTH }
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    /// Add an overlay layer of session facts.
    pub fn with_overlay(mut self, overlay: FactStore) -> Result<Self, ReasonError> {
        if let Some(bad) = overlay.iter().find(|f| !f.is_ground()) {
            return Err(ReasonError::NonGroundFact(bad.to_string()));
        }
        self.layers.push(Arc::new(overlay));
        Ok(self)
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn rule_set(&self) -> &Arc<RuleSet> {
        &self.rules
    }

    pub fn layers(&self) -> &[Arc<FactStore>] {
        &self.layers
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn has_fact(&self, fact: &Literal) -> bool {
        self.layers.iter().any(|l| l.contains(fact))
    }

    pub fn solver(&self) -> Solver<'_> {
        Solver::new(self)
    }

    /// Instances of integrity constraints (`false :- ...`) that hold.
    pub fn violations(&self) -> Result<Vec<Arc<Proof>>, ReasonError> {
        let goal = Literal::new("false", Vec::new());
        if !self.rules.defines(&goal.key()) {
            return Ok(Vec::new());
        }
        let mut solver = self.solver();
        solver.all_proofs(&goal)
    }
}

/// Every distinct binding of the goal's variables, in deterministic order.
pub fn solve(program: &Program, goal: &Literal) -> Result<Vec<Answer>, ReasonError> {
    program.solver().query(goal)
}

/// Whether a ground goal holds, with a proof on success or an explanation of
/// the failed attempts otherwise.
pub fn holds(program: &Program, goal: &Literal) -> Result<(bool, Justification), ReasonError> {
    program.solver().holds(goal)
}
