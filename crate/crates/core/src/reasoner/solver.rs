//! Tabled top-down evaluation.
//!
//! Each call to a derived predicate, keyed by predicate and the ground
//! positions of its arguments, gets a table of answers. A table that is
//! called again while it is still being evaluated returns the answers found
//! so far and reports a dependency on the in-progress call. The outermost
//! call of such a mutually dependent group re-runs the group until no table
//! gains an answer, then marks every member complete. Negated calls target a
//! strictly lower stratum, so they always complete before being tested.

use std::collections::HashSet;
use std::sync::Arc;

use super::compile::{compile_args, inst, render, unify, unify_pats, Bindings, CLit, CompiledRule, Pat};
use super::proof::{Attempt, Failure, Justification, Proof};
use super::{CmpOp, Program, ReasonError};
use crate::term::{Fact, Literal, PredKey, Sym, Term};

/// One solution to a query.
#[derive(Clone, Debug, PartialEq)]
pub struct Answer {
    /// Goal variables in order of first appearance.
    pub bindings: Vec<(Sym, Term)>,
    pub proof: Arc<Proof>,
}

impl Answer {
    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.iter().find(|(v, _)| &**v == var).map(|(_, t)| t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct CallKey {
    pred: PredKey,
    args: Vec<Option<Term>>,
}

impl CallKey {
    fn render(&self) -> String {
        let args = self
            .args
            .iter()
            .map(|a| a.clone().unwrap_or_else(|| Term::var("_")))
            .collect();
        Literal { pred: self.pred.name.clone(), args }.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Fresh,
    InProgress(usize),
    Incomplete,
    Complete,
}

type Row = (Arc<[Term]>, Arc<Proof>);

struct Table {
    key: CallKey,
    answers: Vec<Row>,
    seen: HashSet<Arc<[Term]>>,
    status: Status,
    low: usize,
    epoch: u64,
}

/// Body premises collected during a derivation, turned into proof nodes only
/// when the derivation yields a new answer.
enum Prem<'p> {
    Fact(&'p Fact),
    Sub(Arc<Proof>),
    Naf(&'p PredKey, Vec<Term>),
    Builtin(CmpOp, Term, Term),
    Member(Term, Term),
    NotMember(Term, Term),
}

impl Prem<'_> {
    fn to_proof(&self) -> Arc<Proof> {
        Arc::new(match self {
            Prem::Fact(f) => Proof::Fact((*f).clone()),
            Prem::Sub(p) => return p.clone(),
            Prem::Naf(k, args) => Proof::Naf(Literal { pred: k.name.clone(), args: args.clone() }),
            Prem::Builtin(op, a, b) => Proof::Builtin(format!("{a} {op} {b}")),
            Prem::Member(x, l) => Proof::Builtin(format!("member({x}, {l})")),
            Prem::NotMember(x, l) => Proof::Builtin(format!("not member({x}, {l})")),
        })
    }
}

type Cont<'a, 'p> =
    dyn FnMut(&mut Solver<'p>, &Bindings, &[Prem<'p>]) -> Result<(), ReasonError> + 'a;

/// Query evaluator. Tables persist across queries on the same solver, so
/// repeated questions against one program are cheap.
pub struct Solver<'p> {
    prog: &'p Program,
    tables: Vec<Table>,
    index: std::collections::HashMap<CallKey, usize>,
    depth: usize,
    pending: Vec<usize>,
    added: u64,
    epoch: u64,
    probe: Option<(usize, Option<(usize, String)>)>,
}

fn term_depth(t: &Term) -> usize {
    match t {
        Term::List(xs) => 1 + xs.iter().map(term_depth).max().unwrap_or(0),
        Term::Cons(xs, tail) => 1 + xs.iter().map(term_depth).max().unwrap_or(0).max(term_depth(tail)),
        Term::Compound(_, xs) => 1 + xs.iter().map(term_depth).max().unwrap_or(0),
        _ => 0,
    }
}

impl<'p> Solver<'p> {
    pub fn new(prog: &'p Program) -> Self {
        Solver {
            prog,
            tables: Vec::new(),
            index: Default::default(),
            depth: 0,
            pending: Vec::new(),
            added: 0,
            epoch: 0,
            probe: None,
        }
    }

    /// Number of subgoal tables built so far.
    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    fn candidates(&self, key: &'p PredKey, first: Option<&'p Term>) -> impl Iterator<Item = &'p Fact> + 'p {
        self.prog.layers().iter().flat_map(move |l| l.matching(key, first))
    }

    fn is_derived(&self, key: &PredKey) -> bool {
        self.prog.rules().defines(key)
    }

    /// All distinct bindings of the goal's variables.
    pub fn query(&mut self, goal: &Literal) -> Result<Vec<Answer>, ReasonError> {
        let (pats, names) = compile_args(&goal.args);
        let mut b = Bindings::new(names.len());
        let key = CallKey { pred: goal.key(), args: pats.iter().map(|p| inst(p, &b)).collect() };
        let rows: Vec<Row> = if self.is_derived(&key.pred) {
            let (id, _) = self.ensure_table(key)?;
            debug_assert_eq!(self.tables[id].status, Status::Complete);
            self.tables[id].answers.clone()
        } else {
            let first = key.args.first().cloned().flatten();
            self.prog
                .layers()
                .iter()
                .flat_map(|l| l.matching(&key.pred, first.as_ref()))
                .map(|f| (Arc::from(f.args.clone()), Arc::new(Proof::Fact(f.clone()))))
                .collect()
        };
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (args, proof) in rows {
            let m = b.mark();
            if pats.iter().zip(args.iter()).all(|(p, t)| unify(p, t, &mut b)) {
                let vals: Vec<Term> =
                    (0..names.len()).map(|i| b.get(i as u32).cloned().expect("bound")).collect();
                if seen.insert(vals.clone()) {
                    out.push(Answer { bindings: names.iter().cloned().zip(vals).collect(), proof });
                }
            }
            b.undo(m);
        }
        Ok(out)
    }

    pub fn all_proofs(&mut self, goal: &Literal) -> Result<Vec<Arc<Proof>>, ReasonError> {
        Ok(self.query(goal)?.into_iter().map(|a| a.proof).collect())
    }

    pub fn holds(&mut self, goal: &Literal) -> Result<(bool, Justification), ReasonError> {
        if let Some(a) = self.query(goal)?.into_iter().next() {
            return Ok((true, Justification::Proved(a.proof)));
        }
        Ok((false, Justification::Failed(self.explain(goal)?)))
    }

    /// For each rule whose head matches the goal, the furthest body literal
    /// any derivation attempt reached.
    fn explain(&mut self, goal: &Literal) -> Result<Failure, ReasonError> {
        let prog = self.prog;
        let mut attempts = Vec::new();
        for &ri in prog.rules().rules_for(&goal.key()) {
            let r = prog.rules().compiled(ri);
            let mut b = Bindings::new(r.var_names.len());
            let (gp, gnames) = compile_args(&goal.args);
            let gb = Bindings::new(gnames.len());
            let ok = gp.iter().zip(&r.head).all(|(g, h)| match inst(g, &gb) {
                Some(t) => unify(h, &t, &mut b),
                None => true,
            });
            if !ok || r.body.is_empty() {
                continue;
            }
            self.probe = Some((self.depth, None));
            let mut low = usize::MAX;
            let mut prems = Vec::new();
            let res = self.solve_body(r, 0, &mut b, &mut prems, &mut low, &mut |_, _, _| Ok(()));
            let (_, best) = self.probe.take().expect("probe set");
            res?;
            if let Some((at, lit)) = best {
                attempts.push(Attempt { rule: ri, blocked_at: at, blocked: lit });
            }
        }
        Ok(Failure { goal: goal.clone(), attempts })
    }

    fn ensure_table(&mut self, key: CallKey) -> Result<(usize, usize), ReasonError> {
        let id = match self.index.get(&key) {
            Some(&id) => id,
            None => {
                let id = self.tables.len();
                self.index.insert(key.clone(), id);
                self.tables.push(Table {
                    key,
                    answers: Vec::new(),
                    seen: HashSet::new(),
                    status: Status::Fresh,
                    low: usize::MAX,
                    epoch: 0,
                });
                id
            }
        };
        let t = &self.tables[id];
        match t.status {
            Status::Complete => Ok((id, usize::MAX)),
            Status::InProgress(d) => Ok((id, d)),
            Status::Incomplete if t.epoch == self.epoch => Ok((id, t.low)),
            Status::Fresh | Status::Incomplete => self.evaluate(id).map(|low| (id, low)),
        }
    }

    fn evaluate(&mut self, id: usize) -> Result<usize, ReasonError> {
        let depth = self.depth;
        if depth >= self.prog.max_depth() {
            return Err(ReasonError::DepthExceeded {
                limit: self.prog.max_depth(),
                goal: self.tables[id].key.render(),
            });
        }
        self.depth += 1;
        self.tables[id].status = Status::InProgress(depth);
        let mark = self.pending.len();
        let mut low = usize::MAX;
        let mut pass = 0;
        let result = loop {
            if pass > 0 {
                self.epoch += 1;
            }
            pass += 1;
            let before = self.added;
            match self.eval_clauses(id) {
                Ok(l) => low = low.min(l),
                Err(e) => break Err(e),
            }
            if low < depth || low > depth || self.added == before {
                break Ok(());
            }
        };
        self.depth -= 1;
        if let Err(e) = result {
            self.tables[id].status = Status::Fresh;
            for t in self.pending.drain(mark..) {
                self.tables[t].status = Status::Fresh;
            }
            return Err(e);
        }
        if low < depth {
            let t = &mut self.tables[id];
            t.status = Status::Incomplete;
            t.low = low;
            t.epoch = self.epoch;
            self.pending.push(id);
            Ok(low)
        } else {
            for t in self.pending.drain(mark..) {
                self.tables[t].status = Status::Complete;
            }
            self.tables[id].status = Status::Complete;
            Ok(usize::MAX)
        }
    }

    fn eval_clauses(&mut self, id: usize) -> Result<usize, ReasonError> {
        let prog = self.prog;
        let key = self.tables[id].key.clone();
        let mut low = usize::MAX;
        let first = key.args.first().cloned().flatten();
        let facts: Vec<&'p Fact> = prog
            .layers()
            .iter()
            .flat_map(|l| l.matching(&key.pred, first.as_ref()))
            .filter(|f| key.args.iter().zip(&f.args).all(|(k, a)| k.as_ref().is_none_or(|k| k == a)))
            .collect();
        for f in facts {
            self.add_answer(id, f.args.clone(), || Proof::Fact(f.clone()))?;
        }
        for &ri in prog.rules().rules_for(&key.pred) {
            let r = prog.rules().compiled(ri);
            let mut b = Bindings::new(r.var_names.len());
            if !key.args.iter().zip(&r.head).all(|(k, p)| k.as_ref().is_none_or(|k| unify(p, k, &mut b))) {
                continue;
            }
            let pred = key.pred.name.clone();
            let mut prems = Vec::new();
            self.solve_body(r, 0, &mut b, &mut prems, &mut low, &mut |s, b, prems| {
                let args: Vec<Term> =
                    r.head.iter().map(|p| inst(p, b).expect("head is range restricted")).collect();
                let head_args = args.clone();
                s.add_answer(id, args, || Proof::Rule {
                    head: Literal { pred: pred.clone(), args: head_args },
                    rule: ri,
                    premises: prems.iter().map(Prem::to_proof).collect(),
                })
            })?;
        }
        Ok(low)
    }

    fn add_answer(
        &mut self,
        id: usize,
        args: Vec<Term>,
        proof: impl FnOnce() -> Proof,
    ) -> Result<(), ReasonError> {
        let limit = self.prog.max_depth();
        let t = &mut self.tables[id];
        if t.seen.contains(args.as_slice()) {
            return Ok(());
        }
        if args.iter().any(|a| term_depth(a) > limit) {
            return Err(ReasonError::DepthExceeded { limit, goal: t.key.render() });
        }
        let row: Arc<[Term]> = args.into();
        t.seen.insert(row.clone());
        t.answers.push((row, Arc::new(proof())));
        self.added += 1;
        Ok(())
    }

    fn note_probe(&mut self, r: &CompiledRule, i: usize, b: &Bindings) {
        let Some((d, best)) = &mut self.probe else { return };
        if *d != self.depth || best.as_ref().is_some_and(|(at, _)| *at >= i) {
            return;
        }
        let show = |p: &Pat| render(p, b, &r.var_names);
        let lit = |k: &PredKey, ps: &[Pat]| Literal { pred: k.name.clone(), args: ps.iter().map(show).collect() };
        let text = match &r.body[i] {
            CLit::Pos(k, ps) => lit(k, ps).to_string(),
            CLit::Neg(k, ps) => format!("not {}", lit(k, ps)),
            CLit::Cmp(op, a, c) => format!("{} {op} {}", show(a), show(c)),
            CLit::Member(x, l) => format!("member({}, {})", show(x), show(l)),
            CLit::NotMember(x, l) => format!("not member({}, {})", show(x), show(l)),
        };
        *best = Some((i, text));
    }

    fn solve_body(
        &mut self,
        r: &'p CompiledRule,
        i: usize,
        b: &mut Bindings,
        prems: &mut Vec<Prem<'p>>,
        low: &mut usize,
        k: &mut Cont<'_, 'p>,
    ) -> Result<(), ReasonError> {
        if i == r.body.len() {
            return k(self, b, prems);
        }
        if self.probe.is_some() {
            self.note_probe(r, i, b);
        }
        match &r.body[i] {
            CLit::Pos(pk, pats) => {
                let call: Vec<Option<Term>> = pats.iter().map(|p| inst(p, b)).collect();
                if self.is_derived(pk) {
                    let (tid, l) = self.ensure_table(CallKey { pred: pk.clone(), args: call })?;
                    *low = (*low).min(l);
                    let mut j = 0;
                    while let Some((args, proof)) = self.tables[tid].answers.get(j).cloned() {
                        j += 1;
                        let m = b.mark();
                        if pats.iter().zip(args.iter()).all(|(p, t)| unify(p, t, b)) {
                            prems.push(Prem::Sub(proof));
                            let res = self.solve_body(r, i + 1, b, prems, low, k);
                            prems.pop();
                            res?;
                        }
                        b.undo(m);
                    }
                } else {
                    let first = call.into_iter().next().flatten();
                    let facts: Vec<&'p Fact> = match &first {
                        Some(t) => self.prog.layers().iter().flat_map(|l| l.matching(pk, Some(t))).collect(),
                        None => self.candidates(pk, None).collect(),
                    };
                    for f in facts {
                        let m = b.mark();
                        if pats.iter().zip(&f.args).all(|(p, t)| unify(p, t, b)) {
                            prems.push(Prem::Fact(f));
                            let res = self.solve_body(r, i + 1, b, prems, low, k);
                            prems.pop();
                            res?;
                        }
                        b.undo(m);
                    }
                }
            }
            CLit::Neg(pk, pats) => {
                let args = self.ground_args(r, i, pats, b)?;
                let found = if self.is_derived(pk) {
                    let (tid, _) = self.ensure_table(CallKey {
                        pred: pk.clone(),
                        args: args.iter().cloned().map(Some).collect(),
                    })?;
                    !self.tables[tid].answers.is_empty()
                } else {
                    let fact = Literal { pred: pk.name.clone(), args: args.clone() };
                    self.prog.has_fact(&fact)
                };
                if !found {
                    prems.push(Prem::Naf(pk, args));
                    let res = self.solve_body(r, i + 1, b, prems, low, k);
                    prems.pop();
                    res?;
                }
            }
            CLit::Cmp(op, a, c) => {
                let m = b.mark();
                let ok = match op {
                    CmpOp::Eq => match unify_pats(a, c, b) {
                        Some(ok) => ok,
                        None => return Err(self.unbound(r, i, b)),
                    },
                    _ => {
                        let (Some(x), Some(y)) = (inst(a, b), inst(c, b)) else {
                            return Err(self.unbound(r, i, b));
                        };
                        compare(*op, &x, &y)
                    }
                };
                if ok {
                    let (x, y) = (inst(a, b).expect("bound"), inst(c, b).expect("bound"));
                    prems.push(Prem::Builtin(*op, x, y));
                    let res = self.solve_body(r, i + 1, b, prems, low, k);
                    prems.pop();
                    res?;
                }
                b.undo(m);
            }
            CLit::Member(x, l) => {
                let Some(list) = inst(l, b) else { return Err(self.unbound(r, i, b)) };
                if let Term::List(items) = &list {
                    for item in items {
                        let m = b.mark();
                        if unify(x, item, b) {
                            prems.push(Prem::Member(item.clone(), list.clone()));
                            let res = self.solve_body(r, i + 1, b, prems, low, k);
                            prems.pop();
                            res?;
                        }
                        b.undo(m);
                    }
                }
            }
            CLit::NotMember(x, l) => {
                let (Some(xv), Some(list)) = (inst(x, b), inst(l, b)) else {
                    return Err(self.unbound(r, i, b));
                };
                let present = list.as_list().is_some_and(|items| items.contains(&xv));
                if !present {
                    prems.push(Prem::NotMember(xv, list));
                    let res = self.solve_body(r, i + 1, b, prems, low, k);
                    prems.pop();
                    res?;
                }
            }
        }
        Ok(())
    }

    fn ground_args(
        &self,
        r: &CompiledRule,
        i: usize,
        pats: &[Pat],
        b: &Bindings,
    ) -> Result<Vec<Term>, ReasonError> {
        pats.iter()
            .map(|p| inst(p, b))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| self.unbound(r, i, b))
    }

    fn unbound(&self, r: &CompiledRule, i: usize, b: &Bindings) -> ReasonError {
        let show = |p: &Pat| render(p, b, &r.var_names).to_string();
        let literal = match &r.body[i] {
            CLit::Pos(k, ps) | CLit::Neg(k, ps) => {
                format!("{}({})", k.name, ps.iter().map(show).collect::<Vec<_>>().join(", "))
            }
            CLit::Cmp(op, a, c) => format!("{} {op} {}", show(a), show(c)),
            CLit::Member(x, l) | CLit::NotMember(x, l) => format!("member({}, {})", show(x), show(l)),
        };
        ReasonError::UnboundBuiltin { literal }
    }
}

/// Ordering builtins compare numbers; any other pair of terms is unordered
/// and the test fails.
fn compare(op: CmpOp, x: &Term, y: &Term) -> bool {
    use std::cmp::Ordering::*;
    match op {
        CmpOp::Eq => x == y,
        CmpOp::Ne => x != y,
        _ => match x.cmp_numeric(y) {
            None => false,
            Some(o) => match op {
                CmpOp::Lt => o == Less,
                CmpOp::Le => o != Greater,
                CmpOp::Gt => o == Greater,
                CmpOp::Ge => o != Less,
                _ => unreachable!(),
            },
        },
    }
}
