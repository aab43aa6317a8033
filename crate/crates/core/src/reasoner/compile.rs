//! Rules compiled to slot-indexed patterns, with the range-restriction check.

use std::collections::HashMap;

use super::{BodyLit, CmpOp, ReasonError, Rule};
use crate::term::{PredKey, Sym, Term};

#[derive(Clone, Debug)]
pub(crate) enum Pat {
    Ground(Term),
    Slot(u32),
    List(Vec<Pat>),
    Cons(Vec<Pat>, Box<Pat>),
    Compound(Sym, Vec<Pat>),
}

#[derive(Clone, Debug)]
pub(crate) enum CLit {
    Pos(PredKey, Vec<Pat>),
    Neg(PredKey, Vec<Pat>),
    Cmp(CmpOp, Pat, Pat),
    Member(Pat, Pat),
    NotMember(Pat, Pat),
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledRule {
    pub head: Vec<Pat>,
    pub body: Vec<CLit>,
    pub var_names: Vec<Sym>,
}

struct Slots {
    names: Vec<Sym>,
    ids: HashMap<Sym, u32>,
}

impl Slots {
    fn id(&mut self, v: &Sym) -> u32 {
        if let Some(&i) = self.ids.get(v) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(v.clone());
        self.ids.insert(v.clone(), i);
        i
    }

    fn pat(&mut self, t: &Term) -> Pat {
        if t.is_ground() {
            return Pat::Ground(t.clone());
        }
        match t {
            Term::Var(v) => Pat::Slot(self.id(v)),
            Term::List(items) => Pat::List(items.iter().map(|x| self.pat(x)).collect()),
            Term::Cons(items, tail) => Pat::Cons(
                items.iter().map(|x| self.pat(x)).collect(),
                Box::new(self.pat(tail)),
            ),
            Term::Compound(f, args) => {
                Pat::Compound(f.clone(), args.iter().map(|x| self.pat(x)).collect())
            }
            _ => unreachable!("ground terms handled above"),
        }
    }
}

/// Compile a goal's arguments; returns patterns and the slot names.
pub(crate) fn compile_args(args: &[Term]) -> (Vec<Pat>, Vec<Sym>) {
    let mut slots = Slots { names: Vec::new(), ids: HashMap::new() };
    let pats = args.iter().map(|a| slots.pat(a)).collect();
    (pats, slots.names)
}

fn vars_of(terms: &[&Term]) -> Vec<Sym> {
    let mut out = Vec::new();
    for t in terms {
        t.collect_vars(&mut out);
    }
    out
}

pub(crate) fn compile_rule(
    rule: &Rule,
    builtin_member: bool,
) -> Result<CompiledRule, ReasonError> {
    let mut slots = Slots { names: Vec::new(), ids: HashMap::new() };
    let mut bound: Vec<Sym> = Vec::new();
    let unsafe_var = |v: &Sym| ReasonError::Unsafe { rule: rule.to_string(), var: v.to_string() };
    let require = |bound: &[Sym], vars: Vec<Sym>| -> Result<(), ReasonError> {
        match vars.iter().find(|v| !bound.contains(v)) {
            Some(v) => Err(unsafe_var(v)),
            None => Ok(()),
        }
    };

    let mut body = Vec::with_capacity(rule.body.len());
    for lit in &rule.body {
        match lit {
            BodyLit::Pos(l) if builtin_member && &*l.pred == "member" && l.args.len() == 2 => {
                require(&bound, vars_of(&[&l.args[1]]))?;
                bound.extend(vars_of(&[&l.args[0]]));
                body.push(CLit::Member(slots.pat(&l.args[0]), slots.pat(&l.args[1])));
            }
            BodyLit::Pos(l) => {
                bound.extend(vars_of(&l.args.iter().collect::<Vec<_>>()));
                body.push(CLit::Pos(l.key(), l.args.iter().map(|a| slots.pat(a)).collect()));
            }
            BodyLit::Neg(l) if builtin_member && &*l.pred == "member" && l.args.len() == 2 => {
                require(&bound, vars_of(&[&l.args[0], &l.args[1]]))?;
                body.push(CLit::NotMember(slots.pat(&l.args[0]), slots.pat(&l.args[1])));
            }
            BodyLit::Neg(l) => {
                require(&bound, vars_of(&l.args.iter().collect::<Vec<_>>()))?;
                body.push(CLit::Neg(l.key(), l.args.iter().map(|a| slots.pat(a)).collect()));
            }
            BodyLit::Cmp(CmpOp::Eq, a, b) => {
                let va = vars_of(&[a]);
                let vb = vars_of(&[b]);
                let a_bound = va.iter().all(|v| bound.contains(v));
                let b_bound = vb.iter().all(|v| bound.contains(v));
                if a_bound {
                    bound.extend(vb);
                } else if b_bound {
                    bound.extend(va);
                } else {
                    require(&bound, va)?;
                }
                body.push(CLit::Cmp(CmpOp::Eq, slots.pat(a), slots.pat(b)));
            }
            BodyLit::Cmp(op, a, b) => {
                require(&bound, vars_of(&[a, b]))?;
                body.push(CLit::Cmp(*op, slots.pat(a), slots.pat(b)));
            }
        }
    }
    require(&bound, vars_of(&rule.head.args.iter().collect::<Vec<_>>()))?;
    let head = rule.head.args.iter().map(|a| slots.pat(a)).collect();
    Ok(CompiledRule {
        head,
        body,
        var_names: slots.names,
    })
}

/// Variable bindings for one clause activation, undone through a trail.
pub(crate) struct Bindings {
    vals: Vec<Option<Term>>,
    trail: Vec<u32>,
}

impl Bindings {
    pub fn new(n: usize) -> Self {
        Bindings { vals: vec![None; n], trail: Vec::new() }
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let s = self.trail.pop().unwrap();
            self.vals[s as usize] = None;
        }
    }

    pub fn get(&self, slot: u32) -> Option<&Term> {
        self.vals[slot as usize].as_ref()
    }

    fn bind(&mut self, slot: u32, t: Term) {
        self.vals[slot as usize] = Some(t);
        self.trail.push(slot);
    }
}

/// Instantiate a pattern; `None` if any slot is unbound.
pub(crate) fn inst(p: &Pat, b: &Bindings) -> Option<Term> {
    Some(match p {
        Pat::Ground(t) => t.clone(),
        Pat::Slot(s) => b.get(*s)?.clone(),
        Pat::List(items) => Term::List(items.iter().map(|x| inst(x, b)).collect::<Option<_>>()?),
        Pat::Cons(items, tail) => {
            let mut out: Vec<Term> = items.iter().map(|x| inst(x, b)).collect::<Option<_>>()?;
            match inst(tail, b)? {
                Term::List(rest) => {
                    out.extend(rest);
                    Term::List(out)
                }
                other => Term::Cons(out, Box::new(other)),
            }
        }
        Pat::Compound(f, args) => {
            Term::Compound(f.clone(), args.iter().map(|x| inst(x, b)).collect::<Option<_>>()?)
        }
    })
}

/// Render a pattern with unbound slots shown by variable name.
pub(crate) fn render(p: &Pat, b: &Bindings, names: &[Sym]) -> Term {
    match p {
        Pat::Ground(t) => t.clone(),
        Pat::Slot(s) => b.get(*s).cloned().unwrap_or_else(|| Term::Var(names[*s as usize].clone())),
        Pat::List(items) => Term::List(items.iter().map(|x| render(x, b, names)).collect()),
        Pat::Cons(items, tail) => Term::Cons(
            items.iter().map(|x| render(x, b, names)).collect(),
            Box::new(render(tail, b, names)),
        ),
        Pat::Compound(f, args) => {
            Term::Compound(f.clone(), args.iter().map(|x| render(x, b, names)).collect())
        }
    }
}

/// Match a pattern against a ground term, extending the bindings. On failure
/// the caller must undo to its mark.
pub(crate) fn unify(p: &Pat, t: &Term, b: &mut Bindings) -> bool {
    match p {
        Pat::Ground(g) => g == t,
        Pat::Slot(s) => match b.get(*s) {
            Some(v) => v == t,
            None => {
                b.bind(*s, t.clone());
                true
            }
        },
        Pat::List(items) => match t {
            Term::List(ts) => {
                ts.len() == items.len() && items.iter().zip(ts).all(|(p, t)| unify(p, t, b))
            }
            _ => false,
        },
        Pat::Cons(items, tail) => match t {
            Term::List(ts) if ts.len() >= items.len() => {
                items.iter().zip(ts).all(|(p, t)| unify(p, t, b))
                    && unify(tail, &Term::List(ts[items.len()..].to_vec()), b)
            }
            _ => false,
        },
        Pat::Compound(f, args) => match t {
            Term::Compound(g, ts) => {
                f == g && ts.len() == args.len() && args.iter().zip(ts).all(|(p, t)| unify(p, t, b))
            }
            _ => false,
        },
    }
}

/// Unify two patterns where at least one side instantiates to a ground term.
/// Returns `None` if neither side is ground.
pub(crate) fn unify_pats(a: &Pat, c: &Pat, b: &mut Bindings) -> Option<bool> {
    if let Some(ta) = inst(a, b) {
        return Some(unify(c, &ta, b));
    }
    let tc = inst(c, b)?;
    Some(unify(a, &tc, b))
}
