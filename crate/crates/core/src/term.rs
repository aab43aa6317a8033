//! Logic terms and literals shared by the knowledge base, the shared state
//! and the rule engine.
//!
//! Two renderings exist. [`fmt::Display`] writes source syntax that the
//! parser reads back (atoms quoted where needed). [`Term::plain`] writes the
//! unquoted transcript style used in dialogue logs, e.g.
//! `unavailable(Cantina Chicken Soft Taco,runout(Slow-Roasted Chicken))`.

use std::fmt;
use std::sync::Arc;

/// Interned-ish symbol. Cloning is a reference-count bump.
pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// Exact decimal number, e.g. `3.80` is `{ mantissa: 380, scale: 2 }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decimal {
    pub mantissa: i64,
    pub scale: u8,
}

impl Decimal {
    pub fn cents(cents: i64) -> Self {
        Decimal { mantissa: cents, scale: 2 }
    }

    /// Value rescaled to hundredths, rounding toward zero below a cent.
    pub fn to_cents(self) -> i64 {
        match self.scale {
            0 => self.mantissa * 100,
            1 => self.mantissa * 10,
            2 => self.mantissa,
            s => self.mantissa / 10i64.pow(u32::from(s) - 2),
        }
    }

    /// Cents when the value has no fraction of a cent.
    pub fn exact_cents(self) -> Option<i64> {
        if self.scale <= 2 {
            return Some(self.to_cents());
        }
        let div = 10i64.pow(u32::from(self.scale) - 2);
        (self.mantissa % div == 0).then(|| self.mantissa / div)
    }

    fn cmp_value(self, other: Decimal) -> std::cmp::Ordering {
        let scale = self.scale.max(other.scale);
        let a = i128::from(self.mantissa) * 10i128.pow(u32::from(scale - self.scale));
        let b = i128::from(other.mantissa) * 10i128.pow(u32::from(scale - other.scale));
        a.cmp(&b)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let div = 10i64.pow(u32::from(self.scale));
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let abs = self.mantissa.abs();
        write!(
            f,
            "{}{}.{:0width$}",
            sign,
            abs / div,
            abs % div,
            width = self.scale as usize
        )
    }
}

/// Render integer cents as a decimal string: `757` becomes `"7.57"`.
pub fn format_cents(cents: i64) -> String {
    Decimal::cents(cents).to_string()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Atom(Sym),
    Int(i64),
    Decimal(Decimal),
    Str(Sym),
    List(Vec<Term>),
    /// `[a, b | Tail]`; only appears in rule patterns.
    Cons(Vec<Term>, Box<Term>),
    Compound(Sym, Vec<Term>),
    Var(Sym),
}

impl Term {
    pub fn atom(s: &str) -> Term {
        Term::Atom(sym(s))
    }

    pub fn var(s: &str) -> Term {
        Term::Var(sym(s))
    }

    pub fn compound(name: &str, args: Vec<Term>) -> Term {
        Term::Compound(sym(name), args)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) | Term::Cons(..) => false,
            Term::List(items) => items.iter().all(Term::is_ground),
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    pub fn as_atom(&self) -> Option<&Sym> {
        match self {
            Term::Atom(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Term]> {
        match self {
            Term::List(items) => Some(items),
            _ => None,
        }
    }

    /// Numeric comparison for the rule engine's builtins.
    pub fn cmp_numeric(&self, other: &Term) -> Option<std::cmp::Ordering> {
        let a = self.as_decimal()?;
        let b = other.as_decimal()?;
        Some(a.cmp_value(b))
    }

    fn as_decimal(&self) -> Option<Decimal> {
        match self {
            Term::Int(n) => Some(Decimal { mantissa: *n, scale: 0 }),
            Term::Decimal(d) => Some(*d),
            _ => None,
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Sym>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::List(items) => items.iter().for_each(|t| t.collect_vars(out)),
            Term::Cons(items, tail) => {
                items.iter().for_each(|t| t.collect_vars(out));
                tail.collect_vars(out);
            }
            Term::Compound(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
            _ => {}
        }
    }

    /// True when `name` occurs anywhere in the term as an atom.
    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Term::Atom(a) | Term::Str(a) => &**a == name,
            Term::List(items) => items.iter().any(|t| t.mentions(name)),
            Term::Cons(items, tail) => items.iter().any(|t| t.mentions(name)) || tail.mentions(name),
            Term::Compound(_, args) => args.iter().any(|t| t.mentions(name)),
            _ => false,
        }
    }

    pub fn plain(&self) -> Plain<'_> {
        Plain(self)
    }
}

impl From<&str> for Term {
    fn from(s: &str) -> Self {
        Term::atom(s)
    }
}

impl From<Sym> for Term {
    fn from(s: Sym) -> Self {
        Term::Atom(s)
    }
}

impl From<i64> for Term {
    fn from(n: i64) -> Self {
        Term::Int(n)
    }
}

/// Atoms that can be written without quotes: lowercase start, then
/// alphanumerics or underscores.
pub fn is_bare_atom(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

pub(crate) fn write_atom(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if is_bare_atom(s) {
        f.write_str(s)
    } else {
        f.write_str("'")?;
        for c in s.chars() {
            match c {
                '\'' => f.write_str("\\'")?,
                '\\' => f.write_str("\\\\")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("'")
    }
}

fn write_seq<T>(
    f: &mut fmt::Formatter<'_>,
    items: &[T],
    sep: &str,
    mut each: impl FnMut(&mut fmt::Formatter<'_>, &T) -> fmt::Result,
) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        each(f, item)?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(a) => write_atom(f, a),
            Term::Int(n) => write!(f, "{n}"),
            Term::Decimal(d) => write!(f, "{d}"),
            Term::Str(s) => write!(f, "{:?}", &**s),
            Term::Var(v) => f.write_str(v),
            Term::List(items) => {
                f.write_str("[")?;
                write_seq(f, items, ", ", |f, t| write!(f, "{t}"))?;
                f.write_str("]")
            }
            Term::Cons(items, tail) => {
                f.write_str("[")?;
                write_seq(f, items, ", ", |f, t| write!(f, "{t}"))?;
                write!(f, " | {tail}]")
            }
            Term::Compound(name, args) => {
                write_atom(f, name)?;
                f.write_str("(")?;
                write_seq(f, args, ", ", |f, t| write!(f, "{t}"))?;
                f.write_str(")")
            }
        }
    }
}

/// Unquoted transcript rendering of a term.
pub struct Plain<'a>(&'a Term);

impl fmt::Display for Plain<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Term::Atom(a) | Term::Str(a) | Term::Var(a) => f.write_str(a),
            Term::Int(n) => write!(f, "{n}"),
            Term::Decimal(d) => write!(f, "{d}"),
            Term::List(items) => {
                f.write_str("[")?;
                write_seq(f, items, ",", |f, t| write!(f, "{}", t.plain()))?;
                f.write_str("]")
            }
            Term::Cons(items, tail) => {
                f.write_str("[")?;
                write_seq(f, items, ",", |f, t| write!(f, "{}", t.plain()))?;
                write!(f, "|{}]", tail.plain())
            }
            Term::Compound(name, args) => {
                f.write_str(name)?;
                f.write_str("(")?;
                write_seq(f, args, ",", |f, t| write!(f, "{}", t.plain()))?;
                f.write_str(")")
            }
        }
    }
}

/// A predicate applied to arguments. Ground literals are facts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub pred: Sym,
    pub args: Vec<Term>,
}

/// A ground literal stored in a fact base.
pub type Fact = Literal;

impl Literal {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Literal { pred: sym(pred), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn key(&self) -> PredKey {
        PredKey::new(&self.pred, self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.args.iter().any(|a| a.mentions(name))
    }

    pub fn to_term(&self) -> Term {
        if self.args.is_empty() {
            Term::Atom(self.pred.clone())
        } else {
            Term::Compound(self.pred.clone(), self.args.clone())
        }
    }

    pub fn plain(&self) -> String {
        self.to_term().plain().to_string()
    }

    /// The first argument as an atom name, when present.
    pub fn name_arg(&self, i: usize) -> Option<&Sym> {
        self.args.get(i).and_then(Term::as_atom)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// Predicate identity: name plus arity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredKey {
    pub name: Sym,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: &str, arity: usize) -> Self {
        PredKey { name: sym(name), arity }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}
