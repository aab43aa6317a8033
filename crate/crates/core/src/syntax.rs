//! Reader for the logic-program text format used by fact files, rule files,
//! goals and model output.
//!
//! ```text
//! % comment
//! dish('Soft Taco').
//! original_price('Soft Taco', 179).
//! unavailable(D) :- dish(D), included_ingredient(D, I), runout(I).
//! all_unavailable([H|T]) :- unavailable(H), all_unavailable(T).
//! false :- new_runout(X), new_restore(X).
//! ```

use std::fmt;

use crate::reasoner::{BodyLit, CmpOp, Rule};
use crate::term::{sym, Decimal, Literal, Term};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Clause {
    Fact(Literal),
    Rule(Rule),
}

/// A clause together with the line it started on.
#[derive(Clone, Debug, PartialEq)]
pub struct Located<T> {
    pub item: T,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Quoted(String),
    Str(String),
    Int(i64),
    Dec(Decimal),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Bar,
    Dot,
    Neck,
    Op(CmpOp),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Quoted(s) => write!(f, "'{s}'"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Dec(d) => write!(f, "{d}"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Neck => f.write_str("`:-`"),
            Tok::Op(op) => write!(f, "`{op}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { src: text.as_bytes(), text, pos: 0, line: 1, col: 1 }
    }

    fn err(&self, line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { line, col, message: message.into() }
    }

    fn peek_byte(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.text[self.pos..].chars().next()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(b) = self.peek_byte(0) {
            if b.is_ascii_whitespace() {
                self.bump();
            } else if b == b'%' {
                while let Some(b) = self.peek_byte(0) {
                    if b == b'\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let (line, col) = (self.line, self.col);
            let Some(b) = self.peek_byte(0) else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let tok = match b {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'[' => {
                    self.bump();
                    Tok::LBrack
                }
                b']' => {
                    self.bump();
                    Tok::RBrack
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'|' => {
                    self.bump();
                    Tok::Bar
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b':' if self.peek_byte(1) == Some(b'-') => {
                    self.bump();
                    self.bump();
                    Tok::Neck
                }
                b'=' if self.peek_byte(1) == Some(b'<') => {
                    self.bump();
                    self.bump();
                    Tok::Op(CmpOp::Le)
                }
                b'=' => {
                    self.bump();
                    Tok::Op(CmpOp::Eq)
                }
                b'\\' if self.peek_byte(1) == Some(b'=') => {
                    self.bump();
                    self.bump();
                    Tok::Op(CmpOp::Ne)
                }
                b'<' => {
                    self.bump();
                    Tok::Op(CmpOp::Lt)
                }
                b'>' if self.peek_byte(1) == Some(b'=') => {
                    self.bump();
                    self.bump();
                    Tok::Op(CmpOp::Ge)
                }
                b'>' => {
                    self.bump();
                    Tok::Op(CmpOp::Gt)
                }
                b'\'' | b'"' | b'`' => {
                    let quote = self.bump().unwrap();
                    let close = if quote == '`' { '\'' } else { quote };
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            None => return Err(self.err(line, col, "unterminated quoted text")),
                            Some('\\') => match self.bump() {
                                Some('n') => s.push('\n'),
                                Some(c) => s.push(c),
                                None => return Err(self.err(line, col, "unterminated quoted text")),
                            },
                            Some(c) if c == close => {
                                // '' inside a quoted atom is an escaped quote
                                if close == '\'' && self.peek_byte(0) == Some(b'\'') {
                                    self.bump();
                                    s.push('\'');
                                } else {
                                    break;
                                }
                            }
                            Some(c) => s.push(c),
                        }
                    }
                    if quote == '"' {
                        Tok::Str(s)
                    } else {
                        Tok::Quoted(s)
                    }
                }
                b'-' | b'0'..=b'9' => {
                    let neg = b == b'-';
                    if neg && !self.peek_byte(1).is_some_and(|d| d.is_ascii_digit()) {
                        return Err(self.err(line, col, "unexpected `-`"));
                    }
                    let start = self.pos;
                    if neg {
                        self.bump();
                    }
                    while self.peek_byte(0).is_some_and(|d| d.is_ascii_digit()) {
                        self.bump();
                    }
                    let is_dec = self.peek_byte(0) == Some(b'.')
                        && self.peek_byte(1).is_some_and(|d| d.is_ascii_digit());
                    if is_dec {
                        let int_part = &self.text[start..self.pos];
                        self.bump();
                        let frac_start = self.pos;
                        while self.peek_byte(0).is_some_and(|d| d.is_ascii_digit()) {
                            self.bump();
                        }
                        let frac = &self.text[frac_start..self.pos];
                        let joined = format!("{int_part}{frac}");
                        let mantissa = joined
                            .parse::<i64>()
                            .map_err(|_| self.err(line, col, "number out of range"))?;
                        let scale = u8::try_from(frac.len())
                            .ok()
                            .filter(|s| *s <= 12)
                            .ok_or_else(|| self.err(line, col, "too many decimal places"))?;
                        Tok::Dec(Decimal { mantissa, scale })
                    } else {
                        let n = self.text[start..self.pos]
                            .parse::<i64>()
                            .map_err(|_| self.err(line, col, "number out of range"))?;
                        Tok::Int(n)
                    }
                }
                b if b.is_ascii_alphabetic() || b == b'_' => {
                    let start = self.pos;
                    while self
                        .peek_byte(0)
                        .is_some_and(|d| d.is_ascii_alphanumeric() || d == b'_')
                    {
                        self.bump();
                    }
                    let word = self.text[start..self.pos].to_string();
                    if b.is_ascii_uppercase() || b == b'_' {
                        Tok::Var(word)
                    } else {
                        Tok::Ident(word)
                    }
                }
                _ => {
                    let c = self.text[self.pos..].chars().next().unwrap();
                    return Err(self.err(line, col, format!("unexpected character `{c}`")));
                }
            };
            out.push((tok, line, col));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    fresh: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: Lexer::new(src).tokens()?, pos: 0, fresh: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn here(&self) -> (usize, usize) {
        let (_, l, c) = &self.toks[self.pos];
        (*l, *c)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, message: message.into() })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            self.fail(format!("expected {want}, found {}", self.peek()))
        }
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let head = self.literal()?;
        match self.next() {
            Tok::Dot => Ok(Clause::Fact(head)),
            Tok::Neck => {
                let mut body = vec![self.body_lit()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    body.push(self.body_lit()?);
                }
                self.expect(Tok::Dot)?;
                Ok(Clause::Rule(Rule { head, body }))
            }
            other => {
                self.pos -= 1;
                self.fail(format!("expected `.` or `:-`, found {other}"))
            }
        }
    }

    fn body_lit(&mut self) -> Result<BodyLit, ParseError> {
        if let Tok::Ident(w) = self.peek() {
            if w == "not" && !matches!(self.peek_at(1), Tok::LParen | Tok::Op(_)) {
                self.next();
                return Ok(BodyLit::Neg(self.literal()?));
            }
        }
        // comparison: term op term
        let save = self.pos;
        let is_literal_start = matches!(self.peek(), Tok::Ident(_) | Tok::Quoted(_));
        if is_literal_start {
            let lit = self.literal()?;
            if let Tok::Op(op) = self.peek().clone() {
                self.next();
                let rhs = self.term()?;
                return Ok(BodyLit::Cmp(op, lit.to_term(), rhs));
            }
            return Ok(BodyLit::Pos(lit));
        }
        self.pos = save;
        let lhs = self.term()?;
        match self.next() {
            Tok::Op(op) => {
                let rhs = self.term()?;
                Ok(BodyLit::Cmp(op, lhs, rhs))
            }
            other => {
                self.pos -= 1;
                self.fail(format!("expected a comparison operator, found {other}"))
            }
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let name = match self.next() {
            Tok::Ident(s) | Tok::Quoted(s) => s,
            other => {
                self.pos -= 1;
                return self.fail(format!("expected a predicate name, found {other}"));
            }
        };
        let args = if *self.peek() == Tok::LParen { self.args()? } else { Vec::new() };
        Ok(Literal { pred: sym(&name), args })
    }

    fn args(&mut self) -> Result<Vec<Term>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.next();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.next() {
            Tok::Ident(s) | Tok::Quoted(s) => {
                if *self.peek() == Tok::LParen {
                    let args = self.args()?;
                    Ok(Term::Compound(sym(&s), args))
                } else {
                    Ok(Term::Atom(sym(&s)))
                }
            }
            Tok::Var(v) => {
                if v == "_" {
                    self.fresh += 1;
                    Ok(Term::Var(sym(&format!("_G{}", self.fresh))))
                } else {
                    Ok(Term::Var(sym(&v)))
                }
            }
            Tok::Str(s) => Ok(Term::Str(sym(&s))),
            Tok::Int(n) => Ok(Term::Int(n)),
            Tok::Dec(d) => Ok(Term::Decimal(d)),
            Tok::LBrack => {
                if *self.peek() == Tok::RBrack {
                    self.next();
                    return Ok(Term::List(Vec::new()));
                }
                let mut items = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    items.push(self.term()?);
                }
                let term = if *self.peek() == Tok::Bar {
                    self.next();
                    let tail = self.term()?;
                    match tail {
                        Term::List(rest) => {
                            items.extend(rest);
                            Term::List(items)
                        }
                        Term::Cons(rest, t) => {
                            items.extend(rest);
                            Term::Cons(items, t)
                        }
                        tail => Term::Cons(items, Box::new(tail)),
                    }
                } else {
                    Term::List(items)
                };
                self.expect(Tok::RBrack)?;
                Ok(term)
            }
            other => {
                self.pos -= 1;
                self.fail(format!("expected a term, found {other}"))
            }
        }
    }
}

/// Parse a whole program: facts, rules and integrity constraints.
pub fn parse_program(src: &str) -> Result<Vec<Located<Clause>>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        let line = p.here().0;
        out.push(Located { item: p.clause()?, line });
    }
    Ok(out)
}

/// Parse a single literal, e.g. a query goal. A trailing `.` is optional.
pub fn parse_literal(src: &str) -> Result<Literal, ParseError> {
    let mut p = Parser::new(src)?;
    let lit = p.literal()?;
    if *p.peek() == Tok::Dot {
        p.next();
    }
    if !p.at_eof() {
        return p.fail(format!("unexpected {} after literal", p.peek()));
    }
    Ok(lit)
}

/// Parse a sequence of literals separated by `.` (or `,`), as produced by
/// a language model asked to emit predicates.
pub fn parse_literals(src: &str) -> Result<Vec<Literal>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.literal()?);
        while matches!(p.peek(), Tok::Dot | Tok::Comma) {
            p.next();
        }
    }
    Ok(out)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    if !p.at_eof() {
        return p.fail(format!("unexpected {} after term", p.peek()));
    }
    Ok(t)
}
