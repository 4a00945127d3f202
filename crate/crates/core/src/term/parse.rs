//! Concrete syntax for terms.
//!
//! ```text
//! expr  ::= 'mu' ident '.' expr | 'let' bind (sep bind)* 'in' expr | atom
//! bind  ::= ident '=' expr          sep ::= ',' | ';' | 'and'
//! atom  ::= '_|_' | ident [ '(' expr (',' expr)* ')' ] | '(' expr ')'
//! ```

use std::collections::HashMap;

use super::canon::{Builder, Slot};
use super::{Label, Signature, Term};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Eq,
    Colon,
    Arrow,
    Bot,
    Mu,
    Let,
    In,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Bot => "`_|_`".into(),
            Tok::Mu => "`mu`".into(),
            Tok::Let => "`let`".into(),
            Tok::In => "`in`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
}

impl Lexer {
    pub(crate) fn new(src: &str, line0: usize, col0: usize) -> Result<Lexer> {
        let chars: Vec<char> = src.chars().collect();
        let mut toks = Vec::new();
        let (mut line, mut col) = (line0, col0);
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (l, cc) = (line, col);
            let adv = |n: usize, i: &mut usize, col: &mut usize| {
                *i += n;
                *col += n;
            };
            match c {
                '\n' => {
                    line += 1;
                    col = 1;
                    i += 1;
                }
                c if c.is_whitespace() => adv(1, &mut i, &mut col),
                '#' => {
                    while i < chars.len() && chars[i] != '\n' {
                        i += 1;
                    }
                }
                '(' => {
                    toks.push((Tok::LParen, l, cc));
                    adv(1, &mut i, &mut col);
                }
                ')' => {
                    toks.push((Tok::RParen, l, cc));
                    adv(1, &mut i, &mut col);
                }
                ',' => {
                    toks.push((Tok::Comma, l, cc));
                    adv(1, &mut i, &mut col);
                }
                ';' => {
                    toks.push((Tok::Semi, l, cc));
                    adv(1, &mut i, &mut col);
                }
                '.' => {
                    toks.push((Tok::Dot, l, cc));
                    adv(1, &mut i, &mut col);
                }
                '=' => {
                    toks.push((Tok::Eq, l, cc));
                    adv(1, &mut i, &mut col);
                }
                ':' => {
                    toks.push((Tok::Colon, l, cc));
                    adv(1, &mut i, &mut col);
                }
                '⊥' => {
                    toks.push((Tok::Bot, l, cc));
                    adv(1, &mut i, &mut col);
                }
                'μ' => {
                    toks.push((Tok::Mu, l, cc));
                    adv(1, &mut i, &mut col);
                }
                '-' if chars.get(i + 1) == Some(&'>') => {
                    toks.push((Tok::Arrow, l, cc));
                    adv(2, &mut i, &mut col);
                }
                '→' => {
                    toks.push((Tok::Arrow, l, cc));
                    adv(1, &mut i, &mut col);
                }
                '_' if chars.get(i + 1) == Some(&'|') && chars.get(i + 2) == Some(&'_') => {
                    toks.push((Tok::Bot, l, cc));
                    adv(3, &mut i, &mut col);
                }
                c if is_ident_char(c) => {
                    let start = i;
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    col += i - start;
                    let tok = match word.as_str() {
                        "mu" => Tok::Mu,
                        "let" => Tok::Let,
                        "in" => Tok::In,
                        _ => Tok::Ident(word),
                    };
                    toks.push((tok, l, cc));
                }
                other => return Err(Error::Parse { line: l, col: cc, msg: format!("unexpected character `{other}`") }),
            }
        }
        toks.push((Tok::Eof, line, col));
        Ok(Lexer { toks })
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

#[derive(Clone, Debug)]
pub(crate) enum Ast {
    Bot,
    Name { name: String, line: usize, col: usize },
    App { name: String, args: Vec<Ast>, line: usize, col: usize },
    Mu { name: String, body: Box<Ast> },
    Let { binds: Vec<(String, Ast)>, body: Box<Ast> },
}

pub(crate) struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    at: usize,
}

impl Parser {
    pub(crate) fn new(lexer: Lexer) -> Parser {
        Parser { toks: lexer.toks, at: 0 }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    pub(crate) fn here(&self) -> (usize, usize) {
        (self.toks[self.at].1, self.toks[self.at].2)
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Parse { line, col, msg: msg.into() })
    }

    pub(crate) fn expect(&mut self, t: Tok) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", t.describe(), self.peek().describe()))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected a name, found {}", other.describe())),
        }
    }

    pub(crate) fn expr(&mut self) -> Result<Ast> {
        match self.peek() {
            Tok::Mu => {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Dot)?;
                let body = self.expr()?;
                Ok(Ast::Mu { name, body: Box::new(body) })
            }
            Tok::Let => {
                self.bump();
                let mut binds = Vec::new();
                loop {
                    let name = self.ident()?;
                    self.expect(Tok::Eq)?;
                    let e = self.expr()?;
                    binds.push((name, e));
                    match self.peek() {
                        Tok::Comma | Tok::Semi => {
                            self.bump();
                        }
                        Tok::Ident(s) if s == "and" => {
                            self.bump();
                        }
                        _ => break,
                    }
                }
                self.expect(Tok::In)?;
                let body = self.expr()?;
                Ok(Ast::Let { binds, body: Box::new(body) })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Ast> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Bot => {
                self.bump();
                Ok(Ast::Bot)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if *self.peek() == Tok::Comma {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Ast::App { name, args, line, col })
                } else {
                    Ok(Ast::Name { name, line, col })
                }
            }
            other => self.error(format!("expected a term, found {}", other.describe())),
        }
    }
}

/// Default classification of bare names when no signature is available.
fn looks_like_var(name: &str) -> bool {
    let mut cs = name.chars();
    match cs.next() {
        Some(c) if ('u'..='z').contains(&c) => cs.all(|c| c.is_ascii_digit() || c == '\''),
        _ => false,
    }
}

impl Ast {
    /// Builds a canonical term. `named` supplies terms for free names that
    /// are neither bound nor symbols (e.g. earlier `term` declarations).
    pub(crate) fn build(
        &self,
        sig: Option<&Signature>,
        named: &HashMap<String, Term>,
        pos: (usize, usize),
    ) -> Result<Term> {
        let mut b = Builder::new();
        let mut env: Vec<(String, usize)> = Vec::new();
        let root = self.build_into(&mut b, &mut env, sig, named)?;
        if b.has_ind_cycle() {
            return Err(Error::Parse { line: pos.0, col: pos.1, msg: "unguarded recursion".into() });
        }
        Ok(b.finish(root))
    }

    fn build_into(
        &self,
        b: &mut Builder,
        env: &mut Vec<(String, usize)>,
        sig: Option<&Signature>,
        named: &HashMap<String, Term>,
    ) -> Result<usize> {
        match self {
            Ast::Bot => Ok(b.node(Label::Bot, 0, Vec::new())),
            Ast::Name { name, line, col } => {
                if let Some((_, slot)) = env.iter().rev().find(|(n, _)| n == name) {
                    return Ok(*slot);
                }
                match sig {
                    Some(sig) => match sig.arity(name) {
                        Some(0) => Ok(b.node(Label::sym(name), 0, Vec::new())),
                        Some(k) => Err(Error::Parse {
                            line: *line,
                            col: *col,
                            msg: format!("symbol `{name}` expects {k} arguments"),
                        }),
                        None => match named.get(name) {
                            Some(t) => Ok(b.import(t)),
                            None => Ok(b.node(Label::var(name), 0, Vec::new())),
                        },
                    },
                    None => {
                        if let Some(t) = named.get(name) {
                            Ok(b.import(t))
                        } else if looks_like_var(name) {
                            Ok(b.node(Label::var(name), 0, Vec::new()))
                        } else {
                            Ok(b.node(Label::sym(name), 0, Vec::new()))
                        }
                    }
                }
            }
            Ast::App { name, args, line, col } => {
                if let Some(sig) = sig {
                    match sig.arity(name) {
                        Some(k) if k == args.len() => {}
                        Some(k) => {
                            return Err(Error::Parse {
                                line: *line,
                                col: *col,
                                msg: format!("symbol `{name}` expects {k} arguments, got {}", args.len()),
                            })
                        }
                        None => {
                            return Err(Error::Parse {
                                line: *line,
                                col: *col,
                                msg: format!("unknown symbol `{name}`"),
                            })
                        }
                    }
                }
                if env.iter().any(|(n, _)| n == name) {
                    return Err(Error::Parse {
                        line: *line,
                        col: *col,
                        msg: format!("bound name `{name}` applied to arguments"),
                    });
                }
                let mut kids = Vec::with_capacity(args.len());
                for a in args {
                    kids.push(a.build_into(b, env, sig, named)?);
                }
                Ok(b.node(Label::sym(name), 0, kids))
            }
            Ast::Mu { name, body } => {
                let s = b.open();
                env.push((name.clone(), s));
                let r = body.build_into(b, env, sig, named);
                env.pop();
                b.set(s, Slot::Ind(r?));
                Ok(s)
            }
            Ast::Let { binds, body } => {
                let depth = env.len();
                let slots: Vec<usize> = binds.iter().map(|_| b.open()).collect();
                for ((n, _), &s) in binds.iter().zip(&slots) {
                    env.push((n.clone(), s));
                }
                let mut res = Ok(0);
                for ((_, e), &s) in binds.iter().zip(&slots) {
                    match e.build_into(b, env, sig, named) {
                        Ok(r) => b.set(s, Slot::Ind(r)),
                        Err(err) => {
                            res = Err(err);
                            break;
                        }
                    }
                }
                if res.is_ok() {
                    res = body.build_into(b, env, sig, named);
                }
                env.truncate(depth);
                res
            }
        }
    }
}

/// Parses a term; bare names `u`..`z` (optionally followed by digits or
/// primes) are variables, other names are symbols.
pub fn parse_term(src: &str) -> Result<Term> {
    parse_full(src, None, &HashMap::new(), 1, 1)
}

/// Parses against a signature: arities are checked and names outside the
/// signature are variables.
pub fn parse_term_with(src: &str, sig: &Signature) -> Result<Term> {
    parse_full(src, Some(sig), &HashMap::new(), 1, 1)
}

pub(crate) fn parse_full(
    src: &str,
    sig: Option<&Signature>,
    named: &HashMap<String, Term>,
    line: usize,
    col: usize,
) -> Result<Term> {
    let mut p = Parser::new(Lexer::new(src, line, col)?);
    let start = p.here();
    let ast = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", p.peek().describe()));
    }
    ast.build(sig, named, start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binders_agree() {
        let a = parse_term("mu x. g(f(x))").unwrap();
        let b = parse_term("let t = g(f(t)) in t").unwrap();
        let c = parse_term("μ y. g(f(y))").unwrap();
        let d = parse_term("let s = g(u0) and u0 = f(s) in s").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a, d);
    }

    #[test]
    fn unguarded_recursion_rejected() {
        assert!(matches!(parse_term("mu x. x"), Err(Error::Parse { .. })));
        assert!(matches!(parse_term("let a = b; b = a in a"), Err(Error::Parse { .. })));
    }

    #[test]
    fn errors_carry_location() {
        match parse_term("f(a,\n  ?)") {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
        match parse_term("f(a") {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (1, 4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn signature_checks_arity() {
        let mut sig = Signature::new();
        sig.add("f", 2).unwrap();
        sig.add("a", 0).unwrap();
        assert!(parse_term_with("f(a)", &sig).is_err());
        assert!(parse_term_with("g(a)", &sig).is_err());
        let t = parse_term_with("f(a, q)", &sig).unwrap();
        assert_eq!(t.symbol_at(&[1]).unwrap(), Label::var("q"));
    }

    #[test]
    fn default_variable_names() {
        let t = parse_term("f(x, y1, a, z')").unwrap();
        assert_eq!(t.vars().len(), 3);
        assert_eq!(t.symbol_at(&[2]).unwrap(), Label::sym("a"));
    }
}
