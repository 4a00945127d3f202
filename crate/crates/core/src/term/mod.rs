//! Partial terms as canonical rational term graphs.
//!
//! A [`Term`] is stored as its minimal graph with nodes numbered in
//! depth-first preorder from the root (node 0). Because the form is unique,
//! structural equality of the node arrays is equality of the denoted
//! (possibly infinite) terms.

pub(crate) mod canon;
mod lattice;
mod parse;
mod render;
mod seq;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use canon::Builder;

pub use lattice::{bot_depth, distance, glb, leq_bot, lub, similarity, truncate};
pub(crate) use parse::{parse_full, Ast, Lexer, Parser, Tok};
pub use parse::{parse_term, parse_term_with};
pub use seq::TermSequence;

/// A position: the child indices along the path from the root.
pub type Pos = Vec<usize>;

pub(crate) const MARK_U: u8 = 1;
pub(crate) const MARK_V: u8 = 2;
pub(crate) const MARK_COLLAPSE: u8 = 4;

/// `<1.0>` style; the root is `<>`.
pub fn fmt_pos(p: &[usize]) -> String {
    let inner: Vec<String> = p.iter().map(|i| i.to_string()).collect();
    format!("<{}>", inner.join("."))
}

/// Accepts `1.0`, `<1.0>`, and `e`, `<>` or the empty string for the root.
pub fn parse_pos(s: &str) -> Result<Pos> {
    let s = s.trim();
    let s = s.strip_prefix('<').and_then(|r| r.strip_suffix('>')).unwrap_or(s).trim();
    if s.is_empty() || s == "e" || s == "ε" {
        return Ok(Vec::new());
    }
    s.split('.')
        .map(|part| part.trim().parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad position `{s}`"))))
        .collect()
}

pub(crate) fn is_prefix(p: &[usize], q: &[usize]) -> bool {
    p.len() <= q.len() && q[..p.len()] == *p
}

/// Orders positions by length first, then lexicographically.
pub(crate) fn depth_lex(p: &[usize], q: &[usize]) -> std::cmp::Ordering {
    p.len().cmp(&q.len()).then_with(|| p.cmp(q))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Bot,
    Var(Arc<str>),
    Sym(Arc<str>),
}

impl Label {
    pub fn sym(name: &str) -> Label {
        Label::Sym(Arc::from(name))
    }

    pub fn var(name: &str) -> Label {
        Label::Var(Arc::from(name))
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Label::Bot)
    }

    pub fn name(&self) -> &str {
        match self {
            Label::Bot => "_|_",
            Label::Var(n) | Label::Sym(n) => n,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A depth or similarity value; `Inf` compares above every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Depth {
    Fin(usize),
    Inf,
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Fin(d) => write!(f, "{d}"),
            Depth::Inf => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    symbols: Vec<(Arc<str>, usize)>,
    index: HashMap<Arc<str>, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, arity: usize) -> Result<()> {
        if name == "_|_" || name == "⊥" {
            return Err(Error::InvalidArgument("bottom is reserved".into()));
        }
        if let Some(&i) = self.index.get(name) {
            if self.symbols[i].1 != arity {
                return Err(Error::InvalidArgument(format!(
                    "symbol `{name}` declared with arities {} and {arity}",
                    self.symbols[i].1
                )));
            }
            return Ok(());
        }
        let n: Arc<str> = Arc::from(name);
        self.index.insert(n.clone(), self.symbols.len());
        self.symbols.push((n, arity));
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.index.get(name).map(|&i| self.symbols[i].1)
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, usize)> {
        self.symbols.iter().map(|(n, a)| (&**n, *a))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Node {
    pub(crate) label: Label,
    pub(crate) mark: u8,
    pub(crate) kids: Vec<usize>,
}

/// A rooted, ordered term graph with arbitrary numbering, possibly
/// containing duplicate or unreachable nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermGraph {
    pub nodes: Vec<(Label, Vec<usize>)>,
    pub root: usize,
}

impl TermGraph {
    /// Minimal bisimilar graph. Panics if a child index is out of range.
    pub fn canonicalize(&self) -> Term {
        let nodes: Vec<Node> =
            self.nodes.iter().map(|(l, k)| Node { label: l.clone(), mark: 0, kids: k.clone() }).collect();
        canon::minimize(&nodes, self.root)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub(crate) nodes: Arc<[Node]>,
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render::render(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render::render(self))
    }
}

impl std::str::FromStr for Term {
    type Err = Error;
    fn from_str(s: &str) -> Result<Term> {
        parse_term(s)
    }
}

impl Term {
    pub fn bot() -> Term {
        Term { nodes: Arc::from(vec![Node { label: Label::Bot, mark: 0, kids: Vec::new() }]) }
    }

    pub fn var(name: &str) -> Term {
        Term { nodes: Arc::from(vec![Node { label: Label::var(name), mark: 0, kids: Vec::new() }]) }
    }

    pub fn constant(name: &str) -> Term {
        Term::app(name, Vec::new())
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        let mut b = Builder::new();
        let kids = args.iter().map(|a| b.import(a)).collect();
        let r = b.node(Label::sym(name), 0, kids);
        b.finish(r)
    }

    /// `mu x. f(x)` style one-symbol cycle `f(s, ..., s)` with `arity` arguments.
    pub fn omega(name: &str, arity: usize) -> Term {
        let mut b = Builder::new();
        let r = b.open();
        b.set(r, canon::Slot::Node { label: Label::sym(name), mark: 0, kids: vec![r; arity] });
        b.finish(r)
    }

    pub fn graph(&self) -> TermGraph {
        TermGraph { nodes: self.nodes.iter().map(|n| (n.label.clone(), n.kids.clone())).collect(), root: 0 }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root_label(&self) -> &Label {
        &self.nodes[0].label
    }

    pub fn label(&self, n: usize) -> &Label {
        &self.nodes[n].label
    }

    pub fn kids(&self, n: usize) -> &[usize] {
        &self.nodes[n].kids
    }

    pub(crate) fn mark(&self, n: usize) -> u8 {
        self.nodes[n].mark
    }

    pub fn is_bot(&self) -> bool {
        self.nodes[0].label.is_bot()
    }

    pub fn is_total(&self) -> bool {
        !self.nodes.iter().any(|n| n.label.is_bot())
    }

    pub fn is_finite(&self) -> bool {
        // Preorder numbering: every edge to a node with a smaller index that
        // is still on the DFS stack closes a cycle. Check with colours.
        let mut state = vec![0u8; self.nodes.len()];
        let mut stack = vec![(0usize, 0usize)];
        state[0] = 1;
        while let Some(&mut (n, ref mut i)) = stack.last_mut() {
            if *i < self.nodes[n].kids.len() {
                let k = self.nodes[n].kids[*i];
                *i += 1;
                match state[k] {
                    0 => {
                        state[k] = 1;
                        stack.push((k, 0));
                    }
                    1 => return false,
                    _ => {}
                }
            } else {
                state[n] = 2;
                stack.pop();
            }
        }
        true
    }

    pub fn vars(&self) -> BTreeSet<Arc<str>> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.label {
                Label::Var(v) => Some(v.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn symbols(&self) -> BTreeSet<(Arc<str>, usize)> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.label {
                Label::Sym(s) => Some((s.clone(), n.kids.len())),
                _ => None,
            })
            .collect()
    }

    /// Minimal depth at which each node occurs (`None` is impossible since
    /// every node is reachable).
    pub(crate) fn node_depths(&self) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.nodes.len()];
        d[0] = 0;
        let mut q = VecDeque::from([0usize]);
        while let Some(n) = q.pop_front() {
            for &k in &self.nodes[n].kids {
                if d[k] == usize::MAX {
                    d[k] = d[n] + 1;
                    q.push_back(k);
                }
            }
        }
        d
    }

    pub fn node_at(&self, pos: &[usize]) -> Result<usize> {
        let mut n = 0;
        for &i in pos {
            n = *self.nodes[n].kids.get(i).ok_or_else(|| Error::PositionOutOfDomain(fmt_pos(pos)))?;
        }
        Ok(n)
    }

    pub fn has_pos(&self, pos: &[usize]) -> bool {
        self.node_at(pos).is_ok()
    }

    pub fn symbol_at(&self, pos: &[usize]) -> Result<Label> {
        Ok(self.nodes[self.node_at(pos)?].label.clone())
    }

    pub fn subterm_at(&self, pos: &[usize]) -> Result<Term> {
        Ok(self.subterm_node(self.node_at(pos)?))
    }

    pub(crate) fn subterm_node(&self, n: usize) -> Term {
        if n == 0 {
            return self.clone();
        }
        let mut b = Builder::new();
        let base = b.import(self);
        b.finish(base + n)
    }

    /// `self[s]_pos`; on cyclic graphs only the designated occurrence is
    /// replaced.
    pub fn replace_at(&self, pos: &[usize], s: &Term) -> Result<Term> {
        self.node_at(pos)?;
        let mut b = Builder::new();
        let base = b.import(self);
        let target = b.import(s);
        let root = b.graft(base, self, pos, target);
        Ok(b.finish(root))
    }

    /// All positions of length at most `d`, in breadth-first order.
    pub fn positions_to_depth(&self, d: usize) -> BTreeSet<Pos> {
        self.walk_to_depth(d).into_iter().map(|(p, _)| p).collect()
    }

    /// `(position, node)` pairs of length at most `d`, breadth first.
    pub(crate) fn walk_to_depth(&self, d: usize) -> Vec<(Pos, usize)> {
        let mut out = vec![(Vec::new(), 0usize)];
        let mut i = 0;
        while i < out.len() {
            let (p, n) = out[i].clone();
            i += 1;
            if p.len() >= d {
                continue;
            }
            for (j, &k) in self.nodes[n].kids.iter().enumerate() {
                let mut q = p.clone();
                q.push(j);
                out.push((q, k));
            }
        }
        out
    }

    pub(crate) fn map_marks(&self, f: impl Fn(usize, u8) -> u8) -> Term {
        let nodes: Vec<Node> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| Node { label: n.label.clone(), mark: f(i, n.mark), kids: n.kids.clone() })
            .collect();
        canon::minimize(&nodes, 0)
    }

    pub(crate) fn strip_marks(&self) -> Term {
        if self.nodes.iter().all(|n| n.mark == 0) {
            return self.clone();
        }
        self.map_marks(|_, _| 0)
    }

    pub(crate) fn has_marks(&self, m: u8) -> bool {
        self.nodes.iter().any(|n| n.mark & m != 0)
    }

    /// Instantiates variables by the given terms; unbound variables stay.
    pub fn substitute(&self, sigma: &HashMap<Arc<str>, Term>) -> Term {
        if sigma.is_empty() {
            return self.clone();
        }
        let mut b = Builder::new();
        let base = b.import(self);
        let mut imported: HashMap<Arc<str>, usize> = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if let Label::Var(v) = &n.label {
                if let Some(s) = sigma.get(v) {
                    let slot = *imported.entry(v.clone()).or_insert_with(|| b.import(s));
                    b.set(base + i, canon::Slot::Ind(slot));
                }
            }
        }
        b.finish(base)
    }

    /// Replaces every bottom node by `w`.
    pub fn fill_bot(&self, w: &Term) -> Term {
        let mut b = Builder::new();
        let base = b.import(self);
        let ws = b.import(w);
        for (i, n) in self.nodes.iter().enumerate() {
            if n.label.is_bot() {
                b.set(base + i, canon::Slot::Ind(ws));
            }
        }
        b.finish(base)
    }

    pub fn truncate(&self, d: Depth) -> Term {
        truncate(self, d)
    }
}
