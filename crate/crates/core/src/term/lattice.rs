//! Truncation, similarity and the ⊥-ordering with its meets and joins.

use std::collections::{HashMap, HashSet, VecDeque};

use super::canon::{Builder, Slot};
use super::{Depth, Label, Term};
use crate::error::{Error, Result};

/// Cuts `t` at depth `d`: everything at depth `d` becomes bottom.
pub fn truncate(t: &Term, d: Depth) -> Term {
    let d = match d {
        Depth::Inf => return t.clone(),
        Depth::Fin(d) => d,
    };
    if d == 0 {
        return Term::bot();
    }
    let mut b = Builder::new();
    let mut memo: HashMap<(usize, usize), usize> = HashMap::new();
    let bot = b.node(Label::Bot, 0, Vec::new());
    // Iterative construction: slots are reserved before their children.
    let root = b.open();
    memo.insert((0, d), root);
    let mut todo = vec![(0usize, d, root)];
    while let Some((n, rem, slot)) = todo.pop() {
        let node = &t.nodes[n];
        let mut kids = Vec::with_capacity(node.kids.len());
        for &k in &node.kids {
            if rem == 1 {
                kids.push(bot);
                continue;
            }
            let key = (k, rem - 1);
            let s = match memo.get(&key) {
                Some(&s) => s,
                None => {
                    let s = b.open();
                    memo.insert(key, s);
                    todo.push((k, rem - 1, s));
                    s
                }
            };
            kids.push(s);
        }
        b.set(slot, Slot::Node { label: node.label.clone(), mark: node.mark, kids });
    }
    b.finish(root)
}

/// Minimal depth of a position where the two terms carry different symbols.
pub fn similarity(s: &Term, t: &Term) -> Depth {
    let mut seen = HashSet::from([(0usize, 0usize)]);
    let mut q = VecDeque::from([(0usize, 0usize, 0usize)]);
    while let Some((a, b, d)) = q.pop_front() {
        let (na, nb) = (&s.nodes[a], &t.nodes[b]);
        if na.label != nb.label || na.kids.len() != nb.kids.len() {
            return Depth::Fin(d);
        }
        for (&x, &y) in na.kids.iter().zip(&nb.kids) {
            if seen.insert((x, y)) {
                q.push_back((x, y, d + 1));
            }
        }
    }
    Depth::Inf
}

/// `2^-sim(s, t)`, with distance 0 for equal terms.
pub fn distance(s: &Term, t: &Term) -> f64 {
    match similarity(s, t) {
        Depth::Inf => 0.0,
        Depth::Fin(d) => 0.5f64.powi(d as i32),
    }
}

pub fn bot_depth(t: &Term) -> Depth {
    let depths = t.node_depths();
    t.nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.label.is_bot())
        .map(|(i, _)| depths[i])
        .min()
        .map_or(Depth::Inf, Depth::Fin)
}

/// `s ⊑ t`: `t` is obtained from `s` by replacing bottoms.
pub fn leq_bot(s: &Term, t: &Term) -> bool {
    let mut seen = HashSet::from([(0usize, 0usize)]);
    let mut stack = vec![(0usize, 0usize)];
    while let Some((a, b)) = stack.pop() {
        let (na, nb) = (&s.nodes[a], &t.nodes[b]);
        if na.label.is_bot() {
            continue;
        }
        if na.label != nb.label || na.kids.len() != nb.kids.len() {
            return false;
        }
        for (&x, &y) in na.kids.iter().zip(&nb.kids) {
            if seen.insert((x, y)) {
                stack.push((x, y));
            }
        }
    }
    true
}

fn glb2(s: &Term, t: &Term) -> Term {
    let mut b = Builder::new();
    let mut memo: HashMap<(usize, usize), usize> = HashMap::new();
    let root = b.open();
    memo.insert((0, 0), root);
    let mut todo = vec![(0usize, 0usize, root)];
    while let Some((x, y, slot)) = todo.pop() {
        let (nx, ny) = (&s.nodes[x], &t.nodes[y]);
        if nx.label != ny.label || nx.kids.len() != ny.kids.len() {
            b.set(slot, Slot::Node { label: Label::Bot, mark: 0, kids: Vec::new() });
            continue;
        }
        let mut kids = Vec::with_capacity(nx.kids.len());
        for (&kx, &ky) in nx.kids.iter().zip(&ny.kids) {
            let s = *memo.entry((kx, ky)).or_insert_with(|| {
                let s = b.open();
                todo.push((kx, ky, s));
                s
            });
            kids.push(s);
        }
        b.set(slot, Slot::Node { label: nx.label.clone(), mark: 0, kids });
    }
    b.finish(root)
}

/// Greatest lower bound. Marks are dropped. Panics on an empty slice.
pub fn glb(terms: &[Term]) -> Term {
    let mut it = terms.iter();
    let first = it.next().expect("glb of an empty set").strip_marks();
    it.fold(first, |acc, t| if acc == *t { acc } else { glb2(&acc, t) })
}

fn lub2(s: &Term, t: &Term) -> Result<Term> {
    let mut b = Builder::new();
    let sb = b.import_map(s, |_| 0);
    let tb = b.import_map(t, |_| 0);
    let mut memo: HashMap<(usize, usize), usize> = HashMap::new();
    let root = b.open();
    memo.insert((0, 0), root);
    let mut todo = vec![(0usize, 0usize, root)];
    while let Some((x, y, slot)) = todo.pop() {
        let (nx, ny) = (&s.nodes[x], &t.nodes[y]);
        if nx.label.is_bot() {
            b.set(slot, Slot::Ind(tb + y));
            continue;
        }
        if ny.label.is_bot() {
            b.set(slot, Slot::Ind(sb + x));
            continue;
        }
        if nx.label != ny.label || nx.kids.len() != ny.kids.len() {
            return Err(Error::NoUpperBound);
        }
        let mut kids = Vec::with_capacity(nx.kids.len());
        for (&kx, &ky) in nx.kids.iter().zip(&ny.kids) {
            let s = *memo.entry((kx, ky)).or_insert_with(|| {
                let s = b.open();
                todo.push((kx, ky, s));
                s
            });
            kids.push(s);
        }
        b.set(slot, Slot::Node { label: nx.label.clone(), mark: 0, kids });
    }
    Ok(b.finish(root))
}

/// Least upper bound, or `NoUpperBound` when two terms clash.
pub fn lub(terms: &[Term]) -> Result<Term> {
    let mut it = terms.iter();
    let first = it.next().ok_or(Error::InvalidArgument("lub of an empty set".into()))?;
    it.try_fold(first.strip_marks(), |acc, t| lub2(&acc, t))
}

#[cfg(test)]
mod tests {
    use super::super::parse_term;
    use super::*;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn truncation() {
        assert_eq!(truncate(&t("f(g(a), b)"), Depth::Fin(1)), t("f(_|_, _|_)"));
        assert_eq!(truncate(&t("mu x. g(f(x))"), Depth::Fin(0)), Term::bot());
        assert_eq!(truncate(&t("mu x. f(x)"), Depth::Fin(3)), t("f(f(f(_|_)))"));
        assert_eq!(truncate(&t("f(a)"), Depth::Fin(5)), t("f(a)"));
    }

    #[test]
    fn similarity_and_distance() {
        let s = t("mu x. h(x, a)");
        assert_eq!(similarity(&s, &s), Depth::Inf);
        assert_eq!(similarity(&t("f(a, b)"), &t("g(a, b)")), Depth::Fin(0));
        assert_eq!(similarity(&t("f(a, b)"), &t("f(a, c)")), Depth::Fin(1));
        assert_eq!(distance(&s, &s), 0.0);
        assert_eq!(distance(&t("f(a, b)"), &t("g(a, b)")), 1.0);
        assert_eq!(distance(&t("f(a, b)"), &t("f(a, c)")), 0.5);
    }

    #[test]
    fn bottom_depth() {
        assert_eq!(bot_depth(&Term::bot()), Depth::Fin(0));
        assert_eq!(bot_depth(&t("f(a, g(_|_))")), Depth::Fin(2));
        assert_eq!(bot_depth(&t("mu x. f(x)")), Depth::Inf);
    }

    #[test]
    fn order() {
        assert!(leq_bot(&Term::bot(), &t("mu x. f(x)")));
        assert!(leq_bot(&t("f(_|_, b)"), &t("f(a, b)")));
        assert!(!leq_bot(&t("f(a, _|_)"), &t("f(_|_, b)")));
        assert!(leq_bot(&t("f(_|_, mu x. g(x))"), &t("f(a, mu y. g(g(y)))")));
    }

    #[test]
    fn meets_and_joins() {
        assert_eq!(glb(&[t("f(a, b)"), t("f(a, c)")]), t("f(a, _|_)"));
        assert_eq!(glb(&[t("f(a, b)")]), t("f(a, b)"));
        assert_eq!(glb(&[t("f(a, f(g(a), g(b)))"), t("f(a, f(g(b), g(a)))")]), t("f(a, f(g(_|_), g(_|_)))"));
        assert_eq!(glb(&[t("mu x. f(x, a)"), t("mu x. f(f(x, a), a)")]), t("mu x. f(x, a)"));
        assert_eq!(lub(&[t("f(a, _|_)"), t("f(_|_, b)")]).unwrap(), t("f(a, b)"));
        assert_eq!(lub(&[Term::bot(), t("g(a)")]).unwrap(), t("g(a)"));
        assert_eq!(lub(&[t("f(a, _|_)"), t("g(_|_)")]), Err(Error::NoUpperBound));
    }
}
