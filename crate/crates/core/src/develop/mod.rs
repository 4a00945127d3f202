//! Descendants of redex occurrences, complete developments and the paths
//! construction of their final terms.
//!
//! Occurrences are tracked in two independent ways: positionally, by the
//! case analysis of a single step, and by labelling nodes of the term graph
//! and rewriting the labelled term. The latter is also how developments of
//! infinite, node-closed sets are carried out.

mod complete;
mod paths;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::reduction::{analyze, Reduction, DEFAULT_DEPTH};
use crate::term::{fmt_pos, is_prefix, parse_pos, Label, Pos, Term, MARK_U};
use crate::trs::{Rule, Trs};

pub(crate) use complete::mark_position;
pub use complete::{complete_development, diamond_join, strip_project};
pub use paths::{build_paths, matching_term, PathAutomaton, PathState, TraceItem, Transition};

/// Infinite occurrence sets are enumerated only down to this depth.
pub const DEPTH_CAP: usize = 32;

/// Upper bound on enumerated positions, against exponential unfolding of
/// shared subgraphs.
const POSITION_CAP: usize = 100_000;

/// Redex occurrences in a host term: explicit positions plus graph nodes
/// that stand for every one of their occurrences.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OccurrenceSet {
    pub positions: BTreeSet<Pos>,
    pub nodes: BTreeSet<usize>,
}

impl OccurrenceSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_positions(ps: impl IntoIterator<Item = Pos>) -> Self {
        OccurrenceSet { positions: ps.into_iter().collect(), nodes: BTreeSet::new() }
    }

    /// Every occurrence of a node labelled `symbol`.
    pub fn symbol(host: &Term, symbol: &str) -> Self {
        let nodes =
            (0..host.node_count()).filter(|&n| matches!(host.label(n), Label::Sym(s) if &**s == symbol)).collect();
        OccurrenceSet { positions: BTreeSet::new(), nodes }
    }

    /// Every redex occurrence of the host.
    pub fn all_redexes(trs: &Trs, host: &Term) -> Self {
        let nodes = (0..host.node_count()).filter(|&n| trs.is_redex_node(host, n)).collect();
        OccurrenceSet { positions: BTreeSet::new(), nodes }
    }

    /// `{0, 1.0}` for positions (`e` is the root), `@node:f` or `@f` for
    /// all occurrences of `f`, `@all` for all redexes.
    pub fn parse(src: &str, trs: &Trs, host: &Term) -> Result<Self> {
        let s = src.trim();
        let bad = || Error::InvalidOccurrences(src.to_string());
        if let Some(rest) = s.strip_prefix('@') {
            let name = rest.strip_prefix("node:").unwrap_or(rest).trim();
            return match name {
                "" => Err(bad()),
                "all" => Ok(Self::all_redexes(trs, host)),
                f => Ok(Self::symbol(host, f)),
            };
        }
        let inner = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')).ok_or_else(bad)?;
        if inner.trim().is_empty() {
            return Ok(Self::empty());
        }
        inner
            .split(',')
            .map(|p| parse_pos(p).map_err(|_| bad()))
            .collect::<Result<BTreeSet<_>>>()
            .map(Self::from_positions)
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty() && self.nodes.is_empty()
    }

    pub fn union(&self, other: &OccurrenceSet) -> OccurrenceSet {
        OccurrenceSet {
            positions: self.positions.union(&other.positions).cloned().collect(),
            nodes: self.nodes.union(&other.nodes).cloned().collect(),
        }
    }

    /// All positions denoted in `host`, down to `cap`.
    pub fn expand(&self, host: &Term, cap: usize) -> BTreeSet<Pos> {
        let mut out = self.positions.clone();
        out.extend(positions_where(host, cap, |n| self.nodes.contains(&n)));
        out
    }

    /// Checks that every occurrence is a non-bottom node of `host`.
    pub fn validate(&self, host: &Term) -> Result<()> {
        for p in &self.positions {
            let n = host.node_at(p).map_err(|_| Error::OccurrenceNotInTerm(fmt_pos(p)))?;
            if host.label(n).is_bot() {
                return Err(Error::OccurrenceAtBot(fmt_pos(p)));
            }
        }
        for &n in &self.nodes {
            if n >= host.node_count() {
                return Err(Error::OccurrenceNotInTerm(format!("node {n}")));
            }
            if host.label(n).is_bot() {
                return Err(Error::OccurrenceAtBot(format!("node {n}")));
            }
        }
        Ok(())
    }

    /// Checks that every occurrence is a redex.
    pub fn validate_redexes(&self, trs: &Trs, host: &Term) -> Result<()> {
        self.validate(host)?;
        for p in &self.positions {
            if !trs.is_redex_node(host, host.node_at(p)?) {
                return Err(Error::OccurrenceNotARedex(fmt_pos(p)));
            }
        }
        if let Some(n) = self.nodes.iter().find(|&&n| !trs.is_redex_node(host, n)) {
            return Err(Error::OccurrenceNotARedex(format!("node {n}")));
        }
        Ok(())
    }
}

impl fmt::Display for OccurrenceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dotted = |p: &Pos| {
            if p.is_empty() {
                "e".to_string()
            } else {
                p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
            }
        };
        let mut items: Vec<String> = self.positions.iter().map(dotted).collect();
        items.extend(self.nodes.iter().map(|n| format!("#{n}")));
        write!(f, "{{{}}}", items.join(", "))
    }
}

/// Adds `mark` to the given occurrences; several sets are applied
/// together so that node designators refer to the same host.
pub(crate) fn mark_sets(host: &Term, sets: &[(&OccurrenceSet, u8)]) -> Result<Term> {
    for (s, _) in sets {
        s.validate(host)?;
    }
    let mut t = if sets.iter().all(|(s, _)| s.nodes.is_empty()) {
        host.clone()
    } else {
        host.map_marks(|n, m| sets.iter().filter(|(s, _)| s.nodes.contains(&n)).fold(m, |m, (_, bit)| m | bit))
    };
    for (s, bit) in sets {
        for p in &s.positions {
            t = mark_position(&t, p, *bit)?;
        }
    }
    Ok(t)
}

/// Positions (down to `cap`) of nodes satisfying `pred`, visiting only
/// subgraphs that contain such a node.
pub(crate) fn positions_where(t: &Term, cap: usize, pred: impl Fn(usize) -> bool) -> BTreeSet<Pos> {
    let n = t.node_count();
    let hit: Vec<bool> = (0..n).map(&pred).collect();
    let mut reaches = hit.clone();
    loop {
        let mut changed = false;
        for m in 0..n {
            if !reaches[m] && t.kids(m).iter().any(|&k| reaches[k]) {
                reaches[m] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = BTreeSet::new();
    let mut stack = vec![(Vec::new(), 0usize)];
    let mut visited = 0;
    while let Some((p, m)) = stack.pop() {
        visited += 1;
        if visited > POSITION_CAP {
            break;
        }
        if !reaches[m] {
            continue;
        }
        if hit[m] {
            out.insert(p.clone());
        }
        if p.len() < cap {
            for (i, &k) in t.kids(m).iter().enumerate() {
                let mut q = p.clone();
                q.push(i);
                stack.push((q, k));
            }
        }
    }
    out
}

pub(crate) fn marked_positions(t: &Term, mark: u8, cap: usize) -> BTreeSet<Pos> {
    positions_where(t, cap, |n| t.mark(n) & mark != 0)
}

/// Descendants of `u` across one step at `at` with `rule`.
pub(crate) fn step_descendants(rule: &Rule, at: &[usize], u: &[usize]) -> Vec<Pos> {
    if !is_prefix(at, u) {
        return vec![u.to_vec()];
    }
    let v = &u[at.len()..];
    if rule.pattern.iter().any(|q| q == v) {
        return Vec::new();
    }
    for (x, occ) in &rule.lhs_vars {
        let Some(q) = occ.iter().find(|q| is_prefix(q, v)) else { continue };
        let w = &v[q.len()..];
        let copies = positions_where(&rule.rhs, DEPTH_CAP, |n| matches!(rule.rhs.label(n), Label::Var(y) if y == x));
        return copies.into_iter().map(|q2| at.iter().chain(&q2).chain(w).copied().collect()).collect();
    }
    unreachable!("a position below a redex lies in its pattern or under a variable")
}

/// Keeps the positions that no step of an open run's tail can disturb.
fn settle(red: &Reduction, mut ps: BTreeSet<Pos>) -> BTreeSet<Pos> {
    if red.is_open() {
        let a = analyze(red, DEFAULT_DEPTH);
        ps.retain(|p| a.is_stable(p));
    }
    ps.retain(|p| p.len() <= DEPTH_CAP);
    ps
}

/// Descendants of `u` by `red`, following each step position by position.
pub fn descendants(u: &OccurrenceSet, red: &Reduction) -> Result<OccurrenceSet> {
    let origin = red.origin();
    u.validate(origin)?;
    let mut cur = u.expand(origin, DEPTH_CAP);
    for (p, r) in &red.steps {
        let rule = &red.trs.rules[*r];
        cur = cur.iter().flat_map(|x| step_descendants(rule, p, x)).collect();
    }
    Ok(OccurrenceSet::from_positions(settle(red, cur)))
}

/// Descendants of `u` by `red`, read off the labelled nodes after
/// replaying the run on the labelled origin.
pub fn descendants_via_labels(u: &OccurrenceSet, red: &Reduction) -> Result<OccurrenceSet> {
    red.trs.require_left_linear()?;
    let mut cur = mark_sets(red.origin(), &[(u, MARK_U)])?;
    for (p, r) in &red.steps {
        cur = red.trs.rewrite(&cur, p, *r)?;
    }
    Ok(OccurrenceSet::from_positions(settle(red, marked_positions(&cur, MARK_U, DEPTH_CAP))))
}

/// No occurrence lies in the pattern of another one's redex.
pub fn non_conflicting(trs: &Trs, t: &Term, u: &OccurrenceSet) -> bool {
    let ps = u.expand(t, DEPTH_CAP);
    ps.iter().all(|a| {
        let Ok(n) = t.node_at(a) else { return true };
        trs.rules
            .iter()
            .filter(|r| r.match_node(t, n).is_some())
            .all(|r| r.pattern.iter().filter(|q| !q.is_empty()).all(|q| !ps.contains(&[a.as_slice(), q].concat())))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{run, Strategy};
    use crate::term::parse_term;
    use std::sync::Arc;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn sys(s: &str) -> Arc<Trs> {
        Arc::new(Trs::from_rules(s).unwrap())
    }

    fn set(ps: &[&[usize]]) -> OccurrenceSet {
        OccurrenceSet::from_positions(ps.iter().map(|p| p.to_vec()))
    }

    fn both(u: &OccurrenceSet, red: &Reduction) -> OccurrenceSet {
        let a = descendants(u, red).unwrap();
        assert_eq!(a, descendants_via_labels(u, red).unwrap());
        a
    }

    #[test]
    fn single_steps() {
        let trs = sys("f(x) -> g(x, x)");
        let red = Reduction::from_steps(trs, t("f(a)"), &[(vec![], 0)]).unwrap();
        assert_eq!(both(&set(&[&[0]]), &red), set(&[&[0], &[1]]));

        let trs = sys("f(g(x)) -> x");
        let red = Reduction::from_steps(trs, t("f(g(a))"), &[(vec![], 0)]).unwrap();
        assert_eq!(both(&set(&[&[0]]), &red), set(&[]));

        let trs = sys("f(x, y) -> f(y, x)");
        let red = Reduction::from_steps(trs, t("f(c, d)"), &[(vec![], 0)]).unwrap();
        assert_eq!(both(&set(&[&[0]]), &red), set(&[&[1]]));
    }

    #[test]
    fn destructive_runs_leave_nothing() {
        let trs = sys("f(x) -> x");
        let host = t("mu x. f(x)");
        let red = run(&trs, &host, &Strategy::Outermost, 10).unwrap();
        let all = OccurrenceSet::symbol(&host, "f");
        assert!(both(&all, &red).is_empty());
    }

    #[test]
    fn bottom_is_never_an_occurrence() {
        let trs = sys("c -> d");
        let red = Reduction::from_steps(trs, t("f(_|_, c)"), &[(vec![1], 0)]).unwrap();
        assert_eq!(descendants(&set(&[&[0]]), &red), Err(Error::OccurrenceAtBot("<0>".into())));
        assert!(matches!(descendants_via_labels(&set(&[&[0]]), &red), Err(Error::OccurrenceAtBot(_))));
        assert!(matches!(descendants(&set(&[&[2]]), &red), Err(Error::OccurrenceNotInTerm(_))));
    }

    #[test]
    fn conflicts() {
        let trs = Trs::from_rules("f(g(x)) -> a; g(b) -> c").unwrap();
        let host = t("f(g(b))");
        assert!(!non_conflicting(&trs, &host, &set(&[&[], &[0]])));
        assert!(non_conflicting(&trs, &host, &set(&[&[0]])));
        let orth = Trs::from_rules("a -> b; f(x) -> x").unwrap();
        assert!(non_conflicting(&orth, &t("f(f(a))"), &set(&[&[], &[0], &[0, 0]])));
    }

    #[test]
    fn occurrence_syntax() {
        let trs = Trs::from_rules("f(x) -> x").unwrap();
        let host = t("g(f(a), f(b))");
        assert_eq!(OccurrenceSet::parse("{0, 1.0, e}", &trs, &host).unwrap(), set(&[&[0], &[1, 0], &[]]));
        assert_eq!(OccurrenceSet::parse("{}", &trs, &host).unwrap(), set(&[]));
        let all = OccurrenceSet::parse("@node:f", &trs, &host).unwrap();
        assert_eq!(all.expand(&host, 4), [vec![0], vec![1]].into_iter().collect());
        assert_eq!(OccurrenceSet::parse("@all", &trs, &host).unwrap(), all);
        assert!(OccurrenceSet::parse("0, 1", &trs, &host).is_err());
    }
}
