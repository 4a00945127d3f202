use std::collections::HashMap;
use std::sync::Arc;

use super::{descendants, mark_sets, marked_positions, non_conflicting, OccurrenceSet, DEPTH_CAP};
use crate::error::{Error, Result};
use crate::reduction::{Certificate, Cursor, LimitOutcome, Mode, Reduction, Stop, Strategy, Verdict, Volatile};
use crate::term::canon::{Builder, Slot};
use crate::term::{is_prefix, Pos, Term, MARK_COLLAPSE, MARK_U, MARK_V};
use crate::trs::{instantiate, Trs};

/// Steps recorded for a development before its limit is taken from the
/// simultaneous contraction instead.
const DEVELOPMENT_STEPS: usize = 256;
/// Rounds of the projection through a cyclic run before giving up on
/// finding its recurrence.
const PROJECTION_PERIODS: usize = 64;

/// Adds `bit` to the node at `pos` only, unsharing the path to it.
pub(crate) fn mark_position(t: &Term, pos: &[usize], bit: u8) -> Result<Term> {
    let n = t.node_at(pos)?;
    let mut b = Builder::new();
    let base = b.import(t);
    let node = &t.nodes[n];
    let copy = b.node(node.label.clone(), node.mark | bit, node.kids.iter().map(|k| base + k).collect());
    let root = b.graft(base, t, pos, copy);
    Ok(b.finish(root))
}

/// Contracts every node carrying `mark` at once. Copied nodes keep their
/// other marks, which makes them residuals; an infinite tower of collapses
/// becomes bottom tagged with the collapse mark.
pub(crate) fn develop_marked(trs: &Trs, t: &Term, mark: u8) -> Result<Term> {
    let mut b = Builder::new();
    let base = b.import(t);
    for n in 0..t.node_count() {
        if t.mark(n) & mark == 0 {
            continue;
        }
        let r = trs.redex_rule(t, n).ok_or_else(|| Error::OccurrenceNotARedex(format!("node {n}")))?;
        let env = trs.rules[r].match_node(t, n).expect("redex_rule matched");
        let rb = instantiate(&mut b, &trs.rules[r], &env, base, 0);
        b.set(base + n, Slot::Ind(rb));
    }
    Ok(b.finish(base))
}

fn check_development(trs: &Trs, t: &Term, sets: &[&OccurrenceSet]) -> Result<()> {
    trs.require_left_linear()?;
    for u in sets {
        u.validate_redexes(trs, t)?;
        if !trs.is_orthogonal() && !non_conflicting(trs, t, u) {
            return Err(Error::Conflicting(u.to_string()));
        }
    }
    Ok(())
}

/// Outermost positions of marked nodes, left to right.
fn outermost_marked(t: &Term, mark: u8) -> Vec<Pos> {
    let mut out: Vec<Pos> = Vec::new();
    for p in marked_positions(t, mark, DEPTH_CAP) {
        // Sorted order puts a position right before its extensions.
        if out.last().is_none_or(|q| !is_prefix(q, &p)) {
            out.push(p);
        }
    }
    out
}

/// Contracts the marked redexes of `t` round by round, outermost first
/// and left to right within a round.
fn record(trs: &Arc<Trs>, marked: Term) -> Result<Reduction> {
    let mut red = Reduction {
        trs: trs.clone(),
        strategy: Strategy::ParallelOutermost,
        terms: vec![marked.strip_marks()],
        steps: Vec::new(),
        cursors: vec![Cursor::default()],
        stop: Stop::Budget,
    };
    let mut cur = marked;
    let mut queue: Vec<Pos> = Vec::new();
    let mut seen: HashMap<(Term, Vec<Pos>), usize> = HashMap::new();
    loop {
        if queue.is_empty() {
            queue = outermost_marked(&cur, MARK_U);
            if queue.is_empty() {
                red.stop = Stop::Exhausted;
                break;
            }
        }
        let i = red.steps.len();
        if i >= DEVELOPMENT_STEPS {
            break;
        }
        let p = queue.remove(0);
        let r = trs
            .redex_rule(&cur, cur.node_at(&p)?)
            .ok_or_else(|| Error::OccurrenceNotARedex(crate::term::fmt_pos(&p)))?;
        cur = trs.rewrite(&cur, &p, r)?;
        red.steps.push((p, r));
        red.terms.push(cur.strip_marks());
        red.cursors.push(Cursor::default());
        if let Some(&start) = seen.get(&(cur.clone(), queue.clone())) {
            red.stop = Stop::Cycle { start, period: i + 1 - start };
            break;
        }
        seen.insert((cur.clone(), queue.clone()), i + 1);
    }
    Ok(red)
}

fn collapse_outcome(limit: &Term, depth: usize) -> LimitOutcome {
    let volatile: Vec<Volatile> = marked_positions(limit, MARK_COLLAPSE, depth)
        .into_iter()
        .map(|position| Volatile { position, verdict: Verdict::Certified, outermost: true })
        .collect();
    LimitOutcome {
        mode: Mode::StrongP,
        limit: Some(limit.strip_marks()),
        certificate: Certificate::ExactRational,
        destructive: volatile.iter().any(|v| v.position.is_empty()),
        volatile,
    }
}

/// The complete development of `u` in `t`: the recorded reduction and its
/// strong limit, which is exact because all of `u` is contracted at once.
pub fn complete_development(
    trs: &Arc<Trs>,
    t: &Term,
    u: &OccurrenceSet,
    depth: usize,
) -> Result<(Reduction, LimitOutcome)> {
    check_development(trs, t, &[u])?;
    let marked = mark_sets(t, &[(u, MARK_U)])?;
    let limit = develop_marked(trs, &marked, MARK_U)?;
    let red = record(trs, marked)?;
    Ok((red, collapse_outcome(&limit, depth)))
}

/// Develops `u` and `v` separately and then the residuals of the other
/// set, returning both sides and their common fourth corner.
pub fn diamond_join(trs: &Trs, t: &Term, u: &OccurrenceSet, v: &OccurrenceSet) -> Result<(Term, Term, Term)> {
    trs.require_orthogonal()?;
    check_development(trs, t, &[u, v])?;
    let both = mark_sets(t, &[(u, MARK_U), (v, MARK_V)])?;
    let left = develop_marked(trs, &both, MARK_U)?;
    let right = develop_marked(trs, &both, MARK_V)?;
    let join_left = develop_marked(trs, &left, MARK_V)?.strip_marks();
    let join_right = develop_marked(trs, &right, MARK_U)?.strip_marks();
    if join_left != join_right {
        return Err(Error::NotJoinable(join_left.to_string(), join_right.to_string()));
    }
    Ok((left.strip_marks(), right.strip_marks(), join_left))
}

/// Projects `s` over the complete development of the disjoint redexes
/// `u`: every step of `s` becomes the development of its residuals after
/// the remaining part of `u`. Returns the projection and the descendants
/// of `u`.
pub fn strip_project(trs: &Arc<Trs>, s: &Reduction, u: &OccurrenceSet) -> Result<(Reduction, OccurrenceSet)> {
    trs.require_orthogonal()?;
    let origin = s.origin();
    u.validate_redexes(trs, origin)?;
    let ps: Vec<Pos> = u.expand(origin, DEPTH_CAP).into_iter().collect();
    for (i, a) in ps.iter().enumerate() {
        if let Some(b) = ps[i + 1..].iter().find(|b| is_prefix(a, b) || is_prefix(b, a)) {
            return Err(Error::NotDisjoint(crate::term::fmt_pos(a), crate::term::fmt_pos(b)));
        }
    }
    let mut top = mark_sets(origin, &[(u, MARK_U)])?;
    let mut proj = Reduction {
        trs: trs.clone(),
        strategy: Strategy::Script { steps: Vec::new(), repeat: false },
        terms: vec![develop_marked(trs, &top, MARK_U)?.strip_marks()],
        steps: Vec::new(),
        cursors: vec![Cursor::default()],
        stop: if s.is_open() { Stop::Budget } else { Stop::Exhausted },
    };
    let (total, cycle) = match s.cycle() {
        Some((start, period)) => (start + period * PROJECTION_PERIODS, Some((start, period))),
        None => (s.len(), None),
    };
    let mut seen: HashMap<Term, usize> = HashMap::new();
    for i in 0..total {
        let (p, r) = match cycle {
            Some((start, period)) if i >= start => {
                if (i - start) % period == 0 {
                    if let Some(&k) = seen.get(&top) {
                        let here = proj.steps.len();
                        proj.stop = if here > k { Stop::Cycle { start: k, period: here - k } } else { Stop::Exhausted };
                        break;
                    }
                    seen.insert(top.clone(), proj.steps.len());
                }
                s.steps[start + (i - start) % period].clone()
            }
            _ => s.steps[i].clone(),
        };
        let tagged = mark_position(&top, &p, MARK_V)?;
        let mut bottom = develop_marked(trs, &tagged, MARK_U)?;
        // Residuals of one redex are disjoint, so contracting them left to
        // right leaves the remaining positions valid.
        for q in marked_positions(&bottom, MARK_V, DEPTH_CAP) {
            let rule = trs
                .redex_rule(&bottom, bottom.node_at(&q)?)
                .ok_or_else(|| Error::OccurrenceNotARedex(crate::term::fmt_pos(&q)))?;
            bottom = trs.rewrite(&bottom, &q, rule)?;
            proj.steps.push((q, rule));
            proj.terms.push(bottom.strip_marks());
            proj.cursors.push(Cursor::default());
        }
        if bottom.has_marks(MARK_V) {
            return Err(Error::InvalidArgument(format!("step {i} has infinitely many residuals")));
        }
        top = trs.rewrite(&top, &p, r)?;
    }
    Ok((proj, descendants(u, s)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::develop::matching_term;
    use crate::reduction::{analyze, run};
    use crate::term::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn sys(s: &str) -> Arc<Trs> {
        Arc::new(Trs::from_rules(s).unwrap())
    }

    fn set(ps: &[&[usize]]) -> OccurrenceSet {
        OccurrenceSet::from_positions(ps.iter().map(|p| p.to_vec()))
    }

    #[test]
    fn finite_development() {
        let trs = sys("a -> c; b -> d");
        let (red, out) = complete_development(&trs, &t("f(a, b)"), &set(&[&[0], &[1]]), 4).unwrap();
        assert_eq!(red.last(), &t("f(c, d)"));
        assert_eq!(red.stop, Stop::Exhausted);
        assert_eq!(out.limit, Some(t("f(c, d)")));
        assert!(out.volatile.is_empty());
    }

    #[test]
    fn infinite_developments() {
        let trs = sys("f(x) -> x; g(x) -> x");
        let host = t("mu x. g(f(x))");
        let fs = OccurrenceSet::symbol(&host, "f");
        let (_, out) = complete_development(&trs, &host, &fs, 6).unwrap();
        assert_eq!(out.limit, Some(t("mu y. g(y)")));
        assert!(!out.destructive);
        assert_eq!(out.limit.as_ref(), Some(&matching_term(&trs, &host, &fs).unwrap()));

        let gs = OccurrenceSet::symbol(&host, "g");
        let (a, b, c) = diamond_join(&trs, &host, &fs, &gs).unwrap();
        assert_eq!((a, b, c), (t("mu y. g(y)"), t("mu y. f(y)"), Term::bot()));
    }

    #[test]
    fn collapsing_tower_develops_to_bottom() {
        let trs = sys("f(x) -> x");
        let host = t("mu x. f(x)");
        let (red, out) = complete_development(&trs, &host, &OccurrenceSet::symbol(&host, "f"), 6).unwrap();
        assert_eq!(out.limit, Some(Term::bot()));
        assert!(out.destructive);
        assert!(analyze(&red, 6).is_destructive());
    }

    #[test]
    fn diamonds() {
        let trs = sys("a -> c; b -> d");
        let host = t("f(a, b)");
        let got = diamond_join(&trs, &host, &set(&[&[0]]), &set(&[&[1]])).unwrap();
        assert_eq!(got, (t("f(c, b)"), t("f(a, d)"), t("f(c, d)")));
        let same = diamond_join(&trs, &host, &set(&[&[0]]), &set(&[&[0]])).unwrap();
        assert_eq!(same, (t("f(c, b)"), t("f(c, b)"), t("f(c, b)")));
    }

    #[test]
    fn projections() {
        let trs = sys("a -> c; b -> d");
        let s = Reduction::from_steps(trs.clone(), t("f(a, b)"), &[(vec![0], 0)]).unwrap();
        let (p, rest) = strip_project(&trs, &s, &set(&[&[1]])).unwrap();
        assert_eq!(p.steps, vec![(vec![0], 0)]);
        assert_eq!(p.last(), &t("f(c, d)"));
        assert_eq!(rest, set(&[&[1]]));

        let (p, rest) = strip_project(&trs, &s, &set(&[&[0]])).unwrap();
        assert!(p.steps.is_empty());
        assert!(rest.is_empty());

        assert!(matches!(
            strip_project(&trs, &s, &set(&[&[], &[0]])),
            Err(Error::NotDisjoint(..)) | Err(Error::OccurrenceNotARedex(_))
        ));
    }

    #[test]
    fn projection_of_destructive_run() {
        let trs = sys("f(x) -> x");
        let host = t("mu x. f(x)");
        let s = run(&trs, &host, &Strategy::Outermost, 10).unwrap();
        let (p, _) = strip_project(&trs, &s, &set(&[&[0]])).unwrap();
        assert!(p.is_open());
        assert!(analyze(&p, 6).is_destructive());
    }
}
