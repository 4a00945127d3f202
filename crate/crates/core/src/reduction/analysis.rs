//! Tail models for recorded runs.
//!
//! A run is explained, in order of preference, as closed, as a state
//! cycle, as a combination of independent regions, as a pumping loop (a
//! finite schema that reproduces itself after one period), as a shift (a
//! subterm that reappears under a fixed context) or as frozen up to some
//! depth. Each model yields limits in all four modes; runs that fit none
//! get approximations marked as such.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use super::limit::volatile_list;
use super::{Certificate, Cursor, LimitOutcome, Mode, Reduction, Stop, Strategy, Verdict, Volatile};
use crate::term::canon::{Builder, Slot};
use crate::term::{depth_lex, glb, is_prefix, truncate, Depth, Label, Pos, Term};
use crate::trs::{match_term, Probe, Trs};

use super::limit::{fold_rational, SUSPICION_THRESHOLD};

const SCHEMA_CAP: usize = 256;
const MAX_PERIOD: usize = 8;
const SHIFT_START: usize = 64;
const SHIFT_SPAN: usize = 32;
const SHIFT_OFFSET: usize = 8;
const SHIFT_POSITIONS: usize = 512;
const WINDOW: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailKind {
    Closed,
    Cycle,
    Regions,
    Pumping,
    Shift,
    Frozen,
    Unknown,
}

/// The evidence behind an analysis.
#[derive(Clone, Debug)]
pub(crate) enum Model {
    Closed,
    Cycle,
    Regions(Vec<(Pos, Analysis)>),
    Pumping,
    /// Steps `start..end` happen below `prefix`, at the relative positions
    /// `steps`, and move the subterm there down by `offset`.
    Shift {
        start: usize,
        end: usize,
        prefix: Pos,
        offset: Pos,
        steps: Vec<Pos>,
    },
    Frozen(usize),
    /// No step in the observed window was shallower than the frontier.
    Unknown {
        frontier: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub(crate) model: Model,
    /// Indexed by `Mode::index`; `None` means divergence.
    limits: [Option<Term>; 4],
    pub certificate: Certificate,
    volatile: Vec<Volatile>,
    /// Number of recorded steps.
    len: usize,
}

impl Analysis {
    pub fn kind(&self) -> TailKind {
        match self.model {
            Model::Closed => TailKind::Closed,
            Model::Cycle => TailKind::Cycle,
            Model::Regions(_) => TailKind::Regions,
            Model::Pumping => TailKind::Pumping,
            Model::Shift { .. } => TailKind::Shift,
            Model::Frozen(_) => TailKind::Frozen,
            Model::Unknown { .. } => TailKind::Unknown,
        }
    }

    pub fn volatile(&self) -> &[Volatile] {
        &self.volatile
    }

    pub fn limit(&self, mode: Mode) -> Option<&Term> {
        self.limits[mode.index()].as_ref()
    }

    pub fn is_destructive(&self) -> bool {
        self.volatile.iter().any(|v| v.position.is_empty() && v.verdict == Verdict::Certified)
    }

    pub fn outcome(&self, mode: Mode) -> LimitOutcome {
        LimitOutcome {
            mode,
            limit: self.limits[mode.index()].clone(),
            certificate: self.certificate,
            volatile: if mode.is_partial_order() { self.volatile.clone() } else { Vec::new() },
            destructive: self.is_destructive(),
        }
    }

    /// True if no step after the recorded ones can happen at a prefix of
    /// `pos`. Answers `false` where this is not established.
    pub fn is_stable(&self, pos: &[usize]) -> bool {
        let under_volatile = self.volatile.iter().any(|v| is_prefix(&v.position, pos));
        match &self.model {
            Model::Closed => true,
            Model::Cycle | Model::Pumping => !under_volatile,
            Model::Regions(parts) => parts.iter().all(|(r, a)| !is_prefix(r, pos) || a.is_stable(&pos[r.len()..])),
            Model::Shift { start, end, prefix, offset, steps } => {
                if !is_prefix(prefix, pos) {
                    return true;
                }
                let span = end - start;
                let first = (self.len - start) / span;
                // Later periods act deeper; past this many they cannot
                // reach a prefix of `pos`.
                (first..=first + pos.len() + 1).all(|k| {
                    steps.iter().all(|q| {
                        let mut at = prefix.clone();
                        for _ in 0..k {
                            at.extend(offset);
                        }
                        at.extend(q);
                        !is_prefix(&at, pos)
                    })
                })
            }
            Model::Frozen(d) => pos.len() <= *d,
            Model::Unknown { frontier } => pos.len() < *frontier,
        }
    }

    fn uniform(model: Model, t: Term, certificate: Certificate, len: usize) -> Analysis {
        Analysis {
            model,
            limits: [Some(t.clone()), Some(t.clone()), Some(t.clone()), Some(t)],
            certificate,
            volatile: Vec::new(),
            len,
        }
    }
}

pub fn analyze(red: &Reduction, depth: usize) -> Analysis {
    if !red.is_open() {
        return Analysis::uniform(Model::Closed, red.last().clone(), Certificate::ExactRational, red.len());
    }
    if let Some((start, period)) = red.cycle() {
        return cycle(red, start, period);
    }
    if let Strategy::Alternating(Some(regions)) = &red.strategy {
        if let Some(a) = by_regions(red, regions, depth) {
            return a;
        }
    }
    pumping(red).or_else(|| shift(red)).or_else(|| frozen(red, depth)).unwrap_or_else(|| unknown(red))
}

fn cycle(red: &Reduction, start: usize, period: usize) -> Analysis {
    let terms = &red.terms[start..start + period];
    let contexts: Vec<Term> = (start..start + period).map(|i| red.context(i)).collect();
    let weak_m = terms.iter().all(|t| *t == terms[0]).then(|| terms[0].clone());
    let volatile = red.steps[start..start + period].iter().map(|(p, _)| (p.clone(), Verdict::Certified)).collect();
    Analysis {
        model: Model::Cycle,
        limits: [Some(glb(&contexts)), Some(glb(terms)), None, weak_m],
        certificate: Certificate::ExactRational,
        volatile: volatile_list(volatile),
        len: red.len(),
    }
}

/// Splits an alternating run into one outermost run per region.
fn by_regions(red: &Reduction, regions: &[Pos], depth: usize) -> Option<Analysis> {
    for (a, p) in regions.iter().enumerate() {
        if regions[a + 1..].iter().any(|q| is_prefix(p, q) || is_prefix(q, p)) {
            return None;
        }
    }
    let last = red.last();
    let mut parts = Vec::new();
    for r in regions {
        let node = last.node_at(r).ok()?;
        let mut terms = vec![red.terms[0].subterm_at(r).ok()?];
        let mut steps = Vec::new();
        for (i, (p, rule)) in red.steps.iter().enumerate() {
            if is_prefix(r, p) {
                steps.push((p[r.len()..].to_vec(), *rule));
                terms.push(red.terms[i + 1].subterm_at(r).ok()?);
            }
        }
        let stop = if super::outermost_below(&red.trs, last, node).is_none() {
            Stop::NormalForm
        } else {
            first_repeat(&terms).unwrap_or(Stop::Budget)
        };
        if let Stop::Cycle { start, period } = stop {
            terms.truncate(start + period + 1);
            steps.truncate(start + period);
        }
        let n = terms.len();
        let sub = Reduction {
            trs: red.trs.clone(),
            strategy: Strategy::Outermost,
            terms,
            steps,
            cursors: vec![Cursor::default(); n],
            stop,
        };
        parts.push((r.clone(), analyze(&sub, depth)));
    }
    let mut limits: [Option<Term>; 4] = Default::default();
    for mode in Mode::ALL {
        let mut t = Some(last.clone());
        for (r, a) in &parts {
            t = match (t, a.limit(mode)) {
                (Some(t), Some(s)) => t.replace_at(r, s).ok(),
                _ => None,
            };
        }
        limits[mode.index()] = t;
    }
    let certificate = parts.iter().fold(Certificate::ExactRational, |c, (_, a)| c.meet(a.certificate));
    let volatile = parts
        .iter()
        .flat_map(|(r, a)| {
            a.volatile.iter().map(move |v| {
                let mut p = r.clone();
                p.extend(&v.position);
                (p, v.verdict)
            })
        })
        .collect();
    Some(Analysis {
        model: Model::Regions(parts),
        limits,
        certificate,
        volatile: volatile_list(volatile),
        len: red.len(),
    })
}

fn first_repeat(terms: &[Term]) -> Option<Stop> {
    let mut seen = HashMap::new();
    for (i, t) in terms.iter().enumerate() {
        if let Some(&s) = seen.get(t) {
            return Some(Stop::Cycle { start: s, period: i - s });
        }
        seen.insert(t, i);
    }
    None
}

fn schema_var(t: &Term, n: usize) -> Option<usize> {
    match t.label(n) {
        Label::Var(v) => v.strip_prefix('#')?.parse().ok(),
        _ => None,
    }
}

/// A finite top part of a concrete term; unexpanded nodes are variables
/// `#k` standing for the concrete subterm they cover.
struct Schema<'a> {
    base: &'a Term,
    nodes: Vec<Abs>,
}

enum Abs {
    Var(usize),
    Exp(Label, Vec<usize>),
}

impl<'a> Schema<'a> {
    fn new(base: &'a Term) -> Self {
        Schema { base, nodes: vec![Abs::Var(0)] }
    }

    fn expand(&mut self, k: usize) {
        if let Abs::Var(c) = self.nodes[k] {
            let mut kids = Vec::new();
            for &kc in self.base.kids(c) {
                self.nodes.push(Abs::Var(kc));
                kids.push(self.nodes.len() - 1);
            }
            self.nodes[k] = Abs::Exp(self.base.label(c).clone(), kids);
        }
    }

    fn to_term(&self) -> Term {
        let mut b = Builder::new();
        let slots: Vec<usize> = self.nodes.iter().map(|_| b.open()).collect();
        for (k, a) in self.nodes.iter().enumerate() {
            let slot = match a {
                Abs::Var(_) => Slot::Node { label: Label::var(&format!("#{k}")), mark: 0, kids: Vec::new() },
                Abs::Exp(l, kids) => {
                    Slot::Node { label: l.clone(), mark: 0, kids: kids.iter().map(|&c| slots[c]).collect() }
                }
            };
            b.set(slots[k], slot);
        }
        b.finish(slots[0])
    }
}

fn schematic(t: &Term) -> impl Fn(usize, usize) -> bool + '_ {
    move |m, _| schema_var(t, m).is_some()
}

enum Stuck {
    Expand(usize),
    Fail,
}

/// How the strategy picks a step, as far as replaying needs to know.
#[derive(Clone, Copy)]
struct Choice {
    first_rule: bool,
    outermost: bool,
}

/// Replays `steps` on a schematic term, requiring every decision of the
/// strategy to hold whatever the variables stand for.
fn replay(trs: &Trs, p: &Term, steps: &[(Pos, usize)], choice: Choice) -> Result<Vec<Term>, Stuck> {
    let settle = |t: &Term, pr: Probe, want_yes: bool| -> Result<(), Stuck> {
        match pr {
            Probe::Wild(m) => Err(schema_var(t, m).map_or(Stuck::Fail, Stuck::Expand)),
            Probe::Yes if want_yes => Ok(()),
            Probe::No if !want_yes => Ok(()),
            _ => Err(Stuck::Fail),
        }
    };
    let mut cur = p.clone();
    let mut phases = vec![cur.clone()];
    for (pos, r) in steps {
        let mut n = 0;
        for &i in pos {
            if let Some(k) = schema_var(&cur, n) {
                return Err(Stuck::Expand(k));
            }
            n = *cur.kids(n).get(i).ok_or(Stuck::Fail)?;
        }
        if let Some(k) = schema_var(&cur, n) {
            return Err(Stuck::Expand(k));
        }
        settle(&cur, trs.rules[*r].probe(&cur, n, &schematic(&cur)), true)?;
        if choice.first_rule {
            for rule in &trs.rules[..*r] {
                settle(&cur, rule.probe(&cur, n, &schematic(&cur)), false)?;
            }
        }
        if choice.outermost {
            for (q, m) in cur.walk_to_depth(pos.len()) {
                if depth_lex(&q, pos) != std::cmp::Ordering::Less {
                    continue;
                }
                if let Some(k) = schema_var(&cur, m) {
                    return Err(Stuck::Expand(k));
                }
                for rule in &trs.rules {
                    settle(&cur, rule.probe(&cur, m, &schematic(&cur)), false)?;
                }
            }
        }
        cur = trs.rewrite(&cur, pos, *r).map_err(|_| Stuck::Fail)?;
        phases.push(cur.clone());
    }
    Ok(phases)
}

fn pumping(red: &Reduction) -> Option<Analysis> {
    let choice = match &red.strategy {
        Strategy::Outermost => Choice { first_rule: true, outermost: true },
        Strategy::Script { steps, repeat: true } => {
            Choice { first_rule: steps.iter().any(|(_, r)| r.is_none()), outermost: false }
        }
        _ => return None,
    };
    let n = red.len();
    for period in 1..=MAX_PERIOD {
        for back in 0..4 {
            let Some(i) = n.checked_sub(2 * period + back) else { break };
            if red.cursors[i] != red.cursors[i + period]
                || red.steps[i..i + period] != red.steps[i + period..i + 2 * period]
            {
                continue;
            }
            if let Some(a) = pump_at(red, i, period, choice) {
                return Some(a);
            }
        }
    }
    None
}

fn pump_at(red: &Reduction, i: usize, period: usize, choice: Choice) -> Option<Analysis> {
    let ti = &red.terms[i];
    let steps = &red.steps[i..i + period];
    let mut schema = Schema::new(ti);
    let (p, phases) = loop {
        if schema.nodes.len() > SCHEMA_CAP {
            return None;
        }
        let p = schema.to_term();
        match replay(&red.trs, &p, steps, choice) {
            Ok(phases) => break (p, phases),
            Err(Stuck::Expand(k)) => schema.expand(k),
            Err(Stuck::Fail) => return None,
        }
    };
    let sigma = match_term(&p, &phases[period])?;

    // Each variable's image under the limit of the iterated substitution,
    // as one graph; a cycle of pure renamings has no limit.
    let mut b = Builder::new();
    let vars: Vec<(usize, usize)> = schema
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(k, a)| match a {
            Abs::Var(c) => Some((k, *c)),
            Abs::Exp(..) => None,
        })
        .collect();
    let slot: HashMap<usize, usize> = vars.iter().map(|&(k, _)| (k, b.open())).collect();
    let link = |b: &mut Builder, t: &Term| -> usize {
        let base = b.import(t);
        for idx in 0..t.node_count() {
            if let Some(m) = schema_var(t, idx) {
                b.set(base + idx, Slot::Ind(slot[&m]));
            }
        }
        base
    };
    for &(k, c) in &vars {
        let img = &sigma[&Arc::<str>::from(format!("#{k}"))];
        let target = if schema_var(img, 0) == Some(k) { b.import(&ti.subterm_node(c)) } else { link(&mut b, img) };
        b.set(slot[&k], Slot::Ind(target));
    }
    if b.has_ind_cycle() {
        return None;
    }
    let limits: Vec<Term> = phases[..period]
        .iter()
        .map(|ph| {
            let root = link(&mut b, ph);
            b.finish(root)
        })
        .collect();

    let positions: Vec<Pos> = steps.iter().map(|(q, _)| q.clone()).collect();
    let volatile = volatile_list(positions.iter().map(|q| (q.clone(), Verdict::Certified)).collect());
    let mut strong = ti.clone();
    for v in volatile.iter().filter(|v| v.outermost) {
        strong = strong.replace_at(&v.position, &Term::bot()).ok()?;
    }
    let weak_m = limits.iter().all(|t| *t == limits[0]).then(|| limits[0].clone());
    Some(Analysis {
        model: Model::Pumping,
        limits: [Some(strong), Some(glb(&limits)), None, weak_m],
        certificate: Certificate::ExactRational,
        volatile,
        len: red.len(),
    })
}

/// Structural hashes of depth-`SHIFT_OFFSET` truncations, one per node;
/// equal subterms get equal hashes.
fn shallow_hashes(t: &Term) -> Vec<u64> {
    use std::hash::{Hash, Hasher};
    let h = |x: &dyn Fn(&mut std::collections::hash_map::DefaultHasher)| {
        let mut s = std::collections::hash_map::DefaultHasher::new();
        x(&mut s);
        s.finish()
    };
    let mut cur: Vec<u64> = (0..t.node_count()).map(|n| h(&|s| t.label(n).hash(s))).collect();
    for _ in 0..SHIFT_OFFSET {
        cur = (0..t.node_count())
            .map(|n| {
                h(&|s| {
                    t.label(n).hash(s);
                    for &k in t.kids(n) {
                        cur[k].hash(s);
                    }
                })
            })
            .collect();
    }
    cur
}

fn shift(red: &Reduction) -> Option<Analysis> {
    if !matches!(red.strategy, Strategy::Outermost | Strategy::Innermost) {
        return None;
    }
    let n = red.len();
    let mut hashes: HashMap<usize, Vec<u64>> = HashMap::new();
    for i in 0..n.min(SHIFT_START) {
        let step = &red.steps[i].0;
        for plen in (0..=step.len()).rev() {
            let pi = &step[..plen];
            let ti = &red.terms[i];
            let Ok(si) = ti.node_at(pi) else { continue };
            let want = hashes.entry(i).or_insert_with(|| shallow_hashes(ti))[si];
            let s = ti.subterm_node(si);
            for j in i + 1..=n.min(i + SHIFT_SPAN) {
                if !is_prefix(pi, &red.steps[j - 1].0) {
                    break;
                }
                if red.cursors[i] != red.cursors[j] {
                    continue;
                }
                let tj = &red.terms[j];
                let Ok(top) = tj.node_at(pi) else { continue };
                let hj = hashes.entry(j).or_insert_with(|| shallow_hashes(tj)).clone();
                let below = tj.subterm_node(top);
                let found =
                    below.walk_to_depth(SHIFT_OFFSET).into_iter().take(SHIFT_POSITIONS).skip(1).find(|(w, _)| {
                        let abs: Pos = pi.iter().chain(w).copied().collect();
                        tj.node_at(&abs).is_ok_and(|m| hj[m] == want && tj.subterm_node(m) == s)
                    });
                if let Some((w, _)) = found {
                    if let Some(a) = shift_limit(red, i, j, pi, &w) {
                        return Some(a);
                    }
                }
            }
        }
    }
    None
}

fn shift_limit(red: &Reduction, i: usize, j: usize, pi: &[usize], w: &[usize]) -> Option<Analysis> {
    let tj = &red.terms[j];
    let hole: Pos = pi.iter().chain(w).copied().collect();
    let c = tj.replace_at(&hole, &Term::var("#hole")).ok()?;
    let wild = |m: usize, _: usize| matches!(c.label(m), Label::Var(v) if &**v == "#hole");
    for m in 0..c.node_count() {
        if wild(m, 0) {
            continue;
        }
        if red.trs.rules.iter().any(|r| r.probe(&c, m, &wild) != Probe::No) {
            return None;
        }
    }
    let mut b = Builder::new();
    let base = b.import(tj);
    let x = b.open();
    let top = tj.node_at(pi).ok()?;
    let d = b.graft_at(base, tj, top, w, x);
    b.set(x, Slot::Ind(d));
    let root = b.graft(base, tj, pi, x);
    let limit = b.finish(root);
    let steps = red.steps[i..j].iter().map(|(q, _)| q[pi.len()..].to_vec()).collect();
    Some(Analysis::uniform(
        Model::Shift { start: i, end: j, prefix: pi.to_vec(), offset: w.to_vec(), steps },
        limit,
        Certificate::ExactRational,
        red.len(),
    ))
}

/// Largest `d <= depth` such that no redex can ever arise at depth at
/// most `d` of `t`, whatever happens below.
fn frozen_depth(trs: &Trs, t: &Term, depth: usize) -> Option<usize> {
    (0..=depth).rev().find(|&d| frozen_to(trs, t, d))
}

fn frozen_to(trs: &Trs, t: &Term, depth: usize) -> bool {
    // A node reached at several depths is checked at each of them, since
    // deeper occurrences see more of their subterm as unknown.
    let mut seen = HashSet::from([(0usize, 0usize)]);
    let mut q = VecDeque::from([(0usize, 0usize)]);
    while let Some((m, d)) = q.pop_front() {
        let wild = |_: usize, rel: usize| d + rel > depth;
        if trs.rules.iter().any(|r| r.probe(t, m, &wild) != Probe::No) {
            return false;
        }
        if d < depth {
            for &k in t.kids(m) {
                if seen.insert((k, d + 1)) {
                    q.push_back((k, d + 1));
                }
            }
        }
    }
    true
}

fn frozen(red: &Reduction, depth: usize) -> Option<Analysis> {
    let t = red.last();
    let d = frozen_depth(&red.trs, t, depth)?;
    let cuts: Vec<Term> = (0..=d + 1).map(|k| truncate(t, Depth::Fin(k))).collect();
    let limit = fold_rational(&cuts).unwrap_or_else(|| cuts[d + 1].clone());
    Some(Analysis::uniform(Model::Frozen(d), limit, Certificate::DepthCertified(d), red.len()))
}

fn unknown(red: &Reduction) -> Analysis {
    let n = red.len();
    let w = n.min(WINDOW);
    let strong_p =
        if w == 0 { red.last().clone() } else { glb(&(n - w..n).map(|i| red.context(i)).collect::<Vec<_>>()) };
    let weak_p = glb(&red.terms[n - w..=n]);
    let cut = red.steps[n - w..].iter().map(|(p, _)| p.len()).min().unwrap_or(usize::MAX);
    let m = if cut == usize::MAX { red.last().clone() } else { truncate(red.last(), Depth::Fin(cut)) };
    let mut counts: BTreeMap<&Pos, usize> = BTreeMap::new();
    for (p, _) in &red.steps[n - w..] {
        *counts.entry(p).or_default() += 1;
    }
    let volatile = counts
        .into_iter()
        .filter(|&(_, c)| c >= SUSPICION_THRESHOLD)
        .map(|(p, _)| (p.clone(), Verdict::Suspected))
        .collect();
    Analysis {
        model: Model::Unknown { frontier: cut },
        limits: [Some(strong_p), Some(weak_p), Some(m.clone()), Some(m)],
        certificate: Certificate::BudgetExhausted,
        volatile: volatile_list(volatile),
        len: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{run, DEFAULT_BUDGET};
    use crate::term::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn go(rules: &str, start: &str, strategy: &str) -> Analysis {
        let trs = Arc::new(Trs::from_rules(rules).unwrap());
        let r = run(&trs, &t(start), &strategy.parse().unwrap(), DEFAULT_BUDGET).unwrap();
        analyze(&r, 10)
    }

    fn positions(a: &Analysis) -> Vec<(Pos, bool)> {
        a.volatile().iter().map(|v| (v.position.clone(), v.outermost)).collect()
    }

    #[test]
    fn alternating_regions() {
        let a = go("h(x) -> h(g(x)); b -> g(b)", "f(h(a), b)", "alternating");
        assert_eq!(a.kind(), TailKind::Regions);
        assert_eq!(a.certificate, Certificate::ExactRational);
        assert_eq!(a.limit(Mode::StrongP), Some(&t("f(_|_, mu x. g(x))")));
        assert_eq!(a.limit(Mode::WeakM), Some(&t("f(h(mu x. g(x)), mu x. g(x))")));
        assert_eq!(a.limit(Mode::StrongM), None);
        assert_eq!(positions(&a), vec![(vec![0], true)]);
    }

    #[test]
    fn two_step_pumping() {
        let a = go("h(x) -> g(x); s(g(x)) -> s(h(s(x)))", "f(s(0), s(h(0)))", "outermost");
        assert_eq!(a.kind(), TailKind::Pumping);
        assert_eq!(a.limit(Mode::StrongP), Some(&t("f(s(0), _|_)")));
        assert_eq!(positions(&a), vec![(vec![1], true), (vec![1, 0], false)]);
        assert_eq!(a.limit(Mode::WeakM), None);
        assert_eq!(a.limit(Mode::WeakP), Some(&t("f(s(0), s(_|_))")));
    }

    #[test]
    fn swapping_cycle() {
        let a = go("f(x, y) -> f(y, x)", "f(a, f(g(a), g(b)))", "script:1");
        assert_eq!(a.kind(), TailKind::Cycle);
        assert_eq!(a.limit(Mode::StrongP), Some(&t("f(a, _|_)")));
        assert_eq!(a.limit(Mode::WeakP), Some(&t("f(a, f(g(_|_), g(_|_)))")));
        assert_eq!(positions(&a), vec![(vec![1], true)]);
    }

    #[test]
    fn growing_spine_shifts() {
        let a = go("a -> f(a)", "g(a)", "outermost");
        assert_eq!(a.kind(), TailKind::Shift);
        for mode in Mode::ALL {
            assert_eq!(a.limit(mode), Some(&t("g(mu x. f(x))")));
        }
        assert!(a.volatile().is_empty());
    }

    #[test]
    fn growing_context_keeps_weak_metric_limit() {
        let a = go("g(x) -> g(f(x))", "g(a)", "outermost");
        assert_eq!(a.limit(Mode::StrongM), None);
        assert_eq!(a.limit(Mode::WeakM), Some(&t("g(mu x. f(x))")));
        assert_eq!(a.limit(Mode::StrongP), Some(&Term::bot()));
        assert!(a.is_destructive());
    }

    #[test]
    fn collapsing_tower_is_destructive() {
        let a = go("f(x) -> x", "mu x. f(x)", "outermost");
        assert_eq!(a.kind(), TailKind::Cycle);
        assert!(a.is_destructive());
        assert_eq!(a.limit(Mode::StrongP), Some(&Term::bot()));
        assert_eq!(a.limit(Mode::WeakM), Some(&t("mu x. f(x)")));
    }

    #[test]
    fn head_growth_with_static_inner_part() {
        let a = go("h(x) -> h(g(x))", "f(h(g(k(a))))", "outermost");
        assert_eq!(a.limit(Mode::WeakM), Some(&t("f(h(mu x. g(x)))")));
        assert_eq!(a.limit(Mode::StrongP), Some(&t("f(_|_)")));
    }

    #[test]
    fn frozen_prefix_and_non_linear_match() {
        let a = go("f(x, x) -> c; a -> g(a); b -> g(b)", "f(a, b)", "outermost");
        assert_eq!(a.kind(), TailKind::Frozen);
        assert_eq!(a.certificate, Certificate::DepthCertified(10));
        assert_eq!(a.limit(Mode::StrongP), Some(&t("f(mu x. g(x), mu y. g(y))")));
    }

    #[test]
    fn unexplained_runs_are_approximated() {
        let a = go("g(x) -> g(f(x))", "g(a)", "parallel-outermost");
        assert_eq!(a.kind(), TailKind::Unknown);
        assert_eq!(a.certificate, Certificate::BudgetExhausted);
        assert_eq!(a.limit(Mode::StrongP), Some(&Term::bot()));
        let v = a.volatile();
        assert_eq!((v.len(), v[0].verdict), (1, Verdict::Suspected));
        assert!(!a.is_destructive());
    }
}
