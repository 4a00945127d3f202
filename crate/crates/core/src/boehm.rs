//! Root-activeness, fragility and Böhm trees.
//!
//! Root-activeness is only semi-decidable, so every verdict carries the
//! evidence it rests on. A `yes` comes from a reachable cycle of states
//! with a root step on it, from a rule whose contractum is always a redex
//! again, or from a run whose root is certified volatile. A `no` comes
//! from a reduct whose root symbol can never change.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::Result;
use crate::reduction::{analyze, run, Certificate, Cursor, Mode, Reduction, Stop, Strategy, DEFAULT_DEPTH};
use crate::term::canon::{Builder, Slot};
use crate::term::{fmt_pos, is_prefix, truncate, Depth, Label, Pos, Term};
use crate::trs::Trs;

pub const DEFAULT_FUEL: usize = 2000;
/// Non-root steps explored per state are limited to this depth.
const STEP_DEPTH: usize = 6;
/// Length of the outermost run used to look for destructive reductions.
const RUN_BUDGET: usize = 200;
/// Fuel spent per candidate when searching for a witness.
const WITNESS_FUEL: usize = 200;
/// Further ω-stages tried before a cross-check gives up.
const MAX_STAGES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "yes",
            Answer::No => "no",
            Answer::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RaCertificate {
    /// `steps` lead from the term into a cycle of `period` steps, one of
    /// which is at the root.
    StateGraph {
        states: usize,
        steps: Vec<(Pos, usize)>,
        period: usize,
    },
    /// Each rule's contractum is matched by the next rule's left-hand side.
    RootLoop {
        rules: Vec<String>,
    },
    /// A reduct whose root symbol is fixed.
    RootStable {
        reduct: Term,
    },
    /// A run of this many steps whose root is certified volatile.
    DestructiveRun {
        steps: usize,
    },
    /// A partial term without a root-active term to stand in for `_|_`.
    NoWitness,
    FuelExhausted {
        states: usize,
    },
}

impl RaCertificate {
    pub fn name(&self) -> &'static str {
        match self {
            RaCertificate::StateGraph { .. } => "finite-state-graph",
            RaCertificate::RootLoop { .. } => "root-loop",
            RaCertificate::RootStable { .. } => "root-stable",
            RaCertificate::DestructiveRun { .. } => "destructive-run",
            RaCertificate::NoWitness => "no-witness",
            RaCertificate::FuelExhausted { .. } => "fuel-exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RaVerdict {
    pub answer: Answer,
    pub certificate: RaCertificate,
    /// States explored, or steps run, to reach the verdict.
    pub fuel_used: usize,
}

impl RaVerdict {
    fn new(answer: Answer, certificate: RaCertificate, fuel_used: usize) -> RaVerdict {
        RaVerdict { answer, certificate, fuel_used }
    }

    /// The root-stable reduct behind a `no`.
    pub fn reduct(&self) -> Option<&Term> {
        match &self.certificate {
            RaCertificate::RootStable { reduct } => Some(reduct),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "verdict": self.answer.to_string(),
            "certificate": self.certificate.name(),
            "fuel_used": self.fuel_used,
        });
        match &self.certificate {
            RaCertificate::StateGraph { states, steps, period } => {
                v["states"] = json!(states);
                v["steps"] = json!(steps.iter().map(|(p, _)| fmt_pos(p)).collect::<Vec<_>>());
                v["period"] = json!(period);
            }
            RaCertificate::RootLoop { rules } => v["rules"] = json!(rules),
            RaCertificate::RootStable { reduct } => v["reduct"] = json!(reduct.to_string()),
            RaCertificate::DestructiveRun { steps } => v["steps"] = json!(steps),
            RaCertificate::NoWitness | RaCertificate::FuelExhausted { .. } => {}
        }
        v
    }
}

/// Whether the root symbol of `t` is fixed under reduction: for every rule
/// headed by it, some pattern symbol disagrees with a subterm whose own
/// root is fixed. Computed as a greatest fixed point, so shared cycles of
/// such subterms count as stable.
pub fn is_root_stable(trs: &Trs, t: &Term) -> bool {
    let n = t.node_count();
    let mut stable: Vec<bool> = (0..n).map(|m| !matches!(t.label(m), Label::Var(_))).collect();
    loop {
        let mut changed = false;
        for m in 0..n {
            if stable[m] && !blocked_at(trs, t, m, &stable) {
                stable[m] = false;
                changed = true;
            }
        }
        if !changed {
            return stable[0];
        }
    }
}

fn blocked_at(trs: &Trs, t: &Term, m: usize, stable: &[bool]) -> bool {
    if t.label(m).is_bot() {
        return true;
    }
    trs.rules.iter().all(|r| blocked(&r.lhs, 0, t, m, stable))
}

/// Whether the pattern at `l` can never match at `m`, given that `m`'s own
/// root is left alone.
fn blocked(lhs: &Term, l: usize, t: &Term, m: usize, stable: &[bool]) -> bool {
    if matches!(lhs.label(l), Label::Var(_)) {
        return false;
    }
    if lhs.label(l) != t.label(m) || lhs.kids(l).len() != t.kids(m).len() {
        return true;
    }
    lhs.kids(l).iter().zip(t.kids(m)).any(|(&lk, &tk)| stable[tk] && blocked(lhs, lk, t, tk, stable))
}

/// The explored part of the reduction graph of a term. Root redexes are
/// only ever contracted at the root: for orthogonal systems that decides
/// root-activeness just as well and keeps the graph small.
struct Exploration {
    states: Vec<Term>,
    edges: Vec<Vec<(usize, Pos, usize)>>,
    parent: Vec<Option<(usize, Pos, usize)>>,
    /// A root-stable state, if one was reached.
    stable: Option<usize>,
    complete: bool,
}

impl Exploration {
    fn new(trs: &Trs, t: &Term, fuel: usize) -> Exploration {
        let mut ex = Exploration {
            states: vec![t.clone()],
            edges: vec![Vec::new()],
            parent: vec![None],
            stable: None,
            complete: false,
        };
        let mut index: HashMap<Term, usize> = HashMap::from([(t.clone(), 0)]);
        let mut q = VecDeque::from([0usize]);
        let mut checkpoint = 16;
        while let Some(s) = q.pop_front() {
            let cur = ex.states[s].clone();
            if is_root_stable(trs, &cur) {
                ex.stable = Some(s);
                return ex;
            }
            let moves = match trs.redex_rule(&cur, 0) {
                Some(r) => vec![(Vec::new(), r)],
                None => trs.redexes(&cur, STEP_DEPTH),
            };
            for (p, r) in moves {
                let Ok(next) = trs.rewrite(&cur, &p, r) else { continue };
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        if ex.states.len() >= fuel {
                            return ex;
                        }
                        let id = ex.states.len();
                        index.insert(next.clone(), id);
                        ex.states.push(next);
                        ex.edges.push(Vec::new());
                        ex.parent.push(Some((s, p.clone(), r)));
                        q.push_back(id);
                        id
                    }
                };
                ex.edges[s].push((id, p, r));
            }
            if ex.states.len() >= checkpoint {
                checkpoint *= 2;
                if ex.root_cycle().is_some() {
                    return ex;
                }
            }
        }
        ex.complete = true;
        ex
    }

    /// A path from the start into a cycle through a root step, as the
    /// steps of the path followed by the steps of the cycle.
    fn root_cycle(&self) -> Option<(Vec<(Pos, usize)>, usize)> {
        let comp = self.components();
        let (u, v, r) = self.edges.iter().enumerate().find_map(|(u, es)| {
            es.iter().find(|(v, p, _)| p.is_empty() && comp[u] == comp[*v]).map(|(v, _, r)| (u, *v, *r))
        })?;
        let mut steps = self.path_to(u);
        let lead = steps.len();
        steps.push((Vec::new(), r));
        // Back from v to u inside the component.
        let mut prev: HashMap<usize, (usize, Pos, usize)> = HashMap::new();
        let mut q = VecDeque::from([v]);
        let mut seen = vec![false; self.states.len()];
        seen[v] = true;
        while let Some(x) = q.pop_front() {
            if x == u {
                break;
            }
            for (y, p, r) in &self.edges[x] {
                if !seen[*y] && comp[*y] == comp[u] {
                    seen[*y] = true;
                    prev.insert(*y, (x, p.clone(), *r));
                    q.push_back(*y);
                }
            }
        }
        let mut back = Vec::new();
        let mut x = u;
        while x != v {
            let (y, p, r) = prev[&x].clone();
            back.push((p, r));
            x = y;
        }
        back.reverse();
        steps.extend(back);
        let period = steps.len() - lead;
        Some((steps, period))
    }

    fn path_to(&self, mut s: usize) -> Vec<(Pos, usize)> {
        let mut out = Vec::new();
        while let Some((p, pos, r)) = &self.parent[s] {
            out.push((pos.clone(), *r));
            s = *p;
        }
        out.reverse();
        out
    }

    /// Strongly connected components (Kosaraju), as a component id per state.
    fn components(&self) -> Vec<usize> {
        let n = self.states.len();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![(s, 0usize)];
            while let Some((x, i)) = stack.pop() {
                if i < self.edges[x].len() {
                    stack.push((x, i + 1));
                    let y = self.edges[x][i].0;
                    if !seen[y] {
                        seen[y] = true;
                        stack.push((y, 0));
                    }
                } else {
                    order.push(x);
                }
            }
        }
        let mut rev = vec![Vec::new(); n];
        for (x, es) in self.edges.iter().enumerate() {
            for (y, _, _) in es {
                rev[*y].push(x);
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut c = 0;
        for &s in order.iter().rev() {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = c;
            while let Some(x) = stack.pop() {
                for &y in &rev[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = c;
                        stack.push(y);
                    }
                }
            }
            c += 1;
        }
        comp
    }
}

/// Follows root contractions while each contractum is matched by some
/// left-hand side for every substitution.
fn root_loop(trs: &Trs, t: &Term) -> Option<Vec<String>> {
    let mut r = trs.redex_rule(t, 0)?;
    let mut chain = vec![r];
    loop {
        r = trs.rhs_rematch(r)?;
        if chain.contains(&r) {
            return Some(chain.iter().map(|&i| trs.rules[i].name.clone()).collect());
        }
        chain.push(r);
    }
}

pub fn root_active(trs: &Trs, t: &Term, fuel: usize) -> Result<RaVerdict> {
    trs.require_orthogonal()?;
    if let Some(rules) = root_loop(trs, t) {
        return Ok(RaVerdict::new(Answer::Yes, RaCertificate::RootLoop { rules }, 0));
    }
    let ex = Exploration::new(trs, t, fuel);
    let used = ex.states.len();
    if let Some(s) = ex.stable {
        return Ok(RaVerdict::new(Answer::No, RaCertificate::RootStable { reduct: ex.states[s].clone() }, used));
    }
    if let Some((steps, period)) = ex.root_cycle() {
        return Ok(RaVerdict::new(Answer::Yes, RaCertificate::StateGraph { states: used, steps, period }, used));
    }
    Ok(RaVerdict::new(Answer::Unknown, RaCertificate::FuelExhausted { states: used }, used))
}

/// Searches for a reduction whose root is certified volatile: first an
/// outermost run, then a cycle through a root step in the reduction graph
/// replayed as a recorded run. Both are judged by the limit analysis.
pub fn fragile(trs: &Arc<Trs>, t: &Term, fuel: usize) -> Result<RaVerdict> {
    trs.require_orthogonal()?;
    let red = run(trs, t, &Strategy::Outermost, RUN_BUDGET.min(fuel))?;
    let used = red.len();
    if analyze(&red, DEFAULT_DEPTH).is_destructive() {
        return Ok(RaVerdict::new(Answer::Yes, RaCertificate::DestructiveRun { steps: used }, used));
    }
    if is_root_stable(trs, red.last()) {
        return Ok(RaVerdict::new(Answer::No, RaCertificate::RootStable { reduct: red.last().clone() }, used));
    }
    let ex = Exploration::new(trs, t, fuel);
    let used = used + ex.states.len();
    if let Some(s) = ex.stable {
        return Ok(RaVerdict::new(Answer::No, RaCertificate::RootStable { reduct: ex.states[s].clone() }, used));
    }
    if let Some((steps, period)) = ex.root_cycle() {
        let lasso = lasso_run(trs, t, &steps, period)?;
        if analyze(&lasso, DEFAULT_DEPTH).is_destructive() {
            return Ok(RaVerdict::new(Answer::Yes, RaCertificate::DestructiveRun { steps: steps.len() }, used));
        }
    }
    Ok(RaVerdict::new(Answer::Unknown, RaCertificate::FuelExhausted { states: used }, used))
}

/// The run that follows `steps` and then repeats its last `period` steps.
fn lasso_run(trs: &Arc<Trs>, t: &Term, steps: &[(Pos, usize)], period: usize) -> Result<Reduction> {
    let mut red = Reduction::from_steps(trs.clone(), t.clone(), steps)?;
    red.strategy = Strategy::Script { steps: Vec::new(), repeat: true };
    red.stop = Stop::Cycle { start: steps.len() - period, period };
    Ok(red)
}

/// `root_active`, falling back on `fragile` when it is inconclusive. The
/// two coincide for orthogonal systems, so either certificate counts.
pub fn classify(trs: &Arc<Trs>, t: &Term, fuel: usize) -> Result<RaVerdict> {
    let v = root_active(trs, t, fuel)?;
    if v.answer != Answer::Unknown {
        return Ok(v);
    }
    let f = fragile(trs, t, fuel)?;
    Ok(if f.answer == Answer::Unknown { v } else { f })
}

/// The first certified root-active term among `f^ω` for each symbol `f`
/// and the constants, in signature order.
pub fn find_witness(trs: &Arc<Trs>) -> Option<Term> {
    let mut candidates: Vec<Term> = Vec::new();
    for (f, arity) in trs.sig.symbols() {
        if arity > 0 {
            candidates.push(Term::omega(f, arity));
        }
    }
    for (f, arity) in trs.sig.symbols() {
        if arity == 0 {
            candidates.push(Term::constant(f));
        }
    }
    candidates.into_iter().find(|c| classify(trs, c, WITNESS_FUEL).is_ok_and(|v| v.answer == Answer::Yes))
}

/// Membership in the root-active terms with `_|_` standing for any of
/// them, decided by filling every `_|_` with one witness.
pub fn in_ra_bot(trs: &Arc<Trs>, t: &Term, fuel: usize, witness: Option<&Term>) -> Result<RaVerdict> {
    trs.require_orthogonal()?;
    if t.is_bot() {
        return Ok(RaVerdict::new(Answer::No, RaCertificate::RootStable { reduct: t.clone() }, 0));
    }
    if t.is_total() {
        return classify(trs, t, fuel);
    }
    let w = match witness {
        Some(w) => w.clone(),
        None => match find_witness(trs) {
            Some(w) => w,
            None => return Ok(RaVerdict::new(Answer::Unknown, RaCertificate::NoWitness, 0)),
        },
    };
    classify(trs, &t.fill_bot(&w), fuel)
}

/// One collapse step: the leftmost-outermost certified occurrence
/// becomes `_|_`.
pub fn boehm_step(
    trs: &Arc<Trs>,
    t: &Term,
    fuel: usize,
    witness: Option<&Term>,
) -> Result<Option<(Term, Pos, RaVerdict)>> {
    trs.require_orthogonal()?;
    let witness = match witness {
        Some(w) => Some(w.clone()),
        None if !t.is_total() => find_witness(trs),
        None => None,
    };
    for (p, n) in first_positions(t) {
        if t.label(n).is_bot() {
            continue;
        }
        let v = in_ra_bot(trs, &t.subterm_node(n), fuel, witness.as_ref())?;
        if v.answer == Answer::Yes {
            return Ok(Some((t.replace_at(&p, &Term::bot())?, p, v)));
        }
    }
    Ok(None)
}

/// Each node at its least position in breadth-first order.
fn first_positions(t: &Term) -> Vec<(Pos, usize)> {
    let mut seen = vec![false; t.node_count()];
    seen[0] = true;
    let mut out = Vec::new();
    let mut q = VecDeque::from([(Vec::new(), 0usize)]);
    while let Some((p, m)) = q.pop_front() {
        for (i, &k) in t.kids(m).iter().enumerate() {
            if !seen[k] {
                seen[k] = true;
                let mut pk = p.clone();
                pk.push(i);
                q.push_back((pk, k));
            }
        }
        out.push((p, m));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoehmResult {
    pub tree: Term,
    pub depth: usize,
    /// Where root-activeness stayed undecided; the symbol found there is
    /// kept.
    pub positions_unknown: Vec<Pos>,
    pub fuel_used: usize,
    /// False if the tree was cut off at `depth`.
    pub exact: bool,
    /// The verdict behind each subtree, at its first position.
    pub verdicts: Vec<(Pos, RaVerdict)>,
}

impl BoehmResult {
    pub fn is_certified(&self) -> bool {
        self.positions_unknown.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tree": self.tree.to_string(),
            "depth": self.depth,
            "exact": self.exact,
            "unknown_positions": self.positions_unknown.iter().map(|p| fmt_pos(p)).collect::<Vec<_>>(),
            "fuel_used": self.fuel_used,
            "certificates": self.verdicts.iter().map(|(p, v)| {
                let mut c = v.to_json();
                c["position"] = json!(fmt_pos(p));
                c
            }).collect::<Vec<_>>(),
        })
    }
}

/// The Böhm tree with respect to the root-active terms, to `depth`.
/// Root-active subterms become `_|_`; every other subterm is replaced by a
/// root-stable reduct and its arguments are treated in turn. Repeated
/// subterms share a node, so regular trees come out exact.
pub fn boehm_tree(trs: &Arc<Trs>, t: &Term, depth: usize, fuel: usize, witness: Option<&Term>) -> Result<BoehmResult> {
    trs.require_orthogonal()?;
    let witness = match witness {
        Some(w) => Some(w.clone()),
        None if !t.is_total() => find_witness(trs),
        None => None,
    };
    let start = match &witness {
        Some(w) => t.fill_bot(w),
        None => t.clone(),
    };
    let mut out = BoehmResult {
        tree: Term::bot(),
        depth,
        positions_unknown: Vec::new(),
        fuel_used: 0,
        exact: true,
        verdicts: Vec::new(),
    };
    let mut b = Builder::new();
    let root = b.open();
    let mut memo: HashMap<Term, usize> = HashMap::from([(start.clone(), root)]);
    let mut q = VecDeque::from([(start, root, Vec::new())]);
    while let Some((s, slot, p)) = q.pop_front() {
        let bot = Slot::Node { label: Label::Bot, mark: 0, kids: Vec::new() };
        if s.is_bot() {
            b.set(slot, bot);
            continue;
        }
        if p.len() >= depth {
            out.exact = false;
            b.set(slot, bot);
            continue;
        }
        let v = classify(trs, &s, fuel)?;
        out.fuel_used += v.fuel_used;
        let hnf = match v.answer {
            Answer::Yes => None,
            Answer::No => v.reduct().cloned(),
            Answer::Unknown => Some(s.clone()),
        };
        if v.answer == Answer::Unknown || (witness.is_none() && !s.is_total()) {
            out.positions_unknown.push(p.clone());
        }
        out.verdicts.push((p.clone(), v));
        let Some(h) = hnf else {
            b.set(slot, bot);
            continue;
        };
        let mut kids = Vec::new();
        for (i, &k) in h.kids(0).iter().enumerate() {
            let sub = h.subterm_node(k);
            let id = match memo.get(&sub) {
                Some(&id) => id,
                None => {
                    let id = b.open();
                    memo.insert(sub.clone(), id);
                    let mut pk = p.clone();
                    pk.push(i);
                    q.push_back((sub, id, pk));
                    id
                }
            };
            kids.push(id);
        }
        b.set(slot, Slot::Node { label: h.root_label().clone(), mark: 0, kids });
    }
    out.tree = b.finish(root);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug)]
pub struct CrossCheck {
    pub status: Status,
    /// Strong p-limits of the successive ω-stages.
    pub stages: Vec<Term>,
    pub tree: Term,
    pub detail: String,
}

impl CrossCheck {
    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status.to_string(),
            "stages": self.stages.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "tree": self.tree.to_string(),
            "detail": self.detail,
        })
    }
}

/// Compares the strong p-limit reached with `strategy` against the Böhm
/// tree. A limit that is not a normal form is reduced further by
/// outermost ω-stages until one is.
pub fn check_prs_eq_bohm(
    trs: &Arc<Trs>,
    t: &Term,
    strategy: &Strategy,
    budget: usize,
    depth: usize,
    fuel: usize,
) -> CrossCheck {
    let tree = match boehm_tree(trs, t, depth, fuel, None) {
        Ok(bt) if bt.is_certified() => bt.tree,
        Ok(bt) => {
            return CrossCheck {
                status: Status::Inconclusive,
                stages: Vec::new(),
                tree: bt.tree,
                detail: "undecided root-activeness".into(),
            }
        }
        Err(e) => {
            return CrossCheck {
                status: Status::Inconclusive,
                stages: Vec::new(),
                tree: Term::bot(),
                detail: e.to_string(),
            }
        }
    };
    let mut stages = Vec::new();
    let mut cur = t.clone();
    let mut strat = strategy.clone();
    for _ in 0..=MAX_STAGES {
        let out = match run(trs, &cur, &strat, budget) {
            Ok(red) => analyze(&red, depth).outcome(Mode::StrongP),
            Err(e) => return CrossCheck { status: Status::Inconclusive, stages, tree, detail: e.to_string() },
        };
        let Some(limit) = out.limit.filter(|_| out.certificate != Certificate::BudgetExhausted) else {
            return CrossCheck { status: Status::Inconclusive, stages, tree, detail: "limit not certified".into() };
        };
        stages.push(limit.clone());
        if trs.is_normal_form(&limit) {
            let (a, b) = (truncate(&limit, Depth::Fin(depth)), truncate(&tree, Depth::Fin(depth)));
            return if a == b {
                CrossCheck { status: Status::Pass, stages, tree, detail: String::new() }
            } else {
                CrossCheck { status: Status::Fail, stages, tree, detail: format!("{a} differs from {b}") }
            };
        }
        if limit == cur {
            break;
        }
        cur = limit;
        strat = Strategy::Outermost;
    }
    CrossCheck { status: Status::Inconclusive, stages, tree, detail: "no normal form reached".into() }
}

#[derive(Clone, Debug)]
pub enum Compression {
    /// A single run of length at most ω with the same final term.
    Compressed(Reduction),
    Refused(String),
}

/// Moves the finite steps `then`, performed on the limit of `first`, into
/// `first` itself: each step is done as soon as its pattern is in place
/// and the rest of the run is projected over it.
pub fn compress(trs: &Arc<Trs>, first: &Reduction, then: &[(Pos, usize)], depth: usize) -> Compression {
    let mut cur = first.clone();
    for (k, (p, r)) in then.iter().enumerate() {
        let a = analyze(&cur, depth);
        if a.certificate == Certificate::BudgetExhausted {
            return Compression::Refused(format!("stage before step {k} has no certified limit"));
        }
        let rule = &trs.rules[*r];
        let pattern: Vec<Pos> = rule.pattern.iter().map(|q| p.iter().chain(q).copied().collect()).collect();
        if let Some(q) = pattern.iter().find(|q| !a.is_stable(q)) {
            return Compression::Refused(format!("step {k}: {} keeps changing", fmt_pos(q)));
        }
        let settled = cur.steps.iter().rposition(|(s, _)| pattern.iter().any(|q| is_prefix(s, q))).map_or(0, |i| i + 1);
        let Some(i) = (settled..cur.terms.len())
            .find(|&i| cur.terms[i].node_at(p).is_ok_and(|n| rule.match_node(&cur.terms[i], n).is_some()))
        else {
            return Compression::Refused(format!("step {k}: no finite stage contains the redex at {}", fmt_pos(p)));
        };
        let tail = suffix(&cur, i);
        let u = crate::develop::OccurrenceSet::from_positions([p.clone()]);
        let (proj, _) = match crate::develop::strip_project(trs, &tail, &u) {
            Ok(x) => x,
            Err(e) => return Compression::Refused(format!("step {k}: {e}")),
        };
        let mut next = Reduction {
            trs: trs.clone(),
            strategy: Strategy::Script { steps: Vec::new(), repeat: false },
            terms: cur.terms[..=i].to_vec(),
            steps: cur.steps[..i].to_vec(),
            cursors: vec![Cursor::default(); i + 1],
            stop: Stop::Exhausted,
        };
        next.steps.push((p.clone(), *r));
        next.steps.extend(proj.steps.iter().cloned());
        next.terms.extend(proj.terms.iter().cloned());
        next.cursors.extend(proj.cursors.iter().cloned());
        next.stop = match proj.stop {
            Stop::Cycle { start, period } => Stop::Cycle { start: start + i + 1, period },
            s => s,
        };
        cur = next;
    }
    Compression::Compressed(cur)
}

/// The run from step `i` on.
fn suffix(red: &Reduction, i: usize) -> Reduction {
    Reduction {
        trs: red.trs.clone(),
        strategy: red.strategy.clone(),
        terms: red.terms[i..].to_vec(),
        steps: red.steps[i..].to_vec(),
        cursors: red.cursors[i..].to_vec(),
        stop: match red.stop {
            Stop::Cycle { start, period } if start >= i => Stop::Cycle { start: start - i, period },
            Stop::Cycle { .. } => Stop::Budget,
            s => s,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn sys(s: &str) -> Arc<Trs> {
        Arc::new(Trs::from_rules(s).unwrap())
    }

    fn answer(trs: &Arc<Trs>, s: &str) -> (Answer, Answer) {
        let t = t(s);
        (root_active(trs, &t, DEFAULT_FUEL).unwrap().answer, fragile(trs, &t, DEFAULT_FUEL).unwrap().answer)
    }

    #[test]
    fn verdicts() {
        let collapse = sys("f(x) -> x; g(x) -> x");
        assert_eq!(answer(&collapse, "mu s. f(s)"), (Answer::Yes, Answer::Yes));
        assert_eq!(answer(&collapse, "mu s. g(f(s))"), (Answer::Yes, Answer::Yes));
        let grow = sys("h(x) -> h(g(x)); b -> g(b)");
        let v = root_active(&grow, &t("h(a)"), DEFAULT_FUEL).unwrap();
        assert_eq!(v.certificate.name(), "root-loop");
        assert_eq!(answer(&grow, "h(a)"), (Answer::Yes, Answer::Yes));
        assert_eq!(answer(&grow, "b"), (Answer::No, Answer::No));
        assert_eq!(answer(&sys("a -> f(a)"), "a"), (Answer::No, Answer::No));
        assert_eq!(answer(&collapse, "k(a)"), (Answer::No, Answer::No));
    }

    #[test]
    fn stability() {
        let trs = sys("f(a) -> b; g(x) -> x");
        assert!(is_root_stable(&trs, &t("mu x. f(x)")));
        assert!(is_root_stable(&trs, &t("f(c)")));
        assert!(!is_root_stable(&trs, &t("f(g(a))")));
        assert!(is_root_stable(&trs, &t("_|_")));
    }

    #[test]
    fn partial_membership() {
        let trs = sys("f(x) -> x");
        assert_eq!(find_witness(&trs), Some(t("mu s. f(s)")));
        assert_eq!(in_ra_bot(&trs, &t("f(_|_)"), DEFAULT_FUEL, None).unwrap().answer, Answer::Yes);
        assert_eq!(in_ra_bot(&trs, &t("_|_"), DEFAULT_FUEL, None).unwrap().answer, Answer::No);
        assert_eq!(in_ra_bot(&trs, &t("k(_|_)"), DEFAULT_FUEL, None).unwrap().answer, Answer::No);
        let none = sys("a -> b");
        assert_eq!(in_ra_bot(&none, &t("k(_|_)"), DEFAULT_FUEL, None).unwrap().answer, Answer::Unknown);
    }

    #[test]
    fn collapse_steps() {
        let trs = sys("f(x) -> x; g(x) -> x");
        let (s, p, _) = boehm_step(&trs, &t("mu t. g(f(t))"), DEFAULT_FUEL, None).unwrap().unwrap();
        assert_eq!((s, p), (Term::bot(), vec![]));
        let trs = sys("h(x) -> h(g(x)); b -> g(b)");
        let (s, p, _) = boehm_step(&trs, &t("f(h(a), b)"), DEFAULT_FUEL, None).unwrap().unwrap();
        assert_eq!((s, p), (t("f(_|_, b)"), vec![0]));
        assert!(boehm_step(&trs, &t("f(a, c)"), DEFAULT_FUEL, None).unwrap().is_none());
    }

    #[test]
    fn trees() {
        let trs = sys("f(x) -> x; g(x) -> x");
        let bt = boehm_tree(&trs, &t("mu t. g(f(t))"), 5, DEFAULT_FUEL, None).unwrap();
        assert_eq!(bt.tree, Term::bot());
        assert!(bt.is_certified());

        let trs = sys("h(x) -> h(g(x)); b -> g(b)");
        let bt = boehm_tree(&trs, &t("f(h(a), b)"), 6, DEFAULT_FUEL, None).unwrap();
        assert_eq!(bt.tree, t("f(_|_, mu x. g(x))"));
        assert!(bt.exact && bt.is_certified());

        let trs = sys("h(x) -> g(x); s(g(x)) -> s(h(s(x)))");
        let bt = boehm_tree(&trs, &t("f(s(0), s(h(0)))"), 4, DEFAULT_FUEL, None).unwrap();
        assert_eq!(bt.tree, t("f(s(0), _|_)"));
        assert!(bt.is_certified());
    }

    #[test]
    fn cross_checks() {
        let trs = sys("h(x) -> h(g(x)); b -> g(b)");
        let c = check_prs_eq_bohm(&trs, &t("f(h(a), b)"), &Strategy::Alternating(None), 1000, 6, DEFAULT_FUEL);
        assert_eq!(c.status, Status::Pass, "{}", c.detail);

        let trs = sys("f(x) -> x; g(x) -> x");
        let host = t("mu t. g(f(t))");
        let inner = Strategy::Alternating(Some(vec![vec![0]]));
        let c = check_prs_eq_bohm(&trs, &host, &inner, 1000, 6, DEFAULT_FUEL);
        assert_eq!(c.status, Status::Pass, "{}", c.detail);
        assert_eq!(c.stages, vec![t("g(_|_)"), Term::bot()]);

        let trs = sys("f(x) -> x; a -> g(a)");
        let c = check_prs_eq_bohm(&trs, &t("f(a)"), &inner, 1000, 6, DEFAULT_FUEL);
        assert_eq!(c.status, Status::Pass, "{}", c.detail);
        assert_eq!(c.stages, vec![t("f(mu x. g(x))"), t("mu x. g(x)")]);

        let c = check_prs_eq_bohm(&trs, &t("k(a)"), &Strategy::Outermost, 10, 4, DEFAULT_FUEL);
        assert_eq!(c.status, Status::Pass);
    }

    #[test]
    fn compression() {
        let trs = sys("f(x, y) -> c; a -> g(a)");
        let first = run(&trs, &t("f(a, b)"), &Strategy::Alternating(None), 100).unwrap();
        let Compression::Compressed(red) = compress(&trs, &first, &[(vec![], 0)], 8) else { panic!() };
        assert_eq!(analyze(&red, 8).limit(Mode::StrongP), Some(&t("c")));

        let trs = Arc::new(Trs::from_rules("f(x, x) -> c; a -> g(a); b -> g(b)").unwrap());
        let first = run(&trs, &t("f(a, b)"), &Strategy::Alternating(None), 100).unwrap();
        let limit = analyze(&first, 8).outcome(Mode::StrongP).limit.unwrap();
        assert_eq!(limit, t("f(mu x. g(x), mu y. g(y))"));
        assert_eq!(trs.rewrite(&limit, &[], 0).unwrap(), t("c"));
        assert!(matches!(compress(&trs, &first, &[(vec![], 0)], 8), Compression::Refused(_)));
    }
}
