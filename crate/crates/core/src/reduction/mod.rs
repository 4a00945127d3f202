//! Strategies, recorded reductions and their limits.

mod analysis;
mod limit;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::term::{fmt_pos, parse_pos, Pos, Term};
use crate::trs::Trs;

pub use analysis::{analyze, Analysis, TailKind};
pub use limit::{
    detect_volatile, fold_rational, is_destructive, strong_m_limit, strong_p_limit, weak_m_limit, weak_p_limit,
    Certificate, LimitOutcome, Mode, Verdict, Volatile, SUSPICION_THRESHOLD,
};

pub const DEFAULT_BUDGET: usize = 1000;
pub const DEFAULT_DEPTH: usize = 10;

/// Outermost rounds of the parallel strategy look no deeper than this.
const ROUND_DEPTH: usize = 24;
const ROUND_WIDTH: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Minimal depth first, leftmost among equals.
    Outermost,
    /// A redex without redexes below it, chosen as for `Outermost`.
    Innermost,
    /// Rounds contracting all outermost redexes left to right.
    ParallelOutermost,
    /// Takes turns among disjoint regions; `None` means the root's
    /// argument positions.
    Alternating(Option<Vec<Pos>>),
    /// Explicit positions with optional rule names.
    Script { steps: Vec<(Pos, Option<String>)>, repeat: bool },
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dotted = |p: &Pos| {
            if p.is_empty() {
                "e".to_string()
            } else {
                p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
            }
        };
        match self {
            Strategy::Outermost => f.write_str("outermost"),
            Strategy::Innermost => f.write_str("innermost"),
            Strategy::ParallelOutermost => f.write_str("parallel-outermost"),
            Strategy::Alternating(None) => f.write_str("alternating"),
            Strategy::Alternating(Some(rs)) => {
                write!(f, "alternating:{}", rs.iter().map(dotted).collect::<Vec<_>>().join(","))
            }
            Strategy::Script { steps, repeat } => {
                let items: Vec<String> = steps
                    .iter()
                    .map(|(p, r)| match r {
                        Some(r) => format!("{}@{r}", dotted(p)),
                        None => dotted(p),
                    })
                    .collect();
                write!(f, "{}:{}", if *repeat { "script" } else { "once" }, items.join(","))
            }
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// `outermost`, `innermost`, `parallel-outermost`, `alternating[:p,q]`,
    /// `script:p[@rule],...` (repeated forever) or `once:...` (run once).
    fn from_str(s: &str) -> Result<Strategy> {
        let bad = || Error::InvalidStrategy(s.to_string());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let positions =
            |a: &str| -> Result<Vec<Pos>> { a.split(',').map(|p| parse_pos(p).map_err(|_| bad())).collect() };
        match (head, arg) {
            ("outermost", None) => Ok(Strategy::Outermost),
            ("innermost", None) => Ok(Strategy::Innermost),
            ("parallel-outermost", None) => Ok(Strategy::ParallelOutermost),
            ("alternating", None) => Ok(Strategy::Alternating(None)),
            ("alternating", Some(a)) => Ok(Strategy::Alternating(Some(positions(a)?))),
            ("script" | "once", Some(a)) => {
                let steps = a
                    .split(',')
                    .map(|item| {
                        let (p, r) = match item.split_once('@') {
                            Some((p, r)) => (p, Some(r.trim().to_string())),
                            None => (item, None),
                        };
                        Ok((parse_pos(p).map_err(|_| bad())?, r))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Strategy::Script { steps, repeat: head == "script" })
            }
            _ => Err(bad()),
        }
    }
}

/// Strategy state carried between steps; part of the recurrence check.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub(crate) struct Cursor {
    queue: Vec<Pos>,
    turn: usize,
    script: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stop {
    NormalForm,
    /// The strategy had no further move although redexes remain.
    Exhausted,
    Budget,
    /// The state at `start + period` repeats the state at `start`.
    Cycle {
        start: usize,
        period: usize,
    },
}

/// One recorded step with its surrounding terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub before: Term,
    pub position: Pos,
    pub rule: usize,
    pub after: Term,
    pub context: Term,
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub trs: Arc<Trs>,
    pub strategy: Strategy,
    /// `terms[i]` is the term before step `i`; one more term than steps.
    pub terms: Vec<Term>,
    pub steps: Vec<(Pos, usize)>,
    pub(crate) cursors: Vec<Cursor>,
    pub stop: Stop,
}

impl Reduction {
    /// A finite reduction given explicitly; it counts as closed.
    pub fn from_steps(trs: Arc<Trs>, origin: Term, steps: &[(Pos, usize)]) -> Result<Reduction> {
        let mut terms = vec![origin];
        for (i, (p, r)) in steps.iter().enumerate() {
            let next = trs.rewrite(&terms[i], p, *r)?;
            terms.push(next);
        }
        let n = terms.len();
        Ok(Reduction {
            trs,
            strategy: Strategy::Script { steps: Vec::new(), repeat: false },
            terms,
            steps: steps.to_vec(),
            cursors: vec![Cursor::default(); n],
            stop: Stop::Exhausted,
        })
    }

    pub fn origin(&self) -> &Term {
        &self.terms[0]
    }

    pub fn last(&self) -> &Term {
        self.terms.last().expect("a reduction has an origin")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Open runs stand for ω-reductions whose tail is not recorded.
    pub fn is_open(&self) -> bool {
        matches!(self.stop, Stop::Budget | Stop::Cycle { .. })
    }

    pub fn cycle(&self) -> Option<(usize, usize)> {
        match self.stop {
            Stop::Cycle { start, period } => Some((start, period)),
            _ => None,
        }
    }

    pub fn context(&self, i: usize) -> Term {
        self.terms[i].replace_at(&self.steps[i].0, &Term::bot()).expect("recorded positions are valid")
    }

    pub fn step(&self, i: usize) -> Step {
        Step {
            before: self.terms[i].clone(),
            position: self.steps[i].0.clone(),
            rule: self.steps[i].1,
            after: self.terms[i + 1].clone(),
            context: self.context(i),
        }
    }

    /// One JSON object per line: index, position, rule and depth.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for (i, (p, r)) in self.steps.iter().enumerate() {
            let rec = serde_json::json!({
                "index": i,
                "position": p,
                "rule": self.trs.rules[*r].name,
                "depth": p.len(),
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }

    /// Human-readable listing of the recorded terms.
    pub fn render_steps(&self) -> String {
        let mut out = format!("{}\n", self.terms[0]);
        for (i, (p, r)) in self.steps.iter().enumerate() {
            out.push_str(&format!("  -> {} [{} {}]\n", self.terms[i + 1], self.trs.rules[*r].name, fmt_pos(p)));
        }
        out
    }
}

/// Runs `strategy` from `t` for at most `budget` steps, stopping early at
/// a normal form, when the strategy has no move, or when a state recurs.
pub fn run(trs: &Arc<Trs>, t: &Term, strategy: &Strategy, budget: usize) -> Result<Reduction> {
    let strategy = match strategy {
        Strategy::Alternating(None) => {
            let arity = t.kids(0).len();
            let regions = if arity == 0 { vec![Vec::new()] } else { (0..arity).map(|i| vec![i]).collect() };
            Strategy::Alternating(Some(regions))
        }
        s => s.clone(),
    };
    let mut red = Reduction {
        trs: trs.clone(),
        strategy: strategy.clone(),
        terms: vec![t.clone()],
        steps: Vec::new(),
        cursors: vec![Cursor::default()],
        stop: Stop::Budget,
    };
    let mut seen: HashMap<(Term, Cursor), usize> = HashMap::new();
    seen.insert((t.clone(), Cursor::default()), 0);
    loop {
        let i = red.steps.len();
        let cur = red.terms[i].clone();
        let cursor = red.cursors[i].clone();
        if trs.is_normal_form(&cur) {
            red.stop = Stop::NormalForm;
            break;
        }
        if i >= budget {
            red.stop = Stop::Budget;
            break;
        }
        let Some((pos, rule, next_cursor)) = choose(trs, &cur, &strategy, &cursor, i)? else {
            red.stop = Stop::Exhausted;
            break;
        };
        let next = trs.rewrite(&cur, &pos, rule)?;
        red.steps.push((pos, rule));
        red.terms.push(next.clone());
        red.cursors.push(next_cursor.clone());
        if let Some(&start) = seen.get(&(next.clone(), next_cursor.clone())) {
            red.stop = Stop::Cycle { start, period: i + 1 - start };
            break;
        }
        seen.insert((next, next_cursor), i + 1);
    }
    Ok(red)
}

/// The (depth, lex)-least redex at or below node `n`, as a relative
/// position. Breadth-first search in child order visits each node first
/// at its least position.
pub(crate) fn outermost_below(trs: &Trs, t: &Term, n: usize) -> Option<(Pos, usize)> {
    let mut seen = vec![false; t.node_count()];
    seen[n] = true;
    let mut q = VecDeque::from([(Vec::new(), n)]);
    while let Some((p, m)) = q.pop_front() {
        if let Some(r) = trs.redex_rule(t, m) {
            return Some((p, r));
        }
        for (i, &k) in t.kids(m).iter().enumerate() {
            if !seen[k] {
                seen[k] = true;
                let mut pk = p.clone();
                pk.push(i);
                q.push_back((pk, k));
            }
        }
    }
    None
}

fn innermost(trs: &Trs, t: &Term) -> Option<(Pos, usize)> {
    let redex = trs.redex_nodes(t);
    let n = t.node_count();
    let mut contains: Vec<bool> = redex.iter().map(Option::is_some).collect();
    loop {
        let mut changed = false;
        for m in 0..n {
            if !contains[m] && t.kids(m).iter().any(|&k| contains[k]) {
                contains[m] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let inner: Vec<bool> = (0..n).map(|m| redex[m].is_some() && !t.kids(m).iter().any(|&k| contains[k])).collect();
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut q = VecDeque::from([(Vec::new(), 0usize)]);
    while let Some((p, m)) = q.pop_front() {
        if inner[m] {
            return Some((p, redex[m].expect("inner nodes are redexes")));
        }
        for (i, &k) in t.kids(m).iter().enumerate() {
            if !seen[k] {
                seen[k] = true;
                let mut pk = p.clone();
                pk.push(i);
                q.push_back((pk, k));
            }
        }
    }
    outermost_below(trs, t, 0)
}

/// Outermost redex positions in left-to-right order, within bounds.
pub(crate) fn outermost_round(trs: &Trs, t: &Term) -> Vec<Pos> {
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), 0usize)];
    let mut visited = 0;
    while let Some((p, m)) = stack.pop() {
        visited += 1;
        if visited > ROUND_WIDTH {
            break;
        }
        if trs.is_redex_node(t, m) {
            out.push(p);
            continue;
        }
        if p.len() >= ROUND_DEPTH {
            continue;
        }
        for (i, &k) in t.kids(m).iter().enumerate().rev() {
            let mut pk = p.clone();
            pk.push(i);
            stack.push((pk, k));
        }
    }
    out
}

fn choose(
    trs: &Trs,
    t: &Term,
    strategy: &Strategy,
    cursor: &Cursor,
    index: usize,
) -> Result<Option<(Pos, usize, Cursor)>> {
    let same = |p: (Pos, usize)| Some((p.0, p.1, cursor.clone()));
    match strategy {
        Strategy::Outermost => Ok(outermost_below(trs, t, 0).and_then(same)),
        Strategy::Innermost => Ok(innermost(trs, t).and_then(same)),
        Strategy::ParallelOutermost => {
            let mut queue = cursor.queue.clone();
            if queue.is_empty() {
                queue = outermost_round(trs, t);
            }
            while !queue.is_empty() {
                let p = queue.remove(0);
                if let Ok(n) = t.node_at(&p) {
                    if let Some(r) = trs.redex_rule(t, n) {
                        return Ok(Some((p, r, Cursor { queue, ..Cursor::default() })));
                    }
                }
            }
            Ok(None)
        }
        Strategy::Alternating(regions) => {
            let regions = regions.as_deref().unwrap_or(&[]);
            let k = regions.len();
            for off in 0..k {
                let turn = (cursor.turn + off) % k;
                let region = &regions[turn];
                let Ok(n) = t.node_at(region) else { continue };
                if let Some((rel, r)) = outermost_below(trs, t, n) {
                    let mut p = region.clone();
                    p.extend(rel);
                    return Ok(Some((p, r, Cursor { turn: (turn + 1) % k, ..Cursor::default() })));
                }
            }
            Ok(None)
        }
        Strategy::Script { steps, repeat } => {
            if steps.is_empty() {
                return Ok(None);
            }
            let mut at = cursor.script;
            if at >= steps.len() {
                if !*repeat {
                    return Ok(None);
                }
                at = 0;
            }
            let (p, rule) = &steps[at];
            let not_redex = || Error::ScriptNotARedex { index, pos: fmt_pos(p) };
            let n = t.node_at(p).map_err(|_| not_redex())?;
            let r = match rule {
                Some(name) => {
                    let r = trs.rule_index(name)?;
                    trs.rules[r].match_node(t, n).ok_or_else(not_redex)?;
                    r
                }
                None => trs.redex_rule(t, n).ok_or_else(not_redex)?,
            };
            let mut next = at + 1;
            if next == steps.len() && *repeat {
                next = 0;
            }
            Ok(Some((p.clone(), r, Cursor { script: next, ..Cursor::default() })))
        }
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

    #[test]
    fn outermost_growth() {
        let r = run(&sys("a -> f(a)"), &t("g(a)"), &Strategy::Outermost, 3).unwrap();
        let expect = ["g(a)", "g(f(a))", "g(f(f(a)))", "g(f(f(f(a))))"];
        assert_eq!(r.terms, expect.iter().map(|s| t(s)).collect::<Vec<_>>());
        assert_eq!(r.stop, Stop::Budget);
        assert_eq!(r.steps.iter().map(|s| s.0.len()).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn script_cycles() {
        let s: Strategy = "script:1".parse().unwrap();
        let r = run(&sys("f(x, y) -> f(y, x)"), &t("f(a, f(g(a), g(b)))"), &s, 4).unwrap();
        assert_eq!(r.cycle(), Some((0, 2)));
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn normal_forms_stop_immediately() {
        let r = run(&sys("a -> b"), &t("c"), &Strategy::Outermost, 10).unwrap();
        assert!(r.is_empty());
        assert_eq!(r.stop, Stop::NormalForm);
    }

    #[test]
    fn script_errors_name_the_step() {
        let s: Strategy = "once:0,1".parse().unwrap();
        let e = run(&sys("a -> b; b -> c"), &t("f(a)"), &s, 10).unwrap_err();
        assert_eq!(e, Error::ScriptNotARedex { index: 1, pos: "<1>".into() });
    }

    #[test]
    fn alternating_takes_turns() {
        let s = Strategy::Alternating(None);
        let r = run(&sys("h(x) -> h(g(x)); b -> g(b)"), &t("f(h(a), b)"), &s, 4).unwrap();
        let pos: Vec<Pos> = r.steps.iter().map(|s| s.0.clone()).collect();
        assert_eq!(pos, vec![vec![0], vec![1], vec![0], vec![1, 0]]);
        assert_eq!(r.terms[4], t("f(h(g(g(a))), g(g(b)))"));
    }

    #[test]
    fn innermost_and_parallel() {
        let trs = sys("f(x) -> g(x); a -> b");
        let r = run(&trs, &t("f(a)"), &Strategy::Innermost, 10).unwrap();
        assert_eq!(r.steps[0].0, vec![0]);
        let r = run(&trs, &t("h(f(a), a)"), &Strategy::ParallelOutermost, 10).unwrap();
        let pos: Vec<Pos> = r.steps.iter().map(|s| s.0.clone()).collect();
        assert_eq!(pos, vec![vec![0], vec![1], vec![0, 0]]);
        assert_eq!(r.last(), &t("h(g(b), b)"));
    }

    #[test]
    fn strategy_syntax_round_trips() {
        for s in [
            "outermost",
            "innermost",
            "parallel-outermost",
            "alternating",
            "alternating:0,1.0",
            "script:1,e@r1",
            "once:0",
        ] {
            let parsed: Strategy = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert!("sideways".parse::<Strategy>().is_err());
    }

    #[test]
    fn contexts_lie_below_both_ends() {
        let r = run(&sys("f(x, y) -> f(y, x)"), &t("f(a, f(g(a), g(b)))"), &"script:1".parse().unwrap(), 4).unwrap();
        for i in 0..r.len() {
            let s = r.step(i);
            let m = crate::term::glb(&[s.before.clone(), s.after.clone()]);
            assert!(crate::term::leq_bot(&s.context, &m));
        }
    }
}
