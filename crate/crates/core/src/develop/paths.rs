use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use super::{mark_sets, non_conflicting, OccurrenceSet};
use crate::error::{Error, Result};
use crate::term::canon::{Builder, Slot};
use crate::term::{Label, Term, MARK_U};
use crate::trs::Trs;

/// A node of a path: a node of the host graph or a node of the right-hand
/// side instantiated at a contracted redex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathState {
    Host(usize),
    Rhs { rule: usize, node: usize, redex: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transition {
    /// Labelled node with one labelled edge per argument.
    Children(Vec<usize>),
    /// Unlabelled node followed by an unlabelled edge.
    Jump(usize),
    /// Bottom: the path ends without a label.
    End,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TraceItem {
    Sym(Label),
    Edge(usize),
}

impl fmt::Display for TraceItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceItem::Sym(l) => f.write_str(l.name()),
            TraceItem::Edge(i) => write!(f, "{i}"),
        }
    }
}

/// All paths through a host term with a set of redexes to contract, as a
/// finite automaton. State 0 is the start.
#[derive(Clone, Debug)]
pub struct PathAutomaton {
    pub states: Vec<PathState>,
    pub labels: Vec<Option<Label>>,
    pub transitions: Vec<Transition>,
}

pub fn build_paths(trs: &Trs, t: &Term, u: &OccurrenceSet) -> Result<PathAutomaton> {
    if let Some((rule, _)) = trs.check_left_linear() {
        return Err(Error::NotLeftLinear(rule));
    }
    u.validate_redexes(trs, t)?;
    if !non_conflicting(trs, t, u) {
        return Err(Error::Conflicting(u.to_string()));
    }
    let host = mark_sets(t, &[(u, MARK_U)])?;
    let mut index: HashMap<PathState, usize> = HashMap::new();
    let mut auto = PathAutomaton { states: Vec::new(), labels: Vec::new(), transitions: Vec::new() };
    let mut q = VecDeque::new();
    let mut envs: HashMap<usize, (usize, HashMap<Arc<str>, usize>)> = HashMap::new();
    let mut add = |s: PathState, auto: &mut PathAutomaton, q: &mut VecDeque<PathState>| -> usize {
        *index.entry(s).or_insert_with(|| {
            auto.states.push(s);
            auto.labels.push(None);
            auto.transitions.push(Transition::End);
            q.push_back(s);
            auto.states.len() - 1
        })
    };
    add(PathState::Host(0), &mut auto, &mut q);
    let mut at = 0;
    while let Some(s) = q.pop_front() {
        let (label, next) = match s {
            PathState::Host(n) if host.mark(n) & MARK_U != 0 => {
                let r = trs.redex_rule(&host, n).expect("validated redex");
                envs.entry(n).or_insert_with(|| (r, trs.rules[r].match_node(&host, n).expect("matches")));
                (None, Transition::Jump(add(PathState::Rhs { rule: r, node: 0, redex: n }, &mut auto, &mut q)))
            }
            PathState::Host(n) => match host.label(n) {
                Label::Bot => (None, Transition::End),
                l => {
                    let kids = host.kids(n).iter().map(|&k| add(PathState::Host(k), &mut auto, &mut q)).collect();
                    (Some(l.clone()), Transition::Children(kids))
                }
            },
            PathState::Rhs { rule, node, redex } => {
                let rhs = &trs.rules[rule].rhs;
                match rhs.label(node) {
                    Label::Var(x) => {
                        // Left-linearity makes the variable's occurrence,
                        // and so the node it is bound to, unique.
                        let bound = envs[&redex].1[x];
                        (None, Transition::Jump(add(PathState::Host(bound), &mut auto, &mut q)))
                    }
                    l => {
                        let kids = rhs
                            .kids(node)
                            .iter()
                            .map(|&k| add(PathState::Rhs { rule, node: k, redex }, &mut auto, &mut q))
                            .collect();
                        (Some(l.clone()), Transition::Children(kids))
                    }
                }
            }
        };
        auto.labels[at] = label;
        auto.transitions[at] = next;
        at += 1;
    }
    Ok(auto)
}

impl PathAutomaton {
    /// Maximal traces, cut off after `max_items` items; a path that runs
    /// into a cycle of unlabelled nodes ends where its trace ends.
    pub fn traces(&self, max_items: usize) -> Vec<Vec<TraceItem>> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::new(), HashSet::new())];
        while let Some((s, trace, silent)) = stack.pop() {
            if out.len() >= 10_000 {
                break;
            }
            match &self.transitions[s] {
                Transition::End => out.push(trace),
                Transition::Jump(next) => {
                    let mut silent: HashSet<usize> = silent;
                    if !silent.insert(s) {
                        out.push(trace);
                        continue;
                    }
                    stack.push((*next, trace, silent));
                }
                Transition::Children(kids) => {
                    let mut trace = trace;
                    trace.push(TraceItem::Sym(self.labels[s].clone().expect("labelled")));
                    if kids.is_empty() || trace.len() + 1 >= max_items {
                        out.push(trace);
                        continue;
                    }
                    for (i, &k) in kids.iter().enumerate().rev() {
                        let mut tr = trace.clone();
                        tr.push(TraceItem::Edge(i));
                        stack.push((k, tr, HashSet::new()));
                    }
                }
            }
        }
        out
    }

    /// The term whose positions and symbols are given by the traces.
    pub fn matching_term(&self) -> Term {
        let mut b = Builder::new();
        let slots: Vec<usize> = self.states.iter().map(|_| b.open()).collect();
        for (s, tr) in self.transitions.iter().enumerate() {
            let slot = match tr {
                Transition::Children(kids) => Slot::Node {
                    label: self.labels[s].clone().expect("labelled"),
                    mark: 0,
                    kids: kids.iter().map(|&k| slots[k]).collect(),
                },
                Transition::Jump(k) => Slot::Ind(slots[*k]),
                Transition::End => Slot::Node { label: Label::Bot, mark: 0, kids: Vec::new() },
            };
            b.set(slots[s], slot);
        }
        b.finish(slots[0]).strip_marks()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph paths {\n");
        for (s, st) in self.states.iter().enumerate() {
            let name = match st {
                PathState::Host(n) => format!("T{n}"),
                PathState::Rhs { rule, node, redex } => format!("r{rule}.{node}@{redex}"),
            };
            let label = self.labels[s].as_ref().map_or("", |l| l.name());
            out.push_str(&format!("  s{s} [label=\"{name}\\n{label}\"];\n"));
            match &self.transitions[s] {
                Transition::Children(kids) => {
                    for (i, k) in kids.iter().enumerate() {
                        out.push_str(&format!("  s{s} -> s{k} [label=\"{i}\"];\n"));
                    }
                }
                Transition::Jump(k) => out.push_str(&format!("  s{s} -> s{k} [style=dashed];\n")),
                Transition::End => {}
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn matching_term(trs: &Trs, t: &Term, u: &OccurrenceSet) -> Result<Term> {
    Ok(build_paths(trs, t, u)?.matching_term())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn show(tr: &[TraceItem]) -> String {
        tr.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
    }

    fn longest(a: &PathAutomaton) -> String {
        show(&a.traces(64).into_iter().max_by_key(|t| t.len()).unwrap())
    }

    #[test]
    fn traces_through_collapses() {
        let trs = Trs::from_rules("f(x) -> h(x); h(x) -> x").unwrap();
        for host in ["g(f(g(h(_|_))))", "g(f(g(mu x. h(x))))"] {
            let host = t(host);
            let all = OccurrenceSet::all_redexes(&trs, &host);
            let a = build_paths(&trs, &host, &all).unwrap();
            assert_eq!(longest(&a), "g,0,h,0,g,0");
            assert_eq!(a.matching_term(), t("g(h(g(_|_)))"));
        }
    }

    #[test]
    fn empty_set_traces_the_host() {
        let trs = Trs::from_rules("f(x) -> x").unwrap();
        let host = t("g(f(a), mu x. k(x))");
        let a = build_paths(&trs, &host, &OccurrenceSet::empty()).unwrap();
        assert_eq!(a.matching_term(), host);
        assert!(a.to_dot().starts_with("digraph"));
    }

    #[test]
    fn silent_cycles_become_bottom() {
        let trs = Trs::from_rules("f(x) -> x").unwrap();
        let host = t("mu x. f(x)");
        assert_eq!(matching_term(&trs, &host, &OccurrenceSet::symbol(&host, "f")).unwrap(), Term::bot());
        let trs = Trs::from_rules("f(x) -> x; g(x) -> x").unwrap();
        let host = t("mu x. g(f(x))");
        assert_eq!(matching_term(&trs, &host, &OccurrenceSet::symbol(&host, "f")).unwrap(), t("mu y. g(y)"));
    }

    #[test]
    fn non_left_linear_rejected() {
        let trs = Trs::from_rules("f(x, x) -> x").unwrap();
        assert!(matches!(build_paths(&trs, &t("f(a, a)"), &OccurrenceSet::empty()), Err(Error::NotLeftLinear(_))));
    }
}
