//! Graph building and minimization.
//!
//! A `Builder` collects labelled nodes and indirections. `finish` resolves
//! indirections, drops unreachable nodes, merges bisimilar nodes and numbers
//! the result in depth-first preorder, which makes the representation unique.
//! Acyclic parts are hash-consed bottom up; each non-trivial strongly
//! connected component is minimized by partition refinement and then
//! interned through a canonical code of its rooted quotient.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::{Label, Node, Term, MARK_COLLAPSE};

#[derive(Clone, Debug)]
pub(crate) enum Slot {
    Node { label: Label, mark: u8, kids: Vec<usize> },
    Ind(usize),
    Open,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Builder {
    pub(crate) slots: Vec<Slot>,
}

impl Builder {
    pub(crate) fn new() -> Self {
        Builder { slots: Vec::new() }
    }

    pub(crate) fn node(&mut self, label: Label, mark: u8, kids: Vec<usize>) -> usize {
        self.slots.push(Slot::Node { label, mark, kids });
        self.slots.len() - 1
    }

    pub(crate) fn open(&mut self) -> usize {
        self.slots.push(Slot::Open);
        self.slots.len() - 1
    }

    pub(crate) fn set(&mut self, id: usize, slot: Slot) {
        self.slots[id] = slot;
    }

    /// Copies all nodes of `t`; node `i` of `t` becomes slot `base + i`.
    /// Returns `base`, which is also the slot of the root.
    pub(crate) fn import(&mut self, t: &Term) -> usize {
        self.import_map(t, |m| m)
    }

    pub(crate) fn import_map(&mut self, t: &Term, mark: impl Fn(u8) -> u8) -> usize {
        let base = self.slots.len();
        for n in t.nodes.iter() {
            self.slots.push(Slot::Node {
                label: n.label.clone(),
                mark: mark(n.mark),
                kids: n.kids.iter().map(|k| base + k).collect(),
            });
        }
        base
    }

    /// Builds copies of the nodes along `pos` in the imported term `t` (at
    /// `base`) so that the occurrence at `pos` alone is redirected to
    /// `target`. Returns the slot of the new root.
    pub(crate) fn graft(&mut self, base: usize, t: &Term, pos: &[usize], target: usize) -> usize {
        self.graft_at(base, t, 0, pos, target)
    }

    /// As `graft`, with `pos` taken relative to node `start` of `t`; the
    /// result is a fresh copy of `start`.
    pub(crate) fn graft_at(&mut self, base: usize, t: &Term, start: usize, pos: &[usize], target: usize) -> usize {
        if pos.is_empty() {
            return target;
        }
        let mut chain = Vec::with_capacity(pos.len());
        let mut n = start;
        for &i in pos {
            chain.push(n);
            n = t.nodes[n].kids[i];
        }
        let mut below = target;
        for (depth, &orig) in chain.iter().enumerate().rev() {
            let node = &t.nodes[orig];
            let kids =
                node.kids.iter().enumerate().map(|(i, k)| if i == pos[depth] { below } else { base + k }).collect();
            below = self.node(node.label.clone(), node.mark, kids);
        }
        below
    }

    /// True if some chain of indirections loops without reaching a node.
    pub(crate) fn has_ind_cycle(&self) -> bool {
        (0..self.slots.len()).any(|s| matches!(self.chase(s), Chase::Cycle))
    }

    fn chase(&self, start: usize) -> Chase {
        let mut cur = start;
        let mut steps = 0;
        loop {
            match &self.slots[cur] {
                Slot::Ind(next) => {
                    cur = *next;
                    steps += 1;
                    if steps > self.slots.len() {
                        return Chase::Cycle;
                    }
                }
                Slot::Node { .. } => return Chase::Node(cur),
                Slot::Open => return Chase::Open,
            }
        }
    }

    /// Canonical term rooted at slot `root`. Indirection cycles (silent
    /// loops) become bottom nodes tagged with the collapse mark; unset slots
    /// become plain bottom.
    pub(crate) fn finish(&self, root: usize) -> Term {
        let mut resolved: Vec<Option<usize>> = vec![None; self.slots.len()];
        let mut local: Vec<Node> = Vec::new();
        let mut local_of: HashMap<usize, usize> = HashMap::new();
        let mut collapse_bot: Option<usize> = None;
        let mut open_bot: Option<usize> = None;

        let resolve = |s: usize,
                       resolved: &mut Vec<Option<usize>>,
                       local: &mut Vec<Node>,
                       local_of: &mut HashMap<usize, usize>,
                       collapse_bot: &mut Option<usize>,
                       open_bot: &mut Option<usize>,
                       todo: &mut Vec<usize>|
         -> usize {
            if let Some(l) = resolved[s] {
                return l;
            }
            let l = match self.chase(s) {
                Chase::Node(n) => *local_of.entry(n).or_insert_with(|| {
                    local.push(Node { label: Label::Bot, mark: 0, kids: Vec::new() });
                    todo.push(n);
                    local.len() - 1
                }),
                Chase::Cycle => *collapse_bot.get_or_insert_with(|| {
                    local.push(Node { label: Label::Bot, mark: MARK_COLLAPSE, kids: Vec::new() });
                    local.len() - 1
                }),
                Chase::Open => *open_bot.get_or_insert_with(|| {
                    local.push(Node { label: Label::Bot, mark: 0, kids: Vec::new() });
                    local.len() - 1
                }),
            };
            resolved[s] = Some(l);
            l
        };

        let mut todo = Vec::new();
        let root_local =
            resolve(root, &mut resolved, &mut local, &mut local_of, &mut collapse_bot, &mut open_bot, &mut todo);
        while let Some(n) = todo.pop() {
            let (label, mark, kids) = match &self.slots[n] {
                Slot::Node { label, mark, kids } => (label.clone(), *mark, kids.clone()),
                _ => unreachable!("chase returns node slots"),
            };
            let mut lk = Vec::with_capacity(kids.len());
            for k in kids {
                lk.push(resolve(
                    k,
                    &mut resolved,
                    &mut local,
                    &mut local_of,
                    &mut collapse_bot,
                    &mut open_bot,
                    &mut todo,
                ));
            }
            let l = local_of[&n];
            local[l] = Node { label, mark, kids: lk };
        }
        minimize(&local, root_local)
    }
}

enum Chase {
    Node(usize),
    Cycle,
    Open,
}

/// Serialization of a cyclic component for deduplication: labels in DFS
/// order, back references by preorder number, canonical children by id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Tok {
    Lab(Label, u8, usize),
    Canon(usize),
    Back(usize),
}

/// Minimizes an arbitrary rooted graph (all nodes assumed valid) and
/// returns the canonical term.
pub(crate) fn minimize(nodes: &[Node], root: usize) -> Term {
    let sccs = tarjan(nodes);
    let mut cid: Vec<usize> = vec![usize::MAX; nodes.len()];
    let mut canon: Vec<Node> = Vec::new();
    let mut by_key: HashMap<(Label, u8, Vec<usize>), usize> = HashMap::new();
    let mut by_code: HashMap<Vec<Tok>, usize> = HashMap::new();

    for scc in &sccs {
        let trivial = scc.len() == 1 && !nodes[scc[0]].kids.contains(&scc[0]);
        if trivial {
            let n = scc[0];
            let kids: Vec<usize> = nodes[n].kids.iter().map(|&k| cid[k]).collect();
            let key = (nodes[n].label.clone(), nodes[n].mark, kids.clone());
            let id = *by_key.entry(key).or_insert_with(|| {
                canon.push(Node { label: nodes[n].label.clone(), mark: nodes[n].mark, kids });
                canon.len() - 1
            });
            cid[n] = id;
            continue;
        }
        intern_scc(nodes, scc, &mut cid, &mut canon, &mut by_key, &mut by_code);
    }

    // Renumber reachable canonical nodes in preorder.
    let start = cid[root];
    let mut order: Vec<usize> = Vec::new();
    let mut num: HashMap<usize, usize> = HashMap::new();
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        if num.contains_key(&n) {
            continue;
        }
        num.insert(n, order.len());
        order.push(n);
        for &k in canon[n].kids.iter().rev() {
            if !num.contains_key(&k) {
                stack.push(k);
            }
        }
    }
    let out: Vec<Node> = order
        .iter()
        .map(|&n| Node {
            label: canon[n].label.clone(),
            mark: canon[n].mark,
            kids: canon[n].kids.iter().map(|k| num[k]).collect(),
        })
        .collect();
    Term { nodes: Arc::from(out) }
}

/// Interns a cyclic component. Nodes on the cycle may be bisimilar to
/// canonical nodes they reach, so the component is refined together with
/// everything canonical below it. Canonical nodes are pairwise distinct,
/// hence every final block holds at most one of them.
fn intern_scc(
    nodes: &[Node],
    scc: &[usize],
    cid: &mut [usize],
    canon: &mut Vec<Node>,
    by_key: &mut HashMap<(Label, u8, Vec<usize>), usize>,
    by_code: &mut HashMap<Vec<Tok>, usize>,
) {
    let inside: HashMap<usize, usize> = scc.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let s = scc.len();
    // Universe: the component first, then the canonical nodes below it.
    let mut below: Vec<usize> = Vec::new();
    let mut at: HashMap<usize, usize> = HashMap::new();
    let mut stack: Vec<usize> =
        scc.iter().flat_map(|&n| nodes[n].kids.iter()).filter(|k| !inside.contains_key(k)).map(|&k| cid[k]).collect();
    while let Some(c) = stack.pop() {
        if at.contains_key(&c) {
            continue;
        }
        at.insert(c, s + below.len());
        below.push(c);
        stack.extend(canon[c].kids.iter().copied());
    }
    let uni: Vec<(Label, u8, Vec<usize>)> = scc
        .iter()
        .map(|&n| {
            let kids = nodes[n].kids.iter().map(|k| inside.get(k).copied().unwrap_or_else(|| at[&cid[*k]])).collect();
            (nodes[n].label.clone(), nodes[n].mark, kids)
        })
        .chain(
            below
                .iter()
                .map(|&c| (canon[c].label.clone(), canon[c].mark, canon[c].kids.iter().map(|k| at[k]).collect())),
        )
        .collect();

    let mut block: Vec<usize> = {
        let mut ids = BTreeMap::new();
        uni.iter()
            .map(|(l, m, kids)| {
                let len = ids.len();
                *ids.entry((l.clone(), *m, kids.len())).or_insert(len)
            })
            .collect()
    };
    let mut count = block.iter().copied().max().map_or(0, |m| m + 1);
    loop {
        let mut ids = HashMap::new();
        let next: Vec<usize> = uni
            .iter()
            .enumerate()
            .map(|(i, (_, _, kids))| {
                let sig = (block[i], kids.iter().map(|&k| block[k]).collect::<Vec<_>>());
                let len = ids.len();
                *ids.entry(sig).or_insert(len)
            })
            .collect();
        block = next;
        if ids.len() == count {
            break;
        }
        count = ids.len();
    }

    // Blocks holding a canonical node map to it; the rest become new nodes.
    let mut target: Vec<usize> = vec![usize::MAX; count];
    for (j, &c) in below.iter().enumerate() {
        target[block[s + j]] = c;
    }
    // The remaining blocks are strongly connected among themselves, since
    // canonical nodes never lead back into the component. An isomorphic
    // copy may already exist elsewhere.
    let mut fresh: Vec<usize> = Vec::new();
    let mut rep: HashMap<usize, usize> = HashMap::new();
    for i in 0..s {
        if target[block[i]] == usize::MAX && !rep.contains_key(&block[i]) {
            rep.insert(block[i], i);
            fresh.push(block[i]);
        }
    }
    if !fresh.is_empty() {
        let code_of = |b0: usize| -> Vec<Tok> {
            let mut pre: HashMap<usize, usize> = HashMap::from([(b0, 0)]);
            let (l, m, kids) = &uni[rep[&b0]];
            let mut out = vec![Tok::Lab(l.clone(), *m, kids.len())];
            let mut stack = vec![(b0, 0usize)];
            while let Some(top) = stack.last_mut() {
                let (b, i) = *top;
                let kids = &uni[rep[&b]].2;
                if i == kids.len() {
                    stack.pop();
                    continue;
                }
                top.1 += 1;
                let k = block[kids[i]];
                if target[k] != usize::MAX {
                    out.push(Tok::Canon(target[k]));
                } else if let Some(&p) = pre.get(&k) {
                    out.push(Tok::Back(p));
                } else {
                    pre.insert(k, pre.len());
                    let (l, m, kk) = &uni[rep[&k]];
                    out.push(Tok::Lab(l.clone(), *m, kk.len()));
                    stack.push((k, 0));
                }
            }
            out
        };
        let codes: Vec<Vec<Tok>> = fresh.iter().map(|&b| code_of(b)).collect();
        if let Some(&found) = by_code.get(&codes[0]) {
            // Walk both copies in lockstep.
            let mut walk = vec![(fresh[0], found)];
            while let Some((b, c)) = walk.pop() {
                if target[b] != usize::MAX {
                    continue;
                }
                target[b] = c;
                for (i, &k) in uni[rep[&b]].2.iter().enumerate() {
                    walk.push((block[k], canon[c].kids[i]));
                }
            }
        } else {
            for &b in &fresh {
                target[b] = canon.len();
                let (l, m, _) = &uni[rep[&b]];
                canon.push(Node { label: l.clone(), mark: *m, kids: Vec::new() });
            }
            for (&b, code) in fresh.iter().zip(codes) {
                let c = target[b];
                canon[c].kids = uni[rep[&b]].2.iter().map(|&k| target[block[k]]).collect();
                by_key.entry((canon[c].label.clone(), canon[c].mark, canon[c].kids.clone())).or_insert(c);
                by_code.insert(code, c);
            }
        }
    }
    for (i, &n) in scc.iter().enumerate() {
        cid[n] = target[block[i]];
    }
}

/// Strongly connected components in reverse topological order (every
/// component is listed after all components it reaches).
fn tarjan(nodes: &[Node]) -> Vec<Vec<usize>> {
    let n = nodes.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for s in 0..n {
        if index[s] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(s, 0)];
        index[s] = counter;
        low[s] = counter;
        counter += 1;
        stack.push(s);
        on_stack[s] = true;
        while let Some(&mut (v, ref mut ki)) = call.last_mut() {
            if *ki < nodes[v].kids.len() {
                let w = nodes[v].kids[*ki];
                *ki += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}
