use std::collections::{HashMap, HashSet};

use super::{Label, Term};

/// Renders in μ-notation. Binders are introduced at the targets of back
/// edges of a depth-first walk and named lazily, so the output is fixed by
/// the canonical graph alone.
pub(crate) fn render(t: &Term) -> String {
    let taken: HashSet<String> = t
        .nodes
        .iter()
        .filter_map(|n| match &n.label {
            Label::Var(v) | Label::Sym(v) => Some(v.to_string()),
            Label::Bot => None,
        })
        .collect();
    let mut r = Renderer { t, taken, names: HashMap::new(), on_stack: Vec::new() };
    r.go(0)
}

struct Renderer<'a> {
    t: &'a Term,
    taken: HashSet<String>,
    names: HashMap<usize, String>,
    on_stack: Vec<usize>,
}

impl Renderer<'_> {
    fn fresh(&self) -> String {
        let in_use: HashSet<&String> = self.on_stack.iter().filter_map(|n| self.names.get(n)).collect();
        for k in 0.. {
            for base in ["x", "y", "z"] {
                let cand = if k == 0 { base.to_string() } else { format!("{base}{k}") };
                if !self.taken.contains(&cand) && !in_use.contains(&cand) {
                    return cand;
                }
            }
        }
        unreachable!()
    }

    fn go(&mut self, n: usize) -> String {
        if self.on_stack.contains(&n) {
            if let Some(name) = self.names.get(&n) {
                return name.clone();
            }
            let name = self.fresh();
            self.names.insert(n, name.clone());
            return name;
        }
        let node = &self.t.nodes[n];
        self.on_stack.push(n);
        let mut s = node.label.name().to_string();
        if !node.kids.is_empty() {
            let kids: Vec<String> = node.kids.clone().into_iter().map(|k| self.go(k)).collect();
            s.push('(');
            s.push_str(&kids.join(", "));
            s.push(')');
        }
        self.on_stack.pop();
        match self.names.remove(&n) {
            Some(name) => format!("mu {name}. {s}"),
            None => s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_term;

    fn round(s: &str) -> String {
        parse_term(s).unwrap().to_string()
    }

    #[test]
    fn renders_cycles_with_binders() {
        assert_eq!(round("f(_|_, let t = g(t) in t)"), "f(_|_, mu x. g(x))");
        assert_eq!(round("mu z. f(z)"), "mu x. f(x)");
        assert_eq!(round("mu s. f(s, mu u. g(s, u))"), "mu x. f(x, mu y. g(x, y))");
        assert_eq!(round("f(x, mu q. g(q))"), "f(x, mu y. g(y))");
        assert_eq!(round("⊥"), "_|_");
    }

    #[test]
    fn shared_cycles_are_rendered_per_occurrence() {
        assert_eq!(round("f(mu u. g(u), mu v. g(v))"), "f(mu x. g(x), mu x. g(x))");
    }
}
