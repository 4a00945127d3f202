//! Rewrite rules, matching, single steps and syntactic checks.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::term::canon::{Builder, Slot};
use crate::term::{fmt_pos, Ast, Label, Lexer, Parser, Pos, Signature, Term, Tok};

pub type Subst = HashMap<Arc<str>, Term>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub lhs: Term,
    pub rhs: Term,
    pub collapsing: bool,
    /// Positions of function symbols in the left-hand side.
    pub pattern: Vec<Pos>,
    /// Variable occurrences of the left-hand side.
    pub lhs_vars: BTreeMap<Arc<str>, Vec<Pos>>,
}

impl Rule {
    pub fn new(name: &str, lhs: Term, rhs: Term) -> Result<Rule> {
        let bad = |msg: &str| Err(Error::InvalidRule { rule: name.to_string(), msg: msg.into() });
        if !lhs.is_finite() {
            return bad("left-hand side must be finite");
        }
        if matches!(lhs.root_label(), Label::Var(_) | Label::Bot) {
            return bad("left-hand side must start with a function symbol");
        }
        if !lhs.is_total() || !rhs.is_total() {
            return bad("rules may not mention bottom");
        }
        let lv = lhs.vars();
        if let Some(v) = rhs.vars().iter().find(|v| !lv.contains(*v)) {
            return bad(&format!("variable `{v}` does not occur on the left"));
        }
        let mut pattern = Vec::new();
        let mut lhs_vars: BTreeMap<Arc<str>, Vec<Pos>> = BTreeMap::new();
        let mut stack = vec![(Vec::new(), 0usize)];
        while let Some((p, n)) = stack.pop() {
            match lhs.label(n) {
                Label::Var(v) => lhs_vars.entry(v.clone()).or_default().push(p.clone()),
                _ => pattern.push(p.clone()),
            }
            for (i, &k) in lhs.kids(n).iter().enumerate() {
                let mut q = p.clone();
                q.push(i);
                stack.push((q, k));
            }
        }
        pattern.sort();
        for v in lhs_vars.values_mut() {
            v.sort();
        }
        let collapsing = matches!(rhs.root_label(), Label::Var(_));
        Ok(Rule { name: name.to_string(), lhs, rhs, collapsing, pattern, lhs_vars })
    }

    pub fn is_left_linear(&self) -> bool {
        self.lhs_vars.values().all(|ps| ps.len() == 1)
    }

    /// Matches the left-hand side at node `n` of `t`, returning the node
    /// bound to each variable. Repeated variables must bind the same node,
    /// which is term equality because `t` is canonical. Marks are ignored.
    pub fn match_node(&self, t: &Term, n: usize) -> Option<HashMap<Arc<str>, usize>> {
        let mut env = HashMap::new();
        let mut stack = vec![(0usize, n)];
        while let Some((l, m)) = stack.pop() {
            match self.lhs.label(l) {
                Label::Var(v) => match env.get(v) {
                    Some(&bound) if bound != m => return None,
                    Some(_) => {}
                    None => {
                        env.insert(v.clone(), m);
                    }
                },
                lab => {
                    if t.label(m) != lab || t.kids(m).len() != self.lhs.kids(l).len() {
                        return None;
                    }
                    for (&a, &b) in self.lhs.kids(l).iter().zip(t.kids(m)) {
                        stack.push((a, b));
                    }
                }
            }
        }
        Some(env)
    }

    /// Matching against a term with unknown parts: `wild(node, depth)`
    /// says whether the node reached at that depth below `n` stands for an
    /// arbitrary subterm. Repeated variables are not compared when a
    /// wildcard is involved, so `Wild` over-approximates.
    pub(crate) fn probe(&self, t: &Term, n: usize, wild: &dyn Fn(usize, usize) -> bool) -> Probe {
        let mut first_wild = None;
        let mut stack = vec![(0usize, n, 0usize)];
        while let Some((l, m, d)) = stack.pop() {
            if matches!(self.lhs.label(l), Label::Var(_)) {
                continue;
            }
            if wild(m, d) {
                first_wild.get_or_insert(m);
                continue;
            }
            if t.label(m) != self.lhs.label(l) || t.kids(m).len() != self.lhs.kids(l).len() {
                return Probe::No;
            }
            for (&a, &b) in self.lhs.kids(l).iter().zip(t.kids(m)).rev() {
                stack.push((a, b, d + 1));
            }
        }
        match first_wild {
            Some(w) => Probe::Wild(w),
            None if self.match_node(t, n).is_some() => Probe::Yes,
            None => Probe::No,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Probe {
    No,
    Yes,
    /// Could match depending on the given wildcard node.
    Wild(usize),
}

/// Matches a pattern against a term: `Some(σ)` with `pattern σ = t`.
pub fn match_term(pattern: &Term, t: &Term) -> Option<Subst> {
    let rule = Rule {
        name: String::new(),
        lhs: pattern.clone(),
        rhs: pattern.clone(),
        collapsing: false,
        pattern: Vec::new(),
        lhs_vars: BTreeMap::new(),
    };
    let env = rule.match_node(t, 0)?;
    Some(env.into_iter().map(|(v, n)| (v, t.subterm_node(n))).collect())
}

#[derive(Clone, Debug)]
pub struct Trs {
    pub sig: Signature,
    pub rules: Vec<Rule>,
    linearity: Option<(String, String)>,
    overlap: Option<String>,
}

impl Trs {
    pub fn new(sig: Signature, rules: Vec<Rule>) -> Result<Trs> {
        let mut sig = sig;
        for r in &rules {
            for t in [&r.lhs, &r.rhs] {
                for (s, a) in t.symbols() {
                    sig.add(&s, a)?;
                }
            }
        }
        let linearity = rules
            .iter()
            .find_map(|r| r.lhs_vars.iter().find(|(_, ps)| ps.len() > 1).map(|(v, _)| (r.name.clone(), v.to_string())));
        let overlap = find_overlap(&rules);
        Ok(Trs { sig, rules, linearity, overlap })
    }

    /// Parses a bare list of `lhs -> rhs` rules separated by `;` or newlines.
    pub fn from_rules(src: &str) -> Result<Trs> {
        let mut text = String::new();
        for (i, part) in src.split([';', '\n']).filter(|s| !s.trim().is_empty()).enumerate() {
            text.push_str(&format!("rule r{}: {}\n", i + 1, part.trim()));
        }
        Ok(TrsFile::parse(&text)?.trs)
    }

    /// `None` if left-linear, else the offending rule and variable.
    pub fn check_left_linear(&self) -> Option<(String, String)> {
        self.linearity.clone()
    }

    /// `None` if orthogonal, else a description of the failure.
    pub fn check_orthogonal(&self) -> Option<String> {
        if let Some((r, v)) = &self.linearity {
            return Some(format!("rule `{r}` is not left-linear in `{v}`"));
        }
        self.overlap.clone()
    }

    pub fn is_left_linear(&self) -> bool {
        self.linearity.is_none()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.check_orthogonal().is_none()
    }

    pub fn require_orthogonal(&self) -> Result<()> {
        match self.check_orthogonal() {
            None => Ok(()),
            Some(w) => Err(Error::NotOrthogonal(w)),
        }
    }

    pub fn require_left_linear(&self) -> Result<()> {
        match &self.linearity {
            None => Ok(()),
            Some((r, v)) => Err(Error::NotLeftLinear(format!("rule `{r}`, variable `{v}`"))),
        }
    }

    pub fn rule_index(&self, name: &str) -> Result<usize> {
        self.rules.iter().position(|r| r.name == name).ok_or_else(|| Error::UnknownRule(name.to_string()))
    }

    /// Index of the first rule (in file order) matching at node `n`.
    pub fn redex_rule(&self, t: &Term, n: usize) -> Option<usize> {
        self.rules.iter().position(|r| r.match_node(t, n).is_some())
    }

    pub fn is_redex_node(&self, t: &Term, n: usize) -> bool {
        self.redex_rule(t, n).is_some()
    }

    pub fn is_normal_form(&self, t: &Term) -> bool {
        (0..t.node_count()).all(|n| !self.is_redex_node(t, n))
    }

    /// Redex nodes of `t`, indexed by node, with their first matching rule.
    pub fn redex_nodes(&self, t: &Term) -> Vec<Option<usize>> {
        (0..t.node_count()).map(|n| self.redex_rule(t, n)).collect()
    }

    /// All `(position, rule)` pairs with position length at most `depth`.
    pub fn redexes(&self, t: &Term, depth: usize) -> Vec<(Pos, usize)> {
        let mut cache: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut out = Vec::new();
        for (p, n) in t.walk_to_depth(depth) {
            let rs = cache.entry(n).or_insert_with(|| {
                (0..self.rules.len()).filter(|&i| self.rules[i].match_node(t, n).is_some()).collect()
            });
            for &r in rs.iter() {
                out.push((p.clone(), r));
            }
        }
        out
    }

    /// Contracts the `rule` redex at `pos`.
    pub fn rewrite(&self, t: &Term, pos: &[usize], rule: usize) -> Result<Term> {
        let n = t.node_at(pos)?;
        let r = &self.rules[rule];
        let env = r.match_node(t, n).ok_or_else(|| Error::NotARedex { pos: fmt_pos(pos), rule: r.name.clone() })?;
        let mut b = Builder::new();
        let base = b.import(t);
        let rb = instantiate(&mut b, r, &env, base, 0);
        let root = b.graft(base, t, pos, rb);
        Ok(b.finish(root))
    }

    /// Rewrites with the first matching rule at `pos`.
    pub fn rewrite_any(&self, t: &Term, pos: &[usize]) -> Result<(Term, usize)> {
        let n = t.node_at(pos)?;
        let rule = self.redex_rule(t, n).ok_or_else(|| Error::NotARedex { pos: fmt_pos(pos), rule: "any".into() })?;
        Ok((self.rewrite(t, pos, rule)?, rule))
    }

    /// Some rule whose left-hand side matches this rule's right-hand side
    /// for every substitution, so that every contractum is again a redex.
    pub fn rhs_rematch(&self, rule: usize) -> Option<usize> {
        let rhs = &self.rules[rule].rhs;
        self.rules.iter().position(|r| r.match_node(rhs, 0).is_some())
    }
}

/// Copies rule `r`'s right-hand side into `b` with variables pointing at
/// the bound nodes of the host imported at `base`. `mark` is applied to the
/// new nodes.
pub(crate) fn instantiate(b: &mut Builder, r: &Rule, env: &HashMap<Arc<str>, usize>, base: usize, mark: u8) -> usize {
    let rb = b.import_map(&r.rhs, |_| mark);
    for (i, node) in r.rhs.nodes.iter().enumerate() {
        if let Label::Var(v) = &node.label {
            b.set(rb + i, Slot::Ind(base + env[v]));
        }
    }
    rb
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum FTerm {
    V(String),
    F(Arc<str>, Vec<FTerm>),
}

fn to_fterm(t: &Term, n: usize, suffix: &str) -> FTerm {
    match t.label(n) {
        Label::Var(v) => FTerm::V(format!("{v}{suffix}")),
        Label::Sym(s) => FTerm::F(s.clone(), t.kids(n).iter().map(|&k| to_fterm(t, k, suffix)).collect()),
        Label::Bot => FTerm::F(Arc::from("_|_"), Vec::new()),
    }
}

fn at(t: &FTerm, p: &[usize]) -> FTerm {
    match (t, p.split_first()) {
        (_, None) => t.clone(),
        (FTerm::F(_, kids), Some((i, rest))) => at(&kids[*i], rest),
        (FTerm::V(_), Some(_)) => unreachable!("pattern positions avoid variables"),
    }
}

fn walk(t: &FTerm, s: &HashMap<String, FTerm>) -> FTerm {
    match t {
        FTerm::V(v) => match s.get(v) {
            Some(u) => walk(u, s),
            None => t.clone(),
        },
        _ => t.clone(),
    }
}

fn occurs(v: &str, t: &FTerm, s: &HashMap<String, FTerm>) -> bool {
    match walk(t, s) {
        FTerm::V(w) => w == v,
        FTerm::F(_, kids) => kids.iter().any(|k| occurs(v, k, s)),
    }
}

fn unify(a: &FTerm, b: &FTerm) -> bool {
    let mut s: HashMap<String, FTerm> = HashMap::new();
    let mut todo = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = todo.pop() {
        match (walk(&x, &s), walk(&y, &s)) {
            (FTerm::V(v), FTerm::V(w)) if v == w => {}
            (FTerm::V(v), t) | (t, FTerm::V(v)) => {
                if occurs(&v, &t, &s) {
                    return false;
                }
                s.insert(v, t);
            }
            (FTerm::F(f, xs), FTerm::F(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return false;
                }
                todo.extend(xs.into_iter().zip(ys));
            }
        }
    }
    true
}

fn find_overlap(rules: &[Rule]) -> Option<String> {
    for (i, r1) in rules.iter().enumerate() {
        let l1 = to_fterm(&r1.lhs, 0, "#1");
        for (j, r2) in rules.iter().enumerate() {
            let l2 = to_fterm(&r2.lhs, 0, "#2");
            for p in &r1.pattern {
                if i == j && p.is_empty() {
                    continue;
                }
                if unify(&at(&l1, p), &l2) {
                    return Some(format!("rule `{}` overlaps rule `{}` at {}", r2.name, r1.name, fmt_pos(p)));
                }
            }
        }
    }
    None
}

/// A parsed rule file: the system plus its named terms in file order.
#[derive(Clone, Debug)]
pub struct TrsFile {
    pub trs: Trs,
    pub terms: Vec<(String, Term)>,
}

impl TrsFile {
    pub fn parse(src: &str) -> Result<TrsFile> {
        // Group lines into declarations; a line not starting with a keyword
        // continues the previous one.
        let mut decls: Vec<(String, usize, usize, String)> = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let text = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            };
            let trimmed = text.trim_start();
            if trimmed.trim().is_empty() {
                continue;
            }
            let indent = text.len() - trimmed.len();
            let kw = trimmed.split_whitespace().next().unwrap_or("");
            if matches!(kw, "sig" | "rule" | "term") {
                let col = indent + kw.len() + 1;
                let rest = &trimmed[kw.len()..];
                let col = col + rest.chars().take_while(|c| c.is_whitespace()).count();
                decls.push((kw.to_string(), line, col, rest.trim_start().to_string()));
            } else {
                match decls.last_mut() {
                    Some(d) if d.0 != "sig" => {
                        d.3.push('\n');
                        d.3.push_str(text);
                    }
                    _ => {
                        return Err(Error::Parse {
                            line,
                            col: indent + 1,
                            msg: format!("expected `sig`, `rule` or `term`, found `{kw}`"),
                        })
                    }
                }
            }
        }

        let mut sig = Signature::new();
        let mut declared = false;
        for (kw, line, col, rest) in &decls {
            if kw != "sig" {
                continue;
            }
            declared = true;
            for item in rest.split_whitespace() {
                let here = col + (item.as_ptr() as usize - rest.as_ptr() as usize);
                let (name, arity) = item.rsplit_once('/').ok_or(Error::Parse {
                    line: *line,
                    col: here,
                    msg: format!("expected name/arity, found `{item}`"),
                })?;
                let arity: usize = arity.parse().map_err(|_| Error::Parse {
                    line: *line,
                    col: here,
                    msg: format!("bad arity in `{item}`"),
                })?;
                sig.add(name, arity).map_err(|e| Error::Parse { line: *line, col: here, msg: e.to_string() })?;
            }
        }
        let sigref = declared.then_some(&sig);

        let mut rules = Vec::new();
        let mut terms: Vec<(String, Term)> = Vec::new();
        let mut named: HashMap<String, Term> = HashMap::new();
        for (kw, line, col, rest) in &decls {
            match kw.as_str() {
                "rule" => {
                    let mut p = Parser::new(Lexer::new(rest, *line, *col)?);
                    let start = p.here();
                    let name = match (p.peek().clone(), p.peek_at(1).clone()) {
                        (Tok::Ident(n), Tok::Colon) => {
                            p.bump();
                            p.bump();
                            n
                        }
                        _ => format!("r{}", rules.len() + 1),
                    };
                    if rules.iter().any(|r: &Rule| r.name == name) {
                        return Err(Error::Parse {
                            line: start.0,
                            col: start.1,
                            msg: format!("duplicate rule name `{name}`"),
                        });
                    }
                    let lpos = p.here();
                    let lhs: Ast = p.expr()?;
                    p.expect(Tok::Arrow)?;
                    let rpos = p.here();
                    let rhs: Ast = p.expr()?;
                    p.expect(Tok::Eof)?;
                    let lhs = lhs.build(sigref, &HashMap::new(), lpos)?;
                    let rhs = rhs.build(sigref, &HashMap::new(), rpos)?;
                    let rule = Rule::new(&name, lhs, rhs).map_err(|e| Error::Parse {
                        line: start.0,
                        col: start.1,
                        msg: e.to_string(),
                    })?;
                    rules.push(rule);
                }
                "term" => {
                    let mut p = Parser::new(Lexer::new(rest, *line, *col)?);
                    let name = p.ident()?;
                    p.expect(Tok::Eq)?;
                    let epos = p.here();
                    let e = p.expr()?;
                    p.expect(Tok::Eof)?;
                    let t = e.build(sigref, &named, epos)?;
                    named.insert(name.clone(), t.clone());
                    terms.retain(|(n, _)| *n != name);
                    terms.push((name, t));
                }
                _ => {}
            }
        }
        let trs = Trs::new(sig, rules)?;
        Ok(TrsFile { trs, terms })
    }

    pub fn term(&self, name: &str) -> Result<&Term> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, t)| t).ok_or_else(|| Error::UnknownTerm(name.to_string()))
    }

    /// Resolves a term selector: a declared name, or else a term literal
    /// parsed against the file's signature.
    pub fn select(&self, sel: &str) -> Result<Term> {
        if let Ok(t) = self.term(sel) {
            return Ok(t.clone());
        }
        let named: HashMap<String, Term> = self.terms.iter().cloned().collect();
        let sig = (!self.trs.sig.is_empty()).then_some(&self.trs.sig);
        crate::term::parse_full(sel, sig, &named, 1, 1).map_err(|e| match e {
            Error::Parse { .. } if !sel.contains(['(', ' ', '.']) => Error::UnknownTerm(sel.to_string()),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn subst(pairs: &[(&str, &str)]) -> Subst {
        pairs.iter().map(|(v, s)| (Arc::from(*v), t(s))).collect()
    }

    #[test]
    fn matching() {
        assert_eq!(match_term(&t("f(x, y)"), &t("f(a, g(b))")), Some(subst(&[("x", "a"), ("y", "g(b)")])));
        assert_eq!(match_term(&t("f(x)"), &t("g(a)")), None);
        assert_eq!(match_term(&t("h(x)"), &t("h(_|_)")), Some(subst(&[("x", "_|_")])));
        assert_eq!(match_term(&t("f(x, x)"), &t("f(_|_, _|_)")), Some(subst(&[("x", "_|_")])));
        assert_eq!(match_term(&t("f(x, x)"), &t("f(a, b)")), None);
        assert_eq!(match_term(&t("h(a)"), &t("h(_|_)")), None);
    }

    #[test]
    fn substitution() {
        assert_eq!(t("f(x, x)").substitute(&subst(&[("x", "a")])), t("f(a, a)"));
        assert_eq!(t("g(x)").substitute(&subst(&[("x", "mu y. f(y)")])), t("g(mu y. f(y))"));
    }

    #[test]
    fn steps() {
        let r = Trs::from_rules("a -> f(a)").unwrap();
        assert_eq!(r.rewrite(&t("a"), &[], 0).unwrap(), t("f(a)"));
        let r = Trs::from_rules("f(x) -> x").unwrap();
        let s = r.rewrite(&t("mu x. g(f(x))"), &[0], 0).unwrap();
        assert_eq!(s, t("g(g(f(mu x. g(f(x)))))"));
        let r = Trs::from_rules("h(x) -> h(g(x))").unwrap();
        assert_eq!(r.rewrite(&t("f(h(a), b)"), &[0], 0).unwrap(), t("f(h(g(a)), b)"));
        assert!(matches!(r.rewrite(&t("f(h(a), b)"), &[1], 0), Err(Error::NotARedex { .. })));
        assert!(matches!(r.rewrite(&t("f(h(a), b)"), &[3], 0), Err(Error::PositionOutOfDomain(_))));
    }

    #[test]
    fn redex_windows() {
        let r = Trs::from_rules("a -> f(a)").unwrap();
        assert_eq!(r.redexes(&t("g(a)"), 2), vec![(vec![0], 0)]);
        let r = Trs::from_rules("f(x) -> x; g(x) -> x").unwrap();
        assert_eq!(r.redexes(&t("mu t. g(f(t))"), 1), vec![(vec![], 1), (vec![0], 0)]);
        let r = Trs::new(Signature::new(), Vec::new()).unwrap();
        assert!(r.redexes(&t("f(a)"), 4).is_empty());
    }

    #[test]
    fn syntactic_checks() {
        assert!(Trs::from_rules("f(x, y) -> f(y, x)").unwrap().is_left_linear());
        let nl = Trs::from_rules("f(x, x) -> c").unwrap();
        assert_eq!(nl.check_left_linear(), Some(("r1".into(), "x".into())));
        assert!(Trs::new(Signature::new(), Vec::new()).unwrap().is_orthogonal());
        assert!(Trs::from_rules("f(x) -> x; g(x) -> x").unwrap().is_orthogonal());
        assert!(Trs::from_rules("h(x) -> g(x); s(g(x)) -> s(h(s(x)))").unwrap().is_orthogonal());
        let ov = Trs::from_rules("f(g(x)) -> a; g(b) -> c").unwrap();
        let w = ov.check_orthogonal().unwrap();
        assert!(w.contains("<0>"), "{w}");
        assert!(!Trs::from_rules("f(f(x)) -> a").unwrap().is_orthogonal());
        assert!(Trs::from_rules("f(x) -> a; f(a) -> b").unwrap().check_orthogonal().is_some());
    }

    #[test]
    fn file_format() {
        let src = "# demo\nsig f/2 h/1 g/1 a/0 b/0\nrule rho1: h(x) -> h(g(x))\nrule rho2: b -> g(b)\nterm t = f(h(a), b)\nterm u = let s = g(s) in s\n";
        let f = TrsFile::parse(src).unwrap();
        assert_eq!(f.trs.rules.len(), 2);
        assert_eq!(f.term("t").unwrap(), &t("f(h(a), b)"));
        assert_eq!(f.select("u").unwrap(), t("mu x. g(x)"));
        assert!(matches!(f.term("v"), Err(Error::UnknownTerm(_))));
        match TrsFile::parse("sig f/1\nrule r: f(x) -> f(x, x)\n") {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (2, 17)),
            other => panic!("{other:?}"),
        }
        match TrsFile::parse("sig f/1\nrule r: f(x) -> y\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(TrsFile::parse("bogus line\n").is_err());
    }

    #[test]
    fn continuation_lines() {
        let src = "rule r: f(x) ->\n    g(x)\nterm t = f(\n  a)\n";
        let f = TrsFile::parse(src).unwrap();
        assert_eq!(f.trs.rules[0].rhs, t("g(x)"));
        assert_eq!(f.term("t").unwrap(), &t("f(a)"));
    }

    #[test]
    fn root_rematch() {
        let r = Trs::from_rules("h(x) -> h(g(x))").unwrap();
        assert_eq!(r.rhs_rematch(0), Some(0));
        let r = Trs::from_rules("a -> f(a)").unwrap();
        assert_eq!(r.rhs_rematch(0), None);
    }
}
