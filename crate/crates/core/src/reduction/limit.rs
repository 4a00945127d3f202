use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use super::{analyze, Reduction};
use crate::error::{Error, Result};
use crate::term::canon::Builder;
use crate::term::{is_prefix, truncate, Depth, Pos, Term};

/// Steps recurring this often at one position in the observed window of
/// an unexplained run make the position suspected volatile.
pub const SUSPICION_THRESHOLD: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    StrongP,
    WeakP,
    StrongM,
    WeakM,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::StrongP, Mode::WeakP, Mode::StrongM, Mode::WeakM];

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    pub fn is_partial_order(self) -> bool {
        matches!(self, Mode::StrongP | Mode::WeakP)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::StrongP => "strong-p",
            Mode::WeakP => "weak-p",
            Mode::StrongM => "strong-m",
            Mode::WeakM => "weak-m",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "strong-p" => Ok(Mode::StrongP),
            "weak-p" => Ok(Mode::WeakP),
            "strong-m" => Ok(Mode::StrongM),
            "weak-m" => Ok(Mode::WeakM),
            _ => Err(Error::InvalidArgument(format!("unknown mode `{s}`"))),
        }
    }
}

/// How much of a reported limit has been established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Certificate {
    /// The whole tail is determined; the limit is exact.
    ExactRational,
    /// Symbols up to this depth are final.
    DepthCertified(usize),
    /// Nothing was established within the budget.
    BudgetExhausted,
}

impl Certificate {
    pub fn name(&self) -> &'static str {
        match self {
            Certificate::ExactRational => "exact-rational",
            Certificate::DepthCertified(_) => "depth-certified",
            Certificate::BudgetExhausted => "budget-exhausted",
        }
    }

    pub fn is_certified(&self) -> bool {
        !matches!(self, Certificate::BudgetExhausted)
    }

    /// The weaker of two certificates.
    pub(crate) fn meet(self, other: Certificate) -> Certificate {
        use Certificate::*;
        match (self, other) {
            (BudgetExhausted, _) | (_, BudgetExhausted) => BudgetExhausted,
            (DepthCertified(a), DepthCertified(b)) => DepthCertified(a.min(b)),
            (DepthCertified(a), _) | (_, DepthCertified(a)) => DepthCertified(a),
            _ => ExactRational,
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::DepthCertified(d) => write!(f, "depth-certified({d})"),
            c => f.write_str(c.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Certified,
    Suspected,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Volatile {
    pub position: Pos,
    pub verdict: Verdict,
    pub outermost: bool,
}

/// Fills in the `outermost` flags and sorts by position.
pub(crate) fn volatile_list(mut v: Vec<(Pos, Verdict)>) -> Vec<Volatile> {
    v.sort();
    v.dedup_by(|a, b| a.0 == b.0);
    let all: Vec<Pos> = v.iter().map(|(p, _)| p.clone()).collect();
    v.into_iter()
        .map(|(p, verdict)| {
            let outermost = !all.iter().any(|q| q.len() < p.len() && is_prefix(q, &p));
            Volatile { position: p, verdict, outermost }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LimitOutcome {
    pub mode: Mode,
    /// `None` when the reduction diverges in this mode.
    pub limit: Option<Term>,
    pub certificate: Certificate,
    pub volatile: Vec<Volatile>,
    pub destructive: bool,
}

impl LimitOutcome {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "mode": self.mode.to_string(),
            "limit": self.limit.as_ref().map(|t| t.to_string()),
            "certificate": self.certificate.name(),
            "volatile": self.volatile.iter().map(|x| json!({
                "position": x.position,
                "verdict": match x.verdict { Verdict::Certified => "certified", Verdict::Suspected => "suspected" },
                "outermost": x.outermost,
            })).collect::<Vec<_>>(),
            "destructive": self.destructive,
        });
        if let Certificate::DepthCertified(d) = self.certificate {
            v["certified_depth"] = json!(d);
        }
        v
    }
}

pub fn strong_p_limit(red: &Reduction, depth: usize) -> LimitOutcome {
    analyze(red, depth).outcome(Mode::StrongP)
}

pub fn weak_p_limit(red: &Reduction, depth: usize) -> LimitOutcome {
    analyze(red, depth).outcome(Mode::WeakP)
}

pub fn strong_m_limit(red: &Reduction, depth: usize) -> LimitOutcome {
    analyze(red, depth).outcome(Mode::StrongM)
}

pub fn weak_m_limit(red: &Reduction, depth: usize) -> LimitOutcome {
    analyze(red, depth).outcome(Mode::WeakM)
}

pub fn detect_volatile(red: &Reduction) -> Vec<Volatile> {
    analyze(red, super::DEFAULT_DEPTH).volatile().to_vec()
}

/// Whether the root is volatile, with the strength of that verdict.
pub fn is_destructive(red: &Reduction) -> (bool, Verdict) {
    match detect_volatile(red).into_iter().find(|v| v.position.is_empty()) {
        Some(v) => (v.verdict == Verdict::Certified, v.verdict),
        None => (false, Verdict::Certified),
    }
}

/// Guesses a rational term from its truncations `ts[d]` at depths
/// `0..=n` and verifies the guess by truncating it again.
pub fn fold_rational(ts: &[Term]) -> Option<Term> {
    let n = ts.len().checked_sub(1)?;
    let top = &ts[n];
    for (d, t) in ts.iter().enumerate() {
        if *t != truncate(top, Depth::Fin(d)) {
            return None;
        }
    }
    if n == 0 {
        return None;
    }
    let depths = top.node_depths();
    // Nodes of the deepest truncation in breadth-first order; each is
    // either merged into an earlier state or becomes a state itself.
    let mut order = Vec::new();
    let mut seen = vec![false; top.node_count()];
    seen[0] = true;
    let mut q = std::collections::VecDeque::from([0usize]);
    while let Some(m) = q.pop_front() {
        order.push(m);
        for &k in top.kids(m) {
            if !seen[k] {
                seen[k] = true;
                q.push_back(k);
            }
        }
    }
    let mut state_of: HashMap<usize, usize> = HashMap::new();
    let mut states: Vec<usize> = Vec::new();
    let mut cache: HashMap<(usize, usize), Term> = HashMap::new();
    let trunc = |m: usize, w: usize, cache: &mut HashMap<(usize, usize), Term>| -> Term {
        cache.entry((m, w)).or_insert_with(|| truncate(&top.subterm_node(m), Depth::Fin(w))).clone()
    };
    for &m in &order {
        // Frontier nodes have window zero and merge into the first state.
        let w = n.saturating_sub(depths[m]);
        let mine = trunc(m, w, &mut cache);
        let earlier = (0..states.len()).find(|&s| trunc(states[s], w, &mut cache) == mine);
        match earlier {
            Some(s) => {
                state_of.insert(m, s);
            }
            None => {
                state_of.insert(m, states.len());
                states.push(m);
            }
        }
    }
    let mut b = Builder::new();
    let slots: Vec<usize> = states.iter().map(|_| b.open()).collect();
    for (s, &m) in states.iter().enumerate() {
        let kids = top.kids(m).iter().map(|k| slots[state_of[k]]).collect();
        b.set(slots[s], crate::term::canon::Slot::Node { label: top.label(m).clone(), mark: 0, kids });
    }
    let guess = b.finish(slots[state_of[&0]]);
    ts.iter().enumerate().all(|(d, t)| truncate(&guess, Depth::Fin(d)) == *t).then_some(guess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn ts(v: &[&str]) -> Vec<Term> {
        v.iter().map(|s| parse_term(s).unwrap()).collect()
    }

    #[test]
    fn folding() {
        let got = fold_rational(&ts(&["_|_", "f(_|_)", "f(f(_|_))", "f(f(f(_|_)))"]));
        assert_eq!(got, Some(parse_term("mu x. f(x)").unwrap()));
        let got = fold_rational(&ts(&["_|_", "g(_|_)", "g(f(_|_))"]));
        assert_eq!(got, Some(parse_term("mu x. g(f(x))").unwrap()));
        assert_eq!(fold_rational(&ts(&["_|_", "f(_|_)", "g(f(_|_))"])), None);
        let t = parse_term("f(mu x. g(x), a)").unwrap();
        let cuts: Vec<Term> = (0..=6).map(|d| truncate(&t, Depth::Fin(d))).collect();
        assert_eq!(fold_rational(&cuts), Some(t));
    }

    #[test]
    fn certificate_meet() {
        use Certificate::*;
        assert_eq!(ExactRational.meet(DepthCertified(4)), DepthCertified(4));
        assert_eq!(DepthCertified(3).meet(DepthCertified(4)), DepthCertified(3));
        assert_eq!(ExactRational.meet(BudgetExhausted), BudgetExhausted);
    }
}
