use super::{glb, lub, Term};
use crate::error::{Error, Result};

/// A finite sequence, or an eventually periodic ω-sequence `prefix · tail^ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermSequence {
    pub prefix: Vec<Term>,
    pub tail: Vec<Term>,
}

impl TermSequence {
    pub fn new(prefix: Vec<Term>, tail: Vec<Term>) -> Result<Self> {
        if prefix.is_empty() && tail.is_empty() {
            return Err(Error::InvalidArgument("empty term sequence".into()));
        }
        Ok(TermSequence { prefix, tail })
    }

    pub fn closed(terms: Vec<Term>) -> Result<Self> {
        Self::new(terms, Vec::new())
    }

    pub fn periodic(prefix: Vec<Term>, tail: Vec<Term>) -> Result<Self> {
        if tail.is_empty() {
            return Err(Error::InvalidArgument("periodic tail must be non-empty".into()));
        }
        Self::new(prefix, tail)
    }

    pub fn is_open(&self) -> bool {
        !self.tail.is_empty()
    }

    /// Element `i` of the denoted sequence (`None` past the end).
    pub fn get(&self, i: usize) -> Option<&Term> {
        if i < self.prefix.len() {
            return self.prefix.get(i);
        }
        if self.tail.is_empty() {
            return None;
        }
        Some(&self.tail[(i - self.prefix.len()) % self.tail.len()])
    }

    /// Drops the first `n` elements.
    pub fn suffix(&self, n: usize) -> Option<TermSequence> {
        if !self.is_open() && n >= self.prefix.len() {
            return None;
        }
        if n <= self.prefix.len() {
            return Some(TermSequence { prefix: self.prefix[n..].to_vec(), tail: self.tail.clone() });
        }
        let k = (n - self.prefix.len()) % self.tail.len();
        let mut tail = self.tail[k..].to_vec();
        tail.extend_from_slice(&self.tail[..k]);
        Some(TermSequence { prefix: Vec::new(), tail })
    }

    /// The limit inferior: the last element of a closed sequence, otherwise
    /// the meet of the repeated block (every later meet is the same).
    pub fn liminf(&self) -> Term {
        if self.tail.is_empty() {
            return self.prefix.last().cloned().unwrap_or_else(Term::bot);
        }
        glb(&self.tail)
    }

    /// The limit in the metric sense, `None` when the sequence is not Cauchy.
    pub fn metric_limit(&self) -> Option<Term> {
        if self.tail.is_empty() {
            return self.prefix.last().cloned();
        }
        let first = &self.tail[0];
        self.tail.iter().all(|t| t == first).then(|| first.clone())
    }

    /// `lub_n glb_{i >= n}` computed directly over `n` up to the period
    /// boundary; used as an independent check of `liminf`.
    pub fn liminf_by_definition(&self) -> Term {
        if self.tail.is_empty() {
            return self.liminf();
        }
        let horizon = self.prefix.len() + self.tail.len();
        let meets: Vec<Term> = (0..=horizon)
            .map(|n| {
                let mut block: Vec<Term> = (n..horizon).filter_map(|i| self.get(i).cloned()).collect();
                block.extend(self.tail.iter().cloned());
                glb(&block)
            })
            .collect();
        lub(&meets).expect("meets of a sequence form a chain")
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_term;
    use super::*;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn closed_sequences() {
        let s = TermSequence::closed(vec![t("a"), t("b"), t("c")]).unwrap();
        assert_eq!(s.liminf(), t("c"));
        let s = TermSequence::closed(vec![t("a"), t("f(a)")]).unwrap();
        assert_eq!(s.metric_limit(), Some(t("f(a)")));
    }

    #[test]
    fn periodic_sequences() {
        let s = TermSequence::periodic(Vec::new(), vec![t("f(a, f(g(a), g(b)))"), t("f(a, f(g(b), g(a)))")]).unwrap();
        assert_eq!(s.liminf(), t("f(a, f(g(_|_), g(_|_)))"));
        assert_eq!(s.metric_limit(), None);

        let s = TermSequence::periodic(vec![t("g(_|_)")], vec![t("f(a, b)"), t("f(a, c)"), t("f(a, b)")]).unwrap();
        assert_eq!(s.liminf(), t("f(a, _|_)"));
        assert_eq!(s.liminf_by_definition(), t("f(a, _|_)"));

        let s = TermSequence::periodic(vec![t("a")], vec![t("f(a)")]).unwrap();
        assert_eq!(s.metric_limit(), Some(t("f(a)")));
        assert!(TermSequence::closed(Vec::new()).is_err());
    }
}
