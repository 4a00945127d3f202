use thiserror::Error;

/// Every failure the library reports. Each variant maps to a stable code
/// used by the command line tool in JSON mode.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("position {0} is not in the domain of the term")]
    PositionOutOfDomain(String),
    #[error("rule `{rule}` does not match at {pos}")]
    NotARedex { pos: String, rule: String },
    #[error("script step {index}: nothing to contract at {pos}")]
    ScriptNotARedex { index: usize, pos: String },
    #[error("the terms have no upper bound")]
    NoUpperBound,
    #[error("invalid rule `{rule}`: {msg}")]
    InvalidRule { rule: String, msg: String },
    #[error("the system is not orthogonal: {0}")]
    NotOrthogonal(String),
    #[error("the system is not left-linear: {0}")]
    NotLeftLinear(String),
    #[error("redex occurrences conflict: {0}")]
    Conflicting(String),
    #[error("occurrence {0} is not in the term")]
    OccurrenceNotInTerm(String),
    #[error("occurrence {0} carries bottom")]
    OccurrenceAtBot(String),
    #[error("occurrence {0} is not a redex")]
    OccurrenceNotARedex(String),
    #[error("occurrences {0} and {1} are not disjoint")]
    NotDisjoint(String, String),
    #[error("developments do not join: {0} vs {1}")]
    NotJoinable(String, String),
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid occurrence set: {0}")]
    InvalidOccurrences(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse-error",
            Error::PositionOutOfDomain(_) => "position-out-of-domain",
            Error::NotARedex { .. } => "not-a-redex",
            Error::ScriptNotARedex { .. } => "not-a-redex",
            Error::NoUpperBound => "no-upper-bound",
            Error::InvalidRule { .. } => "invalid-rule",
            Error::NotOrthogonal(_) => "not-orthogonal",
            Error::NotLeftLinear(_) => "not-left-linear",
            Error::Conflicting(_) => "conflicting-redexes",
            Error::OccurrenceNotInTerm(_) => "occurrence-not-in-term",
            Error::OccurrenceAtBot(_) => "occurrence-at-bot",
            Error::OccurrenceNotARedex(_) => "occurrence-not-a-redex",
            Error::NotDisjoint(..) => "occurrences-not-disjoint",
            Error::NotJoinable(..) => "not-joinable",
            Error::UnknownTerm(_) => "unknown-term",
            Error::UnknownRule(_) => "unknown-rule",
            Error::InvalidStrategy(_) => "invalid-strategy",
            Error::InvalidOccurrences(_) => "invalid-occurrences",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Io(_) => "io-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
