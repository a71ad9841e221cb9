use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("relation {relation} used with arity {found}, expected {expected}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },

    #[error("normal form violation: {0}")]
    NormalFormViolation(String),

    #[error("resource limit exceeded: {what} (cap {cap})")]
    ResourceLimit { what: &'static str, cap: usize },

    #[error("input not valid for {semantics}: {reason}")]
    SemanticsInputMismatch {
        semantics: &'static str,
        reason: String,
    },

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("scope violation: {0}")]
    ScopeViolation(String),

    #[error("instance is not annotation-minimal: {0}")]
    NotAnnotationMinimal(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("query outside the supported class: {0}")]
    QueryClass(String),

    #[error("unknown name: {0}")]
    UnknownName(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
