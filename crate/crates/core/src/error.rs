//! Error type shared by the whole engine.

use thiserror::Error;

/// Every failure the machine, catalog, translator, or parsers can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // --- relational substrate ---
    #[error("unknown relvar `{0}`")]
    UnknownRelvar(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("type error: {0}")]
    TypeError(String),
    #[error("division by zero")]
    DivisionByZero,

    // --- machine catalog and constraints ---
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("cyclic definition involving `{0}`")]
    CyclicDefinition(String),
    #[error("relvar `{0}` is virtual and cannot be assigned")]
    VirtualTargetNotUpdatable(String),
    #[error("key violation on `{relvar}` key ({key})")]
    KeyViolation { relvar: String, key: String },
    #[error("foreign key violation on `{relvar}` FKEY ({fkey}) ON {target}")]
    ForeignKeyViolation {
        relvar: String,
        fkey: String,
        target: String,
    },
    #[error("unknown transaction `{0}`")]
    UnknownTransaction(String),
    #[error("argument mismatch for `{trans}`: {detail}")]
    ArgumentMismatch { trans: String, detail: String },
    #[error("loop limit exceeded after {0} iterations")]
    LoopLimitExceeded(u64),
    #[error("branch partition violated: {0}")]
    PartitionViolation(String),

    // --- persistence ---
    #[error("io error: {0}")]
    Io(String),
    #[error("format error at {path}:{line}: {detail}")]
    Format {
        path: String,
        line: usize,
        detail: String,
    },

    // --- source language ---
    #[error("syntax error at {line}:{col}: {detail}")]
    Syntax {
        line: usize,
        col: usize,
        detail: String,
    },
    #[error("unterminated command (missing `;`)")]
    UnterminatedCommand,

    // --- class catalog ---
    #[error("duplicate class `{0}`")]
    DuplicateClass(String),
    #[error("unknown parent class `{0}`")]
    UnknownParent(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("member conflict in `{class}`: `{member}` has differing declarations")]
    MemberConflict { class: String, member: String },
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("`{0}` is scalar-typed and admits no continuation")]
    IllegalContinuation(String),
    #[error("selection condition refers to non-scalar path `{0}`")]
    NonScalarInCondition(String),
    #[error("class `{class}` has no member `{member}`")]
    UnknownMember { class: String, member: String },
    #[error("implementation kind does not fit member `{member}`: {detail}")]
    KindMismatch { member: String, detail: String },
    #[error("ambiguous override of `{member}`: `{a}` and `{b}` are unrelated classes with a common descendant")]
    AmbiguousOverride {
        member: String,
        a: String,
        b: String,
    },

    // --- translation ---
    #[error("cannot project non-scalar path `{0}`")]
    NonTerminalProjection(String),
    #[error("member `{member}` is calculated for some selected objects and cannot be written")]
    NotUpdatableCalculated { member: String },
    #[error("class `{class}` is not fully implemented: `{member}` has no implementation")]
    NotFullyImplemented { class: String, member: String },
    #[error("FIRST OF expects exactly one object, got {0}")]
    FirstOfCardinality(usize),
    #[error("cyclic binding: calculated `{0}` reads its own bound relation")]
    CyclicBinding(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("NEW used as an expression requires a single-object group, got {0}")]
    GroupNewUnsupported(usize),
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
