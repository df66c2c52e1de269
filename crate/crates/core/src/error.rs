use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: rule is not in Chomsky normal form: {rule}")]
    NotChomskyForm { line: usize, rule: String },
    #[error("line {line}: duplicate rule: {rule}")]
    DuplicateRule { line: usize, rule: String },
    #[error("start symbol `{0}` is not declared by any rule")]
    UndeclaredStart(String),
    #[error("missing `start` header line")]
    MissingStart,
    #[error("grammar has no rules")]
    EmptyGrammar,
    #[error("symbol {0:?} not in alphabet")]
    UnknownSymbol(char),
    #[error("empty string is outside every language support (length must be >= 1)")]
    EmptyWord,
    #[error("enumeration guard exceeded: {count} strings > guard {guard}")]
    GuardExceeded { count: f64, guard: u64 },
    #[error("malformed HMM document: {0}")]
    MalformedHmm(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative entry {value} in {location}")]
    NegativeEntry { location: String, value: f64 },
    #[error("stochasticity violated: {0}")]
    NotStochastic(String),
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error("invalid cut {cut} for string of length {len}")]
    InvalidCut { cut: usize, len: usize },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("unambiguity attestation required for this query")]
    AttestationMissing,
    #[error("ambiguity attestation violated: likelihood {value} at length {length} exceeds 1")]
    AttestationViolated { value: f64, length: usize },
    #[error("empty constrained support")]
    EmptySupport,
    #[error("forward table does not match the query: {0}")]
    TableMismatch(String),
    #[error("numerical underflow at node (local mass {0:e})")]
    Underflow(f64),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("malformed DIMACS input: {0}")]
    Dimacs(String),
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
