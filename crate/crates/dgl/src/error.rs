use thiserror::Error;

/// Library-wide error type. CLI exit codes: input-shaped errors map to 2,
/// internal invariant violations (`NoPreimage`, `ClosureViolation`) to 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("duplicate generator `{0}`")]
    DuplicateGenerator(String),
    #[error("generator `{id}` has degree {degree}; degrees must be >= 1")]
    BadDegree { id: String, degree: isize },
    #[error("expression is not homogeneous: found degrees {0} and {1}")]
    MixedDegree(usize, usize),
    #[error("differential of `{id}` must have degree {expected}, found {found}")]
    BadDiffDegree { id: String, expected: usize, found: usize },
    #[error("model file error (line {line}): {msg}")]
    ModelFile { line: usize, msg: String },
    #[error("input is not minimal: differential of `{0}` has a linear part")]
    NotMinimal(String),
    #[error("no preimage: kernel is not acyclic in degree {degree} (while solving for `{context}`)")]
    NoPreimage { degree: usize, context: String },
    #[error("input is not a cycle")]
    InputNotCycle,
    #[error("input is not in the kernel")]
    InputNotInKernel,
    #[error("input not in L+(V)*L+(W): word `{0}` does not mix both sides")]
    NotMixed(String),
    #[error("fat wedge closure violation: d({gen}) involves removed generator `{witness}`")]
    ClosureViolation { gen: String, witness: String },
    #[error("diagonal lift failed in degree {degree} for generator `{gen}`")]
    LiftFailure { degree: usize, gen: String },
    #[error("cofibration replacement did not stabilize below degree {0}")]
    StabilizationFailure(usize),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code category for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoPreimage { .. } | Error::ClosureViolation { .. } => 3,
            _ => 2,
        }
    }
}
