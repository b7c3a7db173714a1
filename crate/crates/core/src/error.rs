use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("label set is not sorted and distinct: {0:?}")]
    InvalidIdSet(Vec<u32>),
    #[error("injection is malformed: {0}")]
    InvalidInjection(String),
    #[error("composition mismatch: codomain {left:?} does not equal domain {right:?}")]
    CompositionMismatch { left: Vec<u32>, right: Vec<u32> },
    #[error("index {index} is not a member of the index set over {set:?}")]
    NotMember { index: String, set: Vec<u32> },
    #[error("element is not a member of the structure over {set:?}")]
    NotElement { set: Vec<u32> },
    #[error("enumeration of {what} exceeds the bound ({size} > {bound})")]
    TooLarge { what: String, size: u128, bound: u128 },
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("kernel symmetry violated for representative {rep} under {perm:?}: {input}")]
    Asymmetric { rep: String, perm: Vec<u32>, input: String },
    #[error("no kernel for representative {0}")]
    MissingKernel(String),
    #[error("level mismatch: {0}")]
    LevelMismatch(String),
    #[error("predicate {name} is not hereditary: {witness}")]
    NotHereditary { name: String, witness: String },
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("parse error at byte {offset}: expected one of {expected:?}")]
    Parse { offset: usize, expected: Vec<String> },
    #[error("malformed term: {0}")]
    Term(String),
}

pub type Result<T> = std::result::Result<T, Error>;
