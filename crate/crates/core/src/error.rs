use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("alphabet size must be at least {min}, got {k}")]
    AlphabetTooSmall { k: u32, min: u32 },

    #[error("compact format supports at most 26 generators, got k={0}")]
    CompactAlphabetTooLarge(u32),

    #[error("malformed token {token:?} at position {position}")]
    MalformedToken { token: String, position: usize },

    #[error("generator {generator} out of range for alphabet size {k}")]
    GeneratorOutOfRange { generator: u32, k: u32 },

    #[error("words use different alphabet sizes ({0} vs {1})")]
    AlphabetMismatch(u32, u32),

    #[error("matching is declared for length {matching} but the word has length {word}")]
    LengthMismatch { matching: usize, word: usize },

    #[error("word length {len} exceeds the brute-force limit {limit}")]
    OverLimit { len: usize, limit: usize },

    #[error("enumeration needs {needed} items but the budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("word contains both a letter and its inverse, so it is outside the recurrent class")]
    OutsideRecurrentClass,

    #[error("malformed profile: {0}")]
    MalformedProfile(String),

    #[error("linear system for the truncated chain is singular")]
    SingularSystem,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
