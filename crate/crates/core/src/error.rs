use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not a prime in [2, 2^31)")]
    InvalidModulus(u64),

    #[error("operands live in different fields (F_{left} vs F_{right})")]
    FieldMismatch { left: u32, right: u32 },

    #[error("division by zero")]
    DivisionByZero,

    #[error("matrix is singular")]
    Singular,

    #[error("insufficient rank: needed {needed}, found {found}")]
    InsufficientRank { needed: usize, found: usize },

    #[error("target rows are not in the row space of the basis")]
    NoSolution,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("demand matrix has rank {rank} but {rows} rows")]
    RankDeficient { rank: usize, rows: usize },

    #[error("parameters outside the scheme's regime: {0}")]
    WrongRegime(String),

    #[error("assignment is infeasible: nullspace matrix has rank {rank}, need {needed}")]
    Infeasible { rank: usize, needed: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("server {server} used output of dataset {dataset} outside its assignment")]
    ProtocolViolation { server: usize, dataset: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
