use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("invalid mode space: {0}")]
    InvalidSpace(String),

    #[error("operators act on different mode spaces")]
    SpaceMismatch,

    #[error("operator in Hermitian role deviates from its adjoint by {deviation:.3e} (relative)")]
    NonHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error(
        "integration failure: trace drift {max_drift:.3e} at t = {time:.6e} s exceeds tolerance {tolerance:.3e}"
    )]
    TraceDrift {
        max_drift: f64,
        time: f64,
        tolerance: f64,
    },

    #[error("population {population:.3e} in the top Fock level of mode `{mode}` exceeds {tolerance:.1e}; raise the truncation")]
    TruncationTail {
        mode: String,
        population: f64,
        tolerance: f64,
    },

    #[error("step size too large: dt * fastest rate = {product:.3} (limit {limit})")]
    StepTooLarge { product: f64, limit: f64 },

    #[error("dispersive validity guard violated: {0}")]
    DispersiveValidity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),

    #[error("no real root: slope ratio {ratio:.6} exceeds 1")]
    NoRealRoot { ratio: f64 },

    #[error("budget {budget:.3e} s is smaller than one shot per point ({required:.3e} s)")]
    BudgetTooSmall { budget: f64, required: f64 },

    #[error("phase unwrap ambiguity between sense times {index} and {next}: |dphi| = {jump:.3}")]
    UnwrapAmbiguity { index: usize, next: usize, jump: f64 },

    #[error("dataset schema: {0}")]
    Schema(String),
}
