use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("singular coefficient matrix")]
    Singular,
    #[error("zero solution")]
    ZeroSolution,
    #[error("generator chain broken at {0}")]
    ChainBroken(String),
    #[error("matrix is not {{1;1}}-quasiseparable (residual {residual:.3e} > tol {tol:.3e})")]
    NotQuasiseparable { residual: f64, tol: f64 },
    #[error("weighted ratio undefined: nonzero weight on zero parameter {0}")]
    RatioUndefined(String),
    #[error("weights must be nonnegative and finite ({0})")]
    BadWeights(String),
    #[error("derivative count mismatch: {0}")]
    CountMismatch(String),
    #[error("enumeration budget exceeded: {count} parameters > {budget}")]
    BudgetExceeded { count: usize, budget: usize },
    #[error("numerically unreliable solve: backward error {0:.3e}")]
    Unreliable(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
