use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("not a soliton background: {0}")]
    NotSoliton(String),

    #[error("metric degenerate at node {node} (1+a = {one_plus_a:.3e}, 1+b = {one_plus_b:.3e})")]
    MetricDegenerate {
        node: usize,
        one_plus_a: f64,
        one_plus_b: f64,
    },

    #[error("resonant lambda_star: {lambda_star} within {tol:.1e} of eigenvalue {eigenvalue}")]
    ResonantLambdaStar {
        lambda_star: f64,
        eigenvalue: f64,
        tol: f64,
    },

    #[error("region empty: {0}")]
    RegionEmpty(String),

    #[error("no crossing detected: {0}")]
    NoCrossing(String),

    #[error("barrier crossing inequality failed: {0}")]
    CrossingFailed(String),

    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
