use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("field is not properly normalized: max |‖ζ_k‖ - 1| = {deviation:e} > {tol:e}")]
    NotNormalized { deviation: f64, tol: f64 },
    #[error("quadrature diverged: {0}")]
    Divergent(String),
    #[error("kernel evaluation failed at node pair ({0}, {1})")]
    KernelEvaluation(usize, usize),
    #[error("amplitude |z|^2 = {norm_sq} exceeds truncation guard {limit} for cutoff {cutoff}")]
    Truncation { norm_sq: f64, limit: f64, cutoff: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("infeasible trial state: rho_vac = {rho_vac:e} at k_ph = {k_ph:?}, k = {k:?}")]
    Infeasible { rho_vac: f64, k_ph: [f64; 3], k: [f64; 3] },
    #[error("charge conjugation construction failed: {0}")]
    ChargeConjugation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
