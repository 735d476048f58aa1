use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Jacobian determinant {det:e} below 1e-12 at {at:?}")]
    DegenerateJacobian { det: f64, at: Vec<f64> },

    #[error("branch root for target {target} did not converge (residual {residual:e})")]
    RootFindFailure { target: f64, residual: f64 },

    #[error("preimage tree of size {nodes} exceeds node budget {budget}")]
    TreeOverflow { nodes: usize, budget: usize },

    #[error("grid refinement budget of {budget} samples exceeded before convergence (last delta {last_delta:e})")]
    GridBudgetExceeded { budget: usize, last_delta: f64 },

    #[error("eigenvalue iteration failed to converge")]
    EigenSolverFailure,

    #[error("no eigenvalue within 1e-6 of 1 (nearest: {nearest})")]
    NoUnitEigenvalue { nearest: num_complex::Complex64 },

    #[error("Bessel argument |{z}| outside supported range")]
    BesselRangeError { z: f64 },

    #[error("certification failed: {check} at q_x={qx}, xi_x={xix} (value {value}, bound {bound})")]
    CertFailed {
        check: String,
        qx: f64,
        xix: f64,
        value: f64,
        bound: f64,
    },
}
