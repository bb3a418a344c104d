//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SpecfunError {
    #[error("B(t) is not Hermitian at t = {t} (defect {defect:.3e})")]
    BNotHermitian { t: f64, defect: f64 },

    #[error("Delta(t) is not positive semidefinite at t = {t} (eigenvalue {eigenvalue:.3e})")]
    DeltaNotPsd { t: f64, eigenvalue: f64 },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("step size underflow at t = {t} (|h| = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("t = {t} lies outside the system interval [{a}, {b}]")]
    OutOfInterval { t: f64, a: f64, b: f64 },

    #[error("subspace is not J-neutral (form norm {defect:.3e})")]
    EtaNotNeutral { defect: f64 },

    #[error("tau is not admissible: its J-companion is not neutral (form norm {defect:.3e})")]
    TauNotAdmissible { defect: f64 },

    #[error("system is not tau-definite: a null-manifold solution starts in tau")]
    NotTauDefinite,

    #[error("singular right endpoint is not supported")]
    SingularEndpoint,

    #[error("boundary value problem is singular at lambda = {lambda} (cond {cond:.3e})")]
    SingularBvp { lambda: num_complex::Complex64, cond: f64 },

    #[error("C0(λ) - C1(λ)·Ṁ(λ) is not invertible at lambda = {lambda}")]
    SingularTransform { lambda: num_complex::Complex64 },

    #[error("lambda = {lambda} is too close to the real axis (|Im| < {min_imag:.1e})")]
    LambdaTooReal { lambda: num_complex::Complex64, min_imag: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular matrix encountered: {0}")]
    SingularMatrix(String),

    #[error("extrapolation diverged on cell [{left}, {right}]")]
    ExtrapolationDiverged { left: f64, right: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),
}
