//! Numerical spectral theory for first-order symmetric differential systems
//!
//! The central object is the system `J y' - B(t) y = λ Δ(t) y` on a finite
//! interval `[a, b]`, where `J` is a fixed skew-adjoint signature matrix,
//! `B(t)` is Hermitian and `Δ(t)` is positive semidefinite. The crate
//! computes:
//!
//! * fundamental matrix solutions with the J-symplectic invariant enforced
//!   ([`propagate`]),
//! * boundary geometry for a subspace `τ` with neutral J-companion and the
//!   associated boundary maps on endpoint data ([`boundary`]),
//! * the Weyl matrix `M₊(λ)` and its derived blocks ([`weyl`]),
//! * m-functions `m_τ(λ)` parameterized by Nevanlinna operator pairs
//!   `{C₀(λ), C₁(λ)}`, with two independent computation paths
//!   ([`nevanlinna`]),
//! * matrix distribution functions via Stieltjes inversion, generalized
//!   Fourier transforms, Parseval checks and resolvent kernels
//!   ([`spectral`]).
//!
//! The batch front end lives in [`cli`]; ready-made example systems in
//! [`presets`].

pub mod boundary;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod nevanlinna;
pub mod presets;
pub mod propagate;
pub mod quad;
pub mod spectral;
pub mod system;
pub mod weyl;

pub use error::SpecfunError;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVec = nalgebra::DVector<C64>;

pub type Result<T> = std::result::Result<T, SpecfunError>;
