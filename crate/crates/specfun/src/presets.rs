//! Ready-made example systems used by the documentation, the tests and
//! the shipped configuration files.

use crate::system::{CoefficientField, Dimensions, SymmetricSystem};
use crate::{C64, CMat, CVec};

/// Free Hamiltonian system: `nu = 1`, `nu_hat = 0`, `B = 0`, `Δ = I` on
/// `[0, 1]`. Its fundamental solution is a rotation by `λ t`.
pub fn toy_hamiltonian() -> SymmetricSystem {
    let dims = Dimensions::new(1, 0).unwrap();
    let b = CoefficientField::Constant(CMat::zeros(2, 2));
    let delta = CoefficientField::Constant(CMat::identity(2, 2));
    SymmetricSystem::new(dims, (0.0, 1.0), b, delta).unwrap()
}

/// Free system with a middle channel: `nu = nu_hat = 1`, `B = 0`, `Δ = I`
/// on `[0, 1]`.
pub fn toy_with_middle_channel() -> SymmetricSystem {
    let dims = Dimensions::new(1, 1).unwrap();
    let b = CoefficientField::Constant(CMat::zeros(3, 3));
    let delta = CoefficientField::Constant(CMat::identity(3, 3));
    SymmetricSystem::new(dims, (0.0, 1.0), b, delta).unwrap()
}

/// Hamiltonian system with the degenerate weight `diag(1, 0)`; its null
/// manifold is spanned by the constant solution `(0, 1)`.
pub fn degenerate_weight() -> SymmetricSystem {
    let dims = Dimensions::new(1, 0).unwrap();
    let b = CoefficientField::Constant(CMat::zeros(2, 2));
    let delta = CoefficientField::Constant(CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    ));
    SymmetricSystem::new(dims, (0.0, 1.0), b, delta).unwrap()
}

/// Smooth tabulated-coefficient Hamiltonian system on `[0, 1]`; exercises
/// the Runge-Kutta propagation path.
pub fn tabulated_oscillator() -> SymmetricSystem {
    let dims = Dimensions::new(1, 0).unwrap();
    let samples = 33usize;
    let times: Vec<f64> = (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect();
    let b_values: Vec<CMat> = times
        .iter()
        .map(|&t| {
            CMat::from_row_slice(
                2,
                2,
                &[
                    C64::new(0.2 * (std::f64::consts::PI * t).cos(), 0.0),
                    C64::new(0.1, 0.05 * t),
                    C64::new(0.1, -0.05 * t),
                    C64::new(-0.15 * t, 0.0),
                ],
            )
        })
        .collect();
    let delta_values: Vec<CMat> = times
        .iter()
        .map(|&t| {
            CMat::from_row_slice(
                2,
                2,
                &[
                    C64::new(1.0 + 0.3 * (std::f64::consts::PI * t).sin(), 0.0),
                    C64::new(0.1 * t, 0.0),
                    C64::new(0.1 * t, 0.0),
                    C64::new(0.8, 0.0),
                ],
            )
        })
        .collect();
    let b = CoefficientField::Tabulated { times: times.clone(), values: b_values };
    let delta = CoefficientField::Tabulated { times, values: delta_values };
    SymmetricSystem::new(dims, (0.0, 1.0), b, delta).unwrap()
}

/// Spanning vector of the canonical boundary subspace for the 2x2 toy:
/// the first coordinate axis.
pub fn canonical_tau_vectors_2() -> CMat {
    CMat::from_row_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

/// Spanning vectors of the canonical boundary subspace for the 3x3 toy:
/// the first two coordinate axes.
pub fn canonical_tau_vectors_3() -> CMat {
    CMat::from_row_slice(
        3,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
}

/// Smooth test function vanishing at both endpoints, component `i` being
/// `sin((i + 1) π x)` in the normalized coordinate.
pub fn smooth_test_function(n: usize, a: f64, b: f64) -> impl Fn(f64) -> CVec + Sync + Send + Clone {
    move |t: f64| {
        let x = (t - a) / (b - a);
        CVec::from_fn(n, |i, _| C64::new(((i + 1) as f64 * std::f64::consts::PI * x).sin(), 0.0))
    }
}
