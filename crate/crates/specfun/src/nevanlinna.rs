//! Nevanlinna boundary parameters `{C₀(λ), C₁(λ)}` and the m-functions
//! they generate, with two independent computation paths: the
//! linear-fractional formula in the Weyl blocks and a direct boundary
//! value problem.

use std::sync::Arc;

use crate::boundary::{BoundaryGeometry, TripletMaps};
use crate::linalg;
use crate::propagate::{frame_gram, Propagator, PropagatorSpec};
use crate::system::SymmetricSystem;
use crate::weyl::{self, solve_boundary_problem, BoundarySolve, WeylData, MIN_IMAG_LAMBDA};
use crate::{C64, CMat, Result, SpecfunError};

type MatrixFn = Arc<dyn Fn(C64) -> CMat + Send + Sync>;

/// A boundary parameter: a pair of matrix functions on the upper
/// half-plane, constant in the serializable case.
#[derive(Clone)]
pub enum BoundaryParameter {
    Constant { c0: CMat, c1: CMat },
    Callable { c0: MatrixFn, c1: MatrixFn },
}

impl std::fmt::Debug for BoundaryParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryParameter::Constant { c0, c1 } => f
                .debug_struct("BoundaryParameter::Constant")
                .field("c0", c0)
                .field("c1", c1)
                .finish(),
            BoundaryParameter::Callable { .. } => f.write_str("BoundaryParameter::Callable(..)"),
        }
    }
}

impl BoundaryParameter {
    pub fn constant(c0: CMat, c1: CMat) -> Result<Self> {
        if c0.nrows() != c1.nrows() || c0.nrows() != c0.ncols() || c1.nrows() != c1.ncols() {
            return Err(SpecfunError::ShapeMismatch(format!(
                "parameter blocks must be square of equal size, got {}x{} and {}x{}",
                c0.nrows(),
                c0.ncols(),
                c1.nrows(),
                c1.ncols()
            )));
        }
        Ok(BoundaryParameter::Constant { c0, c1 })
    }

    /// The pair `{I, 0}`; its m-function is the bare `m₀`.
    pub fn dirichlet(dim: usize) -> Self {
        BoundaryParameter::Constant { c0: CMat::identity(dim, dim), c1: CMat::zeros(dim, dim) }
    }

    /// The pair `{0, I}`.
    pub fn neumann(dim: usize) -> Self {
        BoundaryParameter::Constant { c0: CMat::zeros(dim, dim), c1: CMat::identity(dim, dim) }
    }

    pub fn callable(c0: MatrixFn, c1: MatrixFn) -> Self {
        BoundaryParameter::Callable { c0, c1 }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, BoundaryParameter::Constant { .. })
    }

    pub fn c0_at(&self, lambda: C64) -> CMat {
        match self {
            BoundaryParameter::Constant { c0, .. } => c0.clone(),
            BoundaryParameter::Callable { c0, .. } => c0(lambda),
        }
    }

    pub fn c1_at(&self, lambda: C64) -> CMat {
        match self {
            BoundaryParameter::Constant { c1, .. } => c1.clone(),
            BoundaryParameter::Callable { c1, .. } => c1(lambda),
        }
    }

    pub fn dim(&self, probe: C64) -> usize {
        self.c0_at(probe).nrows()
    }
}

/// Outcome of the operator-pair class check at the sampled points.
#[derive(Debug, Clone)]
pub struct ClassReport {
    pub valid: bool,
    /// Violations as `(λ, description)`.
    pub violations: Vec<(C64, String)>,
}

/// Checks the Nevanlinna pair conditions at each sample: the accretivity
/// form `2 Im(C₁ C₀*)` must be nonnegative and `C₀ - i C₁` invertible.
/// For regular systems the two parameter spaces coincide, so the interior
/// projections reduce to the identity.
pub fn validate_pair(param: &BoundaryParameter, lambda_samples: &[C64], tol: f64) -> ClassReport {
    let mut violations = Vec::new();
    for &lambda in lambda_samples {
        let c0 = param.c0_at(lambda);
        let c1 = param.c1_at(lambda);
        if c0.nrows() != c1.nrows() || c0.ncols() != c1.ncols() {
            violations.push((lambda, "block shapes differ".to_string()));
            continue;
        }
        let form = linalg::imag_part(&(&c1 * c0.adjoint())) * C64::new(2.0, 0.0);
        let min_eig = linalg::hermitian_min_eig(&form);
        if min_eig < -tol {
            violations.push((lambda, format!("accretivity form has eigenvalue {min_eig:.3e}")));
        }
        let pencil = &c0 - &c1 * C64::new(0.0, 1.0);
        let cond = linalg::spectral_cond(&pencil);
        if !cond.is_finite() || cond > 1e12 {
            violations.push((lambda, format!("C0 - i C1 is singular (cond {cond:.3e})")));
        }
    }
    ClassReport { valid: violations.is_empty(), violations }
}

/// True for constant pairs with Hermitian `C₁ C₀*` and both `C₀ ± i C₁`
/// invertible; these are exactly the parameters producing canonical
/// (in-space self-adjoint) boundary conditions.
pub fn is_selfadjoint_parameter(param: &BoundaryParameter, tol: f64) -> bool {
    if !param.is_constant() {
        return false;
    }
    let probe = C64::new(0.0, 1.0);
    let c0 = param.c0_at(probe);
    let c1 = param.c1_at(probe);
    if linalg::max_abs(&linalg::imag_part(&(&c1 * c0.adjoint()))) > tol {
        return false;
    }
    for sign in [1.0, -1.0] {
        let pencil = &c0 + &c1 * C64::new(0.0, sign);
        let cond = linalg::spectral_cond(&pencil);
        if !cond.is_finite() || cond > 1e12 {
            return false;
        }
    }
    true
}

/// One m-function evaluation.
#[derive(Debug, Clone)]
pub struct MFunctionSample {
    pub lambda: C64,
    /// `dim 𝐇₀` square matrix.
    pub value: CMat,
}

fn transform_inverse(weyl: &WeylData, c0: &CMat, c1: &CMat) -> Result<CMat> {
    let pencil = c0 - c1 * &weyl.m_dot;
    let cond = linalg::spectral_cond(&pencil);
    if !cond.is_finite() || cond > 1e12 {
        return Err(SpecfunError::SingularTransform { lambda: weyl.lambda });
    }
    linalg::solve_square(&pencil, c1).map_err(|_| SpecfunError::SingularTransform { lambda: weyl.lambda })
}

/// `m_τ(λ) = m₀(λ) + S₁(λ) (C₀ - C₁ Ṁ₊)⁻¹ C₁ S₂(λ)`.
pub fn m_tau_formula(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    triplet: &TripletMaps,
    param: &BoundaryParameter,
    lambda: C64,
    spec: &PropagatorSpec,
) -> Result<MFunctionSample> {
    let weyl = weyl::weyl_function(sys, geom, triplet, lambda, spec)?;
    m_tau_from_weyl(&weyl, param)
}

/// Same formula applied to an already computed Weyl package.
pub fn m_tau_from_weyl(weyl: &WeylData, param: &BoundaryParameter) -> Result<MFunctionSample> {
    let c0 = param.c0_at(weyl.lambda);
    let c1 = param.c1_at(weyl.lambda);
    let hdot = weyl.m_dot.nrows();
    if c0.nrows() != hdot {
        return Err(SpecfunError::ShapeMismatch(format!(
            "parameter dimension {} does not match the boundary space dimension {hdot}",
            c0.nrows()
        )));
    }
    let b_tau = transform_inverse(weyl, &c0, &c1)?;
    let value = &weyl.m0 + &weyl.s1 * b_tau * &weyl.s2;
    Ok(MFunctionSample { lambda: weyl.lambda, value })
}

/// Builds the inhomogeneity of the direct boundary value problem from the
/// parameter blocks: zero on the `H₁⊥` slot, then the `H₁` block of
/// `C₀`, the combined middle block, and the negated `H₁` block of `C₁`.
fn phi_matrix(geom: &BoundaryGeometry, c0: &CMat, c1: &CMat) -> CMat {
    let k_perp = geom.k_perp();
    let k_one = geom.h1_dim();
    let nu_hat = geom.dims().nu_hat;
    let hdot = geom.hdot_dim();
    let h0 = geom.h0_dim();
    let mut phi = CMat::zeros(hdot, h0);
    for r in 0..hdot {
        for c in 0..k_one {
            phi[(r, k_perp + c)] = c0[(r, c)];
        }
        for c in 0..nu_hat {
            phi[(r, k_perp + k_one + c)] = c0[(r, k_one + c)] + c1[(r, k_one + c)] * C64::new(0.0, 0.5);
        }
        for c in 0..k_one {
            phi[(r, k_perp + k_one + nu_hat + c)] = -c1[(r, c)];
        }
    }
    phi
}

/// Solves the boundary value problem whose solution family carries the
/// m-function directly: the `H₁⊥` reading is the negated projection and
/// the parameter couples the dotted boundary maps. Returns the solution
/// and `m_τ(λ)` read off its initial data.
pub fn m_tau_bvp(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    triplet: &TripletMaps,
    param: &BoundaryParameter,
    lambda: C64,
    spec: &PropagatorSpec,
) -> Result<(BoundarySolve, MFunctionSample)> {
    if lambda.im < MIN_IMAG_LAMBDA {
        return Err(SpecfunError::LambdaTooReal { lambda, min_imag: MIN_IMAG_LAMBDA });
    }
    let n = geom.n();
    let k_perp = geom.k_perp();
    let h0 = geom.h0_dim();
    let c0 = param.c0_at(lambda);
    let c1 = param.c1_at(lambda);
    if c0.nrows() != geom.hdot_dim() {
        return Err(SpecfunError::ShapeMismatch(format!(
            "parameter dimension {} does not match the boundary space dimension {}",
            c0.nrows(),
            geom.hdot_dim()
        )));
    }

    let mut rows = CMat::zeros(n, 2 * n);
    for r in 0..k_perp {
        for c in 0..2 * n {
            rows[(r, c)] = triplet.gamma_1a_perp[(r, c)];
        }
    }
    let coupled = &c0 * &triplet.g0_dot - &c1 * &triplet.g1_dot;
    for r in 0..n - k_perp {
        for c in 0..2 * n {
            rows[(k_perp + r, c)] = coupled[(r, c)];
        }
    }

    let mut rhs = CMat::zeros(n, h0);
    for i in 0..k_perp {
        rhs[(i, i)] = C64::new(-1.0, 0.0);
    }
    let phi = phi_matrix(geom, &c0, &c1);
    for r in 0..n - k_perp {
        for c in 0..h0 {
            rhs[(k_perp + r, c)] = phi[(r, c)];
        }
    }

    let prop = Propagator::new(sys, lambda, spec.clone());
    let solve = solve_boundary_problem(&prop, geom, &rows, &rhs, None)?;
    let value = &triplet.gamma_a_h0 * &solve.stacked + geom.j0(sys.j()) * C64::new(0.5, 0.0);
    Ok((solve, MFunctionSample { lambda, value }))
}

/// Largest violation of the Herglotz property over a sample set:
/// `max(-min eig Im m)`, nonpositive means every sample passes.
pub fn herglotz_defect(samples: &[MFunctionSample]) -> f64 {
    samples
        .iter()
        .map(|s| -linalg::hermitian_min_eig(&linalg::imag_part(&s.value)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest eigenvalue of `Im m_τ(λ) - Im λ · ∫ v*(t) Δ(t) v(t) dt`; it
/// is nonnegative up to tolerance and vanishes for self-adjoint
/// parameters. The `Im λ` factor is forced by the Lagrange identity
/// applied to the defining solution family.
pub fn energy_inequality_defect(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    triplet: &TripletMaps,
    param: &BoundaryParameter,
    lambda: C64,
    spec: &PropagatorSpec,
) -> Result<f64> {
    let (solve, sample) = m_tau_bvp(sys, geom, triplet, param, lambda, spec)?;
    let prop = Propagator::new(sys, lambda, spec.clone());
    let gram = frame_gram(&prop, &solve.initial, &solve.initial)?;
    let diff = linalg::imag_part(&sample.value) - gram * C64::new(lambda.im, 0.0);
    Ok(linalg::hermitian_min_eig(&diff))
}

/// Decay data along the imaginary axis for one admissibility expression.
#[derive(Debug, Clone)]
pub struct DecayTrace {
    /// `(y, norm)` pairs at the points that evaluated successfully.
    pub norms: Vec<(f64, f64)>,
    /// Fitted log-log slope, when at least two informative points exist.
    pub slope: Option<f64>,
    /// Norm at the largest successful grid point.
    pub top_norm: f64,
}

#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub resolvent_term: DecayTrace,
    pub weyl_term: DecayTrace,
    /// Grid points that failed, with reasons.
    pub failures: Vec<(f64, String)>,
    pub admissible: bool,
}

/// Decision thresholds for the finite-grid admissibility heuristic: the
/// limits are decided by the norm at the top of the grid together with a
/// negative fitted decay slope.
#[derive(Debug, Clone)]
pub struct AdmissibilityThresholds {
    pub top_norm: f64,
    pub slope: f64,
}

impl Default for AdmissibilityThresholds {
    fn default() -> Self {
        AdmissibilityThresholds { top_norm: 1e-3, slope: -0.5 }
    }
}

/// Default probe grid along the imaginary axis.
pub fn default_y_grid() -> Vec<f64> {
    vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6]
}

fn fit_trace(points: &[(f64, f64)]) -> DecayTrace {
    let top_norm = points.last().map(|&(_, n)| n).unwrap_or(f64::NAN);
    let informative: Vec<(f64, f64)> =
        points.iter().copied().filter(|&(_, n)| n.is_finite() && n > 1e-300).collect();
    let slope = if informative.len() >= 2 {
        let xs: Vec<f64> = informative.iter().map(|&(y, _)| y.ln()).collect();
        let ys: Vec<f64> = informative.iter().map(|&(_, n)| n.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Some(num / den)
    } else {
        None
    };
    DecayTrace { norms: points.to_vec(), slope, top_norm }
}

fn trace_passes(trace: &DecayTrace, thresholds: &AdmissibilityThresholds) -> bool {
    if trace.norms.is_empty() {
        return false;
    }
    // An expression that is numerically zero has already reached its limit.
    if trace.top_norm < 1e-14 {
        return true;
    }
    trace.top_norm < thresholds.top_norm && trace.slope.map(|s| s < thresholds.slope).unwrap_or(false)
}

/// Evaluates the two admissibility expressions along `i y_grid` and fits
/// their decay. A genuine limit cannot be machine-checked; the verdict is
/// a reported heuristic.
pub fn check_admissible(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    triplet: &TripletMaps,
    param: &BoundaryParameter,
    y_grid: &[f64],
    thresholds: &AdmissibilityThresholds,
    spec: &PropagatorSpec,
) -> AdmissibilityReport {
    let mut term1 = Vec::new();
    let mut term2 = Vec::new();
    let mut failures = Vec::new();
    for &y in y_grid {
        let lambda = C64::new(0.0, y);
        let inv_iy = C64::new(1.0, 0.0) / lambda;
        match weyl::weyl_function(sys, geom, triplet, lambda, spec) {
            Ok(weyl) => {
                let c0 = param.c0_at(lambda);
                let c1 = param.c1_at(lambda);
                match transform_inverse(&weyl, &c0, &c1) {
                    Ok(b_tau) => {
                        term1.push((y, linalg::spectral_norm(&(&b_tau * inv_iy))));
                        let pencil = &c0 - &c1 * &weyl.m_dot;
                        match linalg::solve_square(&pencil, &c0) {
                            Ok(inv_c0) => {
                                let expr = &weyl.m_dot * inv_c0 * inv_iy;
                                term2.push((y, linalg::spectral_norm(&expr)));
                            }
                            Err(e) => failures.push((y, e.to_string())),
                        }
                    }
                    Err(e) => failures.push((y, e.to_string())),
                }
            }
            Err(e) => failures.push((y, e.to_string())),
        }
    }
    let resolvent_term = fit_trace(&term1);
    let weyl_term = fit_trace(&term2);
    let admissible = trace_passes(&resolvent_term, thresholds) && trace_passes(&weyl_term, thresholds);
    AdmissibilityReport { resolvent_term, weyl_term, failures, admissible }
}

/// Per-direction divergence estimate for the universal-admissibility
/// criterion.
#[derive(Debug, Clone)]
pub struct DivergenceEstimate {
    /// `(y, y · Im(Ṁ₊(iy) h, h))` along the grid.
    pub values: Vec<(f64, f64)>,
    pub diverges: bool,
}

#[derive(Debug, Clone)]
pub struct UniversalAdmissibilityReport {
    /// Norm of `Ṁ₊(iy)` restricted to the incoming boundary space at the
    /// largest grid point; the criterion needs this limit to vanish.
    pub limit_norm: f64,
    pub limit_vanishes: bool,
    pub divergence: Vec<DivergenceEstimate>,
    pub universal: bool,
}

/// Tests the two-part criterion under which every boundary parameter is
/// admissible: the restricted Weyl block must vanish along the imaginary
/// axis while its quadratic form diverges after scaling by `y`.
pub fn universal_admissibility(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    triplet: &TripletMaps,
    y_grid: &[f64],
    spec: &PropagatorSpec,
) -> UniversalAdmissibilityReport {
    let hdot = geom.hdot_dim();
    let mut samples: Vec<(f64, CMat)> = Vec::new();
    for &y in y_grid {
        if let Ok(weyl) = weyl::weyl_function(sys, geom, triplet, C64::new(0.0, y), spec) {
            samples.push((y, weyl.m_dot));
        }
    }
    if samples.is_empty() {
        return UniversalAdmissibilityReport {
            limit_norm: f64::NAN,
            limit_vanishes: false,
            divergence: Vec::new(),
            universal: false,
        };
    }
    let limit_norm = linalg::spectral_norm(&samples.last().unwrap().1);
    let limit_vanishes = limit_norm < 1e-3;
    let mut divergence = Vec::new();
    for k in 0..hdot {
        let mut values = Vec::new();
        for (y, m_dot) in &samples {
            let h = CMat::from_fn(hdot, 1, |r, _| {
                if r == k {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let form = (h.adjoint() * linalg::imag_part(m_dot) * &h)[(0, 0)].re;
            values.push((*y, y * form));
        }
        let diverges = values.len() >= 2
            && values.last().unwrap().1 > 1e2
            && values.last().unwrap().1 > 2.0 * values.first().unwrap().1.abs();
        divergence.push(DivergenceEstimate { values, diverges });
    }
    let universal = limit_vanishes && divergence.iter().all(|d| d.diverges);
    UniversalAdmissibilityReport { limit_norm, limit_vanishes, divergence, universal }
}
