//! Symmetric differential systems `J y' - B(t) y = λ Δ(t) y`: dimensions,
//! signature matrix, coefficient fields, validation and definiteness
//! probes.

use serde::{Deserialize, Serialize};

use crate::boundary::Subspace;
use crate::linalg;
use crate::propagate::{frame_gram, Propagator, PropagatorSpec};
use crate::{C64, CMat, Result, SpecfunError};

/// Block dimensions of the state space `H ⊕ Ĥ ⊕ H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    /// dim H, at least 1.
    pub nu: usize,
    /// dim Ĥ, possibly 0.
    pub nu_hat: usize,
}

impl Dimensions {
    pub fn new(nu: usize, nu_hat: usize) -> Result<Self> {
        if nu == 0 {
            return Err(SpecfunError::InvalidInput("nu must be at least 1".into()));
        }
        Ok(Dimensions { nu, nu_hat })
    }

    /// Total dimension `n = 2 nu + nu_hat`.
    pub fn n(&self) -> usize {
        2 * self.nu + self.nu_hat
    }
}

/// The signature matrix with blocks `-I` (upper right), `i I` (middle),
/// `I` (lower left) relative to `H ⊕ Ĥ ⊕ H`.
pub fn build_signature(dims: &Dimensions) -> CMat {
    let n = dims.n();
    let nu = dims.nu;
    let mut j = CMat::zeros(n, n);
    for k in 0..nu {
        j[(k, nu + dims.nu_hat + k)] = C64::new(-1.0, 0.0);
        j[(nu + dims.nu_hat + k, k)] = C64::new(1.0, 0.0);
    }
    for k in 0..dims.nu_hat {
        j[(nu + k, nu + k)] = C64::new(0.0, 1.0);
    }
    j
}

/// Machine-representable coefficient field kinds.
#[derive(Debug, Clone)]
pub enum CoefficientField {
    Constant(CMat),
    /// Matrix polynomial in `t`: `coeffs[0] + t coeffs[1] + ...`.
    Polynomial(Vec<CMat>),
    /// Right-continuous step function. `values[i]` holds on
    /// `[breaks[i], breaks[i+1])`; `breaks` has one more entry than
    /// `values` and spans the whole interval.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<CMat> },
    /// Entrywise linear interpolation of samples at strictly increasing
    /// times.
    Tabulated { times: Vec<f64>, values: Vec<CMat> },
}

impl CoefficientField {
    pub fn eval(&self, t: f64) -> CMat {
        match self {
            CoefficientField::Constant(m) => m.clone(),
            CoefficientField::Polynomial(coeffs) => {
                let n = coeffs[0].nrows();
                let mut acc = CMat::zeros(n, coeffs[0].ncols());
                for c in coeffs.iter().rev() {
                    acc = acc * C64::new(t, 0.0) + c;
                }
                acc
            }
            CoefficientField::PiecewiseConstant { breaks, values } => {
                let mut idx = match breaks.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.saturating_sub(1),
                };
                idx = idx.min(values.len() - 1);
                values[idx].clone()
            }
            CoefficientField::Tabulated { times, values } => {
                if t <= times[0] {
                    return values[0].clone();
                }
                if t >= *times.last().unwrap() {
                    return values.last().unwrap().clone();
                }
                let hi = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
                    Ok(i) => return values[i].clone(),
                    Err(i) => i,
                };
                let lo = hi - 1;
                let w = (t - times[lo]) / (times[hi] - times[lo]);
                &values[lo] * C64::new(1.0 - w, 0.0) + &values[hi] * C64::new(w, 0.0)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CoefficientField::Constant(_))
    }

    /// Interior points where the field is not smooth; integrators land on
    /// these exactly.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            CoefficientField::Constant(_) | CoefficientField::Polynomial(_) => Vec::new(),
            CoefficientField::PiecewiseConstant { breaks, .. } => breaks.clone(),
            CoefficientField::Tabulated { times, .. } => times.clone(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            CoefficientField::Constant(m) => m.nrows(),
            CoefficientField::Polynomial(c) => c[0].nrows(),
            CoefficientField::PiecewiseConstant { values, .. } => values[0].nrows(),
            CoefficientField::Tabulated { values, .. } => values[0].nrows(),
        }
    }

    fn validate_shape(&self, n: usize) -> Result<()> {
        let ok = match self {
            CoefficientField::Constant(m) => m.nrows() == n && m.ncols() == n,
            CoefficientField::Polynomial(c) => {
                !c.is_empty() && c.iter().all(|m| m.nrows() == n && m.ncols() == n)
            }
            CoefficientField::PiecewiseConstant { breaks, values } => {
                !values.is_empty()
                    && breaks.len() == values.len() + 1
                    && breaks.windows(2).all(|w| w[0] < w[1])
                    && values.iter().all(|m| m.nrows() == n && m.ncols() == n)
            }
            CoefficientField::Tabulated { times, values } => {
                times.len() >= 2
                    && times.len() == values.len()
                    && times.windows(2).all(|w| w[0] < w[1])
                    && values.iter().all(|m| m.nrows() == n && m.ncols() == n)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SpecfunError::ShapeMismatch(format!(
                "coefficient field inconsistent with n = {n} (payload dim {})",
                self.dim()
            )))
        }
    }
}

/// A regular symmetric system on a finite interval.
#[derive(Debug, Clone)]
pub struct SymmetricSystem {
    dims: Dimensions,
    interval: (f64, f64),
    b_field: CoefficientField,
    delta_field: CoefficientField,
    j: CMat,
}

impl SymmetricSystem {
    /// Builds a system, rejecting infinite intervals: only regular systems
    /// are representable.
    pub fn new(
        dims: Dimensions,
        interval: (f64, f64),
        b_field: CoefficientField,
        delta_field: CoefficientField,
    ) -> Result<Self> {
        let (a, b) = interval;
        if !a.is_finite() || !b.is_finite() {
            return Err(SpecfunError::SingularEndpoint);
        }
        if a >= b {
            return Err(SpecfunError::InvalidInput(format!(
                "interval [{a}, {b}] is empty"
            )));
        }
        let n = dims.n();
        b_field.validate_shape(n)?;
        delta_field.validate_shape(n)?;
        let j = build_signature(&dims);
        Ok(SymmetricSystem { dims, interval, b_field, delta_field, j })
    }

    pub fn dims(&self) -> &Dimensions {
        &self.dims
    }

    pub fn n(&self) -> usize {
        self.dims.n()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn a(&self) -> f64 {
        self.interval.0
    }

    pub fn b_end(&self) -> f64 {
        self.interval.1
    }

    pub fn j(&self) -> &CMat {
        &self.j
    }

    pub fn b_at(&self, t: f64) -> CMat {
        self.b_field.eval(t)
    }

    pub fn delta_at(&self, t: f64) -> CMat {
        self.delta_field.eval(t)
    }

    pub fn b_field(&self) -> &CoefficientField {
        &self.b_field
    }

    pub fn delta_field(&self) -> &CoefficientField {
        &self.delta_field
    }

    pub fn has_constant_coefficients(&self) -> bool {
        self.b_field.is_constant() && self.delta_field.is_constant()
    }

    /// Interior breakpoints of either field, sorted, strictly inside the
    /// interval.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.interval;
        let mut pts: Vec<f64> = self
            .b_field
            .breakpoints()
            .into_iter()
            .chain(self.delta_field.breakpoints())
            .filter(|&t| t > a && t < b)
            .collect();
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        pts
    }

    /// Right-hand side matrix of the first-order form
    /// `y' = -J (B(t) + λ Δ(t)) y`.
    pub fn ode_matrix(&self, t: f64, lambda: C64) -> CMat {
        -(&self.j) * (self.b_at(t) + self.delta_at(t) * lambda)
    }
}

/// One validation violation with the sample point that produced it.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<SpecfunError>,
}

/// Checks `B(t) = B(t)*` and `Δ(t) ⪰ 0` on the sample grid.
pub fn validate_system(sys: &SymmetricSystem, sample_grid: &[f64], tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    for &t in sample_grid {
        let b = sys.b_at(t);
        let defect = linalg::max_abs(&(&b - b.adjoint()));
        if defect > tol {
            violations.push(SpecfunError::BNotHermitian { t, defect });
        }
        let d = sys.delta_at(t);
        let min_eig = linalg::hermitian_min_eig(&d);
        if min_eig < -tol {
            violations.push(SpecfunError::DeltaNotPsd { t, eigenvalue: min_eig });
        }
    }
    ValidationReport { passed: violations.is_empty(), violations }
}

/// Uniform sample grid for validation, including field breakpoints.
pub fn default_sample_grid(sys: &SymmetricSystem, count: usize) -> Vec<f64> {
    let (a, b) = sys.interval();
    let mut grid: Vec<f64> = (0..=count).map(|i| a + (b - a) * i as f64 / count as f64).collect();
    grid.extend(sys.breakpoints());
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid.dedup();
    grid
}

/// Initial data of the null manifold: solutions annihilated by the weight.
#[derive(Debug, Clone)]
pub struct NullManifoldReport {
    pub dim_null: usize,
    /// n x dim_null matrix whose columns are values `y(a)` of a basis of
    /// the null manifold.
    pub basis_initial_data: CMat,
    pub definite: bool,
}

/// Detects the null manifold from the kernel of the weighted Gram matrix
/// of the full fundamental frame. The result does not depend on the probe
/// point up to tolerance.
pub fn probe_null_manifold(
    sys: &SymmetricSystem,
    probe_lambda: C64,
    tol: f64,
    spec: &PropagatorSpec,
) -> Result<NullManifoldReport> {
    let n = sys.n();
    let id = CMat::identity(n, n);
    let prop = Propagator::new(sys, probe_lambda, spec.clone());
    let gram = frame_gram(&prop, &id, &id)?;

    // Convergence check against a half-resolution table.
    let mut coarse_spec = spec.clone();
    coarse_spec.quad.panels = (spec.quad.panels / 2).max(1);
    let coarse = Propagator::new(sys, probe_lambda, coarse_spec);
    let gram_coarse = frame_gram(&coarse, &id, &id)?;
    let scale = linalg::max_abs(&gram).max(1.0);
    if linalg::max_abs(&(&gram - &gram_coarse)) > 1e-6 * scale {
        return Err(SpecfunError::QuadratureFailure(
            "weighted Gram matrix did not converge at the requested resolution".into(),
        ));
    }

    let svd = gram.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |acc, &v| acc.max(v));
    let v_t = svd.v_t.expect("requested V in SVD");
    let mut kernel_cols = Vec::new();
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] <= tol * smax.max(1e-300) || smax == 0.0 {
            kernel_cols.push(v_t.row(i).adjoint());
        }
    }
    let dim_null = kernel_cols.len();
    let mut basis = CMat::zeros(n, dim_null);
    for (k, col) in kernel_cols.iter().enumerate() {
        basis.set_column(k, col);
    }
    linalg::phase_normalize_columns(&mut basis);
    Ok(NullManifoldReport { dim_null, basis_initial_data: basis, definite: dim_null == 0 })
}

/// True if no nonzero null-manifold solution starts in `tau`.
pub fn tau_definite(
    sys: &SymmetricSystem,
    tau: &Subspace,
    probe_lambda: C64,
    tol: f64,
    spec: &PropagatorSpec,
) -> Result<bool> {
    let report = probe_null_manifold(sys, probe_lambda, tol, spec)?;
    if report.definite || tau.dim() == 0 {
        return Ok(true);
    }
    // Nontrivial intersection of span(basis) with tau shows up as a rank
    // drop of the concatenated frames.
    let n = sys.n();
    let k = report.dim_null + tau.dim();
    let mut cat = CMat::zeros(n, k);
    for j in 0..report.dim_null {
        cat.set_column(j, &report.basis_initial_data.column(j));
    }
    for j in 0..tau.dim() {
        cat.set_column(report.dim_null + j, &tau.frame().column(j));
    }
    Ok(linalg::rank(&cat, tol) == k)
}
