//! Stieltjes inversion to matrix distribution functions, generalized
//! Fourier transforms with Parseval checks, characteristic matrices and
//! resolvent cross-validation, and existence reports.

use serde::Serialize;

use crate::boundary::{BoundaryGeometry, Subspace, TripletMaps};
use crate::linalg;
use crate::nevanlinna::{self, BoundaryParameter, MFunctionSample};
use crate::propagate::{weighted_inner, weighted_moment, Propagator, PropagatorSpec};
use crate::quad::{gauss_legendre, QuadSpec};
use crate::system::{self, SymmetricSystem};
use crate::{C64, CMat, CVec, Result, SpecfunError};

/// Anything that can evaluate the m-function on the open upper half-plane.
pub trait MSampler: Sync {
    fn m_at(&self, lambda: C64) -> Result<CMat>;
}

impl<F> MSampler for F
where
    F: Fn(C64) -> Result<CMat> + Sync,
{
    fn m_at(&self, lambda: C64) -> Result<CMat> {
        self(lambda)
    }
}

/// A detected discontinuity of the distribution function.
#[derive(Debug, Clone)]
pub struct Jump {
    pub location: f64,
    /// Hermitian nonnegative jump matrix.
    pub matrix: CMat,
}

/// Matrix-valued nondecreasing left-continuous distribution function on a
/// grid, anchored so that the value at 0 vanishes.
#[derive(Debug, Clone)]
pub struct DistributionFunction {
    pub grid: Vec<f64>,
    /// Values at the grid points.
    pub values: Vec<CMat>,
    pub jumps: Vec<Jump>,
    /// Absolutely continuous increment per grid cell (jump cells hold
    /// zero here).
    pub ac_increments: Vec<CMat>,
    /// Extrapolation diagnostics per cell.
    pub cell_flags: Vec<Option<String>>,
}

impl DistributionFunction {
    pub fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    /// Most negative eigenvalue over all cell increments; a nonnegative
    /// distribution function keeps this above a small floor.
    pub fn monotonicity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() - 1 {
            let inc = &self.values[i + 1] - &self.values[i];
            worst = worst.min(linalg::hermitian_min_eig(&inc));
        }
        -worst
    }

}

/// Numerical protocol for the double limit in the inversion formula.
#[derive(Debug, Clone)]
pub struct InversionOptions {
    /// Decreasing offsets from the real axis.
    pub epsilon_schedule: Vec<f64>,
    /// Expected minimal jump size; the detection threshold is a fraction
    /// of it.
    pub min_jump: f64,
    pub jump_threshold_factor: f64,
    /// Gauss-Legendre nodes per cell for the density part.
    pub density_nodes: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            epsilon_schedule: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            min_jump: 1e-3,
            jump_threshold_factor: 0.1,
            density_nodes: 8,
        }
    }
}

fn golden_maximize(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Recovers the distribution function from boundary values of the
/// imaginary part of the m-function: peaks are located with the widest
/// offset, refined at decreasing offsets, classified through the
/// extrapolated residue, and the remaining density is integrated cell by
/// cell with a linear offset extrapolation.
pub fn stieltjes_invert(
    sampler: &dyn MSampler,
    s_grid: &[f64],
    opts: &InversionOptions,
) -> Result<DistributionFunction> {
    if s_grid.len() < 2 || s_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SpecfunError::InvalidInput("s grid must be strictly increasing with at least two points".into()));
    }
    let mut schedule = opts.epsilon_schedule.clone();
    if schedule.len() < 2 || schedule.windows(2).any(|w| w[0] <= w[1]) || schedule.iter().any(|&e| e <= 0.0) {
        return Err(SpecfunError::InvalidInput("epsilon schedule must be positive and decreasing".into()));
    }
    schedule.dedup();

    // Anchor the grid at zero.
    let mut grid: Vec<f64> = s_grid.to_vec();
    let lo = grid[0];
    let hi = *grid.last().unwrap();
    if lo <= 0.0 && hi >= 0.0 && !grid.iter().any(|&s| s == 0.0) {
        grid.push(0.0);
        grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    }

    let eps_max = schedule[0];
    let eps_min = *schedule.last().unwrap();
    let eps_prev = schedule[schedule.len() - 2];
    let dim = sampler.m_at(C64::new(0.5 * (lo + hi), eps_max))?.nrows();
    let threshold = opts.jump_threshold_factor * opts.min_jump;

    let trace_im = |u: f64, eps: f64| -> Result<f64> {
        let m = sampler.m_at(C64::new(u, eps))?;
        Ok(linalg::imag_part(&m).trace().re)
    };

    // Coarse scan with the widest offset; peak brackets from prominence.
    let min_cell = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let scan_step = (min_cell.min(eps_max) * 0.5).max(1e-6);
    let count = ((hi - lo) / scan_step).ceil() as usize + 1;
    let mut scan: Vec<(f64, f64)> = Vec::with_capacity(count);
    for i in 0..count {
        let u = lo + (hi - lo) * i as f64 / (count - 1) as f64;
        if let Ok(v) = trace_im(u, eps_max) {
            scan.push((u, v));
        }
    }
    let mut candidates: Vec<f64> = Vec::new();
    for i in 0..scan.len() {
        let (u, v) = scan[i];
        if v * eps_max <= 0.25 * threshold {
            continue;
        }
        let left = if i > 0 { scan[i - 1].1 } else { f64::NEG_INFINITY };
        let right = if i + 1 < scan.len() { scan[i + 1].1 } else { f64::NEG_INFINITY };
        if v < left.max(right) {
            continue;
        }
        // Prominence over the lower neighbor separates genuine peaks from
        // density plateaus; a peak straddled symmetrically by two samples
        // still clears it on the far side.
        let base = left.min(right);
        if base <= 0.0 || v > 1.02 * base || i == 0 || i + 1 == scan.len() {
            candidates.push(u);
        }
    }

    // Multi-stage refinement: shrink the bracket while the offset shrinks.
    let mut jumps: Vec<Jump> = Vec::new();
    for &cand in &candidates {
        let mut center = cand;
        let mut half_width = scan_step;
        for &eps in &schedule {
            let objective = |u: f64| trace_im(u, eps).unwrap_or(f64::NEG_INFINITY);
            let lo_b = (center - half_width).max(lo);
            let hi_b = (center + half_width).min(hi);
            center = golden_maximize(&objective, lo_b, hi_b, 64);
            half_width = (6.0 * eps).min(half_width);
        }
        // Residue extrapolation at the refined location: polynomial in the
        // offset through the smallest schedule points.
        let g = |eps: f64| -> Result<CMat> {
            let m = sampler.m_at(C64::new(center, eps))?;
            Ok(linalg::imag_part(&m) * C64::new(eps, 0.0))
        };
        let tail = schedule.iter().rev().take(3).rev().copied().collect::<Vec<f64>>();
        let mut weight = CMat::zeros(dim, dim);
        for (i, &ei) in tail.iter().enumerate() {
            let mut coeff = 1.0;
            for (j, &ej) in tail.iter().enumerate() {
                if i != j {
                    coeff *= -ej / (ei - ej);
                }
            }
            weight += g(ei)? * C64::new(coeff, 0.0);
        }
        if weight.trace().re < threshold {
            continue;
        }
        let mut location = center;
        // Snap to a grid point when indistinguishable, so a jump at an
        // anchor lands in the cell to its right (left continuity).
        for &gpt in &grid {
            if (location - gpt).abs() < 1e-9 {
                location = gpt;
                break;
            }
        }
        if jumps.iter().any(|j| (j.location - location).abs() < 1e-4) {
            continue;
        }
        jumps.push(Jump { location, matrix: linalg::hermitize(&weight) });
    }
    jumps.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());

    // Density per cell: the detected point masses are subtracted as
    // Lorentzian profiles so their tails do not leak into neighboring
    // cells, and the remainder is extrapolated linearly in the offset.
    let cells = grid.len() - 1;
    let (gl_x, gl_w) = gauss_legendre(opts.density_nodes);
    let mut ac_increments: Vec<CMat> = Vec::with_capacity(cells);
    let mut cell_flags: Vec<Option<String>> = vec![None; cells];
    let density = |u: f64, eps: f64| -> Result<CMat> {
        let m = sampler.m_at(C64::new(u, eps))?;
        let mut im = linalg::imag_part(&m);
        for j in &jumps {
            let d = u - j.location;
            im -= &j.matrix * C64::new(eps / (d * d + eps * eps), 0.0);
        }
        Ok(im)
    };
    for i in 0..cells {
        let (l, r) = (grid[i], grid[i + 1]);
        let integral = |eps: f64| -> Result<CMat> {
            let mut acc = CMat::zeros(dim, dim);
            for (x, w) in gl_x.iter().zip(gl_w.iter()) {
                let u = 0.5 * (l + r) + 0.5 * (r - l) * x;
                acc += density(u, eps)? * C64::new(0.5 * (r - l) * w / std::f64::consts::PI, 0.0);
            }
            Ok(acc)
        };
        match (integral(eps_prev), integral(eps_min)) {
            (Ok(i1), Ok(i2)) => {
                let extrapolated = &i2 + (&i2 - &i1) * C64::new(eps_min / (eps_prev - eps_min), 0.0);
                let scale = linalg::max_abs(&i2) + 1e-12 * (r - l);
                if linalg::max_abs(&extrapolated) > 10.0 * scale {
                    cell_flags[i] = Some(format!("extrapolation diverged on [{l}, {r}]"));
                    ac_increments.push(i2);
                } else {
                    ac_increments.push(linalg::hermitize(&extrapolated));
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                cell_flags[i] = Some(e.to_string());
                ac_increments.push(CMat::zeros(dim, dim));
            }
        }
    }

    // Cumulative values anchored at zero, jumps assigned to the cell
    // containing them.
    let cell_increment = |i: usize| -> CMat {
        let mut inc = ac_increments[i].clone();
        for j in &jumps {
            if j.location >= grid[i] && j.location < grid[i + 1] {
                inc += &j.matrix;
            }
        }
        inc
    };
    let anchor = grid
        .iter()
        .position(|&s| s == 0.0)
        .unwrap_or_else(|| {
            // Window away from zero: anchor at the endpoint closest to it.
            if grid[0] > 0.0 {
                0
            } else {
                grid.len() - 1
            }
        });
    let mut values = vec![CMat::zeros(dim, dim); grid.len()];
    for i in anchor..cells {
        values[i + 1] = &values[i] + cell_increment(i);
    }
    for i in (0..anchor).rev() {
        values[i] = &values[i + 1] - cell_increment(i);
    }
    Ok(DistributionFunction { grid, values, jumps, ac_increments, cell_flags })
}

/// Generalized Fourier coefficients of a sampled function together with
/// the two sides of the Parseval identity.
#[derive(Debug, Clone)]
pub struct FourierResult {
    pub s_eval: Vec<f64>,
    pub f_hat: Vec<CVec>,
    /// `∫ (dσ f̂, f̂)` over the window, when a distribution function was
    /// supplied.
    pub parseval_lhs: Option<f64>,
    /// `(Δ f, f)` over the system interval.
    pub parseval_rhs: f64,
}

/// One Fourier coefficient `f̂(s) = ∫ φ_U*(t, s) Δ(t) f(t) dt`.
pub fn transform_at(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    f: &dyn Fn(f64) -> CVec,
    s: f64,
    spec: &PropagatorSpec,
) -> Result<CVec> {
    let prop = Propagator::new(sys, C64::new(s, 0.0), spec.clone());
    let moment = weighted_moment(&prop, f)?;
    Ok(geom.u().adjoint() * moment)
}

/// Fourier transform on a grid of spectral points.
pub fn fourier_transform(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    f: &dyn Fn(f64) -> CVec,
    s_grid: &[f64],
    sigma: Option<&DistributionFunction>,
    spec: &PropagatorSpec,
) -> Result<FourierResult> {
    let mut f_hat = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        f_hat.push(transform_at(sys, geom, f, s, spec)?);
    }
    let parseval_rhs = weighted_inner(sys, f, f, &spec.quad).re;
    let parseval_lhs = match sigma {
        Some(sig) => Some(spectral_quadratic_form(sys, geom, sig, f, spec)?),
        None => None,
    };
    Ok(FourierResult { s_eval: s_grid.to_vec(), f_hat, parseval_lhs, parseval_rhs })
}

/// `∫ (dσ(s) f̂(s), f̂(s))`: jump terms plus midpoint-sampled density
/// terms.
fn spectral_quadratic_form(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    sigma: &DistributionFunction,
    f: &dyn Fn(f64) -> CVec,
    spec: &PropagatorSpec,
) -> Result<f64> {
    let mut acc = 0.0f64;
    for jump in &sigma.jumps {
        let fh = transform_at(sys, geom, f, jump.location, spec)?;
        acc += (fh.adjoint() * &jump.matrix * &fh)[(0, 0)].re;
    }
    for i in 0..sigma.grid.len() - 1 {
        let inc = &sigma.ac_increments[i];
        if linalg::max_abs(inc) < 1e-14 {
            continue;
        }
        let mid = 0.5 * (sigma.grid[i] + sigma.grid[i + 1]);
        let fh = transform_at(sys, geom, f, mid, spec)?;
        acc += (fh.adjoint() * inc * &fh)[(0, 0)].re;
    }
    Ok(acc)
}

/// Relative Parseval defect `|∫ (dσ f̂, f̂) - (Δ f, f)| / (Δ f, f)`; zero
/// for functions with vanishing seminorm.
pub fn parseval_defect(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    sigma: &DistributionFunction,
    f: &dyn Fn(f64) -> CVec,
    spec: &PropagatorSpec,
) -> Result<f64> {
    let rhs = weighted_inner(sys, f, f, &spec.quad).re;
    if rhs.abs() < 1e-14 {
        return Ok(0.0);
    }
    let lhs = spectral_quadratic_form(sys, geom, sigma, f, spec)?;
    Ok((lhs - rhs).abs() / rhs)
}

/// Reconstruction of a function from its spectral data.
#[derive(Debug, Clone)]
pub struct InverseTransformResult {
    pub t_grid: Vec<f64>,
    pub values: Vec<CVec>,
    /// Relative error in the weighted seminorm against the original.
    pub relative_error: f64,
}

/// Inverse transform `∫ φ_U(t, s) dσ(s) f̂(s)`: jump sum plus density
/// midpoint terms, compared against the original in the weighted
/// seminorm.
pub fn inverse_transform(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    sigma: &DistributionFunction,
    f: &dyn Fn(f64) -> CVec,
    t_grid: &[f64],
    spec: &PropagatorSpec,
) -> Result<InverseTransformResult> {
    let u = geom.u();
    // Spectral points carrying mass, with their weighted coefficients.
    let mut terms: Vec<(f64, CVec)> = Vec::new();
    for jump in &sigma.jumps {
        let fh = transform_at(sys, geom, f, jump.location, spec)?;
        terms.push((jump.location, &u * (&jump.matrix * fh)));
    }
    for i in 0..sigma.grid.len() - 1 {
        let inc = &sigma.ac_increments[i];
        if linalg::max_abs(inc) < 1e-14 {
            continue;
        }
        let mid = 0.5 * (sigma.grid[i] + sigma.grid[i + 1]);
        let fh = transform_at(sys, geom, f, mid, spec)?;
        terms.push((mid, &u * (inc * fh)));
    }

    // Reconstruction on the quadrature nodes for the seminorm, reusing
    // one propagator sweep per spectral point.
    let n = sys.n();
    let reference = Propagator::new(sys, C64::new(0.0, 0.0), spec.clone());
    let table = reference.node_table()?;
    let node_count = table.ts.len();
    let mut recon_nodes: Vec<CVec> = vec![CVec::zeros(n); node_count];
    let mut recon_grid: Vec<CVec> = vec![CVec::zeros(n); t_grid.len()];
    for (s, coeff) in &terms {
        let prop = Propagator::new(sys, C64::new(*s, 0.0), spec.clone());
        let tbl = prop.node_table()?;
        for i in 0..node_count {
            recon_nodes[i] += &tbl.y[i] * coeff;
        }
        for (k, &t) in t_grid.iter().enumerate() {
            recon_grid[k] += prop.value_at(t)? * coeff;
        }
    }
    let mut err_sq = 0.0f64;
    let mut norm_sq = 0.0f64;
    for i in 0..node_count {
        let fv = f(table.ts[i]);
        let d = &recon_nodes[i] - &fv;
        err_sq += (d.adjoint() * &table.delta[i] * &d)[(0, 0)].re * table.ws[i];
        norm_sq += (fv.adjoint() * &table.delta[i] * &fv)[(0, 0)].re * table.ws[i];
    }
    let relative_error = if norm_sq > 1e-28 { (err_sq / norm_sq).sqrt() } else { err_sq.sqrt() };
    Ok(InverseTransformResult { t_grid: t_grid.to_vec(), values: recon_grid, relative_error })
}

/// The kernel matrix of the integral representation of the generalized
/// resolvent.
#[derive(Debug, Clone)]
pub struct CharacteristicMatrix {
    pub lambda: C64,
    pub omega: CMat,
}

/// Assembles the characteristic matrix: the m-function in the model-space
/// corner, half-unit couplings with the complementary block, zero
/// elsewhere.
pub fn characteristic_matrix(m: &MFunctionSample, geom: &BoundaryGeometry) -> CharacteristicMatrix {
    let n = geom.n();
    let nu = geom.dims().nu;
    let k_perp = geom.k_perp();
    let e0 = geom.h0_embedding();
    // Embedding of H₁⊥ through the trailing H block.
    let mut e_perp = CMat::zeros(n, k_perp);
    for i in 0..k_perp {
        e_perp[(n - nu + i, i)] = C64::new(1.0, 0.0);
    }
    // H₁⊥ sits first inside the model space coordinates.
    let mut embed_perp_into_h0 = CMat::zeros(geom.h0_dim(), k_perp);
    for i in 0..k_perp {
        embed_perp_into_h0[(i, i)] = C64::new(1.0, 0.0);
    }
    let half = C64::new(0.5, 0.0);
    let omega = &e0 * &m.value * e0.adjoint()
        - &e0 * &embed_perp_into_h0 * e_perp.adjoint() * half
        - &e_perp * embed_perp_into_h0.adjoint() * e0.adjoint() * half;
    CharacteristicMatrix { lambda: m.lambda, omega }
}

/// Outcome of the resolvent cross-check.
#[derive(Debug, Clone)]
pub struct ResolventCheck {
    /// Relative weighted-seminorm difference between the kernel
    /// representation and the direct boundary value problem.
    pub relative_difference: f64,
    /// Finite-difference residual of the inhomogeneous equation.
    pub ode_residual: f64,
    /// Residual of the imposed boundary rows.
    pub bc_residual: f64,
}

/// Compares the resolvent computed through the characteristic-matrix
/// kernel with the direct solution of the inhomogeneous boundary value
/// problem.
pub fn resolvent_crosscheck(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    triplet: &TripletMaps,
    param: &BoundaryParameter,
    lambda: C64,
    f: &dyn Fn(f64) -> CVec,
    spec: &PropagatorSpec,
) -> Result<ResolventCheck> {
    let n = sys.n();
    let (a, _b) = sys.interval();
    let prop = Propagator::new(sys, lambda, spec.clone());
    let prop_conj = Propagator::new(sys, lambda.conj(), spec.clone());
    let u_tilde = geom.u_tilde();
    let j = sys.j();

    // Weighted source moments against the conjugate frame, accumulated
    // panel by panel: prefix[p] = ∫ over the first p panels of
    // Y_Ũ*(x, λ̄) Δ(x) f(x) dx.
    let table = prop_conj.node_table()?;
    let nodes_per_panel = spec.quad.nodes_per_panel;
    let panels = spec.quad.panels;
    let mut prefix: Vec<CVec> = Vec::with_capacity(panels + 1);
    prefix.push(CVec::zeros(n));
    let mut acc = CVec::zeros(n);
    for p in 0..panels {
        for i in 0..nodes_per_panel {
            let k = p * nodes_per_panel + i;
            let y_u = &table.y[k] * u_tilde;
            acc += y_u.adjoint() * &table.delta[k] * f(table.ts[k]) * C64::new(table.ws[k], 0.0);
        }
        prefix.push(acc.clone());
    }
    let total = prefix[panels].clone();

    // Kernel route.
    let m = nevanlinna::m_tau_formula(sys, geom, triplet, param, lambda, spec)?;
    let omega = characteristic_matrix(&m, geom).omega;
    let half_j = j * C64::new(0.5, 0.0);
    let h = (sys.b_end() - a) / panels as f64;
    let mut y_kernel: Vec<CVec> = Vec::with_capacity(panels + 1);
    for p in 0..=panels {
        let t = a + p as f64 * h;
        let directed = &prefix[p] * C64::new(2.0, 0.0) - &total;
        let combo = &omega * &total - &half_j * directed;
        y_kernel.push(prop.value_at(t)? * u_tilde * combo);
    }

    // Direct boundary value problem: y = Y_Ũ (c + u(t)) with
    // u(t) = -J · prefix(t), boundary rows as for the m-function problem.
    let k_perp = geom.k_perp();
    let c0 = param.c0_at(lambda);
    let c1 = param.c1_at(lambda);
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
    let bc_rhs = CMat::zeros(n, 1);
    let u_at_end = -(j * &total);
    let (w_scaled, _log_scale) = prop.scaled_endpoint()?;
    let conn = w_scaled * u_tilde * CMat::from_fn(n, 1, |r, _| u_at_end[r]);
    let solve = crate::weyl::solve_boundary_problem(&prop, geom, &rows, &bc_rhs, Some(&conn))?;
    let xi = solve.stacked.rows(0, n).into_owned();
    let bc_residual = linalg::max_abs(&(&rows * &solve.stacked - &bc_rhs));

    let mut y_direct: Vec<CVec> = Vec::with_capacity(panels + 1);
    for p in 0..=panels {
        let t = a + p as f64 * h;
        let u_t = -(j * &prefix[p]);
        let combo = CVec::from_fn(n, |r, _| xi[(r, 0)] + u_t[r]);
        y_direct.push(prop.value_at(t)? * u_tilde * combo);
    }

    // Weighted seminorm of the difference via the trapezoid rule on the
    // panel boundaries.
    let mut diff_sq = 0.0f64;
    let mut norm_sq = 0.0f64;
    for p in 0..=panels {
        let t = a + p as f64 * h;
        let w = if p == 0 || p == panels { 0.5 * h } else { h };
        let delta = sys.delta_at(t);
        let d = &y_kernel[p] - &y_direct[p];
        diff_sq += (d.adjoint() * &delta * &d)[(0, 0)].re * w;
        norm_sq += (y_direct[p].adjoint() * &delta * &y_direct[p])[(0, 0)].re * w;
    }
    let relative_difference = if norm_sq > 1e-28 { (diff_sq / norm_sq).sqrt() } else { diff_sq.sqrt() };

    // Finite-difference residual of the equation at interior probes.
    let mut ode_residual = 0.0f64;
    let fd = 1e-5 * (sys.b_end() - a);
    let eval_direct = |t: f64| -> Result<CVec> {
        let frac = (t - a) / (sys.b_end() - a);
        let part_panels = ((panels as f64 * frac).ceil() as usize).max(1);
        let rule = QuadSpec::new(part_panels, nodes_per_panel.min(16));
        let mut pre = CVec::zeros(n);
        for (x, w) in rule.points(a, t) {
            let y_u = prop_conj.value_at(x)? * u_tilde;
            pre += y_u.adjoint() * sys.delta_at(x) * f(x) * C64::new(w, 0.0);
        }
        let u_t = -(j * pre);
        let combo = CVec::from_fn(n, |r, _| xi[(r, 0)] + u_t[r]);
        Ok(prop.value_at(t)? * u_tilde * combo)
    };
    for &frac in &[0.29, 0.57, 0.83] {
        let t = a + frac * (sys.b_end() - a);
        let y_plus = eval_direct(t + fd)?;
        let y_minus = eval_direct(t - fd)?;
        let y_mid = eval_direct(t)?;
        let dy = (&y_plus - &y_minus) / C64::new(2.0 * fd, 0.0);
        let residual = j * dy
            - sys.b_at(t) * &y_mid
            - sys.delta_at(t) * &y_mid * lambda
            - sys.delta_at(t) * f(t);
        ode_residual = ode_residual.max(residual.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }

    Ok(ResolventCheck { relative_difference, ode_residual, bc_residual })
}

/// Congruence transport of a distribution function to a different frame
/// of the same boundary subspace.
pub fn rebase_pseudospectral(sigma: &DistributionFunction, x: &CMat) -> Result<DistributionFunction> {
    let dim = sigma.dim();
    if x.nrows() != dim || x.ncols() != dim {
        return Err(SpecfunError::ShapeMismatch(format!(
            "rebase matrix must be {dim}x{dim}, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    if !linalg::spectral_cond(x).is_finite() {
        return Err(SpecfunError::SingularMatrix("rebase matrix is singular".into()));
    }
    let congruence = |m: &CMat| x * m * x.adjoint();
    Ok(DistributionFunction {
        grid: sigma.grid.clone(),
        values: sigma.values.iter().map(|v| congruence(v)).collect(),
        jumps: sigma
            .jumps
            .iter()
            .map(|j| Jump { location: j.location, matrix: congruence(&j.matrix) })
            .collect(),
        ac_increments: sigma.ac_increments.iter().map(|v| congruence(v)).collect(),
        cell_flags: sigma.cell_flags.clone(),
    })
}

/// Existence and dimension report for spectral functions attached to a
/// boundary subspace.
#[derive(Debug, Clone, Serialize)]
pub struct ExistenceReport {
    pub definite: bool,
    pub dim_null: usize,
    pub tau_definite: bool,
    pub companion_neutral: bool,
    /// Whether the multivalued part of the attached symmetric relation is
    /// trivial; `None` when the sufficient criterion does not apply.
    pub mul_t_trivial: Option<bool>,
    pub mul_t_criterion: String,
    pub exists: bool,
    pub n_sigma: usize,
    pub n_sigma_min: usize,
    pub n_sigma_max: usize,
    pub minimal: bool,
}

/// Builds the existence report: definiteness, neutrality of the
/// companion, triviality of the multivalued part through a sufficient
/// weight condition, and the dimension bounds.
pub fn existence_report(sys: &SymmetricSystem, tau: &Subspace, spec: &PropagatorSpec) -> Result<ExistenceReport> {
    let dims = sys.dims();
    let probe = C64::new(0.0, 1.0);
    let null_report = system::probe_null_manifold(sys, probe, 1e-9, spec)?;
    let tau_def = system::tau_definite(sys, tau, probe, 1e-9, spec)?;
    let companion = crate::boundary::j_companion(sys.j(), tau);
    let companion_neutral = crate::boundary::is_neutral(sys.j(), &companion, 1e-10);

    // Sufficient condition for a trivial multivalued part: a uniformly
    // positive weight forces the inhomogeneous null condition to kill the
    // source.
    let grid = system::default_sample_grid(sys, 32);
    let delta_floor = grid
        .iter()
        .map(|&t| linalg::hermitian_min_eig(&sys.delta_at(t)))
        .fold(f64::INFINITY, f64::min);
    let (mul_t_trivial, mul_t_criterion) = if !tau_def {
        (None, "not decided: the system is not tau-definite".to_string())
    } else if delta_floor > 1e-12 {
        (
            Some(true),
            format!("weight uniformly positive on samples (floor {delta_floor:.3e}), so only a trivial solution is annihilated by the weight"),
        )
    } else {
        (
            None,
            "not decided: the weight is singular somewhere, the multivalued part needs a case-specific argument".to_string(),
        )
    };

    let n_sigma = tau.dim();
    let n_sigma_min = dims.nu + dims.nu_hat;
    let n_sigma_max = dims.n();
    let exists = tau_def && companion_neutral && mul_t_trivial == Some(true);
    Ok(ExistenceReport {
        definite: null_report.definite,
        dim_null: null_report.dim_null,
        tau_definite: tau_def,
        companion_neutral,
        mul_t_trivial,
        mul_t_criterion,
        exists,
        n_sigma,
        n_sigma_min,
        n_sigma_max,
        minimal: n_sigma == n_sigma_min,
    })
}
