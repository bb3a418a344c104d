//! Fundamental matrix solutions `Y(t, λ)` with `Y(a, λ) = I`: closed-form
//! exponentials for constant coefficients, an adaptive embedded
//! Runge-Kutta pair otherwise, checkpointed dense output, overflow-safe
//! endpoint transfer, and weighted inner products.

use std::sync::OnceLock;

use crate::linalg;
use crate::quad::{gauss_legendre, QuadSpec};
use crate::system::SymmetricSystem;
use crate::{C64, CMat, CVec, Result, SpecfunError};

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PropagatorSpec {
    pub tol: Tolerances,
    pub quad: QuadSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedFormExponential,
    AdaptiveRungeKutta,
}

/// Values of `Y(t, λ)` and `Δ(t)` at all composite quadrature nodes.
pub struct NodeTable {
    pub ts: Vec<f64>,
    pub ws: Vec<f64>,
    pub y: Vec<CMat>,
    pub delta: Vec<CMat>,
}

/// Propagator for one `(system, λ)` pair. Immutable after construction;
/// checkpoint and node tables are materialized lazily.
pub struct Propagator<'a> {
    sys: &'a SymmetricSystem,
    lambda: C64,
    method: Method,
    spec: PropagatorSpec,
    const_matrix: Option<CMat>,
    checkpoints: OnceLock<Result<Vec<CMat>>>,
    node_table: OnceLock<Result<NodeTable>>,
    full_gram: OnceLock<Result<CMat>>,
    scaled_end: OnceLock<Result<(CMat, f64)>>,
}

impl<'a> Propagator<'a> {
    pub fn new(sys: &'a SymmetricSystem, lambda: C64, spec: PropagatorSpec) -> Self {
        let (method, const_matrix) = if sys.has_constant_coefficients() {
            (Method::ClosedFormExponential, Some(sys.ode_matrix(sys.a(), lambda)))
        } else {
            (Method::AdaptiveRungeKutta, None)
        };
        Propagator {
            sys,
            lambda,
            method,
            spec,
            const_matrix,
            checkpoints: OnceLock::new(),
            node_table: OnceLock::new(),
            full_gram: OnceLock::new(),
            scaled_end: OnceLock::new(),
        }
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn sys(&self) -> &SymmetricSystem {
        self.sys
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn spec(&self) -> &PropagatorSpec {
        &self.spec
    }

    fn panel_width(&self) -> f64 {
        let (a, b) = self.sys.interval();
        (b - a) / self.spec.quad.panels as f64
    }

    fn checkpoints(&self) -> Result<&Vec<CMat>> {
        self.checkpoints
            .get_or_init(|| self.compute_checkpoints())
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn compute_checkpoints(&self) -> Result<Vec<CMat>> {
        let n = self.sys.n();
        let panels = self.spec.quad.panels;
        let a = self.sys.a();
        let h = self.panel_width();
        let mut out = Vec::with_capacity(panels + 1);
        out.push(CMat::identity(n, n));
        match self.method {
            Method::ClosedFormExponential => {
                let step = linalg::matrix_exp(&(self.const_matrix.as_ref().unwrap() * C64::new(h, 0.0)));
                for j in 0..panels {
                    let next = &step * &out[j];
                    out.push(next);
                }
            }
            Method::AdaptiveRungeKutta => {
                for j in 0..panels {
                    let t0 = a + j as f64 * h;
                    let next = self.rk_integrate(t0, &out[j], t0 + h)?;
                    out.push(next);
                }
            }
        }
        Ok(out)
    }

    /// `Y(t, λ)` at an arbitrary point of the interval.
    pub fn value_at(&self, t: f64) -> Result<CMat> {
        let (a, b) = self.sys.interval();
        let slack = 1e-9 * (b - a);
        if t < a - slack || t > b + slack {
            return Err(SpecfunError::OutOfInterval { t, a, b });
        }
        let t = t.clamp(a, b);
        match self.method {
            Method::ClosedFormExponential => {
                let m = self.const_matrix.as_ref().unwrap() * C64::new(t - a, 0.0);
                Ok(linalg::matrix_exp(&m))
            }
            Method::AdaptiveRungeKutta => {
                let h = self.panel_width();
                let j = (((t - a) / h).floor() as usize).min(self.spec.quad.panels - 1);
                let t_j = a + j as f64 * h;
                let y_j = &self.checkpoints()?[j];
                if (t - t_j).abs() < 1e-14 * (1.0 + t.abs()) {
                    return Ok(y_j.clone());
                }
                self.rk_integrate(t_j, y_j, t)
            }
        }
    }

    /// Quadrature node table for the full interval.
    pub fn node_table(&self) -> Result<&NodeTable> {
        self.node_table
            .get_or_init(|| self.compute_node_table())
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn compute_node_table(&self) -> Result<NodeTable> {
        let (xs, gl_ws) = gauss_legendre(self.spec.quad.nodes_per_panel);
        let panels = self.spec.quad.panels;
        let a = self.sys.a();
        let h = self.panel_width();
        let checkpoints = self.checkpoints()?;
        let mut ts = Vec::with_capacity(panels * xs.len());
        let mut ws = Vec::with_capacity(panels * xs.len());
        let mut ys: Vec<CMat> = Vec::with_capacity(panels * xs.len());
        match self.method {
            Method::ClosedFormExponential => {
                let offsets: Vec<CMat> = xs
                    .iter()
                    .map(|x| {
                        linalg::matrix_exp(
                            &(self.const_matrix.as_ref().unwrap() * C64::new(0.5 * h * (x + 1.0), 0.0)),
                        )
                    })
                    .collect();
                for j in 0..panels {
                    let t_j = a + j as f64 * h;
                    for (i, x) in xs.iter().enumerate() {
                        ts.push(t_j + 0.5 * h * (x + 1.0));
                        ws.push(0.5 * h * gl_ws[i]);
                        ys.push(&offsets[i] * &checkpoints[j]);
                    }
                }
            }
            Method::AdaptiveRungeKutta => {
                for j in 0..panels {
                    let t_j = a + j as f64 * h;
                    let mut cur_t = t_j;
                    let mut cur_y = checkpoints[j].clone();
                    for (i, x) in xs.iter().enumerate() {
                        let t = t_j + 0.5 * h * (x + 1.0);
                        cur_y = self.rk_integrate(cur_t, &cur_y, t)?;
                        cur_t = t;
                        ts.push(t);
                        ws.push(0.5 * h * gl_ws[i]);
                        ys.push(cur_y.clone());
                    }
                }
            }
        }
        let delta: Vec<CMat> = ts.iter().map(|&t| self.sys.delta_at(t)).collect();
        Ok(NodeTable { ts, ws, y: ys, delta })
    }

    /// Full weighted Gram `∫ Y*(t, λ) Δ(t) Y(t, λ) dt`, cached.
    pub fn full_gram(&self) -> Result<&CMat> {
        self.full_gram
            .get_or_init(|| {
                let table = self.node_table()?;
                let n = self.sys.n();
                let mut acc = CMat::zeros(n, n);
                for i in 0..table.ts.len() {
                    acc += table.y[i].adjoint() * &table.delta[i] * &table.y[i] * C64::new(table.ws[i], 0.0);
                }
                Ok(acc)
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Endpoint transfer in the overflow-safe form `Y(b) = e^s · W` with
    /// `max |W| = O(1)`. Returns `(W, s)`.
    pub fn scaled_endpoint(&self) -> Result<(&CMat, f64)> {
        let entry = self
            .scaled_end
            .get_or_init(|| self.compute_scaled_endpoint())
            .as_ref()
            .map_err(|e| e.clone())?;
        Ok((&entry.0, entry.1))
    }

    fn compute_scaled_endpoint(&self) -> Result<(CMat, f64)> {
        const RESCALE_ABOVE: f64 = 1e8;
        let (a, b) = self.sys.interval();
        let (mut w, mut log_scale) = match self.method {
            Method::ClosedFormExponential => {
                let full = self.const_matrix.as_ref().unwrap() * C64::new(b - a, 0.0);
                let norm = full.iter().map(|z| z.norm()).fold(0.0f64, f64::max) * self.sys.n() as f64;
                let m: i32 = if norm > 1.0 { (norm.log2().ceil() as i32).max(0) } else { 0 };
                let mut w = linalg::matrix_exp(&(full * C64::new(0.5f64.powi(m), 0.0)));
                let mut log_scale = 0.0f64;
                for _ in 0..m {
                    // (e^s W)^2 = e^{2s} W^2.
                    w = &w * &w;
                    log_scale *= 2.0;
                    let mx = linalg::max_abs(&w);
                    if mx > RESCALE_ABOVE {
                        w /= C64::new(mx, 0.0);
                        log_scale += mx.ln();
                    }
                }
                (w, log_scale)
            }
            Method::AdaptiveRungeKutta => {
                let panels = self.spec.quad.panels;
                let h = self.panel_width();
                let mut w = CMat::identity(self.sys.n(), self.sys.n());
                let mut log_scale = 0.0f64;
                for j in 0..panels {
                    let t0 = a + j as f64 * h;
                    w = self.rk_integrate(t0, &w, t0 + h)?;
                    let mx = linalg::max_abs(&w);
                    if mx > RESCALE_ABOVE {
                        w /= C64::new(mx, 0.0);
                        log_scale += mx.ln();
                    }
                }
                (w, log_scale)
            }
        };
        let mx = linalg::max_abs(&w);
        if mx > 0.0 && mx.is_finite() {
            w /= C64::new(mx, 0.0);
            log_scale += mx.ln();
        }
        Ok((w, log_scale))
    }

    /// Solution frame with initial data `K`, so that values are
    /// `Y(t, λ) K`.
    pub fn frame(&'a self, initial: CMat) -> SolutionFrame<'a> {
        SolutionFrame { prop: self, initial }
    }

    fn rhs(&self, t: f64, y: &CMat) -> CMat {
        self.sys.ode_matrix(t, self.lambda) * y
    }

    /// Integrates from `(t0, y0)` to `t1 >= t0`, landing exactly on
    /// coefficient breakpoints.
    fn rk_integrate(&self, t0: f64, y0: &CMat, t1: f64) -> Result<CMat> {
        if t1 <= t0 {
            return Ok(y0.clone());
        }
        let mut segments = vec![t0];
        for bp in self.sys.breakpoints() {
            if bp > t0 + 1e-14 && bp < t1 - 1e-14 {
                segments.push(bp);
            }
        }
        segments.push(t1);
        let mut y = y0.clone();
        for pair in segments.windows(2) {
            y = self.rk_segment(pair[0], &y, pair[1])?;
        }
        Ok(y)
    }

    fn rk_segment(&self, t0: f64, y0: &CMat, t1: f64) -> Result<CMat> {
        // Dormand-Prince 5(4) embedded pair.
        const A21: f64 = 1.0 / 5.0;
        const A31: f64 = 3.0 / 40.0;
        const A32: f64 = 9.0 / 40.0;
        const A41: f64 = 44.0 / 45.0;
        const A42: f64 = -56.0 / 15.0;
        const A43: f64 = 32.0 / 9.0;
        const A51: f64 = 19372.0 / 6561.0;
        const A52: f64 = -25360.0 / 2187.0;
        const A53: f64 = 64448.0 / 6561.0;
        const A54: f64 = -212.0 / 729.0;
        const A61: f64 = 9017.0 / 3168.0;
        const A62: f64 = -355.0 / 33.0;
        const A63: f64 = 46732.0 / 5247.0;
        const A64: f64 = 49.0 / 176.0;
        const A65: f64 = -5103.0 / 18656.0;
        const B1: f64 = 35.0 / 384.0;
        const B3: f64 = 500.0 / 1113.0;
        const B4: f64 = 125.0 / 192.0;
        const B5: f64 = -2187.0 / 6784.0;
        const B6: f64 = 11.0 / 84.0;
        const E1: f64 = 71.0 / 57600.0;
        const E3: f64 = -71.0 / 16695.0;
        const E4: f64 = 71.0 / 1920.0;
        const E5: f64 = -17253.0 / 339200.0;
        const E6: f64 = 22.0 / 525.0;
        const E7: f64 = -1.0 / 40.0;

        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(y0.clone());
        }
        let Tolerances { rtol, atol } = self.spec.tol;
        let c = |x: f64| C64::new(x, 0.0);
        let mut t = t0;
        let mut y = y0.clone();
        let mut h = span / 16.0;
        let mut steps: usize = 0;
        while t < t1 - 1e-14 * (1.0 + t1.abs()) {
            steps += 1;
            if steps > 2_000_000 {
                return Err(SpecfunError::StepSizeUnderflow { t, h });
            }
            if h < 1e-13 * (1.0 + t.abs()) {
                return Err(SpecfunError::StepSizeUnderflow { t, h });
            }
            h = h.min(t1 - t);
            let k1 = self.rhs(t, &y);
            let k2 = self.rhs(t + h * 0.2, &(&y + &k1 * c(h * A21)));
            let k3 = self.rhs(t + h * 0.3, &(&y + &k1 * c(h * A31) + &k2 * c(h * A32)));
            let k4 = self.rhs(t + h * 0.8, &(&y + &k1 * c(h * A41) + &k2 * c(h * A42) + &k3 * c(h * A43)));
            let k5 = self.rhs(
                t + h * 8.0 / 9.0,
                &(&y + &k1 * c(h * A51) + &k2 * c(h * A52) + &k3 * c(h * A53) + &k4 * c(h * A54)),
            );
            let k6 = self.rhs(
                t + h,
                &(&y + &k1 * c(h * A61) + &k2 * c(h * A62) + &k3 * c(h * A63) + &k4 * c(h * A64) + &k5 * c(h * A65)),
            );
            let y5 = &y + &k1 * c(h * B1) + &k3 * c(h * B3) + &k4 * c(h * B4) + &k5 * c(h * B5) + &k6 * c(h * B6);
            let k7 = self.rhs(t + h, &y5);
            let err_mat =
                &k1 * c(h * E1) + &k3 * c(h * E3) + &k4 * c(h * E4) + &k5 * c(h * E5) + &k6 * c(h * E6) + &k7 * c(h * E7);
            let mut err_acc = 0.0f64;
            for i in 0..err_mat.nrows() {
                for jj in 0..err_mat.ncols() {
                    let scale = atol + rtol * y[(i, jj)].norm().max(y5[(i, jj)].norm());
                    let r = err_mat[(i, jj)].norm() / scale;
                    err_acc += r * r;
                }
            }
            let err = (err_acc / (err_mat.nrows() * err_mat.ncols()) as f64).sqrt();
            if err <= 1.0 {
                t += h;
                y = y5;
            }
            let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h *= factor.clamp(0.2, 5.0);
        }
        Ok(y)
    }
}

/// Evaluation handle for `Y(t, λ) K`.
pub struct SolutionFrame<'a> {
    prop: &'a Propagator<'a>,
    initial: CMat,
}

impl<'a> SolutionFrame<'a> {
    pub fn initial(&self) -> &CMat {
        &self.initial
    }

    pub fn propagator(&self) -> &'a Propagator<'a> {
        self.prop
    }

    pub fn eval(&self, t: f64) -> Result<CMat> {
        Ok(self.prop.value_at(t)? * &self.initial)
    }
}

/// `Y(t, λ)` with `Y(a, λ) = I`, solving `y' = -J (B(t) + λ Δ(t)) y`.
pub fn propagate(sys: &SymmetricSystem, lambda: C64, t: f64, spec: &PropagatorSpec) -> Result<CMat> {
    Propagator::new(sys, lambda, spec.clone()).value_at(t)
}

/// `‖Y*(t, λ̄) J Y(t, λ) - J‖_max`.
pub fn j_symplectic_defect(sys: &SymmetricSystem, lambda: C64, t: f64, spec: &PropagatorSpec) -> Result<f64> {
    let y_conj = propagate(sys, lambda.conj(), t, spec)?;
    let y = propagate(sys, lambda, t, spec)?;
    Ok(linalg::max_abs(&(y_conj.adjoint() * sys.j() * y - sys.j())))
}

/// Residual of the Lagrange identity for a pair of spectral parameters:
/// `‖Y*(t, λ̄) J Y(t, μ) - J - (μ - λ) ∫ₐᵗ Y*(s, λ̄) Δ(s) Y(s, μ) ds‖`.
pub fn green_identity_defect(
    sys: &SymmetricSystem,
    lambda: C64,
    mu: C64,
    t: f64,
    spec: &PropagatorSpec,
) -> Result<f64> {
    let (a, b) = sys.interval();
    if t < a || t > b {
        return Err(SpecfunError::OutOfInterval { t, a, b });
    }
    let p_conj = Propagator::new(sys, lambda.conj(), spec.clone());
    let p_mu = Propagator::new(sys, mu, spec.clone());
    let boundary_term = p_conj.value_at(t)?.adjoint() * sys.j() * p_mu.value_at(t)? - sys.j();
    let frac = (t - a) / (b - a);
    let panels = ((spec.quad.panels as f64 * frac).ceil() as usize).max(1);
    let rule = QuadSpec::new(panels, spec.quad.nodes_per_panel);
    let mut integral = CMat::zeros(sys.n(), sys.n());
    for (s, w) in rule.points(a, t) {
        integral += p_conj.value_at(s)?.adjoint() * sys.delta_at(s) * p_mu.value_at(s)? * C64::new(w, 0.0);
    }
    Ok(linalg::max_abs(&(boundary_term - integral * (mu - lambda))))
}

/// Semi-definite inner product `(f, g)_Δ = ∫ g*(t) Δ(t) f(t) dt`.
pub fn weighted_inner(
    sys: &SymmetricSystem,
    f: &dyn Fn(f64) -> CVec,
    g: &dyn Fn(f64) -> CVec,
    quad: &QuadSpec,
) -> C64 {
    let (a, b) = sys.interval();
    let mut acc = C64::new(0.0, 0.0);
    for (t, w) in quad.points(a, b) {
        let val = (g(t).adjoint() * sys.delta_at(t) * f(t))[(0, 0)];
        acc += val * C64::new(w, 0.0);
    }
    acc
}

/// Gram block `∫ (Y kb)*(t) Δ(t) (Y ka)(t) dt` evaluated through the cached
/// full Gram of the propagator.
pub fn frame_gram(prop: &Propagator, ka: &CMat, kb: &CMat) -> Result<CMat> {
    let g = prop.full_gram()?;
    Ok(kb.adjoint() * g * ka)
}

/// Mixed Gram `∫ Y₁*(t) Δ(t) Y₂(t) dt` for two propagators over the same
/// system and panel layout.
pub fn cross_gram(p1: &Propagator, p2: &Propagator) -> Result<CMat> {
    let t1 = p1.node_table()?;
    let t2 = p2.node_table()?;
    if t1.ts.len() != t2.ts.len() {
        return Err(SpecfunError::ShapeMismatch("node layouts differ".into()));
    }
    let n = p1.sys().n();
    let mut acc = CMat::zeros(n, n);
    for i in 0..t1.ts.len() {
        acc += t1.y[i].adjoint() * &t1.delta[i] * &t2.y[i] * C64::new(t1.ws[i], 0.0);
    }
    Ok(acc)
}

/// Weighted moment `∫ Y*(t) Δ(t) f(t) dt` of a sampled function against
/// the fundamental frame.
pub fn weighted_moment(prop: &Propagator, f: &dyn Fn(f64) -> CVec) -> Result<CVec> {
    let table = prop.node_table()?;
    let n = prop.sys().n();
    let mut acc = CVec::zeros(n);
    for i in 0..table.ts.len() {
        acc += table.y[i].adjoint() * &table.delta[i] * f(table.ts[i]) * C64::new(table.ws[i], 0.0);
    }
    Ok(acc)
}
