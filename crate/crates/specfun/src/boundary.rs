//! Subspace geometry for the signature form and boundary maps on stacked
//! endpoint data.
//!
//! For a subspace `τ` whose J-companion `τ⊖ = 𝐇 ⊖ Jτ` is neutral, a
//! J-canonical operator `Ũ` (`Ũ*JŨ = J`, `Ũ 𝐇₀ = τ`) is constructed that
//! matches `τ` with the model space `𝐇₀ = H ⊕ Ĥ ⊕ H₁`. All boundary maps
//! are then plain matrices acting on the stacked vector
//! `(Ũ⁻¹ y(a), y(b)) ∈ ℂ²ⁿ`.

use crate::linalg;
use crate::propagate::PropagatorSpec;
use crate::system::{self, Dimensions, SymmetricSystem};
use crate::{C64, CMat, Result, SpecfunError};

/// A subspace of `ℂⁿ` held as an orthonormal frame.
#[derive(Debug, Clone)]
pub struct Subspace {
    frame: CMat,
}

impl Subspace {
    /// Orthonormalizes the given spanning columns; rank deficiency is
    /// allowed and reduces the dimension.
    pub fn from_spanning(vectors: &CMat) -> Result<Self> {
        if vectors.nrows() == 0 {
            return Err(SpecfunError::InvalidInput("empty ambient space".into()));
        }
        let frame = linalg::orthonormal_columns(vectors, 1e-12);
        Ok(Subspace { frame })
    }

    /// Wraps an already orthonormal frame.
    pub fn from_frame(frame: CMat) -> Result<Self> {
        let defect = linalg::max_abs(&(frame.adjoint() * &frame - CMat::identity(frame.ncols(), frame.ncols())));
        if defect > 1e-8 {
            return Err(SpecfunError::InvalidInput(format!(
                "frame columns are not orthonormal (defect {defect:.2e})"
            )));
        }
        Ok(Subspace { frame })
    }

    pub fn zero(n: usize) -> Self {
        Subspace { frame: CMat::zeros(n, 0) }
    }

    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn space_dim(&self) -> usize {
        self.frame.nrows()
    }
}

/// The J-companion `τ⊖ = 𝐇 ⊖ Jτ`.
pub fn j_companion(j: &CMat, tau: &Subspace) -> Subspace {
    let jf = j * tau.frame();
    // J is unitary, so the columns of J·frame are already orthonormal.
    let comp = linalg::orthonormal_complement(&linalg::orthonormal_columns(&jf, 1e-12));
    Subspace { frame: comp }
}

/// True when the signature form vanishes on the subspace.
pub fn is_neutral(j: &CMat, eta: &Subspace, tol: f64) -> bool {
    neutrality_defect(j, eta) <= tol
}

/// `‖F* J F‖_max` for the subspace frame `F`.
pub fn neutrality_defect(j: &CMat, eta: &Subspace) -> f64 {
    if eta.dim() == 0 {
        return 0.0;
    }
    linalg::max_abs(&(eta.frame().adjoint() * j * eta.frame()))
}

/// The diagonalized signature `i · diag(I_{H⊕Ĥ}, -I_H)`.
pub fn diagonal_signature(dims: &Dimensions) -> CMat {
    let n = dims.n();
    let top = dims.nu + dims.nu_hat;
    CMat::from_fn(n, n, |r, c| {
        if r != c {
            C64::new(0.0, 0.0)
        } else if r < top {
            C64::new(0.0, 1.0)
        } else {
            C64::new(0.0, -1.0)
        }
    })
}

/// The unitary `X` with `X* Ĵ X = J` that carries the signature form to
/// its diagonal model; under `X`, neutral subspaces become graphs of
/// isometries from a subspace of `H ⊕ Ĥ` into `H`.
pub fn j_diagonalizer(dims: &Dimensions) -> CMat {
    let n = dims.n();
    let nu = dims.nu;
    let nu_hat = dims.nu_hat;
    let s = 1.0 / 2.0f64.sqrt();
    let mut x = CMat::zeros(n, n);
    for k in 0..nu {
        x[(k, k)] = C64::new(0.0, -s);
        x[(k, nu + nu_hat + k)] = C64::new(s, 0.0);
        x[(nu + nu_hat + k, k)] = C64::new(0.0, s);
        x[(nu + nu_hat + k, nu + nu_hat + k)] = C64::new(s, 0.0);
    }
    for k in 0..nu_hat {
        x[(nu + k, nu + k)] = C64::new(1.0, 0.0);
    }
    x
}

/// Splits `X·F` into its `H ⊕ Ĥ` and `H` row blocks, scaled so that the
/// columns of both blocks are orthonormal when `F` spans a neutral
/// subspace.
fn graph_blocks(dims: &Dimensions, x: &CMat, frame: &CMat) -> (CMat, CMat) {
    let top = dims.nu + dims.nu_hat;
    let g = x * frame;
    let s = C64::new(2.0f64.sqrt(), 0.0);
    let g1 = g.rows(0, top).into_owned() * s;
    let g2 = g.rows(top, dims.nu).into_owned() * s;
    (g1, g2)
}

/// Completes a neutral subspace `η` to a subspace `τ` with neutral
/// companion, `dim τ = ν + ν̂` (the minimal possible value), and
/// `τ⊖ ∩ η = {0}`.
pub fn complete_tau(dims: &Dimensions, eta: &Subspace) -> Result<Subspace> {
    let j = system::build_signature(dims);
    let defect = neutrality_defect(&j, eta);
    if defect > 1e-8 {
        return Err(SpecfunError::EtaNotNeutral { defect });
    }
    let n = dims.n();
    let nu = dims.nu;
    let top = dims.nu + dims.nu_hat;
    let k = eta.dim();
    if k > nu {
        return Err(SpecfunError::EtaNotNeutral { defect: f64::NAN });
    }
    let x = j_diagonalizer(dims);
    let (g1, g2) = graph_blocks(dims, &x, eta.frame());

    // Extend the isometry with the opposite sign on its existing domain;
    // the extension maps fresh domain directions onto the complement of
    // the range.
    let dom_frame = linalg::orthonormal_columns(&g1, 1e-10);
    let dom_comp = linalg::orthonormal_complement(&dom_frame);
    let ran_frame = linalg::orthonormal_columns(&g2, 1e-10);
    let ran_comp = linalg::orthonormal_complement(&ran_frame);
    let extra = nu - k;
    let s = C64::new(1.0 / 2.0f64.sqrt(), 0.0);
    let mut graph = CMat::zeros(n, nu);
    for col in 0..k {
        for r in 0..top {
            graph[(r, col)] = g1[(r, col)] / C64::new(2.0f64.sqrt(), 0.0);
        }
        for r in 0..nu {
            graph[(top + r, col)] = -g2[(r, col)] / C64::new(2.0f64.sqrt(), 0.0);
        }
    }
    for e in 0..extra {
        for r in 0..top {
            graph[(r, k + e)] = dom_comp[(r, e)] * s;
        }
        for r in 0..nu {
            graph[(top + r, k + e)] = ran_comp[(r, e)] * s;
        }
    }
    let mut tau0_frame = x.adjoint() * graph;
    linalg::phase_normalize_columns(&mut tau0_frame);
    let tau0 = Subspace { frame: tau0_frame };
    Ok(j_companion(&j, &tau0))
}

/// Options controlling geometry construction.
#[derive(Debug, Clone)]
pub struct GeometryOptions {
    pub probe_lambda: C64,
    pub rank_tol: f64,
    pub neutral_tol: f64,
    pub prop: PropagatorSpec,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        GeometryOptions {
            probe_lambda: C64::new(0.0, 1.0),
            rank_tol: 1e-9,
            neutral_tol: 1e-10,
            prop: PropagatorSpec::default(),
        }
    }
}

/// Boundary geometry attached to a subspace `τ`: the companion, the
/// J-canonical operator `Ũ`, the splitting `H = H₁⊥ ⊕ H₁`, and the model
/// space `𝐇₀ = H ⊕ Ĥ ⊕ H₁` with its embedding.
#[derive(Debug, Clone)]
pub struct BoundaryGeometry {
    dims: Dimensions,
    tau: Subspace,
    tau_companion: Subspace,
    u_tilde: CMat,
    u_tilde_inv: CMat,
    k_perp: usize,
}

impl BoundaryGeometry {
    pub fn dims(&self) -> &Dimensions {
        &self.dims
    }

    pub fn n(&self) -> usize {
        self.dims.n()
    }

    pub fn tau(&self) -> &Subspace {
        &self.tau
    }

    pub fn tau_companion(&self) -> &Subspace {
        &self.tau_companion
    }

    pub fn u_tilde(&self) -> &CMat {
        &self.u_tilde
    }

    pub fn u_tilde_inv(&self) -> &CMat {
        &self.u_tilde_inv
    }

    /// dim H₁⊥ = dim τ⊖.
    pub fn k_perp(&self) -> usize {
        self.k_perp
    }

    /// dim H₁.
    pub fn h1_dim(&self) -> usize {
        self.dims.nu - self.k_perp
    }

    /// dim 𝐇₀ = ν + ν̂ + dim H₁.
    pub fn h0_dim(&self) -> usize {
        self.dims.nu + self.dims.nu_hat + self.h1_dim()
    }

    /// dim 𝓗̇₀ = dim H₁ + ν̂ + ν; equals dim 𝓗̇₁ for regular systems.
    pub fn hdot_dim(&self) -> usize {
        self.h1_dim() + self.dims.nu_hat + self.dims.nu
    }

    /// Coordinates of `𝐇₀` inside `𝐇`: the first `ν + ν̂` axes together
    /// with the `H₁` part of the trailing `H` block.
    pub fn h0_coords(&self) -> Vec<usize> {
        let n = self.n();
        let nu = self.dims.nu;
        let top = nu + self.dims.nu_hat;
        let mut idx: Vec<usize> = (0..top).collect();
        idx.extend(n - nu + self.k_perp..n);
        idx
    }

    /// Embedding matrix `E₀ : 𝐇₀ → 𝐇`.
    pub fn h0_embedding(&self) -> CMat {
        let coords = self.h0_coords();
        let mut e = CMat::zeros(self.n(), coords.len());
        for (col, &row) in coords.iter().enumerate() {
            e[(row, col)] = C64::new(1.0, 0.0);
        }
        e
    }

    /// `U = Ũ ↾ 𝐇₀` as an `n × dim 𝐇₀` matrix.
    pub fn u(&self) -> CMat {
        &self.u_tilde * self.h0_embedding()
    }

    /// `J₀ = P_{𝐇,𝐇₀} J ↾ 𝐇₀` on the model space coordinates.
    pub fn j0(&self, j: &CMat) -> CMat {
        let e = self.h0_embedding();
        e.adjoint() * j * e
    }
}

/// Builds the boundary geometry for `τ`. Requires a neutral companion and
/// a `τ`-definite system.
pub fn build_geometry(sys: &SymmetricSystem, tau: &Subspace, opts: &GeometryOptions) -> Result<BoundaryGeometry> {
    let dims = *sys.dims();
    let n = dims.n();
    if tau.space_dim() != n {
        return Err(SpecfunError::ShapeMismatch(format!(
            "tau lives in dimension {}, system has n = {}",
            tau.space_dim(),
            n
        )));
    }
    let j = sys.j();
    let companion = j_companion(j, tau);
    let defect = neutrality_defect(j, &companion);
    if defect > opts.neutral_tol.max(1e-10) {
        return Err(SpecfunError::TauNotAdmissible { defect });
    }
    if !system::tau_definite(sys, tau, opts.probe_lambda, opts.rank_tol, &opts.prop)? {
        return Err(SpecfunError::NotTauDefinite);
    }
    let k_perp = companion.dim();
    if k_perp > dims.nu {
        return Err(SpecfunError::TauNotAdmissible { defect: f64::NAN });
    }

    let nu = dims.nu;
    let top = nu + dims.nu_hat;
    let x = j_diagonalizer(&dims);

    // Graph data of the companion under X, with column phases pinned.
    let (mut g1, mut g2) = graph_blocks(&dims, &x, companion.frame());
    for col in 0..k_perp {
        let mut best = 0.0f64;
        let mut phase = C64::new(1.0, 0.0);
        for r in 0..top {
            let z = g1[(r, col)];
            if z.norm() > best * (1.0 + 1e-12) {
                best = z.norm();
                phase = z / z.norm();
            }
        }
        if best > 0.0 {
            let f = phase.conj();
            for r in 0..top {
                g1[(r, col)] *= f;
            }
            for r in 0..nu {
                g2[(r, col)] *= f;
            }
        }
    }

    // U₁ sends the model domain (the H₁⊥ axes) onto the domain of the
    // companion's isometry; U₂ is forced on H₁⊥ by the matching relation
    // and completed unitarily on H₁.
    let d2c = linalg::orthonormal_complement(&linalg::orthonormal_columns(&g1, 1e-10));
    let mut u1 = CMat::zeros(top, top);
    for col in 0..k_perp {
        for r in 0..top {
            u1[(r, col)] = g1[(r, col)];
        }
    }
    for col in 0..top - k_perp {
        for r in 0..top {
            u1[(r, k_perp + col)] = d2c[(r, col)];
        }
    }
    let w2 = linalg::orthonormal_complement(&linalg::orthonormal_columns(&g2, 1e-10));
    let mut u2 = CMat::zeros(nu, nu);
    for col in 0..k_perp {
        for r in 0..nu {
            u2[(r, col)] = -g2[(r, col)];
        }
    }
    for col in 0..nu - k_perp {
        for r in 0..nu {
            u2[(r, k_perp + col)] = w2[(r, col)];
        }
    }
    let mut u_hat = CMat::zeros(n, n);
    for r in 0..top {
        for c in 0..top {
            u_hat[(r, c)] = u1[(r, c)];
        }
    }
    for r in 0..nu {
        for c in 0..nu {
            u_hat[(top + r, top + c)] = u2[(r, c)];
        }
    }
    let u_tilde = x.adjoint() * u_hat * &x;
    // From Ũ*JŨ = J: the inverse is -J Ũ* J.
    let u_tilde_inv = -j * u_tilde.adjoint() * j;

    let geom = BoundaryGeometry {
        dims,
        tau: tau.clone(),
        tau_companion: companion,
        u_tilde,
        u_tilde_inv,
        k_perp,
    };

    let symplectic_defect = linalg::max_abs(&(geom.u_tilde.adjoint() * j * &geom.u_tilde - j));
    let mapped = linalg::orthonormal_columns(&geom.u(), 1e-12);
    let gap = linalg::subspace_gap(&mapped, geom.tau.frame());
    if symplectic_defect > 1e-10 || gap > 1e-8 {
        return Err(SpecfunError::InvalidInput(format!(
            "geometry postconditions violated (symplectic defect {symplectic_defect:.2e}, subspace gap {gap:.2e})"
        )));
    }
    Ok(geom)
}

/// Endpoint trace maps at `b`: the `H`, `Ĥ`, `H` components of `y(b)`.
#[derive(Debug, Clone)]
pub struct GammaB {
    pub g0b: CMat,
    pub ghat_b: CMat,
    pub g1b: CMat,
}

/// Builds the trace maps at the regular endpoint `b`.
pub fn build_gamma_b(sys: &SymmetricSystem) -> Result<GammaB> {
    if !sys.b_end().is_finite() {
        return Err(SpecfunError::SingularEndpoint);
    }
    let dims = sys.dims();
    let n = dims.n();
    let nu = dims.nu;
    let selector = |start: usize, len: usize| {
        let mut m = CMat::zeros(len, n);
        for i in 0..len {
            m[(i, start + i)] = C64::new(1.0, 0.0);
        }
        m
    };
    Ok(GammaB {
        g0b: selector(0, nu),
        ghat_b: selector(nu, dims.nu_hat),
        g1b: selector(n - nu, nu),
    })
}

/// Boundary maps as matrices on the stacked data
/// `(Ũ⁻¹ y(a), y(b)) ∈ ℂ²ⁿ`.
#[derive(Debug, Clone)]
pub struct TripletMaps {
    /// Rows `(-Γ¹₁ₐ, -Γ²₁ₐ, i(Γ̂ₐ - Γ̂_b), Γ₀b)`.
    pub g0: CMat,
    /// Rows `(Γ⁰₀ₐ¹, Γ⁰₀ₐ², ½(Γ̂ₐ + Γ̂_b), -Γ₁b)`.
    pub g1: CMat,
    /// `g0` without its leading `H₁⊥` block row.
    pub g0_dot: CMat,
    /// `g1` without its leading `H₁⊥` block row.
    pub g1_dot: CMat,
    /// `P_{𝐇,𝐇₀} Γₐ`: the `(Γ⁰₀ₐ¹, Γ⁰₀ₐ², Γ̂ₐ, Γ²₁ₐ)` rows.
    pub gamma_a_h0: CMat,
    /// `Γ¹₁ₐ` alone.
    pub gamma_1a_perp: CMat,
    /// Stacked versions of the endpoint traces at `b`.
    pub gamma_0b: CMat,
    pub gamma_hat_b: CMat,
    pub gamma_1b: CMat,
    /// `Γ̂ₐ` alone.
    pub gamma_hat_a: CMat,
}

/// Assembles the decomposing boundary maps for a geometry.
pub fn build_triplet(geom: &BoundaryGeometry) -> TripletMaps {
    let dims = geom.dims();
    let n = dims.n();
    let nu = dims.nu;
    let nu_hat = dims.nu_hat;
    let k_perp = geom.k_perp();
    let k_one = geom.h1_dim();
    let one = C64::new(1.0, 0.0);
    let i_unit = C64::new(0.0, 1.0);

    // Stacked coordinates: 0..n is ξ = Ũ⁻¹ y(a), n..2n is y(b).
    let mut g0 = CMat::zeros(n, 2 * n);
    let mut g1 = CMat::zeros(n, 2 * n);
    let mut row = 0;
    for i in 0..k_perp {
        g0[(row, n - nu + i)] = -one; // -Γ¹₁ₐ
        g1[(row, i)] = one; // Γ⁰₀ₐ¹
        row += 1;
    }
    for i in 0..k_one {
        g0[(row, n - nu + k_perp + i)] = -one; // -Γ²₁ₐ
        g1[(row, k_perp + i)] = one; // Γ⁰₀ₐ²
        row += 1;
    }
    for i in 0..nu_hat {
        g0[(row, nu + i)] = i_unit; // i Γ̂ₐ
        g0[(row, n + nu + i)] = -i_unit; // -i Γ̂_b
        g1[(row, nu + i)] = C64::new(0.5, 0.0);
        g1[(row, n + nu + i)] = C64::new(0.5, 0.0);
        row += 1;
    }
    for i in 0..nu {
        g0[(row, n + i)] = one; // Γ₀b
        g1[(row, n + n - nu + i)] = -one; // -Γ₁b
        row += 1;
    }
    debug_assert_eq!(row, n);

    let g0_dot = g0.rows(k_perp, n - k_perp).into_owned();
    let g1_dot = g1.rows(k_perp, n - k_perp).into_owned();

    let stacked_selector = |offset: usize, start: usize, len: usize| {
        let mut m = CMat::zeros(len, 2 * n);
        for i in 0..len {
            m[(i, offset + start + i)] = one;
        }
        m
    };
    let mut gamma_a_h0 = CMat::zeros(geom.h0_dim(), 2 * n);
    for i in 0..nu + nu_hat {
        gamma_a_h0[(i, i)] = one;
    }
    for i in 0..k_one {
        gamma_a_h0[(nu + nu_hat + i, n - nu + k_perp + i)] = one;
    }

    TripletMaps {
        g0,
        g1,
        g0_dot,
        g1_dot,
        gamma_a_h0,
        gamma_1a_perp: stacked_selector(0, n - nu, k_perp),
        gamma_0b: stacked_selector(n, 0, nu),
        gamma_hat_b: stacked_selector(n, nu, nu_hat),
        gamma_1b: stacked_selector(n, n - nu, nu),
        gamma_hat_a: stacked_selector(0, nu, nu_hat),
    }
}

/// Residual of the abstract Green identity on a pair of stacked boundary
/// data vectors: the Lagrange form minus the triplet right side.
pub fn abstract_green_residual(geom: &BoundaryGeometry, triplet: &TripletMaps, j: &CMat, u: &CMat, v: &CMat) -> f64 {
    let n = geom.n();
    let inner = |x: &CMat, y: &CMat| (y.adjoint() * x)[(0, 0)];
    let xi_u = u.rows(0, n).into_owned();
    let xi_v = v.rows(0, n).into_owned();
    let yb_u = u.rows(n, n).into_owned();
    let yb_v = v.rows(n, n).into_owned();
    // (J y(a), z(a)) = (J ξ_u, ξ_v) because Ũ preserves the form.
    let lagrange = inner(&(j * &yb_u), &yb_v) - inner(&(j * &xi_u), &xi_v);
    let g0u = &triplet.g0 * u;
    let g0v = &triplet.g0 * v;
    let g1u = &triplet.g1 * u;
    let g1v = &triplet.g1 * v;
    let green = inner(&g1u, &g0v) - inner(&g0u, &g1v);
    (lagrange - green).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dims2() -> Dimensions {
        Dimensions::new(1, 0).unwrap()
    }

    fn j2() -> CMat {
        system::build_signature(&dims2())
    }

    fn span(cols: &[C64], n: usize) -> Subspace {
        let k = cols.len() / n;
        Subspace::from_spanning(&CMat::from_column_slice(n, k, cols)).unwrap()
    }

    pub(crate) fn random_unit_frame(rng: &mut ChaCha8Rng, n: usize, k: usize) -> CMat {
        let raw = CMat::from_fn(n, k, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        linalg::orthonormal_columns(&raw, 1e-12)
    }

    /// Random neutral subspace through the graph picture.
    pub(crate) fn random_neutral(rng: &mut ChaCha8Rng, dims: &Dimensions, k: usize) -> Subspace {
        let top = dims.nu + dims.nu_hat;
        let d = random_unit_frame(rng, top, k);
        let r = random_unit_frame(rng, dims.nu, k);
        let mut graph = CMat::zeros(dims.n(), k);
        let s = c(1.0 / 2.0f64.sqrt(), 0.0);
        for col in 0..k {
            for row in 0..top {
                graph[(row, col)] = d[(row, col)] * s;
            }
            for row in 0..dims.nu {
                graph[(top + row, col)] = r[(row, col)] * s;
            }
        }
        let x = j_diagonalizer(dims);
        let mut frame = x.adjoint() * graph;
        linalg::phase_normalize_columns(&mut frame);
        Subspace::from_frame(frame).unwrap()
    }

    #[test]
    fn companion_of_the_first_axis_is_itself() {
        let tau = span(&[c(1.0, 0.0), c(0.0, 0.0)], 2);
        let comp = j_companion(&j2(), &tau);
        assert_eq!(comp.dim(), 1);
        assert!(linalg::subspace_gap(comp.frame(), tau.frame()) < 1e-14);
    }

    #[test]
    fn companion_of_the_full_space_is_zero() {
        let tau = Subspace::from_spanning(&CMat::identity(2, 2)).unwrap();
        let comp = j_companion(&j2(), &tau);
        assert_eq!(comp.dim(), 0);
    }

    #[test]
    fn neutrality_examples() {
        let j = j2();
        assert!(is_neutral(&j, &Subspace::zero(2), 1e-12));
        assert!(is_neutral(&j, &span(&[c(1.0, 0.0), c(0.0, 0.0)], 2), 1e-12));
        let full = Subspace::from_spanning(&CMat::identity(2, 2)).unwrap();
        assert!(!is_neutral(&j, &full, 1e-12));
    }

    #[test]
    fn diagonalizer_matches_the_two_by_two_closed_form() {
        let x = j_diagonalizer(&dims2());
        let s = 1.0 / 2.0f64.sqrt();
        let expect = CMat::from_row_slice(2, 2, &[c(0.0, -s), c(s, 0.0), c(0.0, s), c(s, 0.0)]);
        assert!(linalg::max_abs(&(&x - expect)) < 1e-15);
    }

    #[test]
    fn diagonalizer_identities() {
        for (nu, nu_hat) in [(1usize, 0usize), (1, 1), (2, 1), (3, 2)] {
            let dims = Dimensions::new(nu, nu_hat).unwrap();
            let x = j_diagonalizer(&dims);
            let n = dims.n();
            let unitary_defect = linalg::max_abs(&(x.adjoint() * &x - CMat::identity(n, n)));
            assert!(unitary_defect < 1e-14);
            let carried = x.adjoint() * diagonal_signature(&dims) * &x;
            assert!(linalg::max_abs(&(carried - system::build_signature(&dims))) < 1e-14);
        }
    }

    #[test]
    fn complete_tau_from_zero_in_two_dimensions() {
        let dims = dims2();
        let tau = complete_tau(&dims, &Subspace::zero(2)).unwrap();
        assert_eq!(tau.dim(), 1);
        let comp = j_companion(&j2(), &tau);
        assert!(is_neutral(&j2(), &comp, 1e-10));
    }

    #[test]
    fn complete_tau_dimension_with_middle_channel() {
        let dims = Dimensions::new(1, 1).unwrap();
        let tau = complete_tau(&dims, &Subspace::zero(3)).unwrap();
        assert_eq!(tau.dim(), 2);
    }

    #[test]
    fn complete_tau_avoids_the_seed_subspace() {
        let dims = dims2();
        let eta = span(&[c(1.0, 0.0), c(0.0, 0.0)], 2);
        let tau = complete_tau(&dims, &eta).unwrap();
        let comp = j_companion(&j2(), &tau);
        let k = comp.dim() + eta.dim();
        let mut cat = CMat::zeros(2, k);
        for i in 0..comp.dim() {
            cat.set_column(i, &comp.frame().column(i));
        }
        for i in 0..eta.dim() {
            cat.set_column(comp.dim() + i, &eta.frame().column(i));
        }
        assert_eq!(linalg::rank(&cat, 1e-10), k, "companion must intersect eta trivially");
    }

    #[test]
    fn complete_tau_rejects_non_neutral_seed() {
        let dims = dims2();
        let eta = span(&[c(1.0, 0.0), c(1.0, 0.0)], 2);
        // (J h, h) = 2i Im(h₂ h̄₁) ... for (1,1) the form is nonzero only
        // with an imaginary part; use (1, i) which has (Jh, h) = -2i·i = 2 ≠ 0.
        let eta_bad = span(&[c(1.0, 0.0), c(0.0, 1.0)], 2);
        let _ = eta;
        assert!(matches!(
            complete_tau(&dims, &eta_bad),
            Err(SpecfunError::EtaNotNeutral { .. })
        ));
    }

    #[test]
    fn geometry_for_the_canonical_toy_pins_identity() {
        let sys = presets::toy_hamiltonian();
        let tau = Subspace::from_spanning(&presets::canonical_tau_vectors_2()).unwrap();
        let geom = build_geometry(&sys, &tau, &GeometryOptions::default()).unwrap();
        assert_eq!(geom.h1_dim(), 0);
        assert_eq!(geom.h0_dim(), 1);
        assert!(linalg::max_abs(&(geom.u_tilde() - CMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn geometry_for_the_three_dim_toy_pins_identity() {
        let sys = presets::toy_with_middle_channel();
        let tau = Subspace::from_spanning(&presets::canonical_tau_vectors_3()).unwrap();
        let geom = build_geometry(&sys, &tau, &GeometryOptions::default()).unwrap();
        assert_eq!(geom.h1_dim(), 0);
        assert_eq!(geom.h0_dim(), 2);
        assert!(linalg::max_abs(&(geom.u_tilde() - CMat::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn geometry_for_second_axis_satisfies_postconditions() {
        let sys = presets::toy_hamiltonian();
        let tau = span(&[c(0.0, 0.0), c(1.0, 0.0)], 2);
        let geom = build_geometry(&sys, &tau, &GeometryOptions::default()).unwrap();
        let j = sys.j();
        assert!(linalg::max_abs(&(geom.u_tilde().adjoint() * j * geom.u_tilde() - j)) < 1e-12);
        let mapped = linalg::orthonormal_columns(&geom.u(), 1e-12);
        assert!(linalg::subspace_gap(&mapped, tau.frame()) < 1e-10);
    }

    #[test]
    fn geometry_rejects_non_definite_start() {
        let sys = presets::degenerate_weight();
        let tau = span(&[c(0.0, 0.0), c(1.0, 0.0)], 2);
        assert!(matches!(
            build_geometry(&sys, &tau, &GeometryOptions::default()),
            Err(SpecfunError::NotTauDefinite)
        ));
    }

    #[test]
    fn endpoint_trace_identity_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(nu, nu_hat) in &[(1usize, 0usize), (1, 1), (2, 1)] {
            let dims = Dimensions::new(nu, nu_hat).unwrap();
            let sys = crate::system::SymmetricSystem::new(
                dims,
                (0.0, 1.0),
                crate::system::CoefficientField::Constant(CMat::zeros(dims.n(), dims.n())),
                crate::system::CoefficientField::Constant(CMat::identity(dims.n(), dims.n())),
            )
            .unwrap();
            let gb = build_gamma_b(&sys).unwrap();
            let j = sys.j();
            for _ in 0..34 {
                let y = CMat::from_fn(dims.n(), 1, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                let z = CMat::from_fn(dims.n(), 1, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                let inner = |xx: &CMat, yy: &CMat| (yy.adjoint() * xx)[(0, 0)];
                let lhs = inner(&(j * &y), &z);
                let rhs = inner(&(&gb.g0b * &y), &(&gb.g1b * &z)) - inner(&(&gb.g1b * &y), &(&gb.g0b * &z))
                    + C64::new(0.0, 1.0) * inner(&(&gb.ghat_b * &y), &(&gb.ghat_b * &z));
                assert!((lhs - rhs).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn triplet_shapes_follow_the_splitting() {
        let sys = presets::toy_with_middle_channel();
        let tau = Subspace::from_spanning(&presets::canonical_tau_vectors_3()).unwrap();
        let geom = build_geometry(&sys, &tau, &GeometryOptions::default()).unwrap();
        let maps = build_triplet(&geom);
        let n = geom.n();
        assert_eq!(maps.g0.nrows(), n);
        assert_eq!(maps.g0_dot.nrows(), n - geom.k_perp());
        assert_eq!(maps.g1_dot.nrows(), n - geom.k_perp());
        assert_eq!(maps.gamma_a_h0.nrows(), geom.h0_dim());
    }

    #[test]
    fn abstract_green_identity_on_random_boundary_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sys = presets::toy_with_middle_channel();
        let tau = Subspace::from_spanning(&presets::canonical_tau_vectors_3()).unwrap();
        let geom = build_geometry(&sys, &tau, &GeometryOptions::default()).unwrap();
        let maps = build_triplet(&geom);
        let n = geom.n();
        for _ in 0..50 {
            let u = CMat::from_fn(2 * n, 1, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let v = CMat::from_fn(2 * n, 1, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let residual = abstract_green_residual(&geom, &maps, sys.j(), &u, &v);
            assert!(residual < 1e-13, "residual {residual}");
        }
    }

    #[test]
    fn minimal_case_dotted_maps_drop_only_the_leading_block() {
        // With H₁ = {0} the dotted maps are the middle-and-endpoint rows.
        let sys = presets::toy_with_middle_channel();
        let tau = Subspace::from_spanning(&presets::canonical_tau_vectors_3()).unwrap();
        let geom = build_geometry(&sys, &tau, &GeometryOptions::default()).unwrap();
        let maps = build_triplet(&geom);
        assert_eq!(geom.h1_dim(), 0);
        let n = geom.n();
        let expected_rows = n - geom.k_perp();
        assert_eq!(maps.g0_dot.nrows(), expected_rows);
        // First dotted row block is i(Γ̂ₐ - Γ̂_b).
        assert_eq!(maps.g0_dot[(0, 1)], c(0.0, 1.0));
        assert_eq!(maps.g0_dot[(0, n + 1)], c(0.0, -1.0));
        // Last block is Γ₀b.
        assert_eq!(maps.g0_dot[(1, n)], c(1.0, 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn companion_is_an_involution(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = Dimensions::new(2, 1).unwrap();
            let j = system::build_signature(&dims);
            let k = 1 + (seed as usize % 4);
            let frame = random_unit_frame(&mut rng, dims.n(), k);
            let tau = Subspace::from_frame(frame).unwrap();
            let twice = j_companion(&j, &j_companion(&j, &tau));
            prop_assert!(linalg::subspace_gap(twice.frame(), tau.frame()) < 1e-10);
        }

        #[test]
        fn completed_tau_passes_its_postconditions(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = Dimensions::new(2, 1).unwrap();
            let j = system::build_signature(&dims);
            let k = seed as usize % 3;
            let eta = random_neutral(&mut rng, &dims, k);
            let tau = complete_tau(&dims, &eta).unwrap();
            prop_assert_eq!(tau.dim(), dims.nu + dims.nu_hat);
            let comp = j_companion(&j, &tau);
            prop_assert!(is_neutral(&j, &comp, 1e-9));
            let total = comp.dim() + eta.dim();
            let mut cat = CMat::zeros(dims.n(), total);
            for i in 0..comp.dim() {
                cat.set_column(i, &comp.frame().column(i));
            }
            for i in 0..eta.dim() {
                cat.set_column(comp.dim() + i, &eta.frame().column(i));
            }
            prop_assert_eq!(linalg::rank(&cat, 1e-9), total);
        }
    }
}
