//! Two-point boundary problems for the fundamental solution families, the
//! Weyl matrix `M₊(λ)` and its derived blocks `m₀`, `S₁`, `S₂`, `Ṁ₊`.
//!
//! All boundary problems are posed on the stacked data
//! `(Ũ⁻¹ y(a), y(b)) ∈ ℂ²ⁿ` and coupled to the propagation constraint in
//! an exponentially rescaled form, so evaluations stay finite arbitrarily
//! deep in the upper half-plane.

use crate::boundary::{BoundaryGeometry, TripletMaps};
use crate::linalg;
use crate::propagate::{Propagator, PropagatorSpec};
use crate::system::SymmetricSystem;
use crate::{C64, CMat, Result, SpecfunError};

/// Spectral parameters closer to the real axis than this are rejected by
/// the boundary problem solvers; the Weyl data genuinely degenerates at
/// spectral points.
pub const MIN_IMAG_LAMBDA: f64 = 1e-8;

const COND_WARN: f64 = 1e10;
/// Cap on the endpoint growth exponent used in the transfer constraint.
/// Beyond it the subdominant corrections are far below machine precision
/// and the constraint degenerates to membership in the range of the
/// scaled transfer matrix, which carries the half-plane limit. The cap is
/// low enough that products of two shrink factors stay normal floats.
const LOG_SCALE_CAP: f64 = 150.0;

/// Solution of a two-point boundary problem posed on stacked endpoint
/// data, one column per right-hand side.
#[derive(Debug, Clone)]
pub struct BoundarySolve {
    /// Stacked boundary data `(Ũ⁻¹ y(a), y(b))`, `2n × k`.
    pub stacked: CMat,
    /// Initial data `y(a)`, `n × k`.
    pub initial: CMat,
    /// Condition number of the boundary matrix.
    pub cond: f64,
}

/// Solves `bc_rows · (ξ, y_b) = bc_rhs` coupled to the rescaled transfer
/// constraint `e^{-s} y_b - W Ũ ξ = conn_rhs`, where `Y(b) = e^s W` is the
/// overflow-safe endpoint factorization.
pub fn solve_boundary_problem(
    prop: &Propagator,
    geom: &BoundaryGeometry,
    bc_rows: &CMat,
    bc_rhs: &CMat,
    conn_rhs: Option<&CMat>,
) -> Result<BoundarySolve> {
    let n = geom.n();
    if bc_rows.nrows() != n || bc_rows.ncols() != 2 * n {
        return Err(SpecfunError::ShapeMismatch(format!(
            "boundary rows must be {n}x{}, got {}x{}",
            2 * n,
            bc_rows.nrows(),
            bc_rows.ncols()
        )));
    }
    let k = bc_rhs.ncols();
    let (w, log_scale) = prop.scaled_endpoint()?;
    let shrink = C64::new((-log_scale.min(LOG_SCALE_CAP)).exp(), 0.0);
    let wu = w * geom.u_tilde();

    let mut a = CMat::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..2 * n {
            a[(r, c)] = bc_rows[(r, c)];
        }
    }
    for r in 0..n {
        for c in 0..n {
            a[(n + r, c)] = -wu[(r, c)];
        }
        a[(n + r, n + r)] = shrink;
    }
    let mut rhs = CMat::zeros(2 * n, k);
    for r in 0..n {
        for c in 0..k {
            rhs[(r, c)] = bc_rhs[(r, c)];
        }
    }
    if let Some(p) = conn_rhs {
        for r in 0..n {
            for c in 0..k {
                rhs[(n + r, c)] = p[(r, c)];
            }
        }
    }
    if a.iter().any(|z| !z.is_finite()) {
        return Err(SpecfunError::SingularBvp { lambda: prop.lambda(), cond: f64::INFINITY });
    }
    let cond = linalg::spectral_cond(&a);
    if cond > COND_WARN {
        // Deep in a half-plane the transfer block is legitimately graded;
        // near the real axis this signals a spectral point.
        log::warn!(
            "boundary matrix poorly conditioned at lambda = {} (cond {cond:.3e})",
            prop.lambda()
        );
    }
    let stacked = linalg::solve_square(&a, &rhs)
        .map_err(|_| SpecfunError::SingularBvp { lambda: prop.lambda(), cond })?;
    if stacked.iter().any(|z| !z.is_finite()) {
        return Err(SpecfunError::SingularBvp { lambda: prop.lambda(), cond });
    }
    let initial = geom.u_tilde() * stacked.rows(0, n).into_owned();
    Ok(BoundarySolve { stacked, initial, cond })
}

/// The fundamental solution family attached to the decomposing boundary
/// maps at one non-real `λ`: columns are grouped as
/// `(ξ₁ | ξ₂ | ξ₃ | u₊)` for `Im λ > 0` and `(ξ₁ | ξ₂ | ξ₃ | u₋)` for
/// `Im λ < 0`.
#[derive(Debug, Clone)]
pub struct FundamentalSolutions {
    pub lambda: C64,
    /// Stacked boundary data, `2n × n`.
    pub stacked: CMat,
    /// Initial data `y(a)`, `n × n`.
    pub initial: CMat,
    /// Column block sizes `(dim H₁⊥, dim H₁, dim Ĥ, ν)`.
    pub col_splits: (usize, usize, usize, usize),
    pub cond: f64,
}

fn reject_near_real(lambda: C64) -> Result<()> {
    if lambda.im.abs() < MIN_IMAG_LAMBDA {
        return Err(SpecfunError::LambdaTooReal { lambda, min_imag: MIN_IMAG_LAMBDA });
    }
    Ok(())
}

/// Solves the defining conditions of the fundamental family in one dense
/// linear pass: the first boundary map applied to the family equals the
/// identity on its target space.
pub fn solve_fundamental(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    triplet: &TripletMaps,
    lambda: C64,
    spec: &PropagatorSpec,
) -> Result<FundamentalSolutions> {
    reject_near_real(lambda)?;
    let n = geom.n();
    let prop = Propagator::new(sys, lambda, spec.clone());
    let identity = CMat::identity(n, n);
    let solve = solve_boundary_problem(&prop, geom, &triplet.g0, &identity, None)?;
    Ok(FundamentalSolutions {
        lambda,
        stacked: solve.stacked,
        initial: solve.initial,
        col_splits: (geom.k_perp(), geom.h1_dim(), sys.dims().nu_hat, sys.dims().nu),
        cond: solve.cond,
    })
}

/// Per-λ Weyl package: the full matrix `M₊(λ)` plus the derived blocks.
#[derive(Debug, Clone)]
pub struct WeylData {
    pub lambda: C64,
    /// `n × n` Weyl matrix of the decomposing boundary pair.
    pub m_plus: CMat,
    /// `dim 𝐇₀` square block matrix.
    pub m0: CMat,
    /// `dim 𝐇₀ × dim 𝓗̇₀`.
    pub s1: CMat,
    /// `dim 𝓗̇₁ × dim 𝐇₀`.
    pub s2: CMat,
    /// `dim 𝓗̇₁ × dim 𝓗̇₀` lower-right block of `M₊`.
    pub m_dot: CMat,
    /// `P_{𝐇,𝐇₀} J ↾ 𝐇₀`.
    pub j0: CMat,
}

/// Assembles `M₊(λ)` from boundary readings of the fundamental family and
/// fills the derived blocks, including the half-unit imaginary shifts on
/// the middle channel.
pub fn weyl_function(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    triplet: &TripletMaps,
    lambda: C64,
    spec: &PropagatorSpec,
) -> Result<WeylData> {
    if lambda.im < MIN_IMAG_LAMBDA {
        return Err(SpecfunError::LambdaTooReal { lambda, min_imag: MIN_IMAG_LAMBDA });
    }
    let z = solve_fundamental(sys, geom, triplet, lambda, spec)?;
    Ok(assemble_weyl(sys, geom, &z))
}

fn assemble_weyl(sys: &SymmetricSystem, geom: &BoundaryGeometry, z: &FundamentalSolutions) -> WeylData {
    let n = geom.n();
    let nu = sys.dims().nu;
    let nu_hat = sys.dims().nu_hat;
    let k_perp = geom.k_perp();
    let k_one = geom.h1_dim();
    let h0 = geom.h0_dim();
    let hdot = geom.hdot_dim();
    let half_i = C64::new(0.0, 0.5);

    // Boundary readings: rows are the model-space components of
    // Ũ⁻¹ y(a) and the negated trailing trace at b.
    let w = &z.stacked;
    let mut m_plus = CMat::zeros(n, n);
    for r in 0..nu + nu_hat {
        for c in 0..n {
            m_plus[(r, c)] = w[(r, c)];
        }
    }
    for r in 0..nu {
        for c in 0..n {
            m_plus[(nu + nu_hat + r, c)] = -w[(n + n - nu + r, c)];
        }
    }
    // Middle-channel diagonal shift on the ξ₃ column block.
    for i in 0..nu_hat {
        for jj in 0..nu_hat {
            if i == jj {
                m_plus[(nu + i, nu + jj)] += half_i;
            }
        }
    }

    // m₀: the (1..3) × (1..3) corner bordered by the -½ I_{H₁} couplings.
    let mut m0 = CMat::zeros(h0, h0);
    for r in 0..nu + nu_hat {
        for c in 0..nu + nu_hat {
            m0[(r, c)] = m_plus[(r, c)];
        }
    }
    for i in 0..k_one {
        m0[(k_perp + i, nu + nu_hat + i)] = C64::new(-0.5, 0.0);
        m0[(nu + nu_hat + i, k_perp + i)] = C64::new(-0.5, 0.0);
    }

    // S₁: columns of the last three blocks, with the middle diagonal
    // unshifted and the -I_{H₁} bottom coupling.
    let mut s1 = CMat::zeros(h0, hdot);
    for r in 0..nu + nu_hat {
        for c in 0..hdot {
            s1[(r, c)] = m_plus[(r, k_perp + c)];
        }
    }
    for i in 0..nu_hat {
        s1[(nu + i, k_one + i)] -= half_i;
    }
    for i in 0..k_one {
        s1[(nu + nu_hat + i, i)] = C64::new(-1.0, 0.0);
    }

    // S₂: rows of the last three blocks, middle diagonal shifted up, with
    // the -I_{H₁} right coupling.
    let mut s2 = CMat::zeros(hdot, h0);
    for r in 0..hdot {
        for c in 0..nu + nu_hat {
            s2[(r, c)] = m_plus[(k_perp + r, c)];
        }
    }
    for i in 0..nu_hat {
        s2[(k_one + i, nu + i)] += half_i;
    }
    for i in 0..k_one {
        s2[(i, nu + nu_hat + i)] = C64::new(-1.0, 0.0);
    }

    let m_dot = m_plus.view((k_perp, k_perp), (hdot, hdot)).into_owned();
    let j0 = geom.j0(sys.j());
    WeylData { lambda: z.lambda, m_plus, m0, s1, s2, m_dot, j0 }
}

/// Maximal deviation in the lower-half-plane adjoint identities: the
/// adjoint of `M₊` at the mirrored point must reproduce the boundary
/// readings of the `(ξ₁, ξ₂, ξ₃, u₋)` family.
pub fn conjugate_identity_defect(
    sys: &SymmetricSystem,
    geom: &BoundaryGeometry,
    triplet: &TripletMaps,
    lambda_minus: C64,
    spec: &PropagatorSpec,
) -> Result<f64> {
    if lambda_minus.im > -MIN_IMAG_LAMBDA {
        return Err(SpecfunError::LambdaTooReal { lambda: lambda_minus, min_imag: MIN_IMAG_LAMBDA });
    }
    let upper = weyl_function(sys, geom, triplet, lambda_minus.conj(), spec)?;
    let lower = solve_fundamental(sys, geom, triplet, lambda_minus, spec)?;
    let readings = &triplet.g1 * &lower.stacked;
    Ok(linalg::max_abs(&(upper.m_plus.adjoint() - readings)))
}
