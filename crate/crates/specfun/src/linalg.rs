//! Dense complex linear algebra helpers: Hermitian parts, matrix
//! exponentials, orthonormal frames with deterministic phase fixing,
//! subspace comparisons.

use crate::{C64, CMat, Result, SpecfunError};

/// Hermitian part `(A + A*) / 2`.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Imaginary part in the operator sense, `(A - A*) / (2i)`.
pub fn imag_part(a: &CMat) -> CMat {
    (a - a.adjoint()) * (C64::new(0.0, -0.5))
}

/// Largest entry magnitude.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn hermitian_min_eig(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let eig = nalgebra::SymmetricEigen::new(hermitize(m));
    eig.eigenvalues.iter().fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// Matrix exponential by Pade(13) approximation with scaling and squaring.
pub fn matrix_exp(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix_exp requires a square matrix");
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    const THETA13: f64 = 5.371920351148152;
    let norm = one_norm(a);
    let s: i32 = if norm > THETA13 {
        ((norm / THETA13).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let a = a * C64::new(0.5f64.powi(s), 0.0);
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let c = |x: f64| C64::new(x, 0.0);
    let id = CMat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u = &a
        * (&a6 * (&a6 * c(B[13]) + &a4 * c(B[11]) + &a2 * c(B[9]))
            + &a6 * c(B[7])
            + &a4 * c(B[5])
            + &a2 * c(B[3])
            + &id * c(B[1]));
    let v = &a6 * (&a6 * c(B[12]) + &a4 * c(B[10]) + &a2 * c(B[8]))
        + &a6 * c(B[6])
        + &a4 * c(B[4])
        + &a2 * c(B[2])
        + &id * c(B[0]);
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut x = lhs
        .lu()
        .solve(&rhs)
        .expect("Pade denominator is nonsingular for scaled input");
    for _ in 0..s {
        x = &x * &x;
    }
    x
}

/// Multiplies each column by a unit phase so that its largest-magnitude
/// entry becomes real and positive. Pins an otherwise arbitrary gauge.
pub fn phase_normalize_columns(m: &mut CMat) {
    for j in 0..m.ncols() {
        let mut best = 0.0f64;
        let mut phase = C64::new(1.0, 0.0);
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z.norm() > best * (1.0 + 1e-12) {
                best = z.norm();
                phase = z / z.norm();
            }
        }
        if best > 0.0 {
            let factor = phase.conj();
            for i in 0..m.nrows() {
                m[(i, j)] *= factor;
            }
        }
    }
}

/// Orthonormal frame for the column span of `a`, with rank decided by the
/// relative threshold `rel_tol` and deterministic column phases.
pub fn orthonormal_columns(a: &CMat, rel_tol: f64) -> CMat {
    let n = a.nrows();
    if a.ncols() == 0 {
        return CMat::zeros(n, 0);
    }
    let qr = a.clone().col_piv_qr();
    let q = qr.q();
    let r = qr.r();
    let dmax = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].norm())
        .fold(0.0f64, f64::max);
    if dmax == 0.0 {
        return CMat::zeros(n, 0);
    }
    let rank = (0..r.nrows().min(r.ncols()))
        .take_while(|&i| r[(i, i)].norm() > rel_tol * dmax)
        .count();
    let mut frame = q.columns(0, rank).into_owned();
    phase_normalize_columns(&mut frame);
    frame
}

/// Orthonormal frame of the orthogonal complement of the span of the
/// orthonormal frame `f` inside the full space.
pub fn orthonormal_complement(f: &CMat) -> CMat {
    let n = f.nrows();
    let k = f.ncols();
    if k >= n {
        return CMat::zeros(n, 0);
    }
    if k == 0 {
        return CMat::identity(n, n);
    }
    let proj = CMat::identity(n, n) - f * f.adjoint();
    let qr = proj.col_piv_qr();
    let mut frame = qr.q().columns(0, n - k).into_owned();
    phase_normalize_columns(&mut frame);
    frame
}

/// Numerical rank with threshold `rel_tol` relative to the largest
/// singular value.
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |acc, &v| acc.max(v));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let sv = a.clone().singular_values();
    sv.iter().fold(0.0f64, |acc, &v| acc.max(v))
}

/// Spectral condition number; `f64::INFINITY` when singular to working
/// precision.
pub fn spectral_cond(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |acc, &v| acc.max(v));
    let smin = sv.iter().fold(f64::INFINITY, |acc, &v| acc.min(v));
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Solves `A X = B` for square `A` by LU factorization.
pub fn solve_square(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() {
        return Err(SpecfunError::ShapeMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() != b.nrows() {
        return Err(SpecfunError::ShapeMismatch(format!(
            "solve dimension mismatch: {}x{} vs {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| SpecfunError::SingularMatrix(format!("{}x{} LU solve failed", a.nrows(), a.ncols())))
}

/// Gap `‖P_U - P_V‖₂` between the column spans of two orthonormal frames;
/// this is the sine of the largest principal angle when dimensions agree.
pub fn subspace_gap(u: &CMat, v: &CMat) -> f64 {
    let pu = u * u.adjoint();
    let pv = v * v.adjoint();
    spectral_norm(&(pu - pv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exp_of_rotation_generator_matches_closed_form() {
        // exp(θ·[[0,1],[-1,0]]) = [[cos θ, sin θ], [-sin θ, cos θ]]
        let theta = 0.73;
        let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(theta, 0.0), c(-theta, 0.0), c(0.0, 0.0)]);
        let e = matrix_exp(&a);
        assert!((e[(0, 0)] - c(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - c(theta.sin(), 0.0)).norm() < 1e-14);
        assert!((e[(1, 0)] + c(theta.sin(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn exp_handles_large_norm_by_scaling() {
        let a = CMat::from_row_slice(1, 1, &[c(30.0, 4.0)]);
        let e = matrix_exp(&a);
        let expect = c(30.0, 4.0).exp();
        assert!((e[(0, 0)] - expect).norm() / expect.norm() < 1e-12);
    }

    #[test]
    fn orthonormal_columns_detects_rank() {
        let a = CMat::from_row_slice(
            3,
            2,
            &[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        );
        let f = orthonormal_columns(&a, 1e-10);
        assert_eq!(f.ncols(), 1);
        assert!((f.adjoint() * &f)[(0, 0)].re - 1.0 < 1e-14);
    }

    #[test]
    fn complement_spans_the_rest() {
        let f = CMat::from_row_slice(3, 1, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let comp = orthonormal_complement(&f);
        assert_eq!(comp.ncols(), 2);
        assert!(max_abs(&(f.adjoint() * &comp)) < 1e-14);
    }

    #[test]
    fn phase_fix_makes_largest_entry_positive_real() {
        let mut m = CMat::from_row_slice(2, 1, &[c(0.0, -0.8), c(0.1, 0.0)]);
        phase_normalize_columns(&mut m);
        assert!(m[(0, 0)].im.abs() < 1e-15);
        assert!(m[(0, 0)].re > 0.0);
    }

    #[test]
    fn hermitian_min_eig_of_diag() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!((hermitian_min_eig(&m) + 0.5).abs() < 1e-12);
    }
}
