//! Composite Gauss-Legendre quadrature.

use crate::{C64, CMat};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Tricomi initial guess for the k-th root.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = (n as f64) * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite quadrature layout: `panels` equal panels with a fixed-order
/// Gauss-Legendre rule on each.
#[derive(Debug, Clone)]
pub struct QuadSpec {
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { panels: 256, nodes_per_panel: 32 }
    }
}

impl QuadSpec {
    pub fn new(panels: usize, nodes_per_panel: usize) -> Self {
        QuadSpec { panels, nodes_per_panel }
    }

    /// All quadrature points `(t, w)` for the interval `[a, b]`, panel by
    /// panel in increasing order.
    pub fn points(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (xs, ws) = gauss_legendre(self.nodes_per_panel);
        let h = (b - a) / self.panels as f64;
        let mut out = Vec::with_capacity(self.panels * self.nodes_per_panel);
        for p in 0..self.panels {
            let left = a + p as f64 * h;
            for (x, w) in xs.iter().zip(ws.iter()) {
                out.push((left + 0.5 * h * (x + 1.0), 0.5 * h * w));
            }
        }
        out
    }
}

/// Integrates a matrix-valued function over `[a, b]`.
pub fn integrate_matrix(a: f64, b: f64, spec: &QuadSpec, f: &dyn Fn(f64) -> CMat) -> CMat {
    let pts = spec.points(a, b);
    let mut acc = f(pts[0].0) * C64::new(pts[0].1, 0.0);
    for &(t, w) in &pts[1..] {
        acc += f(t) * C64::new(w, 0.0);
    }
    acc
}

/// Integrates a scalar complex function over `[a, b]`.
pub fn integrate_scalar(a: f64, b: f64, spec: &QuadSpec, f: &dyn Fn(f64) -> C64) -> C64 {
    let pts = spec.points(a, b);
    pts.iter().map(|&(t, w)| f(t) * C64::new(w, 0.0)).sum()
}
