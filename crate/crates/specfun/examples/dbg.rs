use specfun::boundary::{build_geometry, build_triplet, GeometryOptions, Subspace};
use specfun::nevanlinna::{self, BoundaryParameter};
use specfun::propagate::PropagatorSpec;
use specfun::spectral::{self, InversionOptions};
use specfun::{presets, C64};

fn main() {
    let sys = presets::toy_hamiltonian();
    let tau = Subspace::from_spanning(&presets::canonical_tau_vectors_2()).unwrap();
    let geom = build_geometry(&sys, &tau, &GeometryOptions::default()).unwrap();
    let triplet = build_triplet(&geom);
    let spec = PropagatorSpec::default();
    let param = BoundaryParameter::dirichlet(1);
    let sampler = |l: C64| {
        nevanlinna::m_tau_formula(&sys, &geom, &triplet, &param, l, &spec).map(|s| s.value)
    };
    let k = 20usize;
    let w = (k as f64 + 0.75) * std::f64::consts::PI;
    let count = ((2.0 * w) / 0.5).round() as usize;
    let grid: Vec<f64> = (0..=count).map(|i| -w + 2.0 * w * i as f64 / count as f64).collect();
    let sigma = spectral::stieltjes_invert(&sampler, &grid, &InversionOptions::default()).unwrap();
    let found: Vec<f64> = sigma.jumps.iter().map(|j| j.location).collect();
    for kk in -21i32..21 {
        let s = (kk as f64 + 0.5) * std::f64::consts::PI;
        let hit = found.iter().any(|&f| (f - s).abs() < 1e-3);
        if !hit {
            println!("MISSING pole at k={kk}, s={s:.6}");
        }
    }
}
