//! Fixtures shared by the solver benchmarks.

use parabolic_core::tridiag::Tridiagonal;
use parabolic_core::{CoefficientSet, Mesh1D, NonlocalSpec, SourceTerm, SpaceTimeFn, TimeGrid};

/// Diagonally dominant system of size `n`.
pub fn tridiagonal(n: usize) -> (Tridiagonal, Vec<f64>) {
    let mut t = Tridiagonal::zeros(n);
    for i in 0..n {
        let s = (i as f64 * 0.37).sin();
        t.lower[i] = -1.0 + 0.1 * s;
        t.upper[i] = -1.0 - 0.1 * s;
        t.diag[i] = 2.5 + s.abs();
    }
    let rhs = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
    (t, rhs)
}

/// Variable coefficients with drift and reaction.
pub fn coefficients() -> CoefficientSet {
    CoefficientSet {
        b: SpaceTimeFn::stationary(|x| 1.0 + 0.5 * x.sin()),
        f: 0.5.into(),
        lambda: 1.0.into(),
        delta: 0.5,
        sup_bound: 3.0,
    }
}

pub fn flux_source() -> SourceTerm {
    SourceTerm::new(SpaceTimeFn::new(|x, t| (3.0 * x).cos() * (1.0 + t)), 0.0)
}

pub fn grids(n_cells: usize, n_steps: usize) -> (Mesh1D, TimeGrid) {
    (
        Mesh1D::new(0.0, std::f64::consts::PI, n_cells).expect("valid mesh"),
        TimeGrid::new(1.0, n_steps).expect("valid time grid"),
    )
}

pub fn sine_nonlinearity() -> NonlocalSpec {
    NonlocalSpec::local(|z, _, _| 0.5 * z.sin(), 0.5).expect("valid operator")
}
