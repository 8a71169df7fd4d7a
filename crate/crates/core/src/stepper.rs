//! θ-scheme integration of `uₜ = (b uₓ)ₓ + f uₓ + λu − Ku + φ` with zero
//! initial and boundary data.
//!
//! The diffusion term and the divergence part of the source share the same
//! flux-form midpoint rule, so the summation-by-parts identity
//! `(u, ∇_h·F) = −(∇_h u, F)` holds exactly on the grid.

use crate::error::{Error, Result};
use crate::mesh::{GridFunction, Mesh1D, NodalField, SpaceTimeSeries, TimeGrid};
use crate::problem::{CoefficientSet, SampledSource, SourceTerm};
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSchemeConfig {
    theta: f64,
    shift: f64,
}

impl Default for ThetaSchemeConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            shift: 0.0,
        }
    }
}

impl ThetaSchemeConfig {
    /// `theta = 1/2` is Crank–Nicolson, `theta = 1` implicit Euler.
    pub fn new(theta: f64, shift: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [0.5, 1], got {theta}"
            )));
        }
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "shift K must be a finite non-negative number, got {shift}"
            )));
        }
        Ok(Self { theta, shift })
    }

    pub fn crank_nicolson(shift: f64) -> Result<Self> {
        Self::new(0.5, shift)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn with_shift(self, shift: f64) -> Result<Self> {
        Self::new(self.theta, shift)
    }
}

/// Tridiagonal matrix of `𝒜_h − K·I` at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    bands: Tridiagonal,
}

impl DiscreteOperator {
    pub fn bands(&self) -> &Tridiagonal {
        &self.bands
    }

    pub fn apply(&self, u: &GridFunction) -> GridFunction {
        let mut out = vec![0.0; u.values().len()];
        self.bands.mul_vec(u.values(), &mut out);
        GridFunction::from_vec_unchecked(*u.mesh(), out)
    }

    /// Largest `|λ_i − K|` on the diagonal, read back from the bands.
    fn max_reaction(&self) -> f64 {
        self.bands
            .diag
            .iter()
            .zip(self.bands.lower.iter().zip(&self.bands.upper))
            .map(|(d, (l, u))| (d + l + u).abs())
            .fold(0.0, f64::max)
    }
}

/// Flux-form assembly at time `t`: diffusion with `b` at cell midpoints,
/// centered differences for `f uₓ`, and `λ − K` on the diagonal.
pub fn assemble(
    coeffs: &CoefficientSet,
    mesh: &Mesh1D,
    t: f64,
    shift: f64,
) -> Result<DiscreteOperator> {
    let n = mesh.n_interior();
    let h = mesh.h();
    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 0.5 / h;

    let b_mid = (0..mesh.n_cells())
        .map(|k| {
            let x = mesh.midpoint(k);
            let b = coeffs.b.eval(x, t);
            if !b.is_finite() {
                Err(Error::NonFiniteSample { what: "b", x, t })
            } else if b < coeffs.delta || b <= 0.0 {
                Err(Error::NonCoercive {
                    x,
                    t,
                    value: b,
                    delta: coeffs.delta,
                })
            } else {
                Ok(b)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut bands = Tridiagonal::zeros(n);
    for i in 0..n {
        let x = mesh.node(i + 1);
        let f = coeffs.f.eval(x, t);
        let lambda = coeffs.lambda.eval(x, t);
        if !f.is_finite() {
            return Err(Error::NonFiniteSample { what: "f", x, t });
        }
        if !lambda.is_finite() {
            return Err(Error::NonFiniteSample {
                what: "lambda",
                x,
                t,
            });
        }
        let (bl, br) = (b_mid[i], b_mid[i + 1]);
        bands.lower[i] = bl * inv_h2 - f * inv_2h;
        bands.upper[i] = br * inv_h2 + f * inv_2h;
        bands.diag[i] = -(bl + br) * inv_h2 + lambda - shift;
    }
    Ok(DiscreteOperator { bands })
}

/// Discrete `∂ₓF + F₀`: centered flux differences of the midpoint averages of
/// `F`, plus the nodal values of `F₀`.
pub fn apply_source_weak(flux: &NodalField, plain: &GridFunction) -> Result<GridFunction> {
    if flux.mesh() != plain.mesh() {
        return Err(Error::MeshMismatch);
    }
    let mesh = *plain.mesh();
    let h = mesh.h();
    let mid = flux.midpoint_values();
    let values = plain
        .values()
        .iter()
        .enumerate()
        .map(|(i, p)| (mid[i + 1] - mid[i]) / h + p)
        .collect();
    Ok(GridFunction::from_vec_unchecked(mesh, values))
}

/// `(∇_h u, F)`: cell gradients paired with midpoint averages of `F`.
pub fn gradient_pairing(u: &GridFunction, flux: &NodalField) -> Result<f64> {
    if u.mesh() != flux.mesh() {
        return Err(Error::MeshMismatch);
    }
    let h = u.mesh().h();
    Ok(h * u
        .gradient()
        .iter()
        .zip(flux.midpoint_values())
        .map(|(g, f)| g * f)
        .sum::<f64>())
}

/// Time integrator bound to one coefficient set and discretization. The
/// operator `𝒜_h` is sampled at `t_j + θ·dt` for step `j`, and assembled only
/// once when the coefficients do not depend on time.
#[derive(Debug, Clone)]
pub struct LinearStepper<'a> {
    coeffs: &'a CoefficientSet,
    mesh: Mesh1D,
    time_grid: TimeGrid,
    config: ThetaSchemeConfig,
    frozen: Option<DiscreteOperator>,
}

impl<'a> LinearStepper<'a> {
    pub fn new(
        coeffs: &'a CoefficientSet,
        mesh: Mesh1D,
        time_grid: TimeGrid,
        config: ThetaSchemeConfig,
    ) -> Result<Self> {
        let frozen = if coeffs.is_time_independent() {
            Some(assemble(coeffs, &mesh, 0.0, 0.0)?)
        } else {
            None
        };
        Ok(Self {
            coeffs,
            mesh,
            time_grid,
            config,
            frozen,
        })
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn config(&self) -> &ThetaSchemeConfig {
        &self.config
    }

    /// `𝒜_h − K·I` used for step `j → j+1`.
    pub fn operator(&self, j: usize, shift: f64) -> Result<DiscreteOperator> {
        let mut op = match &self.frozen {
            Some(op) => op.clone(),
            None => {
                let t = self.time_grid.time(j) + self.config.theta * self.time_grid.dt();
                assemble(self.coeffs, &self.mesh, t, 0.0)?
            }
        };
        if shift != 0.0 {
            op.bands.diag.iter_mut().for_each(|d| *d -= shift);
        }
        Ok(op)
    }

    /// Integrates with the discrete forcing `g(·, t_j)` given per time node.
    pub fn solve(&self, forcing: &[GridFunction]) -> Result<SpaceTimeSeries> {
        self.solve_with_shift(forcing, self.config.shift)
    }

    pub fn solve_with_shift(
        &self,
        forcing: &[GridFunction],
        shift: f64,
    ) -> Result<SpaceTimeSeries> {
        let tg = self.time_grid;
        if forcing.len() != tg.n_steps() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} forcing frames for {} time nodes",
                forcing.len(),
                tg.n_steps() + 1
            )));
        }
        if forcing.iter().any(|g| *g.mesh() != self.mesh) {
            return Err(Error::MeshMismatch);
        }
        let theta = self.config.theta;
        let dt = tg.dt();
        let n = self.mesh.n_interior();

        let mut frames = Vec::with_capacity(tg.n_steps() + 1);
        frames.push(GridFunction::zeros(self.mesh));
        let mut scratch = Vec::with_capacity(n);
        let mut explicit = vec![0.0; n];
        let mut cached: Option<(DiscreteOperator, Tridiagonal)> = None;
        let mut warned = false;

        for j in 0..tg.n_steps() {
            if cached.is_none() || self.frozen.is_none() {
                let op = self.operator(j, shift)?;
                if !warned && dt * op.max_reaction() > 2.0 {
                    log::warn!(
                        "dt * sup|lambda - K| = {:.3} > 2; expect reduced accuracy",
                        dt * op.max_reaction()
                    );
                    warned = true;
                }
                let mut lhs = op.bands.clone();
                lhs.lower.iter_mut().for_each(|v| *v *= -theta * dt);
                lhs.upper.iter_mut().for_each(|v| *v *= -theta * dt);
                lhs.diag.iter_mut().for_each(|v| *v = 1.0 - theta * dt * *v);
                cached = Some((op, lhs));
            }
            let (op, lhs) = cached.as_ref().expect("assembled above");

            let u = frames[j].values();
            op.bands.mul_vec(u, &mut explicit);
            let (g0, g1) = (forcing[j].values(), forcing[j + 1].values());
            let mut rhs: Vec<f64> = (0..n)
                .map(|i| {
                    u[i] + (1.0 - theta) * dt * explicit[i]
                        + dt * (theta * g1[i] + (1.0 - theta) * g0[i])
                })
                .collect();
            if !lhs.solve_in_place(&mut rhs, &mut scratch) {
                return Err(Error::LinearSolveFailure { step: j + 1 });
            }
            frames.push(GridFunction::from_vec_unchecked(self.mesh, rhs));
        }
        SpaceTimeSeries::new(tg, frames)
    }

    /// Largest step residual of the θ-scheme recurrence for a given series,
    /// in the max norm: how exactly `u` solves the discrete system with `forcing`.
    pub fn scheme_residual(
        &self,
        u: &SpaceTimeSeries,
        forcing: &[GridFunction],
        shift: f64,
    ) -> Result<f64> {
        let theta = self.config.theta;
        let dt = self.time_grid.dt();
        let mut worst = 0.0f64;
        for j in 0..self.time_grid.n_steps() {
            let op = self.operator(j, shift)?;
            let a0 = op.apply(u.frame(j));
            let a1 = op.apply(u.frame(j + 1));
            for i in 0..self.mesh.n_interior() {
                let r = u.frame(j + 1).values()[i]
                    - theta * dt * a1.values()[i]
                    - u.frame(j).values()[i]
                    - (1.0 - theta) * dt * a0.values()[i]
                    - dt * (theta * forcing[j + 1].values()[i]
                        + (1.0 - theta) * forcing[j].values()[i]);
                worst = worst.max(r.abs());
            }
        }
        Ok(worst)
    }
}

/// Solves problem `uₜ = 𝒜u − Ku + φ`, `u(·,0) = 0`, zero boundary values.
pub fn solve_ibvp(
    coeffs: &CoefficientSet,
    src: &SourceTerm,
    mesh: &Mesh1D,
    tg: &TimeGrid,
    cfg: &ThetaSchemeConfig,
) -> Result<SpaceTimeSeries> {
    let sampled = SampledSource::sample(src, mesh, tg)?;
    solve_sampled(coeffs, &sampled, cfg)
}

pub fn solve_sampled(
    coeffs: &CoefficientSet,
    src: &SampledSource,
    cfg: &ThetaSchemeConfig,
) -> Result<SpaceTimeSeries> {
    let stepper = LinearStepper::new(coeffs, *src.mesh(), *src.time_grid(), *cfg)?;
    stepper.solve(&src.forcing_frames()?)
}
