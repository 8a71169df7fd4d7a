//! Fixed-point solver for `uₜ = 𝒜u + B(u) + φ` with zero initial and
//! boundary data.
//!
//! With `F_K` the solution map of the shifted linear problem, the iteration
//! `g₀ = φ_K`, `g_{k+1} = φ_K + B_K(F_K g_k)` runs on sampled sources, and the
//! solution is recovered as `u = e^{Kt} F_K g`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::estimate::{check_inequality, EstimateFamily, EstimateReport, KSearch};
use crate::fmt::sig12;
use crate::mesh::{norm_h0, norm_hminus1, GridFunction, Mesh1D, SpaceTimeSeries, TimeGrid};
use crate::nonlocal::{NonlocalSpec, MAX_SHIFT_EXPONENT};
use crate::problem::{validate, CoefficientSet, SampledSource, SourceTerm};
use crate::stepper::{LinearStepper, ThetaSchemeConfig};

/// Quotient above which an iteration counts as stalling.
pub const STALL_QUOTIENT: f64 = 0.95;
/// Consecutive stalling iterations that trigger doubling `K`.
pub const STALL_PATIENCE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Residuals in `L²(0,T; H⁻¹)`.
    XMinus1,
    /// Residuals in `L²(0,T; H⁰)`.
    X0,
}

impl NormMode {
    fn frame_norm(self, g: &GridFunction) -> Result<f64> {
        match self {
            NormMode::XMinus1 => norm_hminus1(g),
            NormMode::X0 => Ok(norm_h0(g)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Initial shift `K`.
    pub shift: f64,
    /// `M`; only used when verifying the estimate afterwards.
    pub weight: f64,
    pub max_iters: usize,
    /// Relative tolerance on `‖g_{k+1} − g_k‖ / ‖g_{k+1}‖`.
    pub tol: f64,
    pub norm_mode: NormMode,
    /// Escalation stops once `K` would exceed this.
    pub k_max: f64,
    pub theta: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            shift: 0.0,
            weight: 1.0,
            max_iters: 100,
            tol: 1e-10,
            norm_mode: NormMode::XMinus1,
            k_max: 2048.0,
            theta: 0.5,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.shift >= 0.0 && self.shift.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "K must be >= 0, got {}",
                self.shift
            )));
        }
        if !(self.k_max >= self.shift) {
            return Err(Error::InvalidParameter(format!(
                "K_max = {} is below the initial K = {}",
                self.k_max, self.shift
            )));
        }
        ThetaSchemeConfig::new(self.theta, self.shift)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// Iteration count within the run at this `K`, starting at 1.
    pub iter: usize,
    pub residual: f64,
    /// `residual_k / residual_{k-1}`; `None` on the first iteration of a run.
    pub quotient: Option<f64>,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PicardTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    /// Iterations of the final run.
    pub iterations: usize,
    /// `K` of the final run.
    pub shift: f64,
}

impl PicardTrace {
    /// Rows of the final run.
    pub fn final_run(&self) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(move |r| r.shift == self.shift)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.rows.last().map(|r| r.residual)
    }

    /// Largest quotient over the last `tail` iterations of the final run.
    pub fn stabilized_quotient(&self, tail: usize) -> Option<f64> {
        let q: Vec<f64> = self.final_run().filter_map(|r| r.quotient).collect();
        let start = q.len().saturating_sub(tail);
        q[start..].iter().copied().reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,residual,quotient,K")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.iter,
                sig12(r.residual),
                r.quotient.map(sig12).unwrap_or_default(),
                sig12(r.shift)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub u: SpaceTimeSeries,
    pub trace: PicardTrace,
}

fn difference(a: &SampledSource, b: &SampledSource) -> Result<SampledSource> {
    let mut d = a.clone();
    let neg = b.scaled(-1.0);
    d.add(neg.flux(), neg.plain())?;
    Ok(d)
}

fn source_norm(src: &SampledSource, mode: NormMode) -> Result<f64> {
    let frames = src.forcing_frames()?;
    SpaceTimeSeries::new(*src.time_grid(), frames)?.bochner_norm(|g| mode.frame_norm(g))
}

enum RunOutcome {
    Converged(SpaceTimeSeries),
    Stalled,
}

#[allow(clippy::too_many_arguments)]
fn run_at_shift(
    coeffs: &CoefficientSet,
    spec: &NonlocalSpec,
    phi: &SourceTerm,
    mesh: &Mesh1D,
    tg: &TimeGrid,
    cfg: &PicardConfig,
    shift: f64,
    trace: &mut PicardTrace,
) -> Result<RunOutcome> {
    let op = spec.shifted(shift, tg)?;
    let scheme = ThetaSchemeConfig::new(cfg.theta, shift)?;
    let stepper = LinearStepper::new(coeffs, *mesh, *tg, scheme)?;
    let phi_k = SampledSource::sample(&phi.damped(shift), mesh, tg)?;

    trace.shift = shift;
    trace.iterations = 0;
    let mut g = phi_k.clone();
    let mut w = stepper.solve(&g.forcing_frames()?)?;
    let mut prev: Option<f64> = None;
    let mut stalls = 0;

    for iter in 1..=cfg.max_iters {
        let mut next = phi_k.clone();
        let b = op.apply_all(&w)?;
        next.add(b.flux(), b.plain())?;
        let residual = source_norm(&difference(&next, &g)?, cfg.norm_mode)?;
        let scale = source_norm(&next, cfg.norm_mode)?;
        let quotient = prev.map(|p| if p == 0.0 { 0.0 } else { residual / p });
        trace.rows.push(TraceRow {
            iter,
            residual,
            quotient,
            shift,
        });
        trace.iterations = iter;
        log::debug!("picard K={shift} iter={iter} residual={residual:e}");

        if !residual.is_finite() {
            return Ok(RunOutcome::Stalled);
        }
        g = next;
        if residual <= cfg.tol * scale {
            // g is a fixed point to tolerance; F_K g is the matching solution
            if residual != 0.0 {
                w = stepper.solve(&g.forcing_frames()?)?;
            }
            let mut u = w;
            u.scale_by_time(|t| (shift * t).exp());
            return Ok(RunOutcome::Converged(u));
        }
        w = stepper.solve(&g.forcing_frames()?)?;

        stalls = if quotient.is_some_and(|q| q > STALL_QUOTIENT) {
            stalls + 1
        } else {
            0
        };
        if stalls >= STALL_PATIENCE {
            return Ok(RunOutcome::Stalled);
        }
        prev = Some(residual);
    }
    Err(Error::MaxItersExceeded {
        iters: cfg.max_iters,
        residual: trace.final_residual().unwrap_or(f64::NAN),
    })
}

/// Solves the nonlinear problem by simple iteration, doubling `K` whenever
/// the contraction quotient stays above [`STALL_QUOTIENT`].
pub fn solve_nonlinear(
    coeffs: &CoefficientSet,
    spec: &NonlocalSpec,
    phi: &SourceTerm,
    mesh: &Mesh1D,
    tg: &TimeGrid,
    cfg: &PicardConfig,
) -> Result<PicardSolution> {
    cfg.validate()?;
    validate(coeffs, mesh, tg)?;
    spec.validate(mesh, tg)?;
    let mut trace = PicardTrace::default();
    let mut shift = cfg.shift;
    loop {
        match run_at_shift(coeffs, spec, phi, mesh, tg, cfg, shift, &mut trace)? {
            RunOutcome::Converged(u) => {
                trace.converged = true;
                return Ok(PicardSolution { u, trace });
            }
            RunOutcome::Stalled => {
                let next = if shift == 0.0 { 1.0 } else { 2.0 * shift };
                if next > cfg.k_max || next * tg.t_final() > MAX_SHIFT_EXPONENT {
                    return Err(Error::NoContraction { k_max: cfg.k_max });
                }
                log::info!("contraction stalled at K = {shift}; retrying with K = {next}");
                shift = next;
            }
        }
    }
}

/// `φ + B(u)`: the source that `u` realizes in the linear problem.
pub fn realized_source(
    spec: &NonlocalSpec,
    phi: &SourceTerm,
    u: &SpaceTimeSeries,
) -> Result<SampledSource> {
    let mut src = SampledSource::sample(phi, u.mesh(), u.time_grid())?;
    let b = spec.apply_all(u)?;
    src.add(b.flux(), b.plain())?;
    Ok(src)
}

/// Max-norm residual of the shifted θ-scheme recurrence for `w = e^{-Kt}u`
/// with the frozen source `φ_K + B_K(w)`; zero up to round-off when `u` is the
/// discrete fixed point found at shift `K`.
pub fn fixed_point_residual(
    coeffs: &CoefficientSet,
    spec: &NonlocalSpec,
    phi: &SourceTerm,
    u: &SpaceTimeSeries,
    shift: f64,
    theta: f64,
) -> Result<f64> {
    let (mesh, tg) = (*u.mesh(), *u.time_grid());
    let mut w = u.clone();
    w.scale_by_time(|t| (-shift * t).exp());
    let mut g = SampledSource::sample(&phi.damped(shift), &mesh, &tg)?;
    let b = spec.shifted(shift, &tg)?.apply_all(&w)?;
    g.add(b.flux(), b.plain())?;
    let stepper = LinearStepper::new(coeffs, mesh, tg, ThetaSchemeConfig::new(theta, shift)?)?;
    stepper.scheme_residual(&w, &g.forcing_frames()?, shift)
}

/// The weighted estimate for `u` with the realized source `φ + B(u)`.
pub fn verify_nonlocal_estimate(
    u: &SpaceTimeSeries,
    spec: &NonlocalSpec,
    coeffs: &CoefficientSet,
    phi: &SourceTerm,
    shift: f64,
    weight: f64,
    epsilon: f64,
) -> Result<EstimateReport> {
    let src = realized_source(spec, phi, u)?;
    check_inequality(u, &src, coeffs, shift, weight, epsilon)
}

/// Smallest `K ≤ k_max` for which [`verify_nonlocal_estimate`] passes.
pub fn search_nonlocal_estimate(
    u: &SpaceTimeSeries,
    spec: &NonlocalSpec,
    coeffs: &CoefficientSet,
    phi: &SourceTerm,
    weight: f64,
    epsilon: f64,
    k_max: f64,
) -> Result<KSearch> {
    let src = realized_source(spec, phi, u)?;
    EstimateFamily::from_solutions(coeffs, vec![(src, u.clone())])?.search(weight, epsilon, k_max)
}
