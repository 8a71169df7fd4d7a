//! Nonlinear and nonlocal source operators `B(u)`, their exponential shift
//! `B_K(u) = e^{-Kt} B(e^{Ks} u)` and an empirical Lipschitz probe.
//!
//! Every operator returns its value at `t_j` as a pair `(flux, plain)`, read as
//! `∂ₓ flux + plain` exactly like a [`SourceTerm`](crate::problem::SourceTerm).
//! Space integrals use the trapezoid rule on the solution mesh; time integrals
//! use the trapezoid rule on the time grid.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{norm_hminus1, GridFunction, Mesh1D, NodalField, SpaceTimeSeries, TimeGrid};
use crate::problem::{SampledSource, SpaceTimeFn};
use crate::table::GridTable;

/// `β(z, x, t)`
pub type PointBeta = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// `β(z, x, t, y)`
pub type SpaceBeta = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;
/// `β(z, x, t, y, s)`
pub type SpaceTimeBeta = Arc<dyn Fn(f64, f64, f64, f64, f64) -> f64 + Send + Sync>;
/// `τ(t)`
pub type DelayMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `r(x, z, t)`
pub type Kernel = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Largest admissible `K·T`; `e^{700}` is still a finite double.
pub const MAX_SHIFT_EXPONENT: f64 = 700.0;

#[derive(Clone)]
pub enum Variant {
    /// `β(u(x,t), x, t)`
    Local(PointBeta),
    /// `∂ₓ β(u(x,t), x, t)`
    Distributional(PointBeta),
    /// `∫_D β(u(y,t), x, t, y) dy`
    IntegralSpace(SpaceBeta),
    /// `∂ₓ ∫_D β(u(y,t), x, t, y) dy`
    IntegralSpaceDistributional(SpaceBeta),
    /// `∫₀ᵗ ∫_D β(u(y,s), x, t, y, s) dy ds`
    IntegralSpaceTime(SpaceTimeBeta),
    /// `∂ₓ ∫₀ᵗ ∫_D β(u(y,s), x, t, y, s) dy ds`
    IntegralSpaceTimeDistributional(SpaceTimeBeta),
    /// `∂ₓ β(u(x,τ), x, τ) + β̂(u(x,τ), x, τ)` with `τ = τ(t)`; `τ ≡ 0` below
    /// `threshold`, where the delayed state is the zero initial state.
    Delay {
        beta: PointBeta,
        beta_hat: PointBeta,
        tau: DelayMap,
        threshold: f64,
    },
    /// `∫_D u(z,t) r(x,z,t) dz + c₀(x,t) u + c₁(x,t) uₓ`
    JumpKernel {
        kernel: Kernel,
        zero_order: SpaceTimeFn,
        drift: SpaceTimeFn,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantKind {
    Local,
    Distributional,
    IntegralSpace,
    IntegralSpaceDistributional,
    IntegralSpaceTime,
    IntegralSpaceTimeDistributional,
    Delay,
    JumpKernel,
}

impl VariantKind {
    pub const ALL: [VariantKind; 8] = [
        VariantKind::Local,
        VariantKind::Distributional,
        VariantKind::IntegralSpace,
        VariantKind::IntegralSpaceDistributional,
        VariantKind::IntegralSpaceTime,
        VariantKind::IntegralSpaceTimeDistributional,
        VariantKind::Delay,
        VariantKind::JumpKernel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantKind::Local => "local",
            VariantKind::Distributional => "distributional",
            VariantKind::IntegralSpace => "integral_space",
            VariantKind::IntegralSpaceDistributional => "integral_space_distributional",
            VariantKind::IntegralSpaceTime => "integral_space_time",
            VariantKind::IntegralSpaceTimeDistributional => "integral_space_time_distributional",
            VariantKind::Delay => "delay",
            VariantKind::JumpKernel => "jump_kernel",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Variant {
    pub fn kind(&self) -> VariantKind {
        match self {
            Variant::Local(_) => VariantKind::Local,
            Variant::Distributional(_) => VariantKind::Distributional,
            Variant::IntegralSpace(_) => VariantKind::IntegralSpace,
            Variant::IntegralSpaceDistributional(_) => VariantKind::IntegralSpaceDistributional,
            Variant::IntegralSpaceTime(_) => VariantKind::IntegralSpaceTime,
            Variant::IntegralSpaceTimeDistributional(_) => {
                VariantKind::IntegralSpaceTimeDistributional
            }
            Variant::Delay { .. } => VariantKind::Delay,
            Variant::JumpKernel { .. } => VariantKind::JumpKernel,
        }
    }
}

impl fmt::Debug for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Delay { threshold, .. } => f
                .debug_struct("Delay")
                .field("threshold", threshold)
                .finish_non_exhaustive(),
            Variant::JumpKernel {
                zero_order, drift, ..
            } => f
                .debug_struct("JumpKernel")
                .field("zero_order", zero_order)
                .field("drift", drift)
                .finish_non_exhaustive(),
            other => write!(f, "{}(<fn>)", other.kind()),
        }
    }
}

/// A nonlocal operator together with the Lipschitz constant `C_L` claimed
/// for its `β` (for the jump kernel `C_L` is informational only).
#[derive(Debug, Clone)]
pub struct NonlocalSpec {
    variant: Variant,
    lipschitz: f64,
}

impl NonlocalSpec {
    pub fn new(variant: Variant, lipschitz: f64) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be finite and >= 0, got {lipschitz}"
            )));
        }
        if let Variant::Delay { threshold, .. } = &variant {
            if !(*threshold >= 0.0 && threshold.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "delay threshold must be >= 0, got {threshold}"
                )));
            }
        }
        Ok(Self { variant, lipschitz })
    }

    /// `B ≡ 0`.
    pub fn zero() -> Self {
        Self {
            variant: Variant::Local(Arc::new(|_, _, _| 0.0)),
            lipschitz: 0.0,
        }
    }

    pub fn local(
        beta: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Result<Self> {
        Self::new(Variant::Local(Arc::new(beta)), lipschitz)
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn kind(&self) -> VariantKind {
        self.variant.kind()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Checks that `B(0)` is finite and square integrable on the grid, and the
    /// structural hypotheses on the delay map and the jump kernel.
    pub fn validate(&self, mesh: &Mesh1D, tg: &TimeGrid) -> Result<()> {
        match &self.variant {
            Variant::Delay { tau, threshold, .. } => {
                if *threshold >= tg.t_final() {
                    return Err(Error::InvariantViolation(format!(
                        "delay threshold {threshold} must lie in [0, T)"
                    )));
                }
                check_delay_map(tau.as_ref(), *threshold, tg)?;
            }
            Variant::JumpKernel { .. } => {
                let s = self.kernel_square_sup(mesh, tg).unwrap_or(0.0);
                if !s.is_finite() {
                    return Err(Error::InvariantViolation(
                        "sup_t of the double integral of r^2 is not finite".into(),
                    ));
                }
            }
            _ => {}
        }
        let zero = SpaceTimeSeries::zeros(*mesh, *tg);
        let b0 = self.apply_all(&zero)?;
        let mut total = 0.0;
        for (f, p) in b0.flux().iter().zip(b0.plain()) {
            total += f.norm_sq() + crate::mesh::norm_h0(p).powi(2);
        }
        if !total.is_finite() {
            return Err(Error::InvariantViolation(
                "B(0) is not square integrable on the grid".into(),
            ));
        }
        Ok(())
    }

    /// `B(u)(·, t_step)` from the history `u(·, t_0..=t_step)`.
    pub fn apply(
        &self,
        tg: &TimeGrid,
        history: &[GridFunction],
        step: usize,
    ) -> Result<(NodalField, GridFunction)> {
        self.shifted(0.0, tg)?.apply(history, step)
    }

    /// `B(u)` at every time node.
    pub fn apply_all(&self, u: &SpaceTimeSeries) -> Result<SampledSource> {
        self.shifted(0.0, u.time_grid())?.apply_all(u)
    }

    pub fn shifted(&self, shift: f64, tg: &TimeGrid) -> Result<ShiftedNonlocal<'_>> {
        if !(shift >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "K must be >= 0, got {shift}"
            )));
        }
        if shift * tg.t_final() > MAX_SHIFT_EXPONENT {
            return Err(Error::Overflow(shift * tg.t_final()));
        }
        Ok(ShiftedNonlocal {
            spec: self,
            shift,
            time_grid: *tg,
        })
    }

    /// Upper bound on `‖B_K(u₁) − B_K(u₂)‖_{X⁻¹} / ‖u₁ − u₂‖_{X⁰}` implied by
    /// `C_L` (for the jump kernel, by the kernel itself). `None` when the
    /// delay map has no bounded inverse slope.
    pub fn lipschitz_bound(&self, mesh: &Mesh1D, tg: &TimeGrid) -> Option<f64> {
        let c = self.lipschitz;
        match &self.variant {
            Variant::Local(_) | Variant::Distributional(_) => Some(c),
            Variant::IntegralSpace(_) | Variant::IntegralSpaceDistributional(_) => {
                Some(c * mesh.length())
            }
            Variant::IntegralSpaceTime(_) | Variant::IntegralSpaceTimeDistributional(_) => {
                Some(c * mesh.length() * tg.t_final())
            }
            Variant::Delay { tau, threshold, .. } => {
                let slope = delay_inverse_slope(tau.as_ref(), *threshold, tg);
                slope.is_finite().then(|| (2.0 * slope).sqrt() * c)
            }
            Variant::JumpKernel {
                zero_order, drift, ..
            } => {
                let kernel = self.kernel_square_sup(mesh, tg)?.sqrt();
                let mut c0 = 0.0f64;
                let mut c1 = 0.0f64;
                let mut dc1 = 0.0f64;
                for t in tg.times() {
                    for x in mesh.all_nodes() {
                        c0 = c0.max(zero_order.eval(x, t).abs());
                    }
                    let d = drift.sample_nodes(mesh, t);
                    c1 = d.iter().fold(c1, |m, v| m.max(v.abs()));
                    for k in 1..mesh.n_cells() {
                        dc1 = dc1.max(((d[k + 1] - d[k - 1]) / (2.0 * mesh.h())).abs());
                    }
                }
                Some(kernel + c0 + c1 + dc1)
            }
        }
    }

    /// `sup_j ∬ r(x, z, t_j)² dx dz` by the two-dimensional trapezoid rule.
    fn kernel_square_sup(&self, mesh: &Mesh1D, tg: &TimeGrid) -> Option<f64> {
        let Variant::JumpKernel { kernel, .. } = &self.variant else {
            return None;
        };
        let n = mesh.n_cells();
        let mut sup = 0.0f64;
        for t in tg.times() {
            let mut s = 0.0;
            for i in 0..=n {
                for k in 0..=n {
                    let r = kernel(mesh.node(i), mesh.node(k), t);
                    s += mesh.weight(i) * mesh.weight(k) * r * r;
                }
            }
            if !s.is_finite() {
                return Some(f64::INFINITY);
            }
            sup = sup.max(s);
        }
        Some(sup)
    }
}

/// `max 1/τ'` over `[θ, T]` from difference quotients on a grid eight times
/// finer than `tg`; infinite when `τ` is flat somewhere.
pub fn delay_inverse_slope(
    tau: &(dyn Fn(f64) -> f64 + Send + Sync),
    threshold: f64,
    tg: &TimeGrid,
) -> f64 {
    let n = 8 * tg.n_steps();
    let span = tg.t_final() - threshold;
    if span <= 0.0 {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    let mut prev = tau(threshold);
    for i in 1..=n {
        let t = threshold + span * i as f64 / n as f64;
        let cur = tau(t);
        let rise = cur - prev;
        if rise <= 0.0 {
            return f64::INFINITY;
        }
        worst = worst.max(span / n as f64 / rise);
        prev = cur;
    }
    worst
}

fn check_delay_map(
    tau: &(dyn Fn(f64) -> f64 + Send + Sync),
    threshold: f64,
    tg: &TimeGrid,
) -> Result<()> {
    let n = 8 * tg.n_steps();
    let slack = 1e-12 * tg.t_final().max(1.0);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=n {
        let t = tg.t_final() * i as f64 / n as f64;
        let v = tau(t);
        if !v.is_finite() || v < -slack || v > t + slack {
            return Err(Error::InvariantViolation(format!(
                "delay map tau({t}) = {v} is outside [0, t]"
            )));
        }
        if t < threshold && v.abs() > slack {
            return Err(Error::InvariantViolation(format!(
                "delay map must vanish below the threshold, tau({t}) = {v}"
            )));
        }
        if t >= threshold && v < prev - slack {
            return Err(Error::InvariantViolation(format!(
                "delay map decreases at t = {t}"
            )));
        }
        if t >= threshold {
            prev = v;
        }
    }
    if !delay_inverse_slope(tau, threshold, tg).is_finite() {
        return Err(Error::InvariantViolation(
            "delay map has a flat stretch above the threshold".into(),
        ));
    }
    Ok(())
}

/// `B_K` bound to a time grid.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedNonlocal<'a> {
    spec: &'a NonlocalSpec,
    shift: f64,
    time_grid: TimeGrid,
}

impl ShiftedNonlocal<'_> {
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `B_K(u)(·, t_step)`; only `history[..=step]` is read.
    pub fn apply(
        &self,
        history: &[GridFunction],
        step: usize,
    ) -> Result<(NodalField, GridFunction)> {
        if history.len() <= step || step > self.time_grid.n_steps() {
            return Err(Error::HistoryTooShort {
                step,
                available: history.len(),
            });
        }
        let mesh = *history[0].mesh();
        if history[..=step].iter().any(|f| *f.mesh() != mesh) {
            return Err(Error::MeshMismatch);
        }
        let nodal = self.lift(&history[..=step]);
        self.evaluate(&mesh, &nodal, step)
    }

    /// `B_K(u)` at every time node of `u`.
    pub fn apply_all(&self, u: &SpaceTimeSeries) -> Result<SampledSource> {
        if *u.time_grid() != self.time_grid {
            return Err(Error::DimensionMismatch(
                "history and operator use different time grids".into(),
            ));
        }
        let mesh = *u.mesh();
        let nodal = self.lift(u.frames());
        let (flux, plain) = (0..=self.time_grid.n_steps())
            .map(|j| self.evaluate(&mesh, &nodal, j))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        SampledSource::new(mesh, self.time_grid, flux, plain)
    }

    /// `e^{K t_s} u(·, t_s)` on all nodes, boundary zeros included.
    fn lift(&self, frames: &[GridFunction]) -> Vec<Vec<f64>> {
        frames
            .iter()
            .enumerate()
            .map(|(s, f)| {
                let scale = (self.shift * self.time_grid.time(s)).exp();
                let mut v = NodalField::from(f).values().to_vec();
                if scale != 1.0 {
                    v.iter_mut().for_each(|x| *x *= scale);
                }
                v
            })
            .collect()
    }

    fn evaluate(
        &self,
        mesh: &Mesh1D,
        hist: &[Vec<f64>],
        j: usize,
    ) -> Result<(NodalField, GridFunction)> {
        let n = mesh.n_cells();
        let tg = &self.time_grid;
        let t = tg.time(j);
        let x: Vec<f64> = mesh.all_nodes().collect();
        let w: Vec<f64> = (0..=n).map(|k| mesh.weight(k)).collect();
        let mut flux = vec![0.0; n + 1];
        let mut plain = vec![0.0; n - 1];

        let space_integral = |beta: &SpaceBeta, xi: f64, u: &[f64]| -> f64 {
            (0..=n).map(|k| w[k] * beta(u[k], xi, t, x[k])).sum()
        };
        let space_time_integral = |beta: &SpaceTimeBeta, xi: f64| -> f64 {
            if j == 0 {
                return 0.0;
            }
            let dt = tg.dt();
            (0..=j)
                .map(|s| {
                    let ws = if s == 0 || s == j { 0.5 * dt } else { dt };
                    let ts = tg.time(s);
                    let u = &hist[s];
                    ws * (0..=n)
                        .map(|k| w[k] * beta(u[k], xi, t, x[k], ts))
                        .sum::<f64>()
                })
                .sum()
        };

        match &self.spec.variant {
            Variant::Local(beta) => {
                for i in 1..n {
                    plain[i - 1] = beta(hist[j][i], x[i], t);
                }
            }
            Variant::Distributional(beta) => {
                for k in 0..=n {
                    flux[k] = beta(hist[j][k], x[k], t);
                }
            }
            Variant::IntegralSpace(beta) => {
                for i in 1..n {
                    plain[i - 1] = space_integral(beta, x[i], &hist[j]);
                }
            }
            Variant::IntegralSpaceDistributional(beta) => {
                for k in 0..=n {
                    flux[k] = space_integral(beta, x[k], &hist[j]);
                }
            }
            Variant::IntegralSpaceTime(beta) => {
                for i in 1..n {
                    plain[i - 1] = space_time_integral(beta, x[i]);
                }
            }
            Variant::IntegralSpaceTimeDistributional(beta) => {
                for k in 0..=n {
                    flux[k] = space_time_integral(beta, x[k]);
                }
            }
            Variant::Delay {
                beta,
                beta_hat,
                tau,
                threshold,
            } => {
                let (tau_t, state) = delayed_state(tau.as_ref(), *threshold, tg, hist, j, n)?;
                for k in 0..=n {
                    flux[k] = beta(state[k], x[k], tau_t);
                }
                for i in 1..n {
                    plain[i - 1] = beta_hat(state[i], x[i], tau_t);
                }
            }
            Variant::JumpKernel {
                kernel,
                zero_order,
                drift,
            } => {
                let u = &hist[j];
                let c1 = drift.sample_nodes(mesh, t);
                for k in 0..=n {
                    flux[k] = c1[k] * u[k];
                }
                for i in 1..n {
                    let integral: f64 = (1..n).map(|k| w[k] * u[k] * kernel(x[i], x[k], t)).sum();
                    let dc1 = (c1[i + 1] - c1[i - 1]) / (2.0 * mesh.h());
                    plain[i - 1] = integral + (zero_order.eval(x[i], t) - dc1) * u[i];
                }
            }
        }

        let damp = (-self.shift * t).exp();
        if damp != 1.0 {
            flux.iter_mut()
                .chain(plain.iter_mut())
                .for_each(|v| *v *= damp);
        }
        if let Some(k) = flux.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                what: "B(u) flux part",
                x: x[k],
                t,
            });
        }
        if let Some(i) = plain.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                what: "B(u) plain part",
                x: x[i + 1],
                t,
            });
        }
        Ok((
            NodalField::new(*mesh, flux)?,
            GridFunction::from_vec_unchecked(*mesh, plain),
        ))
    }
}

/// `(τ(t_j), u(·, τ(t_j)))`, interpolating linearly between stored frames.
fn delayed_state(
    tau: &(dyn Fn(f64) -> f64 + Send + Sync),
    threshold: f64,
    tg: &TimeGrid,
    hist: &[Vec<f64>],
    j: usize,
    n: usize,
) -> Result<(f64, Vec<f64>)> {
    let t = tg.time(j);
    if t < threshold {
        return Ok((0.0, vec![0.0; n + 1]));
    }
    let tau_t = tau(t);
    let slack = 1e-12 * tg.t_final().max(1.0);
    if !tau_t.is_finite() || tau_t < -slack || tau_t > t + slack {
        return Err(Error::InvariantViolation(format!(
            "delay map tau({t}) = {tau_t} is outside [0, t]"
        )));
    }
    let tau_t = tau_t.clamp(0.0, t);
    if tau_t == 0.0 {
        return Ok((0.0, vec![0.0; n + 1]));
    }
    let pos = tau_t / tg.dt();
    let mut k = pos.floor() as usize;
    let mut frac = pos - k as f64;
    if k >= j {
        k = j;
        frac = 0.0;
    }
    // snap round-off so that on-grid delays read a single frame
    if frac < 1e-9 {
        frac = 0.0;
    } else if frac > 1.0 - 1e-9 {
        k += 1;
        frac = 0.0;
    }
    let state = if frac == 0.0 {
        hist[k].clone()
    } else {
        hist[k]
            .iter()
            .zip(&hist[k + 1])
            .map(|(a, b)| (1.0 - frac) * a + frac * b)
            .collect()
    };
    Ok((tau_t, state))
}

/// Kernel `r(x, z, t)` from a CSV table with columns `x,z,t,r`.
pub fn kernel_from_csv(path: impl AsRef<Path>) -> Result<Kernel> {
    let table = GridTable::read_csv_path(path, &["x", "z", "t"], &["r"])?
        .pop()
        .expect("one value column");
    Ok(Arc::new(move |x, z, t| table.eval(&[x, z, t])))
}

/// Delay map `τ(t)` from a CSV table with columns `t,tau`.
pub fn delay_map_from_csv(path: impl AsRef<Path>) -> Result<DelayMap> {
    let table = GridTable::read_csv_path(path, &["t"], &["tau"])?
        .pop()
        .expect("one value column");
    Ok(Arc::new(move |t| table.eval(&[t])))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub trials: usize,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            amplitude: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    /// Largest observed ratio, a lower bound on the true constant.
    pub max_ratio: f64,
    /// Ratio per evaluated pair, in trial order.
    pub ratios: Vec<f64>,
    /// Pairs with `u₁ = u₂`.
    pub skipped: usize,
    /// From [`NonlocalSpec::lipschitz_bound`].
    pub bound: Option<f64>,
}

impl ProbeResult {
    /// `max_ratio / bound`, or `None` without a bound.
    pub fn bound_ratio(&self) -> Option<f64> {
        self.bound.map(|b| {
            if b == 0.0 {
                if self.max_ratio == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                self.max_ratio / b
            }
        })
    }
}

fn x_minus1_norm(src: &SampledSource) -> Result<f64> {
    let frames = src.forcing_frames()?;
    SpaceTimeSeries::new(*src.time_grid(), frames)?.bochner_norm(norm_hminus1)
}

/// `‖B_K(u₁) − B_K(u₂)‖_{X⁻¹} / ‖u₁ − u₂‖_{X⁰}`, or `None` when `u₁ = u₂`.
pub fn probe_pair(
    op: &ShiftedNonlocal<'_>,
    u1: &SpaceTimeSeries,
    u2: &SpaceTimeSeries,
) -> Result<Option<f64>> {
    let diff = SpaceTimeSeries::new(
        *u1.time_grid(),
        u1.frames()
            .iter()
            .zip(u2.frames())
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let denom = diff.bochner_norm(|f| Ok(crate::mesh::norm_h0(f)))?;
    if denom == 0.0 {
        return Ok(None);
    }
    let mut db = op.apply_all(u1)?;
    let b2 = op.apply_all(u2)?.scaled(-1.0);
    db.add(b2.flux(), b2.plain())?;
    Ok(Some(x_minus1_norm(&db)? / denom))
}

/// Random history with `u(·, 0) = 0`. The shape cycles through a single low
/// mode, a few smooth modes and nodal noise.
fn random_history(
    rng: &mut ChaCha8Rng,
    mesh: &Mesh1D,
    tg: &TimeGrid,
    shape: usize,
    amp: f64,
) -> SpaceTimeSeries {
    let (a, len) = (mesh.a(), mesh.length());
    let modes: Vec<f64> = (1..=8)
        .map(|m| rng.gen_range(-1.0..1.0) / m as f64)
        .collect();
    let frames = (0..=tg.n_steps())
        .map(|j| {
            if j == 0 {
                return GridFunction::zeros(*mesh);
            }
            let level = amp * rng.gen_range(-1.0..1.0);
            match shape % 3 {
                0 => GridFunction::from_fn(*mesh, |x| {
                    level * (std::f64::consts::PI * (x - a) / len).sin()
                }),
                1 => GridFunction::from_fn(*mesh, |x| {
                    let s = std::f64::consts::PI * (x - a) / len;
                    level
                        * modes
                            .iter()
                            .enumerate()
                            .map(|(m, c)| c * ((m + 1) as f64 * s).sin())
                            .sum::<f64>()
                }),
                _ => {
                    let v = (0..mesh.n_interior())
                        .map(|_| amp * rng.gen_range(-1.0..1.0))
                        .collect();
                    GridFunction::new(*mesh, v).expect("finite samples")
                }
            }
        })
        .collect();
    SpaceTimeSeries::new(*tg, frames).expect("frame count matches")
}

/// Largest `‖B_K(u₁) − B_K(u₂)‖_{X⁻¹} / ‖u₁ − u₂‖_{X⁰}` over seeded random
/// pairs.
pub fn lipschitz_probe(
    spec: &NonlocalSpec,
    mesh: &Mesh1D,
    tg: &TimeGrid,
    shift: f64,
    cfg: ProbeConfig,
) -> Result<ProbeResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let op = spec.shifted(shift, tg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ratios = Vec::with_capacity(cfg.trials);
    let mut skipped = 0;
    for trial in 0..cfg.trials {
        let u1 = random_history(&mut rng, mesh, tg, trial / 3, cfg.amplitude);
        let u2 = random_history(&mut rng, mesh, tg, trial, cfg.amplitude);
        match probe_pair(&op, &u1, &u2)? {
            Some(r) => ratios.push(r),
            None => skipped += 1,
        }
    }
    Ok(ProbeResult {
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
        skipped,
        bound: spec.lipschitz_bound(mesh, tg),
    })
}
