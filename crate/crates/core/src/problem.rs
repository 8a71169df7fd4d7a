//! Coefficients, parameter pack, and H⁻¹ sources `φ = ∂ₓF + F₀`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{GridFunction, Mesh1D, NodalField, TimeGrid};
use crate::stepper::apply_source_weak;
use crate::table::GridTable;

type Fn2 = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A real field `(x, t) -> value`.
#[derive(Clone)]
pub enum SpaceTimeFn {
    Constant(f64),
    Function {
        f: Arc<Fn2>,
        time_independent: bool,
    },
    /// Axes `(x, t)`.
    Table(Arc<GridTable>),
}

impl SpaceTimeFn {
    pub fn constant(c: f64) -> Self {
        SpaceTimeFn::Constant(c)
    }

    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        SpaceTimeFn::Function {
            f: Arc::new(f),
            time_independent: false,
        }
    }

    pub fn stationary(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SpaceTimeFn::Function {
            f: Arc::new(move |x, _| f(x)),
            time_independent: true,
        }
    }

    pub fn table(table: GridTable) -> Result<Self> {
        if table.axes().len() != 2 {
            return Err(Error::Table(format!(
                "space-time table needs axes (x, t), got {}",
                table.axes().len()
            )));
        }
        Ok(SpaceTimeFn::Table(Arc::new(table)))
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            SpaceTimeFn::Constant(c) => *c,
            SpaceTimeFn::Function { f, .. } => f(x, t),
            SpaceTimeFn::Table(tab) => tab.eval(&[x, t]),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match self {
            SpaceTimeFn::Constant(_) => true,
            SpaceTimeFn::Function {
                time_independent, ..
            } => *time_independent,
            SpaceTimeFn::Table(tab) => tab.axes()[1].len() == 1,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SpaceTimeFn::Constant(c) if *c == 0.0)
    }

    pub fn sample_nodes(&self, mesh: &Mesh1D, t: f64) -> Vec<f64> {
        mesh.all_nodes().map(|x| self.eval(x, t)).collect()
    }
}

impl fmt::Debug for SpaceTimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceTimeFn::Constant(c) => write!(f, "Constant({c})"),
            SpaceTimeFn::Function {
                time_independent, ..
            } => write!(f, "Function {{ time_independent: {time_independent} }}"),
            SpaceTimeFn::Table(t) => write!(
                f,
                "Table({:?})",
                t.axes().iter().map(Vec::len).collect::<Vec<_>>()
            ),
        }
    }
}

impl From<f64> for SpaceTimeFn {
    fn from(c: f64) -> Self {
        SpaceTimeFn::Constant(c)
    }
}

/// Coefficients of `(b uₓ)ₓ + f uₓ + λ u` with the claimed bounds.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub b: SpaceTimeFn,
    pub f: SpaceTimeFn,
    pub lambda: SpaceTimeFn,
    /// Claimed lower bound of `b`.
    pub delta: f64,
    /// Claimed upper bound of `|b| + |f| + |λ|`.
    pub sup_bound: f64,
}

impl CoefficientSet {
    /// `b ≡ 1`, `f ≡ 0`, `λ ≡ 0`.
    pub fn heat() -> Self {
        Self {
            b: 1.0.into(),
            f: 0.0.into(),
            lambda: 0.0.into(),
            delta: 1.0,
            sup_bound: 1.0,
        }
    }

    pub fn is_time_independent(&self) -> bool {
        self.b.is_time_independent()
            && self.f.is_time_independent()
            && self.lambda.is_time_independent()
    }

    /// Reads a CSV with header `x,t,b,f,lambda`.
    pub fn from_csv(path: impl AsRef<Path>, delta: f64, sup_bound: f64) -> Result<Self> {
        let mut tables =
            GridTable::read_csv_path(path, &["x", "t"], &["b", "f", "lambda"])?.into_iter();
        let mut next = || SpaceTimeFn::table(tables.next().expect("three value columns"));
        Ok(Self {
            b: next()?,
            f: next()?,
            lambda: next()?,
            delta,
            sup_bound,
        })
    }
}

/// Parameter pack: the data every constant in the estimates may depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPack {
    pub t_final: f64,
    pub dimension: usize,
    pub domain: (f64, f64),
    pub delta: f64,
    pub sup_bound: f64,
}

impl ParamPack {
    pub fn new(coeffs: &CoefficientSet, mesh: &Mesh1D, tg: &TimeGrid) -> Self {
        Self {
            t_final: tg.t_final(),
            dimension: 1,
            domain: (mesh.a(), mesh.b_end()),
            delta: coeffs.delta,
            sup_bound: coeffs.sup_bound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub min_b: f64,
    pub min_b_at: (f64, f64),
    pub max_sum: f64,
    pub max_sum_at: (f64, f64),
    pub probes: usize,
}

impl ValidationReport {
    pub fn check(&self, delta: f64, sup_bound: f64) -> Result<()> {
        if self.min_b < delta {
            return Err(Error::NonCoercive {
                x: self.min_b_at.0,
                t: self.min_b_at.1,
                value: self.min_b,
                delta,
            });
        }
        if self.max_sum > sup_bound {
            return Err(Error::UnboundedCoefficient {
                x: self.max_sum_at.0,
                t: self.max_sum_at.1,
                value: self.max_sum,
                bound: sup_bound,
            });
        }
        Ok(())
    }
}

/// Samples the coefficients on every node and cell midpoint, at every time
/// node and time-step midpoint, and records the extremes.
pub fn probe(coeffs: &CoefficientSet, mesh: &Mesh1D, tg: &TimeGrid) -> Result<ValidationReport> {
    let xs: Vec<f64> = (0..=2 * mesh.n_cells())
        .map(|k| mesh.a() + 0.5 * k as f64 * mesh.h())
        .collect();
    let ts: Vec<f64> = (0..=2 * tg.n_steps())
        .map(|k| 0.5 * k as f64 * tg.dt())
        .collect();
    let mut report = ValidationReport {
        min_b: f64::INFINITY,
        min_b_at: (f64::NAN, f64::NAN),
        max_sum: 0.0,
        max_sum_at: (f64::NAN, f64::NAN),
        probes: 0,
    };
    for &t in &ts {
        for &x in &xs {
            let b = coeffs.b.eval(x, t);
            let f = coeffs.f.eval(x, t);
            let l = coeffs.lambda.eval(x, t);
            for (what, v) in [("b", b), ("f", f), ("lambda", l)] {
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample { what, x, t });
                }
            }
            if b < report.min_b {
                report.min_b = b;
                report.min_b_at = (x, t);
            }
            let sum = b.abs() + f.abs() + l.abs();
            if sum > report.max_sum {
                report.max_sum = sum;
                report.max_sum_at = (x, t);
            }
            report.probes += 1;
        }
    }
    Ok(report)
}

/// Checks coercivity and boundedness against the claimed `delta` and `sup_bound`.
pub fn validate(coeffs: &CoefficientSet, mesh: &Mesh1D, tg: &TimeGrid) -> Result<ValidationReport> {
    if !(coeffs.delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {}",
            coeffs.delta
        )));
    }
    let report = probe(coeffs, mesh, tg)?;
    report.check(coeffs.delta, coeffs.sup_bound)?;
    Ok(report)
}

/// `φ = ∂ₓF + F₀`, given by its flux `F` and plain part `F₀`.
#[derive(Debug, Clone)]
pub struct SourceTerm {
    pub flux: SpaceTimeFn,
    pub plain: SpaceTimeFn,
}

impl SourceTerm {
    pub fn new(flux: impl Into<SpaceTimeFn>, plain: impl Into<SpaceTimeFn>) -> Self {
        Self {
            flux: flux.into(),
            plain: plain.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.flux.is_zero() && self.plain.is_zero()
    }

    /// Reads a CSV with header `x,t,F,F0`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut tables = GridTable::read_csv_path(path, &["x", "t"], &["F", "F0"])?.into_iter();
        let flux = SpaceTimeFn::table(tables.next().expect("two value columns"))?;
        let plain = SpaceTimeFn::table(tables.next().expect("two value columns"))?;
        Ok(Self { flux, plain })
    }

    /// `e^{-rt} φ`
    pub fn damped(&self, rate: f64) -> Self {
        let scale = |g: &SpaceTimeFn| {
            let g = g.clone();
            SpaceTimeFn::new(move |x, t| (-rate * t).exp() * g.eval(x, t))
        };
        Self {
            flux: scale(&self.flux),
            plain: scale(&self.plain),
        }
    }
}

/// Nodal samples of `F(·,t)` (all nodes) and `F₀(·,t)` (interior nodes).
pub fn sample_source(
    src: &SourceTerm,
    mesh: &Mesh1D,
    t: f64,
) -> Result<(NodalField, GridFunction)> {
    let flux = src.flux.sample_nodes(mesh, t);
    if let Some(k) = flux.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample {
            what: "F",
            x: mesh.node(k),
            t,
        });
    }
    let plain: Vec<f64> = mesh
        .interior_nodes()
        .map(|x| src.plain.eval(x, t))
        .collect();
    if let Some(k) = plain.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample {
            what: "F0",
            x: mesh.node(k + 1),
            t,
        });
    }
    Ok((
        NodalField::new(*mesh, flux)?,
        GridFunction::from_vec_unchecked(*mesh, plain),
    ))
}

/// A source sampled at every time node. This is the common currency of the
/// estimate engine, since realized nonlocal sources only exist discretely.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSource {
    mesh: Mesh1D,
    time_grid: TimeGrid,
    flux: Vec<NodalField>,
    plain: Vec<GridFunction>,
}

impl SampledSource {
    pub fn new(
        mesh: Mesh1D,
        time_grid: TimeGrid,
        flux: Vec<NodalField>,
        plain: Vec<GridFunction>,
    ) -> Result<Self> {
        let n = time_grid.n_steps() + 1;
        if flux.len() != n || plain.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} flux and {} plain frames for {n} time nodes",
                flux.len(),
                plain.len()
            )));
        }
        if flux.iter().any(|f| *f.mesh() != mesh) || plain.iter().any(|p| *p.mesh() != mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok(Self {
            mesh,
            time_grid,
            flux,
            plain,
        })
    }

    pub fn sample(src: &SourceTerm, mesh: &Mesh1D, tg: &TimeGrid) -> Result<Self> {
        let (flux, plain) = tg
            .times()
            .map(|t| sample_source(src, mesh, t))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(Self {
            mesh: *mesh,
            time_grid: *tg,
            flux,
            plain,
        })
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn flux(&self) -> &[NodalField] {
        &self.flux
    }

    pub fn plain(&self) -> &[GridFunction] {
        &self.plain
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mesh: self.mesh,
            time_grid: self.time_grid,
            flux: self.flux.iter().map(|f| f.scaled(c)).collect(),
            plain: self.plain.iter().map(|p| p.scaled(c)).collect(),
        }
    }

    /// Adds `(flux, plain)` contributions frame by frame.
    pub fn add(&mut self, flux: &[NodalField], plain: &[GridFunction]) -> Result<()> {
        if flux.len() != self.flux.len() || plain.len() != self.plain.len() {
            return Err(Error::DimensionMismatch("frame counts differ".into()));
        }
        for (s, o) in self.flux.iter_mut().zip(flux) {
            s.axpy(1.0, o)?;
        }
        for (s, o) in self.plain.iter_mut().zip(plain) {
            s.axpy(1.0, o)?;
        }
        Ok(())
    }

    /// Drops the plain part, keeping only `∂ₓF`.
    pub fn flux_only(&self) -> Self {
        Self {
            mesh: self.mesh,
            time_grid: self.time_grid,
            flux: self.flux.clone(),
            plain: vec![GridFunction::zeros(self.mesh); self.plain.len()],
        }
    }

    /// Discrete `φ(·, t_j)`.
    pub fn forcing(&self, j: usize) -> Result<GridFunction> {
        apply_source_weak(&self.flux[j], &self.plain[j])
    }

    pub fn forcing_frames(&self) -> Result<Vec<GridFunction>> {
        (0..self.flux.len()).map(|j| self.forcing(j)).collect()
    }
}
