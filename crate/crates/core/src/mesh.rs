//! Uniform 1-D meshes, grid functions and the discrete H⁰, H¹, H⁻¹ norms.
//!
//! Every quadrature in this module is the composite trapezoid rule on the
//! mesh nodes. Grid functions store interior values only and carry an
//! implicit zero trace, so the trapezoid rule reduces to `h * sum`.
//!
//! The discrete gradient lives on cell midpoints (forward differences). With
//! this choice the operator `-Δ_h` equals `∇_hᵀ∇_h`, so the H⁻¹ norm obtained
//! from the Riesz map `(-Δ_h + I)⁻¹` is exactly the dual of [`norm_h1`].

use crate::error::{Error, Result};
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    a: f64,
    b_end: f64,
    n_cells: usize,
}

impl Mesh1D {
    pub fn new(a: f64, b_end: f64, n_cells: usize) -> Result<Self> {
        if !(a.is_finite() && b_end.is_finite()) || b_end <= a {
            return Err(Error::InvalidMesh(format!(
                "need a < b_end, got ({a}, {b_end})"
            )));
        }
        if n_cells < 4 {
            return Err(Error::InvalidMesh(format!(
                "need at least 4 cells, got {n_cells}"
            )));
        }
        Ok(Self { a, b_end, n_cells })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b_end(&self) -> f64 {
        self.b_end
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_interior(&self) -> usize {
        self.n_cells - 1
    }

    pub fn h(&self) -> f64 {
        (self.b_end - self.a) / self.n_cells as f64
    }

    pub fn length(&self) -> f64 {
        self.b_end - self.a
    }

    /// Coordinate of node `k`, `k = 0..=n_cells`.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.n_cells {
            self.b_end
        } else {
            self.a + k as f64 * self.h()
        }
    }

    /// Midpoint of cell `k`, between nodes `k` and `k + 1`.
    pub fn midpoint(&self, k: usize) -> f64 {
        self.a + (k as f64 + 0.5) * self.h()
    }

    /// Coordinates of interior nodes `1..n_cells`.
    pub fn interior_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..self.n_cells).map(move |k| self.node(k))
    }

    pub fn all_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_cells).map(move |k| self.node(k))
    }

    /// Trapezoid weight of node `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.n_cells {
            0.5 * self.h()
        } else {
            self.h()
        }
    }
}

/// Interior nodal values of a function with zero boundary trace.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh: Mesh1D,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: Mesh1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_interior() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} interior nodes",
                values.len(),
                mesh.n_interior()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                what: "grid function",
                x: mesh.node(k + 1),
                t: f64::NAN,
            });
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Mesh1D) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.n_interior()],
        }
    }

    pub fn from_fn(mesh: Mesh1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh,
            values: mesh.interior_nodes().map(f).collect(),
        }
    }

    pub(crate) fn from_vec_unchecked(mesh: Mesh1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.n_interior());
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at node `k = 0..=n_cells`, zero on the boundary.
    pub fn node_value(&self, k: usize) -> f64 {
        if k == 0 || k == self.mesh.n_cells {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mesh: self.mesh,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &GridFunction) -> Result<()> {
        check_same_mesh(&self.mesh, &other.mesh)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += c * o;
        }
        Ok(())
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Trapezoid H⁰ inner product.
    pub fn dot(&self, other: &GridFunction) -> Result<f64> {
        check_same_mesh(&self.mesh, &other.mesh)?;
        Ok(self.mesh.h() * dot(&self.values, &other.values))
    }

    /// Forward differences `(u_{k+1} - u_k)/h` on the `n_cells` cells.
    pub fn gradient(&self) -> Vec<f64> {
        let h = self.mesh.h();
        (0..self.mesh.n_cells)
            .map(|k| (self.node_value(k + 1) - self.node_value(k)) / h)
            .collect()
    }
}

/// Values on every node including the two boundary nodes. Used for fluxes
/// and coefficient slices, which need not vanish on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    mesh: Mesh1D,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(mesh: Mesh1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_cells() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                mesh.n_cells() + 1
            )));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Mesh1D) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.n_cells() + 1],
        }
    }

    pub fn from_fn(mesh: Mesh1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh,
            values: mesh.all_nodes().map(f).collect(),
        }
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Averages of neighbouring nodes, one per cell.
    pub fn midpoint_values(&self) -> Vec<f64> {
        self.values
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mesh: self.mesh,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn axpy(&mut self, c: f64, other: &NodalField) -> Result<()> {
        check_same_mesh(&self.mesh, &other.mesh)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += c * o;
        }
        Ok(())
    }

    /// Trapezoid integral of the square.
    pub fn norm_sq(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| self.mesh.weight(k) * v * v)
            .sum()
    }
}

impl From<&GridFunction> for NodalField {
    fn from(u: &GridFunction) -> Self {
        let mesh = *u.mesh();
        NodalField {
            mesh,
            values: (0..=mesh.n_cells()).map(|k| u.node_value(k)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidTimeGrid(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidTimeGrid("need at least one step".into()));
        }
        Ok(Self { t_final, n_steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_final
        } else {
            j as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |j| self.time(j))
    }
}

/// Solution frames `u(·, t_j)` for `j = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSeries {
    time_grid: TimeGrid,
    frames: Vec<GridFunction>,
}

impl SpaceTimeSeries {
    pub fn new(time_grid: TimeGrid, frames: Vec<GridFunction>) -> Result<Self> {
        if frames.len() != time_grid.n_steps() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} frames for {} time nodes",
                frames.len(),
                time_grid.n_steps() + 1
            )));
        }
        let mesh = frames[0].mesh;
        if frames.iter().any(|f| f.mesh != mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok(Self { time_grid, frames })
    }

    pub fn zeros(mesh: Mesh1D, time_grid: TimeGrid) -> Self {
        Self {
            time_grid,
            frames: vec![GridFunction::zeros(mesh); time_grid.n_steps() + 1],
        }
    }

    pub fn from_fn(mesh: Mesh1D, time_grid: TimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let frames = time_grid
            .times()
            .map(|t| GridFunction::from_fn(mesh, |x| f(x, t)))
            .collect();
        Self { time_grid, frames }
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn mesh(&self) -> &Mesh1D {
        self.frames[0].mesh()
    }

    pub fn frames(&self) -> &[GridFunction] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [GridFunction] {
        &mut self.frames
    }

    pub fn frame(&self, j: usize) -> &GridFunction {
        &self.frames[j]
    }

    pub fn into_frames(self) -> Vec<GridFunction> {
        self.frames
    }

    /// Multiplies frame `j` by `f(t_j)`.
    pub fn scale_by_time(&mut self, f: impl Fn(f64) -> f64) {
        let tg = self.time_grid;
        for (j, frame) in self.frames.iter_mut().enumerate() {
            let c = f(tg.time(j));
            frame.values.iter_mut().for_each(|v| *v *= c);
        }
    }

    /// `sqrt(∫₀ᵀ ‖u(·,t)‖² dt)` with the given frame norm.
    pub fn bochner_norm(&self, frame_norm: impl Fn(&GridFunction) -> Result<f64>) -> Result<f64> {
        let sq = self
            .frames
            .iter()
            .map(|f| frame_norm(f).map(|n| n * n))
            .collect::<Result<Vec<_>>>()?;
        Ok(time_integral(&sq, &self.time_grid, 0.0)?.sqrt())
    }
}

fn check_same_mesh(a: &Mesh1D, b: &Mesh1D) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_h0(u: &GridFunction) -> f64 {
    (u.mesh.h() * dot(&u.values, &u.values)).sqrt()
}

/// `(‖u‖² + ‖∇_h u‖²)^{1/2}`, gradient on cells.
pub fn norm_h1(u: &GridFunction) -> f64 {
    let h = u.mesh.h();
    let grad = u.gradient();
    (h * dot(&u.values, &u.values) + h * dot(&grad, &grad)).sqrt()
}

/// The matrix `-Δ_h + I` on the interior nodes.
pub fn riesz_matrix(mesh: &Mesh1D) -> Tridiagonal {
    let n = mesh.n_interior();
    let inv_h2 = 1.0 / (mesh.h() * mesh.h());
    Tridiagonal {
        lower: vec![-inv_h2; n],
        diag: vec![2.0 * inv_h2 + 1.0; n],
        upper: vec![-inv_h2; n],
    }
}

/// Riesz representative `w = (-Δ_h + I)⁻¹ φ`.
pub fn riesz_map(phi: &GridFunction) -> Result<GridFunction> {
    let a = riesz_matrix(&phi.mesh);
    let mut w = phi.values.clone();
    if !a.solve_in_place(&mut w, &mut Vec::new()) {
        return Err(Error::LinearSolveFailure { step: 0 });
    }
    Ok(GridFunction::from_vec_unchecked(phi.mesh, w))
}

/// Dual norm of `φ` against the discrete H¹ norm, `(φ, (-Δ_h + I)⁻¹φ)^{1/2}`.
pub fn norm_hminus1(phi: &GridFunction) -> Result<f64> {
    let w = riesz_map(phi)?;
    Ok(phi.dot(&w)?.max(0.0).sqrt())
}

/// Trapezoid approximation of `∫ F² / b`.
pub fn weighted_inner_binv(flux: &NodalField, b: &NodalField) -> Result<f64> {
    check_same_mesh(&flux.mesh, &b.mesh)?;
    let mesh = flux.mesh;
    let mut acc = 0.0;
    for (k, (f, bk)) in flux.values.iter().zip(&b.values).enumerate() {
        if !(*bk > 0.0) {
            return Err(Error::NonCoercive {
                x: mesh.node(k),
                t: f64::NAN,
                value: *bk,
                delta: 0.0,
            });
        }
        acc += mesh.weight(k) * f * f / bk;
    }
    Ok(acc)
}

/// Trapezoid value of `∫₀ᵀ e^{-2Ks} g(s) ds` for `g` sampled on the time grid.
pub fn time_integral(values: &[f64], tg: &TimeGrid, shift: f64) -> Result<f64> {
    Ok(*cumulative_time_integral(values, tg, shift)?
        .last()
        .expect("time grid has at least two nodes"))
}

/// Running trapezoid integrals `∫₀^{t_j} e^{-2Ks} g(s) ds`, one per node.
pub fn cumulative_time_integral(values: &[f64], tg: &TimeGrid, shift: f64) -> Result<Vec<f64>> {
    if values.len() != tg.n_steps() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} samples for {} time nodes",
            values.len(),
            tg.n_steps() + 1
        )));
    }
    let dt = tg.dt();
    let weighted: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(j, g)| {
            if *g == 0.0 {
                0.0
            } else {
                (-2.0 * shift * tg.time(j)).exp() * g
            }
        })
        .collect();
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in weighted.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    Ok(out)
}
