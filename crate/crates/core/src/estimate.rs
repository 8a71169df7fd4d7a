//! Both sides of the weighted energy estimate
//!
//! ```text
//! sup_{s≤t} e^{-2Ks}‖u(s)‖² + M∫₀ᵗ e^{-2Ks}‖u‖²
//!     ≤ (½+ε) ∫₀ᵗ e^{-2Ks}(F, b⁻¹F) + ε ∫₀ᵗ e^{-2Ks}‖F₀‖²
//! ```
//!
//! for the solution `u` of the unshifted problem `uₜ = 𝒜u + ∂ₓF + F₀`, the
//! search for the smallest shift `K` that makes it hold, and the initial-time
//! ratios `‖u(t)‖² / ∫₀ᵗ(F, b⁻¹F)`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::mesh::{
    cumulative_time_integral, norm_h0, weighted_inner_binv, NodalField, SpaceTimeSeries,
};
use crate::problem::{CoefficientSet, SampledSource};
use crate::stepper::{solve_sampled, ThetaSchemeConfig};

/// Slack on `ratio ≤ 1` absorbing round-off.
pub const PASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LhsEnergy {
    pub per_time: Vec<f64>,
    pub max: f64,
}

/// `sup_{s≤t_j} e^{-2Ks}‖u(s)‖² + M ∫₀^{t_j} e^{-2Ks}‖u‖²` for every node `t_j`.
pub fn lhs_energy(u: &SpaceTimeSeries, shift: f64, weight: f64) -> Result<LhsEnergy> {
    let tg = *u.time_grid();
    let sq: Vec<f64> = u.frames().iter().map(|f| norm_h0(f).powi(2)).collect();
    let integral = cumulative_time_integral(&sq, &tg, shift)?;
    let mut running_sup = 0.0f64;
    let per_time: Vec<f64> = sq
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let weighted = if *s == 0.0 {
                0.0
            } else {
                (-2.0 * shift * tg.time(j)).exp() * s
            };
            running_sup = running_sup.max(weighted);
            running_sup + weight * integral[j]
        })
        .collect();
    let max = per_time.iter().copied().fold(0.0, f64::max);
    Ok(LhsEnergy { per_time, max })
}

/// Per-node `b(·, t)` on every mesh node.
fn b_slice(coeffs: &CoefficientSet, src: &SampledSource, j: usize) -> NodalField {
    let t = src.time_grid().time(j);
    NodalField::from_fn(*src.mesh(), |x| coeffs.b.eval(x, t))
}

/// `(F(·,t_j), b(·,t_j)⁻¹F(·,t_j))` for every time node.
pub fn weighted_flux_norms(src: &SampledSource, coeffs: &CoefficientSet) -> Result<Vec<f64>> {
    let tg = *src.time_grid();
    src.flux()
        .iter()
        .enumerate()
        .map(|(j, flux)| {
            weighted_inner_binv(flux, &b_slice(coeffs, src, j)).map_err(|e| match e {
                Error::NonCoercive { x, value, .. } => Error::NonCoercive {
                    x,
                    t: tg.time(j),
                    value,
                    delta: coeffs.delta,
                },
                other => other,
            })
        })
        .collect()
}

/// Running integrals `∫₀ᵗ e^{-2Ks}(F, b⁻¹F)` and `∫₀ᵗ e^{-2Ks}‖F₀‖²`.
pub fn rhs_source(
    src: &SampledSource,
    coeffs: &CoefficientSet,
    shift: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let tg = *src.time_grid();
    let flux_sq = weighted_flux_norms(src, coeffs)?;
    let plain_sq: Vec<f64> = src.plain().iter().map(|p| norm_h0(p).powi(2)).collect();
    Ok((
        cumulative_time_integral(&flux_sq, &tg, shift)?,
        cumulative_time_integral(&plain_sq, &tg, shift)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub shift: f64,
    pub weight: f64,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs_flux: Vec<f64>,
    pub rhs_plain: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest left-hand side over the time grid.
    pub lhs_max: f64,
    /// Largest ratio over the time grid.
    pub ratio: f64,
    pub pass: bool,
}

impl EstimateReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,K,M,epsilon,lhs,rhs_F,rhs_F0,ratio,pass")?;
        for j in 0..self.times.len() {
            let pass = self.ratios[j] <= 1.0 + PASS_TOLERANCE;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                sig12(self.times[j]),
                sig12(self.shift),
                sig12(self.weight),
                sig12(self.epsilon),
                sig12(self.lhs[j]),
                sig12(self.rhs_flux[j]),
                sig12(self.rhs_plain[j]),
                sig12(self.ratios[j]),
                pass
            )?;
        }
        Ok(())
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// Evaluates the estimate with constants `(½+ε, ε)` at every time node.
pub fn check_inequality(
    u: &SpaceTimeSeries,
    src: &SampledSource,
    coeffs: &CoefficientSet,
    shift: f64,
    weight: f64,
    epsilon: f64,
) -> Result<EstimateReport> {
    if u.mesh() != src.mesh() || u.time_grid() != src.time_grid() {
        return Err(Error::DimensionMismatch(
            "solution and source live on different grids".into(),
        ));
    }
    if !(epsilon > 0.0) || weight < 0.0 || shift < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need epsilon > 0, M >= 0, K >= 0; got epsilon = {epsilon}, M = {weight}, K = {shift}"
        )));
    }
    let lhs = lhs_energy(u, shift, weight)?;
    let (rhs_flux, rhs_plain) = rhs_source(src, coeffs, shift)?;
    let ratios: Vec<f64> = (0..lhs.per_time.len())
        .map(|j| {
            ratio(
                lhs.per_time[j],
                (0.5 + epsilon) * rhs_flux[j] + epsilon * rhs_plain[j],
            )
        })
        .collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Ok(EstimateReport {
        shift,
        weight,
        epsilon,
        times: u.time_grid().times().collect(),
        lhs: lhs.per_time,
        rhs_flux,
        rhs_plain,
        ratios,
        lhs_max: lhs.max,
        ratio: worst,
        pass: worst <= 1.0 + PASS_TOLERANCE,
    })
}

/// Outcome of [`search_k`].
#[derive(Debug, Clone, PartialEq)]
pub struct KSearch {
    /// Smallest passing shift found.
    pub shift: f64,
    /// Every shift tried, in order, with its verdict.
    pub tested: Vec<(f64, bool)>,
    /// One report per family member at the returned shift.
    pub reports: Vec<EstimateReport>,
}

/// Number of bisection steps after the geometric bracket.
pub const BISECTION_STEPS: usize = 10;

/// Pairs each source with the solution of the unshifted problem. The
/// solutions do not depend on `K`; only the weights do.
pub struct EstimateFamily<'a> {
    coeffs: &'a CoefficientSet,
    members: Vec<(SampledSource, SpaceTimeSeries)>,
}

impl<'a> EstimateFamily<'a> {
    pub fn solve(
        coeffs: &'a CoefficientSet,
        sources: Vec<SampledSource>,
        theta: f64,
    ) -> Result<Self> {
        let cfg = ThetaSchemeConfig::new(theta, 0.0)?;
        let members = sources
            .into_iter()
            .map(|s| solve_sampled(coeffs, &s, &cfg).map(|u| (s, u)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coeffs, members })
    }

    /// Wraps solutions computed elsewhere, e.g. by a fixed-point iteration
    /// whose realized source is only known after the fact.
    pub fn from_solutions(
        coeffs: &'a CoefficientSet,
        members: Vec<(SampledSource, SpaceTimeSeries)>,
    ) -> Result<Self> {
        for (src, u) in &members {
            if u.mesh() != src.mesh() || u.time_grid() != src.time_grid() {
                return Err(Error::DimensionMismatch(
                    "solution and source live on different grids".into(),
                ));
            }
        }
        Ok(Self { coeffs, members })
    }

    pub fn members(&self) -> &[(SampledSource, SpaceTimeSeries)] {
        &self.members
    }

    pub fn check(&self, shift: f64, weight: f64, epsilon: f64) -> Result<Vec<EstimateReport>> {
        self.members
            .iter()
            .map(|(src, u)| check_inequality(u, src, self.coeffs, shift, weight, epsilon))
            .collect()
    }

    pub fn passes(&self, shift: f64, weight: f64, epsilon: f64) -> Result<bool> {
        for (src, u) in &self.members {
            if !check_inequality(u, src, self.coeffs, shift, weight, epsilon)?.pass {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Smallest `K` on `{0, 1, 2, 4, …, K_max}` refined by bisection such that
    /// every member passes.
    pub fn search(&self, weight: f64, epsilon: f64, k_max: f64) -> Result<KSearch> {
        if !(k_max >= 0.0 && k_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "K_max must be >= 0, got {k_max}"
            )));
        }
        let mut tested = Vec::new();
        let try_k = |k: f64, tested: &mut Vec<(f64, bool)>| -> Result<bool> {
            let ok = self.passes(k, weight, epsilon)?;
            tested.push((k, ok));
            Ok(ok)
        };

        let mut grid = vec![0.0];
        let mut k = 1.0;
        while k < k_max {
            grid.push(k);
            k *= 2.0;
        }
        if k_max > 0.0 {
            grid.push(k_max);
        }

        let mut bracket = None;
        for (i, &k) in grid.iter().enumerate() {
            if try_k(k, &mut tested)? {
                bracket = Some(i);
                break;
            }
        }
        let Some(i) = bracket else {
            return Err(Error::NotFound { k_max });
        };
        let mut hi = grid[i];
        if i > 0 {
            let mut lo = grid[i - 1];
            for _ in 0..BISECTION_STEPS {
                if hi - lo <= 0.01 * hi {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if try_k(mid, &mut tested)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        Ok(KSearch {
            shift: hi,
            tested,
            reports: self.check(hi, weight, epsilon)?,
        })
    }
}

/// Solves each source once and searches the smallest passing shift.
pub fn search_k(
    coeffs: &CoefficientSet,
    family: &[SampledSource],
    theta: f64,
    weight: f64,
    epsilon: f64,
    k_max: f64,
) -> Result<KSearch> {
    EstimateFamily::solve(coeffs, family.to_vec(), theta)?.search(weight, epsilon, k_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceClass {
    /// `φ ∈ H⁰`: ratio `‖u(t)‖² / ∫₀ᵗ‖φ‖²`.
    H0,
    /// `φ = ∂ₓF`: ratio `‖u(t)‖² / ∫₀ᵗ(F, b⁻¹F)`. Any plain part is ignored in
    /// the denominator.
    HMinus1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialRatio {
    pub t: f64,
    pub ratio: f64,
    /// `|p(t) − p(0)| / p(0)` for the running mean `p(t) = (1/t)∫₀ᵗ(...)`.
    pub mean_drift: f64,
    /// False below eight time steps, where discretization error dominates.
    pub trusted: bool,
}

/// Minimum number of time steps for an initial-time point to be trusted.
pub const TRUSTED_STEPS: usize = 8;

/// Ratios at `t_k ≈ T/2ᵏ`, `k = 1, 2, …`, down to the first time step.
pub fn initial_time_ratio(
    u: &SpaceTimeSeries,
    src: &SampledSource,
    coeffs: &CoefficientSet,
    kind: SourceClass,
) -> Result<Vec<InitialRatio>> {
    if u.mesh() != src.mesh() || u.time_grid() != src.time_grid() {
        return Err(Error::DimensionMismatch(
            "solution and source live on different grids".into(),
        ));
    }
    let tg = *u.time_grid();
    let density: Vec<f64> = match kind {
        SourceClass::HMinus1 => weighted_flux_norms(src, coeffs)?,
        SourceClass::H0 => src
            .forcing_frames()?
            .iter()
            .map(|phi| norm_h0(phi).powi(2))
            .collect(),
    };
    if density[0] == 0.0 {
        return Err(Error::ZeroDenominator(
            "source norm vanishes at t = 0".into(),
        ));
    }
    let integral = cumulative_time_integral(&density, &tg, 0.0)?;

    let mut out = Vec::new();
    let mut last = usize::MAX;
    for k in 1.. {
        let j = (tg.n_steps() as f64 / 2f64.powi(k)).round() as usize;
        if j == 0 {
            break;
        }
        if j == last {
            continue;
        }
        last = j;
        let t = tg.time(j);
        let mean = integral[j] / t;
        out.push(InitialRatio {
            t,
            ratio: norm_h0(u.frame(j)).powi(2) / integral[j],
            mean_drift: (mean - density[0]).abs() / density[0],
            trusted: j >= TRUSTED_STEPS,
        });
    }
    Ok(out)
}

pub fn write_initial_ratios_csv<W: Write>(
    ratios: &[InitialRatio],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "t,ratio,mean_drift,trusted")?;
    for r in ratios {
        writeln!(
            w,
            "{},{},{},{}",
            sig12(r.t),
            sig12(r.ratio),
            sig12(r.mean_drift),
            r.trusted
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Mesh1D, TimeGrid};
    use crate::problem::{SourceTerm, SpaceTimeFn};
    use std::f64::consts::PI;

    fn grids() -> (Mesh1D, TimeGrid) {
        (
            Mesh1D::new(-PI, PI, 256).unwrap(),
            TimeGrid::new(1.0, 400).unwrap(),
        )
    }

    #[test]
    fn lhs_of_zero_and_of_stationary_sine() {
        let (m, tg) = grids();
        let zero = SpaceTimeSeries::zeros(m, tg);
        assert!(lhs_energy(&zero, 0.0, 1.0)
            .unwrap()
            .per_time
            .iter()
            .all(|v| *v == 0.0));

        let u = SpaceTimeSeries::from_fn(m, tg, |x, _| x.sin());
        let plain = lhs_energy(&u, 0.0, 0.0).unwrap();
        assert!(plain.per_time.iter().all(|v| (v - PI).abs() < 1e-9));
        let with_m = lhs_energy(&u, 0.0, 1.0).unwrap();
        for (j, v) in with_m.per_time.iter().enumerate() {
            assert!((v - PI * (1.0 + tg.time(j))).abs() < 1e-9);
        }
    }

    #[test]
    fn rhs_of_zero_and_of_weighted_cosine() {
        let (m, tg) = grids();
        let c = CoefficientSet::heat();
        let zero = SampledSource::sample(&SourceTerm::zero(), &m, &tg).unwrap();
        let (f, f0) = rhs_source(&zero, &c, 0.0).unwrap();
        assert_eq!((*f.last().unwrap(), *f0.last().unwrap()), (0.0, 0.0));

        let four = CoefficientSet {
            b: 4.0.into(),
            delta: 4.0,
            sup_bound: 4.0,
            ..c
        };
        let src = SampledSource::sample(
            &SourceTerm::new(SpaceTimeFn::stationary(f64::cos), 0.0),
            &m,
            &tg,
        )
        .unwrap();
        let (f, f0) = rhs_source(&src, &four, 0.0).unwrap();
        assert!((f.last().unwrap() - PI / 4.0).abs() < 1e-9);
        assert_eq!(*f0.last().unwrap(), 0.0);
    }

    #[test]
    fn zero_source_passes_with_zero_ratio() {
        let (m, tg) = grids();
        let src = SampledSource::sample(&SourceTerm::zero(), &m, &tg).unwrap();
        let u = SpaceTimeSeries::zeros(m, tg);
        let r = check_inequality(&u, &src, &CoefficientSet::heat(), 0.0, 1.0, 0.05).unwrap();
        assert!(r.pass);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let (m, tg) = grids();
        let src = SampledSource::sample(&SourceTerm::zero(), &m, &tg).unwrap();
        let u = SpaceTimeSeries::zeros(m, TimeGrid::new(1.0, 10).unwrap());
        assert!(matches!(
            check_inequality(&u, &src, &CoefficientSet::heat(), 0.0, 1.0, 0.05),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn nonzero_lhs_over_zero_rhs_fails() {
        let (m, tg) = grids();
        let src = SampledSource::sample(&SourceTerm::zero(), &m, &tg).unwrap();
        let u = SpaceTimeSeries::from_fn(m, tg, |x, t| x.sin() * t);
        let r = check_inequality(&u, &src, &CoefficientSet::heat(), 0.0, 0.0, 0.05).unwrap();
        assert!(!r.pass);
        assert!(r.ratio.is_infinite());
    }

    #[test]
    fn csv_has_header_and_one_row_per_node() {
        let (m, _) = grids();
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let src = SampledSource::sample(
            &SourceTerm::new(SpaceTimeFn::stationary(f64::cos), 0.0),
            &m,
            &tg,
        )
        .unwrap();
        let u = SpaceTimeSeries::from_fn(m, tg, |x, t| 0.1 * t * x.sin());
        let r = check_inequality(&u, &src, &CoefficientSet::heat(), 0.0, 0.0, 0.05).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,K,M,epsilon,lhs,rhs_F,rhs_F0,ratio,pass");
        assert_eq!(lines.len(), 6);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn search_rejects_negative_k_max() {
        let (m, tg) = grids();
        let src = SampledSource::sample(&SourceTerm::zero(), &m, &tg).unwrap();
        assert!(search_k(&CoefficientSet::heat(), &[src], 0.5, 1.0, 0.05, -1.0).is_err());
    }

    #[test]
    fn initial_ratio_needs_nonzero_source_at_origin() {
        let (m, tg) = grids();
        let src = SampledSource::sample(
            &SourceTerm::new(SpaceTimeFn::new(|x, t| t * x.cos()), 0.0),
            &m,
            &tg,
        )
        .unwrap();
        let u = SpaceTimeSeries::zeros(m, tg);
        assert!(matches!(
            initial_time_ratio(&u, &src, &CoefficientSet::heat(), SourceClass::HMinus1),
            Err(Error::ZeroDenominator(_))
        ));
    }

    #[test]
    fn initial_ratio_of_zero_solution_is_zero() {
        let (m, tg) = grids();
        let src = SampledSource::sample(
            &SourceTerm::new(SpaceTimeFn::stationary(f64::cos), 0.0),
            &m,
            &tg,
        )
        .unwrap();
        let u = SpaceTimeSeries::zeros(m, tg);
        let r =
            initial_time_ratio(&u, &src, &CoefficientSet::heat(), SourceClass::HMinus1).unwrap();
        assert!(!r.is_empty());
        assert!(r.iter().all(|p| p.ratio == 0.0));
        assert!(r.last().unwrap().t <= tg.dt() + 1e-15);
        assert!(!r.last().unwrap().trusted);
    }
}
