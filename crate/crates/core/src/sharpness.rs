//! The extremal family on `(−π, π)` with `b ≡ 1`, `f ≡ 0`, `λ ≡ 0`:
//!
//! ```text
//! φ_m = m sin(mx) e^{γt},  F_m = −cos(mx) e^{γt},  γ = m² + K,
//! u(x,t) = m sin(mx) sinh(γt) / γ,
//! ‖u(T)‖² / ∫₀ᵀ‖F_m‖² = m²/(2γ) · (1 − e^{−2γT})  →  ½.
//! ```

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::estimate::rhs_source;
use crate::fmt::sig12;
use crate::mesh::{norm_h0, Mesh1D, TimeGrid};
use crate::problem::{CoefficientSet, SampledSource, SourceTerm, SpaceTimeFn};
use crate::stepper::{solve_sampled, ThetaSchemeConfig};

/// Grid cells required per unit of mode number.
pub const CELLS_PER_MODE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpCase {
    m: u32,
    shift: f64,
    t_final: f64,
}

impl SharpCase {
    pub fn new(m: u32, shift: f64, t_final: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("mode m must be >= 1".into()));
        }
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "K must be >= 0, got {shift}"
            )));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "T must be > 0, got {t_final}"
            )));
        }
        Ok(Self { m, shift, t_final })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn gamma(&self) -> f64 {
        let m = self.m as f64;
        m * m + self.shift
    }

    pub fn domain() -> (f64, f64) {
        (-PI, PI)
    }

    pub fn coefficients() -> CoefficientSet {
        CoefficientSet::heat()
    }

    /// `F = F_m`, `F₀ = 0`.
    pub fn source(&self) -> SourceTerm {
        let (m, gamma) = (self.m as f64, self.gamma());
        SourceTerm::new(
            SpaceTimeFn::new(move |x, t| -(m * x).cos() * (gamma * t).exp()),
            0.0,
        )
    }

    /// `φ_m(x, t)`
    pub fn phi(&self, x: f64, t: f64) -> f64 {
        let m = self.m as f64;
        m * (m * x).sin() * (self.gamma() * t).exp()
    }

    /// Closed-form solution of the shifted problem.
    pub fn solution(&self, x: f64, t: f64) -> f64 {
        let (m, gamma) = (self.m as f64, self.gamma());
        m * (m * x).sin() * (gamma * t).sinh() / gamma
    }

    pub fn closed_form_ratio(&self) -> f64 {
        closed_form_ratio(self)
    }

    pub fn scheme(&self) -> Result<ThetaSchemeConfig> {
        ThetaSchemeConfig::crank_nicolson(self.shift)
    }
}

pub fn make_case(m: u32, shift: f64, t_final: f64) -> Result<(SharpCase, SourceTerm)> {
    let case = SharpCase::new(m, shift, t_final)?;
    Ok((case, case.source()))
}

/// `m²/(2γ) · (1 − e^{−2γT})`, evaluated without forming `e^{2γT}`.
pub fn closed_form_ratio(case: &SharpCase) -> f64 {
    let m = case.m as f64;
    let gamma = case.gamma();
    m * m / (2.0 * gamma) * -(-2.0 * gamma * case.t_final).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m: u32,
    pub shift: f64,
    pub t_final: f64,
    pub gamma: f64,
    pub ratio_numeric: f64,
    pub ratio_closed: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub n_cells: usize,
    pub n_steps: usize,
}

/// `‖u(T)‖² / ∫₀ᵀ‖F_m‖²` from the θ-scheme solution.
pub fn numerical_ratio(case: &SharpCase, res: Resolution) -> Result<f64> {
    let required = CELLS_PER_MODE * case.m as usize;
    if res.n_cells < required {
        return Err(Error::ResolutionTooCoarse {
            m: case.m,
            n_cells: res.n_cells,
            required,
        });
    }
    let (a, b) = SharpCase::domain();
    let mesh = Mesh1D::new(a, b, res.n_cells)?;
    let tg = TimeGrid::new(case.t_final, res.n_steps)?;
    let coeffs = SharpCase::coefficients();
    let src = SampledSource::sample(&case.source(), &mesh, &tg)?;
    let u = solve_sampled(&coeffs, &src, &case.scheme()?)?;
    let (flux, _) = rhs_source(&src, &coeffs, 0.0)?;
    let final_norm = norm_h0(u.frame(tg.n_steps())).powi(2);
    Ok(final_norm / flux[tg.n_steps()])
}

fn row(case: SharpCase, res: Resolution) -> Result<SweepRow> {
    let numeric = numerical_ratio(&case, res)?;
    let closed = closed_form_ratio(&case);
    Ok(SweepRow {
        m: case.m,
        shift: case.shift,
        t_final: case.t_final,
        gamma: case.gamma(),
        ratio_numeric: numeric,
        ratio_closed: closed,
        discrepancy: (numeric - closed).abs() / closed,
    })
}

/// Runs every case on its own thread and returns rows in input order.
fn run_cases(cases: Vec<(SharpCase, Resolution)>) -> Result<Vec<SweepRow>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .into_iter()
            .map(|(case, res)| scope.spawn(move || row(case, res)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

pub fn sweep(m_list: &[u32], shift: f64, t_final: f64, res: Resolution) -> Result<Vec<SweepRow>> {
    let cases = m_list
        .iter()
        .map(|&m| SharpCase::new(m, shift, t_final).map(|c| (c, res)))
        .collect::<Result<Vec<_>>>()?;
    if let Some((case, _)) = cases
        .iter()
        .find(|(c, _)| res.n_cells < CELLS_PER_MODE * c.m as usize)
    {
        return Err(Error::ResolutionTooCoarse {
            m: case.m,
            n_cells: res.n_cells,
            required: CELLS_PER_MODE * case.m as usize,
        });
    }
    run_cases(cases)
}

/// Shrinking horizons `T_i = 1/i` with modes `m_i = ⌈1/T_i⌉ + 1`, so that
/// `γT_i → ∞` and the ratio tends to ½ as `T_i → 0`. The mesh is sized per
/// case by [`CELLS_PER_MODE`]; `steps_per_horizon` time steps cover each `T_i`.
pub fn vanishing_horizon_sweep(indices: &[u32], steps_per_horizon: usize) -> Result<Vec<SweepRow>> {
    let cases = indices
        .iter()
        .map(|&i| {
            if i == 0 {
                return Err(Error::InvalidParameter(
                    "sequence index must be >= 1".into(),
                ));
            }
            let t_final = 1.0 / i as f64;
            let m = (1.0 / t_final).ceil() as u32 + 1;
            let res = Resolution {
                n_cells: CELLS_PER_MODE * m as usize,
                n_steps: steps_per_horizon,
            };
            SharpCase::new(m, 0.0, t_final).map(|c| (c, res))
        })
        .collect::<Result<Vec<_>>>()?;
    run_cases(cases)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "m,K,T,gamma,ratio_numeric,ratio_closed,discrepancy")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.m,
            sig12(r.shift),
            sig12(r.t_final),
            sig12(r.gamma),
            sig12(r.ratio_numeric),
            sig12(r.ratio_closed),
            sig12(r.discrepancy)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::sample_source;

    #[test]
    fn closed_form_values() {
        let c = SharpCase::new(1, 0.0, 1.0).unwrap();
        assert!((closed_form_ratio(&c) - 0.5 * (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert!((c.solution(0.7, 1.0) - 0.7f64.sin() * 1f64.sinh()).abs() < 1e-14);
        assert!((1f64.sinh() - 1.1752).abs() < 1e-4);
        assert_eq!(c.solution(0.7, 0.0), 0.0);
        let c3 = SharpCase::new(3, 0.0, 1.0).unwrap();
        assert!((c3.phi(0.4, 0.0) - 3.0 * 1.2f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn ratio_increases_to_one_half() {
        let mut prev = 0.0;
        for m in 1..=64 {
            let r = closed_form_ratio(&SharpCase::new(m, 1.0, 0.5).unwrap());
            assert!(r > prev && r < 0.5);
            prev = r;
        }
        assert!(0.5 - prev < 1e-3);
        let tiny = SharpCase::new(3, 0.0, 1e-12).unwrap();
        assert!(closed_form_ratio(&tiny) < 1e-10);
    }

    #[test]
    fn huge_gamma_does_not_overflow() {
        let r = closed_form_ratio(&SharpCase::new(100, 0.0, 10.0).unwrap());
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sharp_flux_at_origin() {
        let (case, src) = make_case(3, 0.0, 1.0).unwrap();
        assert_eq!(case.gamma(), 9.0);
        let mesh = Mesh1D::new(-PI, PI, 96).unwrap();
        let (f, _) = sample_source(&src, &mesh, 0.0).unwrap();
        for (x, v) in mesh.all_nodes().zip(f.values()) {
            assert!((v + (3.0 * x).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_cases_are_rejected() {
        assert!(SharpCase::new(0, 0.0, 1.0).is_err());
        assert!(SharpCase::new(1, -1.0, 1.0).is_err());
        assert!(SharpCase::new(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn coarse_mesh_is_rejected() {
        let res = Resolution {
            n_cells: 64,
            n_steps: 10,
        };
        assert!(matches!(
            sweep(&[1, 4], 0.0, 0.5, res),
            Err(Error::ResolutionTooCoarse {
                m: 4,
                required: 128,
                ..
            })
        ));
    }

    #[test]
    fn low_mode_sweep_is_accurate() {
        let rows = sweep(
            &[1, 2],
            0.0,
            0.5,
            Resolution {
                n_cells: 128,
                n_steps: 500,
            },
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.discrepancy < 0.02), "{rows:?}");
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("m,K,T,gamma,ratio_numeric,ratio_closed,discrepancy\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
