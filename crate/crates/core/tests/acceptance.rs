//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use parabolic_core::estimate::rhs_source;
use parabolic_core::mesh::norm_h0;
use parabolic_core::nonlocal::{PointBeta, Variant};
use parabolic_core::sharpness::{sweep, Resolution, SharpCase};
use parabolic_core::stepper::{apply_source_weak, gradient_pairing, solve_ibvp};
use parabolic_core::{
    initial_time_ratio, lipschitz_probe, solve_nonlinear, validate, CoefficientSet, EstimateFamily,
    GridFunction, Mesh1D, NodalField, NonlocalSpec, PicardConfig, ProbeConfig, SampledSource,
    SourceClass, SourceTerm, SpaceTimeFn, ThetaSchemeConfig, TimeGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn sharpness_constant() -> Outcome {
    let rows = sweep(
        &[1, 2, 4, 8, 16],
        0.0,
        0.5,
        Resolution {
            n_cells: 512,
            n_steps: 4000,
        },
    )
    .expect("sweep runs");
    let worst = rows[..4].iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    let top = rows[4].ratio_numeric;
    outcome(
        "sharpness-constant",
        worst < 0.02 && top >= 0.49,
        format!(
            "max relative discrepancy {:.3e} for m in {{1,2,4,8}} (limit 2e-2); ratio {:.6} at m=16 (need >= 0.49)",
            worst, top
        ),
    )
}

/// Returns the universal-estimate outcome and the monotonicity outcome.
fn universal_estimate() -> (Outcome, Outcome) {
    let mesh = Mesh1D::new(0.0, PI, 64).unwrap();
    let tg = TimeGrid::new(1.0, 400).unwrap();
    let results: Vec<(usize, Option<f64>, usize, usize)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..20u64)
            .map(|set| {
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(1000 + set);
                    let coeffs = common::random_coefficients(&mut rng);
                    validate(&coeffs, &mesh, &tg).expect("coefficients respect the bounds");
                    let sources: Vec<SampledSource> = common::random_sources(&mut rng)
                        .iter()
                        .map(|s| SampledSource::sample(s, &mesh, &tg).unwrap())
                        .collect();
                    let n_sources = sources.len();
                    let family = EstimateFamily::solve(&coeffs, sources, 0.5).unwrap();
                    let Ok(found) = family.search(1.0, 0.05, 2048.0) else {
                        return (n_sources, None, 0, 0);
                    };
                    let mut probe: Vec<f64> = std::iter::once(0.0)
                        .chain((0..=11).map(|p| 2f64.powi(p)))
                        .chain(found.tested.iter().map(|(k, _)| *k))
                        .filter(|k| *k >= found.shift)
                        .collect();
                    probe.sort_by(f64::total_cmp);
                    probe.dedup();
                    let mut checks = 0;
                    let mut violations = 0;
                    for k in probe {
                        for report in family.check(k, 1.0, 0.05).unwrap() {
                            checks += 1;
                            if !report.pass {
                                violations += 1;
                            }
                        }
                    }
                    (n_sources, Some(found.shift), checks, violations)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let cases: usize = results.iter().map(|r| r.0).sum();
    let passed: usize = results.iter().filter(|r| r.1.is_some()).map(|r| r.0).sum();
    let k_worst = results.iter().filter_map(|r| r.1).fold(0.0, f64::max);
    let checks: usize = results.iter().map(|r| r.2).sum();
    let violations: usize = results.iter().map(|r| r.3).sum();
    (
        outcome(
            "universal-estimate",
            passed == cases && cases == 100,
            format!("{passed}/{cases} cases pass with K <= 2048 at epsilon=0.05, M=1; largest K found {k_worst}"),
        ),
        outcome(
            "monotonicity-in-K",
            violations == 0 && checks > 0,
            format!("{violations} violations over {checks} checks at shifts above each threshold"),
        ),
    )
}

fn initial_time_asymptotics() -> Outcome {
    // H⁰-class source
    let mesh = Mesh1D::new(0.0, PI, 64).unwrap();
    let tg = TimeGrid::new(1.0, 8192).unwrap();
    let coeffs = CoefficientSet::heat();
    let src = SourceTerm::new(0.0, SpaceTimeFn::new(|x, t| x.sin() * (1.0 + t)));
    let sampled = SampledSource::sample(&src, &mesh, &tg).unwrap();
    let u = solve_ibvp(&coeffs, &src, &mesh, &tg, &ThetaSchemeConfig::default()).unwrap();
    let ratios = initial_time_ratio(&u, &sampled, &coeffs, SourceClass::H0).unwrap();
    let target = tg.t_final() / 1024.0;
    let at = ratios
        .iter()
        .find(|r| (r.t - target).abs() < 1e-12)
        .expect("dyadic time present");
    let h0_ok = at.ratio < 0.05 && at.trusted;

    // sharpness family below 1/m²
    let mut worst = 0.0f64;
    for m in [4u32, 8] {
        let t_end = 1.0 / (m * m) as f64;
        let case = SharpCase::new(m, 0.0, t_end).unwrap();
        let (a, b) = SharpCase::domain();
        let mesh = Mesh1D::new(a, b, 512).unwrap();
        let tg = TimeGrid::new(t_end, 4096).unwrap();
        let src = SampledSource::sample(&case.source(), &mesh, &tg).unwrap();
        let u = solve_ibvp(
            &coeffs,
            &case.source(),
            &mesh,
            &tg,
            &ThetaSchemeConfig::default(),
        )
        .unwrap();
        let (flux, _) = rhs_source(&src, &coeffs, 0.0).unwrap();
        for (frame, denom) in u.frames().iter().zip(&flux).take(tg.n_steps()).skip(1) {
            worst = worst.max(norm_h0(frame).powi(2) / denom);
        }
    }
    outcome(
        "initial-time-asymptotics",
        h0_ok && worst <= 0.55,
        format!(
            "H0-class ratio {:.3e} at t=T/2^10 (limit 0.05); sharpness family max ratio {:.6} for t < 1/m^2, m in {{4,8}} (limit 0.55)",
            at.ratio, worst
        ),
    )
}

/// Dense θ-scheme for `uₜ = uₓₓ + c∫u + ∂ₓF` on interior nodes.
fn dense_integral_solve(
    mesh: &Mesh1D,
    tg: &TimeGrid,
    c: f64,
    flux: &dyn Fn(f64, f64) -> f64,
) -> Vec<DVector<f64>> {
    let n = mesh.n_interior();
    let h = mesh.h();
    let mut a = DMatrix::<f64>::from_element(n, n, c * h);
    for i in 0..n {
        a[(i, i)] -= 2.0 / (h * h);
        if i > 0 {
            a[(i, i - 1)] += 1.0 / (h * h);
        }
        if i + 1 < n {
            a[(i, i + 1)] += 1.0 / (h * h);
        }
    }
    let dt = tg.dt();
    let id = DMatrix::<f64>::identity(n, n);
    let lhs = (&id - &a * (0.5 * dt)).lu();
    let rhs_op = &id + &a * (0.5 * dt);
    let forcing = |t: f64| {
        DVector::from_fn(n, |i, _| {
            (flux(mesh.node(i + 2), t) - flux(mesh.node(i), t)) / (2.0 * h)
        })
    };
    let mut out = vec![DVector::zeros(n)];
    for j in 0..tg.n_steps() {
        let rhs = &rhs_op * &out[j] + (forcing(tg.time(j)) + forcing(tg.time(j + 1))) * (0.5 * dt);
        out.push(lhs.solve(&rhs).expect("nonsingular"));
    }
    out
}

fn picard_convergence() -> Outcome {
    let coeffs = CoefficientSet::heat();
    let (a, b) = SharpCase::domain();
    let phi = SharpCase::new(1, 0.0, 1.0).unwrap().source();

    let mesh = Mesh1D::new(a, b, 128).unwrap();
    let tg = TimeGrid::new(1.0, 200).unwrap();
    let spec = NonlocalSpec::local(|z, _, _| 0.1 * z.sin(), 0.1).unwrap();
    let cfg = PicardConfig {
        max_iters: 30,
        tol: 1e-12,
        ..PicardConfig::default()
    };
    let (local_ok, local_detail) = match solve_nonlinear(&coeffs, &spec, &phi, &mesh, &tg, &cfg) {
        Ok(sol) => {
            let res = sol.trace.final_residual().unwrap();
            let q = sol.trace.stabilized_quotient(3).unwrap_or(0.0);
            (
                sol.trace.converged && res < 1e-8 && sol.trace.iterations <= 30 && q < 0.5,
                format!(
                    "sine nonlinearity: {} iterations, residual {:.3e}, quotient {:.3e}",
                    sol.trace.iterations, res, q
                ),
            )
        }
        Err(e) => (false, format!("sine nonlinearity failed: {e}")),
    };

    let mesh = Mesh1D::new(a, b, 64).unwrap();
    let tg = TimeGrid::new(1.0, 100).unwrap();
    let c = 0.05;
    let spec =
        NonlocalSpec::new(Variant::IntegralSpace(Arc::new(move |z, _, _, _| c * z)), c).unwrap();
    let cfg = PicardConfig {
        tol: 1e-13,
        ..PicardConfig::default()
    };
    let (dense_ok, dense_detail) = match solve_nonlinear(&coeffs, &spec, &phi, &mesh, &tg, &cfg) {
        Ok(sol) => {
            let dense = dense_integral_solve(&mesh, &tg, c, &|x, t| -x.cos() * t.exp());
            let diff = sol
                .u
                .frames()
                .iter()
                .zip(&dense)
                .flat_map(|(f, d)| f.values().iter().zip(d.iter()).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            (
                diff < 1e-6 && sol.trace.shift == 0.0,
                format!("linear integral kernel: max deviation from dense solve {diff:.3e}"),
            )
        }
        Err(e) => (false, format!("linear integral kernel failed: {e}")),
    };
    outcome(
        "picard-convergence",
        local_ok && dense_ok,
        format!("{local_detail}; {dense_detail}"),
    )
}

fn lipschitz_bounds() -> Outcome {
    let mesh = Mesh1D::new(0.0, 2.0, 16).unwrap();
    let tg = TimeGrid::new(0.5, 20).unwrap();
    let half_sine: PointBeta = Arc::new(|z, _, _| 0.5 * z.sin());
    let specs = vec![
        NonlocalSpec::local(|z, x, t| 0.8 * (z + x).sin() * t.cos(), 0.8).unwrap(),
        NonlocalSpec::new(
            Variant::IntegralSpace(Arc::new(|z, x, _, y| 0.5 * z.sin() * (x - y).cos())),
            0.5,
        )
        .unwrap(),
        NonlocalSpec::new(
            Variant::IntegralSpaceTime(Arc::new(|z, x, _, y, s| 0.5 * z.sin() * (x * y + s).cos())),
            0.5,
        )
        .unwrap(),
        NonlocalSpec::new(
            Variant::Delay {
                beta: half_sine,
                beta_hat: Arc::new(|z, _, _| 0.5 * z.cos()),
                tau: Arc::new(|t| (0.8 * (t - 0.1)).max(0.0)),
                threshold: 0.1,
            },
            1.0,
        )
        .unwrap(),
        NonlocalSpec::new(
            Variant::JumpKernel {
                kernel: Arc::new(|x, z, t| (-(x - z).powi(2)).exp() * (1.0 + 0.5 * t.sin())),
                zero_order: SpaceTimeFn::constant(-0.3),
                drift: SpaceTimeFn::constant(0.0),
            },
            0.0,
        )
        .unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    let mut ok = true;
    for spec in &specs {
        spec.validate(&mesh, &tg).unwrap();
        let res = lipschitz_probe(
            spec,
            &mesh,
            &tg,
            1.0,
            ProbeConfig {
                trials: 200,
                amplitude: 2.0,
                seed: 42,
            },
        )
        .unwrap();
        match res.bound_ratio() {
            Some(r) => {
                worst = worst.max(r);
                ok &= r <= 1.05;
                parts.push(format!("{} {:.3}", spec.kind(), r));
            }
            None => {
                ok = false;
                parts.push(format!("{} no bound", spec.kind()));
            }
        }
    }
    outcome(
        "lipschitz-bounds",
        ok,
        format!(
            "empirical/bound over 200 pairs: {} (limit 1.05)",
            parts.join(", ")
        ),
    )
}

/// Manufactured solution `u = sin(πx) sin(2t)` on `(0,1)` with variable coefficients.
fn mms_error(n_cells: usize, n_steps: usize) -> f64 {
    let b = |x: f64, t: f64| 1.0 + 0.5 * x + 0.25 * t.sin();
    let f = |x: f64, _t: f64| 0.3 * x.cos();
    let lam = |x: f64, _t: f64| 0.5 - x;
    let exact = |x: f64, t: f64| (PI * x).sin() * (2.0 * t).sin();
    let plain = move |x: f64, t: f64| {
        let s = (2.0 * t).sin();
        let ut = (PI * x).sin() * 2.0 * (2.0 * t).cos();
        let ux = PI * (PI * x).cos() * s;
        let uxx = -PI * PI * (PI * x).sin() * s;
        ut - (0.5 * ux + b(x, t) * uxx) - f(x, t) * ux - lam(x, t) * exact(x, t)
    };
    let coeffs = CoefficientSet {
        b: SpaceTimeFn::new(b),
        f: SpaceTimeFn::new(f),
        lambda: SpaceTimeFn::new(lam),
        delta: 0.5,
        sup_bound: 10.0,
    };
    let mesh = Mesh1D::new(0.0, 1.0, n_cells).unwrap();
    let tg = TimeGrid::new(1.0, n_steps).unwrap();
    let src = SourceTerm::new(0.0, SpaceTimeFn::new(plain));
    let u = solve_ibvp(&coeffs, &src, &mesh, &tg, &ThetaSchemeConfig::default()).unwrap();
    let err = u
        .frame(n_steps)
        .sub(&GridFunction::from_fn(mesh, |x| exact(x, 1.0)))
        .unwrap();
    norm_h0(&err)
}

fn numerical_core() -> Outcome {
    let eh: Vec<f64> = [16, 32, 64].iter().map(|&n| mms_error(n, 4000)).collect();
    let et: Vec<f64> = [8, 16, 32].iter().map(|&s| mms_error(2048, s)).collect();
    let order = |e: &[f64]| {
        (0..2)
            .map(|i| (e[i] / e[i + 1]).log2())
            .fold(f64::INFINITY, f64::min)
    };
    let (ph, pt) = (order(&eh), order(&et));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut duality = 0.0f64;
    for n in [16, 64, 256] {
        let mesh = Mesh1D::new(-1.0, 2.0, n).unwrap();
        let u = GridFunction::new(
            mesh,
            (0..mesh.n_interior())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        )
        .unwrap();
        let flux =
            NodalField::new(mesh, (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let div = apply_source_weak(&flux, &GridFunction::zeros(mesh)).unwrap();
        let lhs = u.dot(&div).unwrap();
        let rhs = -gradient_pairing(&u, &flux).unwrap();
        duality = duality.max((lhs - rhs).abs());
    }
    outcome(
        "numerical-core",
        ph >= 1.9 && pt >= 1.9 && duality <= 1e-12,
        format!("order in h {ph:.3}, order in dt {pt:.3} (need >= 1.9); duality defect {duality:.2e} (limit 1e-12)"),
    )
}

fn main() {
    let (universal, monotone) = universal_estimate();
    let outcomes = [
        sharpness_constant(),
        universal,
        monotone,
        initial_time_asymptotics(),
        picard_convergence(),
        lipschitz_bounds(),
        numerical_core(),
    ];
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} passed, {} failed",
        outcomes.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
