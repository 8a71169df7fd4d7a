use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use parabolic_core::estimate::write_initial_ratios_csv;
use parabolic_core::fmt::sig12;
use parabolic_core::picard::{search_nonlocal_estimate, verify_nonlocal_estimate};
use parabolic_core::sharpness::{vanishing_horizon_sweep, write_sweep_csv, CELLS_PER_MODE};
use parabolic_core::{
    initial_time_ratio, lipschitz_probe, solve_nonlinear, sweep, validate, EstimateFamily,
    EstimateReport, ProbeConfig, Resolution, SampledSource, SourceClass, SpaceTimeSeries,
    ThetaSchemeConfig,
};

use crate::config::{Command, Loaded, ShiftChoice};
use crate::error::{Result, Status};

/// Lines of `report.txt` after the header.
pub struct Report {
    pub theorem: &'static str,
    pub pass: bool,
    pub lines: Vec<(String, String)>,
}

impl Report {
    fn new(theorem: &'static str) -> Self {
        Self {
            theorem,
            pass: true,
            lines: Vec::new(),
        }
    }

    fn add(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn status(&self) -> Status {
        if self.pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut w = create(dir, "report.txt")?;
        writeln!(w, "THEOREM: {}", self.theorem)?;
        writeln!(w, "VERDICT: {}", if self.pass { "PASS" } else { "FAIL" })?;
        for (k, v) in &self.lines {
            writeln!(w, "{k}: {v}")?;
        }
        w.flush()
    }
}

pub fn theorem_id(command: Command) -> &'static str {
    match command {
        Command::Solve => "linear-solve",
        Command::Verify => "universal-estimate",
        Command::Sharpness => "sharpness",
        Command::Asymptotic => "initial-time-asymptotics",
        Command::Picard => "contraction-existence",
        Command::Probe => "lipschitz-bound",
    }
}

fn create(dir: &Path, name: &str) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn run(cfg: &Loaded, out: &Path, seed: Option<u64>) -> Result<Report> {
    match cfg.config.command {
        Command::Solve => solve(cfg, out),
        Command::Verify => verify(cfg, out),
        Command::Sharpness => sharpness(cfg, out),
        Command::Asymptotic => asymptotic(cfg, out),
        Command::Picard => picard(cfg, out),
        Command::Probe => probe(cfg, out, seed),
    }
}

fn write_solution(u: &SpaceTimeSeries, dir: &Path) -> std::io::Result<()> {
    let mut w = create(dir, "solution.csv")?;
    writeln!(w, "t,x,u")?;
    let mesh = u.mesh();
    for (j, t) in u.time_grid().times().enumerate() {
        let frame = u.frame(j);
        for k in 0..=mesh.n_cells() {
            writeln!(
                w,
                "{},{},{}",
                sig12(t),
                sig12(mesh.node(k)),
                sig12(frame.node_value(k))
            )?;
        }
    }
    w.flush()
}

/// All reports in one table with a single header.
fn write_estimate_reports(reports: &[EstimateReport], dir: &Path) -> std::io::Result<()> {
    let mut w = create(dir, "estimate_report.csv")?;
    for (i, r) in reports.iter().enumerate() {
        let mut buf = Vec::new();
        r.write_csv(&mut buf)?;
        let body = if i == 0 {
            &buf[..]
        } else {
            let start = buf
                .iter()
                .position(|&c| c == b'\n')
                .map_or(buf.len(), |p| p + 1);
            &buf[start..]
        };
        w.write_all(body)?;
    }
    w.flush()
}

fn write_tested(tested: &[(f64, bool)], dir: &Path) -> std::io::Result<()> {
    let mut w = create(dir, "k_search.csv")?;
    writeln!(w, "K,pass")?;
    for (k, ok) in tested {
        writeln!(w, "{},{ok}", sig12(*k))?;
    }
    w.flush()
}

fn solve(cfg: &Loaded, out: &Path) -> Result<Report> {
    let (mesh, tg, coeffs) = (cfg.mesh()?, cfg.time_grid()?, cfg.coefficients()?);
    let src = cfg.sources()?.remove(0);
    let scheme = ThetaSchemeConfig::new(cfg.config.problem.theta, 0.0)?;
    let u = parabolic_core::solve_ibvp(&coeffs, &src, &mesh, &tg, &scheme)?;
    write_solution(&u, out)?;
    let mut report = Report::new(theorem_id(Command::Solve));
    report.add("n_cells", mesh.n_cells());
    report.add("n_steps", tg.n_steps());
    report.add(
        "final_h0_norm",
        sig12(parabolic_core::norm_h0(u.frame(tg.n_steps()))),
    );
    Ok(report)
}

fn verify(cfg: &Loaded, out: &Path) -> Result<Report> {
    let (mesh, tg, coeffs) = (cfg.mesh()?, cfg.time_grid()?, cfg.coefficients()?);
    validate(&coeffs, &mesh, &tg)?;
    let sampled = cfg
        .sources()?
        .iter()
        .map(|s| SampledSource::sample(s, &mesh, &tg))
        .collect::<parabolic_core::Result<Vec<_>>>()?;
    let est = &cfg.config.estimate;
    let family = EstimateFamily::solve(&coeffs, sampled, cfg.config.problem.theta)?;
    let mut report = Report::new(theorem_id(Command::Verify));
    report.add("sources", family.members().len());
    let reports = match est.shift {
        ShiftChoice::Fixed(k) => {
            report.add("K", sig12(k));
            family.check(k, est.weight, est.epsilon)?
        }
        ShiftChoice::Auto(_) => {
            let found = family.search(est.weight, est.epsilon, est.k_max)?;
            write_tested(&found.tested, out)?;
            report.add("K", sig12(found.shift));
            found.reports
        }
    };
    write_estimate_reports(&reports, out)?;
    report.add("M", sig12(est.weight));
    report.add("epsilon", sig12(est.epsilon));
    let worst = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
    report.add("max_ratio", sig12(worst));
    report.pass = reports.iter().all(|r| r.pass);
    Ok(report)
}

fn sharpness(cfg: &Loaded, out: &Path) -> Result<Report> {
    let block = cfg.config.sharpness.as_ref().expect("checked on load");
    let p = &cfg.config.problem;
    let mut rows = Vec::new();
    if !block.m_list.is_empty() {
        let top = *block.m_list.iter().max().expect("non-empty");
        let res = Resolution {
            n_cells: p.n_cells.max(CELLS_PER_MODE * top as usize),
            n_steps: p.n_steps,
        };
        rows.extend(sweep(&block.m_list, block.shift, p.t_final, res)?);
    }
    if !block.vanishing_horizon.is_empty() {
        rows.extend(vanishing_horizon_sweep(
            &block.vanishing_horizon,
            p.n_steps,
        )?);
    }
    let mut w = create(out, "sharpness.csv")?;
    write_sweep_csv(&rows, &mut w)?;
    w.flush()?;

    let mut report = Report::new(theorem_id(Command::Sharpness));
    let worst = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    let sup = rows.iter().map(|r| r.ratio_numeric).fold(0.0, f64::max);
    report.add("cases", rows.len());
    report.add("max_discrepancy", sig12(worst));
    report.add("max_ratio", sig12(sup));
    report.add("tolerance", sig12(block.tolerance));
    report.pass = !rows.is_empty() && worst <= block.tolerance && sup <= 0.5 + block.tolerance;
    Ok(report)
}

fn asymptotic(cfg: &Loaded, out: &Path) -> Result<Report> {
    let (mesh, tg, coeffs) = (cfg.mesh()?, cfg.time_grid()?, cfg.coefficients()?);
    validate(&coeffs, &mesh, &tg)?;
    let src = SampledSource::sample(&cfg.sources()?.remove(0), &mesh, &tg)?;
    let scheme = ThetaSchemeConfig::new(cfg.config.problem.theta, 0.0)?;
    let u = parabolic_core::solve_sampled(&coeffs, &src, &scheme)?;
    let block = &cfg.config.asymptotic;
    let class = block.class();
    let ratios = initial_time_ratio(&u, &src, &coeffs, class)?;
    let mut w = create(out, "initial_ratios.csv")?;
    write_initial_ratios_csv(&ratios, &mut w)?;
    w.flush()?;

    let trusted: Vec<_> = ratios.iter().filter(|r| r.trusted).collect();
    let mut report = Report::new(theorem_id(Command::Asymptotic));
    report.add(
        "class",
        match class {
            SourceClass::H0 => "H0",
            SourceClass::HMinus1 => "Hminus1",
        },
    );
    report.add("trusted_points", trusted.len());
    report.add("slack", sig12(block.slack));
    let Some(smallest) = trusted.last() else {
        report.add("note", "too few time steps for a trusted point");
        report.pass = false;
        return Ok(report);
    };
    report.add("smallest_t", sig12(smallest.t));
    report.add("ratio_at_smallest_t", sig12(smallest.ratio));
    report.pass = match class {
        SourceClass::HMinus1 => trusted.iter().all(|r| r.ratio <= 0.5 + block.slack),
        SourceClass::H0 => smallest.ratio <= block.slack,
    };
    Ok(report)
}

fn picard(cfg: &Loaded, out: &Path) -> Result<Report> {
    let (mesh, tg, coeffs) = (cfg.mesh()?, cfg.time_grid()?, cfg.coefficients()?);
    let spec = cfg.nonlocal()?;
    let phi = cfg.sources()?.remove(0);
    let pc = cfg.picard();
    let sol = solve_nonlinear(&coeffs, &spec, &phi, &mesh, &tg, &pc)?;
    let mut w = create(out, "picard_trace.csv")?;
    sol.trace.write_csv(&mut w)?;
    w.flush()?;
    write_solution(&sol.u, out)?;

    let est = &cfg.config.estimate;
    let mut report = Report::new(theorem_id(Command::Picard));
    report.add("variant", spec.kind());
    report.add("iterations", sol.trace.iterations);
    report.add("K", sig12(sol.trace.shift));
    report.add("residual", sig12(sol.trace.final_residual().unwrap_or(0.0)));
    if let Some(q) = sol.trace.stabilized_quotient(3) {
        report.add("quotient", sig12(q));
    }
    let estimate = match est.shift {
        ShiftChoice::Fixed(k) => {
            verify_nonlocal_estimate(&sol.u, &spec, &coeffs, &phi, k, est.weight, est.epsilon)?
        }
        ShiftChoice::Auto(_) => {
            let found = search_nonlocal_estimate(
                &sol.u,
                &spec,
                &coeffs,
                &phi,
                est.weight,
                est.epsilon,
                est.k_max,
            )?;
            found.reports.into_iter().next().expect("one member")
        }
    };
    write_estimate_reports(std::slice::from_ref(&estimate), out)?;
    report.add("estimate_K", sig12(estimate.shift));
    report.add("estimate_max_ratio", sig12(estimate.ratio));
    report.pass = sol.trace.converged && estimate.pass;
    Ok(report)
}

fn probe(cfg: &Loaded, out: &Path, seed: Option<u64>) -> Result<Report> {
    let (mesh, tg) = (cfg.mesh()?, cfg.time_grid()?);
    let spec = cfg.nonlocal()?;
    spec.validate(&mesh, &tg)?;
    let block = &cfg.config.probe;
    let probe_cfg = ProbeConfig {
        trials: block.trials,
        amplitude: block.amplitude,
        seed: seed.or(cfg.config.seed).unwrap_or(0),
    };
    let result = lipschitz_probe(&spec, &mesh, &tg, block.shift, probe_cfg)?;
    let mut w = create(out, "lipschitz_probe.csv")?;
    writeln!(w, "trial,ratio")?;
    for (i, r) in result.ratios.iter().enumerate() {
        writeln!(w, "{i},{}", sig12(*r))?;
    }
    w.flush()?;

    let mut report = Report::new(theorem_id(Command::Probe));
    report.add("variant", spec.kind());
    report.add("seed", probe_cfg.seed);
    report.add("trials", result.ratios.len());
    report.add("skipped", result.skipped);
    report.add("max_ratio", sig12(result.max_ratio));
    match result.bound_ratio() {
        Some(q) => {
            report.add("bound", sig12(result.bound.expect("bound present")));
            report.add("bound_ratio", sig12(q));
            report.pass = q <= 1.0 + block.slack;
        }
        None => {
            report.add("bound", "none");
            report.pass = false;
        }
    }
    Ok(report)
}
