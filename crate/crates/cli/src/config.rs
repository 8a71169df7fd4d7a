//! JSON run configuration and its translation into solver inputs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use parabolic_core::nonlocal::{delay_map_from_csv, kernel_from_csv, DelayMap, Kernel, PointBeta};
use parabolic_core::{
    CoefficientSet, Mesh1D, NonlocalSpec, NormMode, PicardConfig, SharpCase, SourceClass,
    SourceTerm, SpaceTimeFn, TimeGrid, Variant, VariantKind,
};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Verify,
    Sharpness,
    Asymptotic,
    Picard,
    Probe,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub coefficients: Option<CoefficientBlock>,
    #[serde(default)]
    pub source: Option<SourceBlock>,
    #[serde(default)]
    pub sources: Vec<SourceBlock>,
    #[serde(default)]
    pub nonlocal: Option<NonlocalBlock>,
    #[serde(default)]
    pub estimate: EstimateBlock,
    #[serde(default)]
    pub sharpness: Option<SharpnessBlock>,
    #[serde(default)]
    pub asymptotic: AsymptoticBlock,
    #[serde(default)]
    pub picard: PicardBlock,
    #[serde(default)]
    pub probe: ProbeBlock,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    #[serde(default = "default_domain")]
    pub domain: [f64; 2],
    #[serde(rename = "T")]
    pub t_final: f64,
    pub n_cells: usize,
    pub n_steps: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_domain() -> [f64; 2] {
    [-std::f64::consts::PI, std::f64::consts::PI]
}

fn default_theta() -> f64 {
    0.5
}

/// `offset + Σ amp·cos(k·x + phase)·e^{rate·t}`
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub amp: f64,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub rate: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Constant(f64),
    Modes {
        #[serde(default)]
        offset: f64,
        modes: Vec<Mode>,
    },
}

impl FieldSpec {
    pub fn build(&self) -> SpaceTimeFn {
        match self {
            FieldSpec::Constant(c) => SpaceTimeFn::constant(*c),
            FieldSpec::Modes { offset, modes } => {
                let (offset, modes) = (*offset, modes.clone());
                if modes.iter().all(|m| m.rate == 0.0) {
                    SpaceTimeFn::stationary(move |x| {
                        offset
                            + modes
                                .iter()
                                .map(|m| m.amp * (m.k * x + m.phase).cos())
                                .sum::<f64>()
                    })
                } else {
                    SpaceTimeFn::new(move |x, t| {
                        offset
                            + modes
                                .iter()
                                .map(|m| m.amp * (m.k * x + m.phase).cos() * (m.rate * t).exp())
                                .sum::<f64>()
                    })
                }
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum CoefficientBlock {
    Table {
        table: PathBuf,
        delta: f64,
        sup_bound: f64,
    },
    Inline {
        b: FieldSpec,
        #[serde(default = "zero_field")]
        f: FieldSpec,
        #[serde(default = "zero_field")]
        lambda: FieldSpec,
        delta: f64,
        sup_bound: f64,
    },
}

fn zero_field() -> FieldSpec {
    FieldSpec::Constant(0.0)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SourceBlock {
    Table {
        table: PathBuf,
    },
    Sharp {
        sharp_mode: u32,
        #[serde(default, rename = "K")]
        shift: f64,
    },
    Inline {
        #[serde(default = "zero_field", rename = "F")]
        flux: FieldSpec,
        #[serde(default = "zero_field", rename = "F0")]
        plain: FieldSpec,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSpec {
    /// `linear`, `sine` or `tanh`.
    pub form: String,
    pub amplitude: f64,
}

impl BetaSpec {
    /// The function and its Lipschitz constant in `z`.
    fn build(&self) -> Result<(PointBeta, f64)> {
        let a = self.amplitude;
        let beta: PointBeta = match self.form.as_str() {
            "linear" => Arc::new(move |z, _, _| a * z),
            "sine" => Arc::new(move |z, _, _| a * z.sin()),
            "tanh" => Arc::new(move |z, _, _| a * z.tanh()),
            other => {
                return Err(CliError::Config(format!(
                    "nonlocal.beta.form: unknown form `{other}` (expected linear, sine or tanh)"
                )))
            }
        };
        Ok((beta, a.abs()))
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DelayBlock {
    Lag { lag: f64 },
    Table { table: PathBuf, threshold: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum KernelBlock {
    Table { table: PathBuf },
    Gaussian { amplitude: f64, width: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlocalBlock {
    pub variant: String,
    #[serde(default)]
    pub beta: Option<BetaSpec>,
    #[serde(default)]
    pub beta_hat: Option<BetaSpec>,
    #[serde(default)]
    pub tau: Option<DelayBlock>,
    #[serde(default)]
    pub kernel: Option<KernelBlock>,
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub c1: f64,
    /// Overrides the constant derived from `beta`.
    #[serde(default)]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ShiftChoice {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateBlock {
    #[serde(rename = "K", default = "auto_shift")]
    pub shift: ShiftChoice,
    #[serde(rename = "M", default = "one")]
    pub weight: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(rename = "K_max", default = "default_k_max")]
    pub k_max: f64,
}

impl Default for EstimateBlock {
    fn default() -> Self {
        Self {
            shift: auto_shift(),
            weight: 1.0,
            epsilon: default_epsilon(),
            k_max: default_k_max(),
        }
    }
}

fn auto_shift() -> ShiftChoice {
    ShiftChoice::Auto(AutoTag::Auto)
}

fn one() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_k_max() -> f64 {
    2048.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessBlock {
    #[serde(default)]
    pub m_list: Vec<u32>,
    #[serde(rename = "K", default)]
    pub shift: f64,
    /// Indices `i` of the shrinking-horizon sequence `T_i = 1/i`.
    #[serde(default)]
    pub vanishing_horizon: Vec<u32>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    0.02
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum ClassName {
    H0,
    #[serde(rename = "Hminus1")]
    HMinus1,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticBlock {
    #[serde(default = "default_class")]
    pub class: ClassName,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

impl Default for AsymptoticBlock {
    fn default() -> Self {
        Self {
            class: default_class(),
            slack: default_slack(),
        }
    }
}

impl AsymptoticBlock {
    pub fn class(&self) -> SourceClass {
        match self.class {
            ClassName::H0 => SourceClass::H0,
            ClassName::HMinus1 => SourceClass::HMinus1,
        }
    }
}

fn default_class() -> ClassName {
    ClassName::HMinus1
}

fn default_slack() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub enum NormName {
    #[serde(rename = "Xminus1")]
    XMinus1,
    X0,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardBlock {
    #[serde(rename = "K", default)]
    pub shift: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_norm")]
    pub norm_mode: NormName,
    #[serde(rename = "K_max", default = "default_k_max")]
    pub k_max: f64,
}

impl Default for PicardBlock {
    fn default() -> Self {
        Self {
            shift: 0.0,
            max_iters: default_max_iters(),
            tol: default_tol(),
            norm_mode: default_norm(),
            k_max: default_k_max(),
        }
    }
}

fn default_max_iters() -> usize {
    100
}

fn default_tol() -> f64 {
    1e-10
}

fn default_norm() -> NormName {
    NormName::XMinus1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(rename = "K", default)]
    pub shift: f64,
    #[serde(default = "default_probe_slack")]
    pub slack: f64,
}

impl Default for ProbeBlock {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            amplitude: 1.0,
            shift: 0.0,
            slack: default_probe_slack(),
        }
    }
}

fn default_trials() -> usize {
    200
}

fn default_probe_slack() -> f64 {
    0.05
}

/// A parsed configuration plus the directory that relative paths refer to.
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = Self { config, base };
        loaded.check()?;
        Ok(loaded)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn existing(&self, p: &Path, field: &str) -> Result<PathBuf> {
        let full = self.resolve(p);
        if full.is_file() {
            Ok(full)
        } else {
            Err(CliError::Config(format!(
                "{field}: file {} does not exist",
                full.display()
            )))
        }
    }

    fn check(&self) -> Result<()> {
        let p = &self.config.problem;
        if !(p.t_final > 0.0 && p.t_final.is_finite()) {
            return Err(CliError::Config(format!(
                "problem.T must be positive, got {}",
                p.t_final
            )));
        }
        if p.n_cells == 0 || p.n_steps == 0 {
            return Err(CliError::Config(
                "problem.n_cells and problem.n_steps must be positive".into(),
            ));
        }
        let needs_source = matches!(
            self.config.command,
            Command::Solve | Command::Verify | Command::Asymptotic | Command::Picard
        );
        if needs_source && self.config.source.is_none() && self.config.sources.is_empty() {
            return Err(CliError::Config(
                "source: missing (give `source` or `sources`)".into(),
            ));
        }
        let needs_nonlocal = matches!(self.config.command, Command::Picard | Command::Probe);
        if needs_nonlocal && self.config.nonlocal.is_none() {
            return Err(CliError::Config("nonlocal: missing block".into()));
        }
        if self.config.command == Command::Sharpness && self.config.sharpness.is_none() {
            return Err(CliError::Config("sharpness: missing block".into()));
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh1D> {
        let [a, b] = self.config.problem.domain;
        Ok(Mesh1D::new(a, b, self.config.problem.n_cells)?)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::new(
            self.config.problem.t_final,
            self.config.problem.n_steps,
        )?)
    }

    pub fn coefficients(&self) -> Result<CoefficientSet> {
        match &self.config.coefficients {
            None => Ok(CoefficientSet::heat()),
            Some(CoefficientBlock::Table {
                table,
                delta,
                sup_bound,
            }) => Ok(CoefficientSet::from_csv(
                self.existing(table, "coefficients.table")?,
                *delta,
                *sup_bound,
            )?),
            Some(CoefficientBlock::Inline {
                b,
                f,
                lambda,
                delta,
                sup_bound,
            }) => Ok(CoefficientSet {
                b: b.build(),
                f: f.build(),
                lambda: lambda.build(),
                delta: *delta,
                sup_bound: *sup_bound,
            }),
        }
    }

    fn build_source(&self, block: &SourceBlock) -> Result<SourceTerm> {
        match block {
            SourceBlock::Table { table } => {
                Ok(SourceTerm::from_csv(self.existing(table, "source.table")?)?)
            }
            SourceBlock::Sharp { sharp_mode, shift } => {
                Ok(SharpCase::new(*sharp_mode, *shift, self.config.problem.t_final)?.source())
            }
            SourceBlock::Inline { flux, plain } => Ok(SourceTerm::new(flux.build(), plain.build())),
        }
    }

    /// `source` followed by every entry of `sources`.
    pub fn sources(&self) -> Result<Vec<SourceTerm>> {
        self.config
            .source
            .iter()
            .chain(&self.config.sources)
            .map(|b| self.build_source(b))
            .collect()
    }

    pub fn nonlocal(&self) -> Result<NonlocalSpec> {
        let block = self
            .config
            .nonlocal
            .as_ref()
            .ok_or_else(|| CliError::Config("nonlocal: missing block".into()))?;
        let kind = VariantKind::parse(&block.variant).ok_or_else(|| {
            CliError::Config(format!(
                "nonlocal.variant: unknown variant `{}`",
                block.variant
            ))
        })?;
        let beta = || -> Result<(PointBeta, f64)> {
            block
                .beta
                .as_ref()
                .ok_or_else(|| CliError::Config("nonlocal.beta: missing".into()))?
                .build()
        };
        let (variant, derived) = match kind {
            VariantKind::Local => {
                let (b, c) = beta()?;
                (Variant::Local(b), c)
            }
            VariantKind::Distributional => {
                let (b, c) = beta()?;
                (Variant::Distributional(b), c)
            }
            VariantKind::IntegralSpace | VariantKind::IntegralSpaceDistributional => {
                let (b, c) = beta()?;
                let f: parabolic_core::nonlocal::SpaceBeta = Arc::new(move |z, x, t, _| b(z, x, t));
                if kind == VariantKind::IntegralSpace {
                    (Variant::IntegralSpace(f), c)
                } else {
                    (Variant::IntegralSpaceDistributional(f), c)
                }
            }
            VariantKind::IntegralSpaceTime | VariantKind::IntegralSpaceTimeDistributional => {
                let (b, c) = beta()?;
                let f: parabolic_core::nonlocal::SpaceTimeBeta =
                    Arc::new(move |z, x, t, _, _| b(z, x, t));
                if kind == VariantKind::IntegralSpaceTime {
                    (Variant::IntegralSpaceTime(f), c)
                } else {
                    (Variant::IntegralSpaceTimeDistributional(f), c)
                }
            }
            VariantKind::Delay => {
                let (b, cb) = match &block.beta {
                    Some(spec) => spec.build()?,
                    None => (Arc::new(|_: f64, _: f64, _: f64| 0.0) as PointBeta, 0.0),
                };
                let (bh, ch) = match &block.beta_hat {
                    Some(spec) => spec.build()?,
                    None => (Arc::new(|_: f64, _: f64, _: f64| 0.0) as PointBeta, 0.0),
                };
                let (tau, threshold): (DelayMap, f64) = match &block.tau {
                    Some(DelayBlock::Lag { lag }) => {
                        let lag = *lag;
                        (Arc::new(move |t| (t - lag).max(0.0)), lag)
                    }
                    Some(DelayBlock::Table { table, threshold }) => (
                        delay_map_from_csv(self.existing(table, "nonlocal.tau.table")?)?,
                        *threshold,
                    ),
                    None => return Err(CliError::Config("nonlocal.tau: missing".into())),
                };
                (
                    Variant::Delay {
                        beta: b,
                        beta_hat: bh,
                        tau,
                        threshold,
                    },
                    cb + ch,
                )
            }
            VariantKind::JumpKernel => {
                let kernel: Kernel = match &block.kernel {
                    Some(KernelBlock::Table { table }) => {
                        kernel_from_csv(self.existing(table, "nonlocal.kernel.table")?)?
                    }
                    Some(KernelBlock::Gaussian { amplitude, width }) => {
                        let (a, w) = (*amplitude, *width);
                        if !(w > 0.0) {
                            return Err(CliError::Config(
                                "nonlocal.kernel.width must be > 0".into(),
                            ));
                        }
                        Arc::new(move |x, z, _| a * (-((x - z) / w).powi(2)).exp())
                    }
                    None => return Err(CliError::Config("nonlocal.kernel: missing".into())),
                };
                (
                    Variant::JumpKernel {
                        kernel,
                        zero_order: SpaceTimeFn::constant(block.c0),
                        drift: SpaceTimeFn::constant(block.c1),
                    },
                    0.0,
                )
            }
        };
        Ok(NonlocalSpec::new(
            variant,
            block.lipschitz.unwrap_or(derived),
        )?)
    }

    pub fn picard(&self) -> PicardConfig {
        let p = &self.config.picard;
        PicardConfig {
            shift: p.shift,
            weight: self.config.estimate.weight,
            max_iters: p.max_iters,
            tol: p.tol,
            norm_mode: match p.norm_mode {
                NormName::XMinus1 => NormMode::XMinus1,
                NormName::X0 => NormMode::X0,
            },
            k_max: p.k_max,
            theta: self.config.problem.theta,
        }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        match (flag, &self.config.output) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => self.resolve(p),
            (None, None) => PathBuf::from("out"),
        }
    }
}
