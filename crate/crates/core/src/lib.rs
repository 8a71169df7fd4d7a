//! Finite-difference solvers and energy-estimate checks for one-dimensional
//! linear and nonlocal parabolic problems with distributional sources.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod fmt;
pub mod mesh;
pub mod nonlocal;
pub mod picard;
pub mod problem;
pub mod sharpness;
pub mod stepper;
pub mod table;
pub mod tridiag;

pub use error::{Error, Result};
pub use estimate::{
    check_inequality, initial_time_ratio, search_k, EstimateFamily, EstimateReport, InitialRatio,
    KSearch, SourceClass,
};
pub use mesh::{
    norm_h0, norm_h1, norm_hminus1, GridFunction, Mesh1D, NodalField, SpaceTimeSeries, TimeGrid,
};
pub use nonlocal::{lipschitz_probe, NonlocalSpec, ProbeConfig, ProbeResult, Variant, VariantKind};
pub use picard::{solve_nonlinear, NormMode, PicardConfig, PicardSolution, PicardTrace};
pub use problem::{
    validate, CoefficientSet, ParamPack, SampledSource, SourceTerm, SpaceTimeFn, ValidationReport,
};
pub use sharpness::{closed_form_ratio, make_case, sweep, Resolution, SharpCase, SweepRow};
pub use stepper::{solve_ibvp, solve_sampled, LinearStepper, ThetaSchemeConfig};
pub use table::GridTable;
