//! Estimation toolkit for regression discontinuity designs with one or more
//! running variables.
//!
//! The crate provides:
//!
//! - a data model for scores, treatment-assignment geometry, and labeled
//!   samples ([`domain`]);
//! - simulable polynomial data-generating processes with exact ground-truth
//!   effects ([`dgp`]);
//! - score collapsing to a signed distance plus a zero-density diagnostic
//!   for the collapsed cutoff ([`transform`]);
//! - a kernel local linear regression baseline ([`local_linear`]);
//! - honest subsampled regression forests and local linear forests with
//!   bootstrap-of-little-bags variance estimation ([`forest`]);
//! - side-wise RD estimator composition ([`estimator`]) and a Monte Carlo
//!   harness reporting bias, variance, and coverage ([`mc`]).

pub mod dgp;
pub mod domain;
pub mod error;
pub mod estimator;
pub mod forest;
pub mod local_linear;
pub mod mc;
pub mod numeric;
pub mod quadrature;
pub mod seeding;
pub mod transform;

pub use dgp::{eval_cef, presets, BasisKind, DGPSpec, OutcomeKind, PolynomialCEF, ScoreLaw};
pub use domain::{
    assign, probe_boundary, probe_boundary_default, split_by_treatment, AssignmentRule,
    BoundaryPoint, CurveSide, Dataset, EstimateReport, LabeledSample, ScorePoint,
};
pub use error::{Error, Result, Side};
pub use estimator::{
    buffered_eval_points, estimate_at, fit_rd, BufferedPoints, FittedRD, MethodSpec,
    RDMethodConfig, DEFAULT_BUFFER_EPSILON,
};
pub use forest::{
    beta_exponent, grow_tree, little_bags_from_predictions, subsample_size, ForestConfig,
    ForestVariant, HonestForest, PredictorKind, RidgeLambda, SplitRule, TreeNode,
};
pub use local_linear::{
    kernel_weight, llr_rd_estimate, rot_bandwidth, wls_linear_fit, Bandwidth, KernelShape,
    KernelSpec,
};
pub use mc::{
    emit_table, run_mc, run_mc_with, MCConfig, MCResult, MCRow, MethodEntry, PointEstimator,
    TableFormat,
};
pub use transform::{
    analytic_density_gaussian, analytic_density_uniform, collapse, prop1_gaussian,
    prop1_marginal_by_quadrature, prop1_uniform_square, zero_density_diagnostic, CollapseSpec,
    DensityDiagnostic, SideDensity,
};
