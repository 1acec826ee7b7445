//! Fairness-accuracy Pareto frontiers of fitted model collections.
//!
//! - [`metrics`]: accuracy, decision fairness and linear score bias.
//! - [`frontier`]: Pareto filtering, TAF step curves, the concave TAFI
//!   envelope and weighted FAUC / FAUCI areas.
//! - [`stacker`]: the fairness-penalized stacking meta-learner, its λ path,
//!   ridge selection by cross-validation and the decision-bias audit.
//! - [`synth_oracle`]: seeded synthetic data and brute-force reference
//!   implementations used for verification.
//! - [`dataio`]: file formats, run configuration, reports and SVG plots.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the file formats use.

pub mod dataio;
pub mod error;
pub mod frontier;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod stacker;
pub mod synth_oracle;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ModelRecordF64 = frontier::ModelRecord<f64>;
pub type TafCurveF64 = frontier::TafCurve<f64>;
pub type TafiCurveF64 = frontier::TafiCurve<f64>;
pub type WeightFunctionF64 = frontier::WeightFunction<f64>;
pub type EvaluationSetF64 = metrics::EvaluationSet<f64>;
pub type MatrixF64 = linalg::Matrix<f64>;
pub type StackingProblemF64 = stacker::StackingProblem<f64>;
pub type EnsembleSolutionF64 = stacker::EnsembleSolution<f64>;

pub type ModelRecordF32 = frontier::ModelRecord<f32>;
pub type TafCurveF32 = frontier::TafCurve<f32>;
pub type StackingProblemF32 = stacker::StackingProblem<f32>;

