//! Breathing-rate estimation from received signal strength.
//!
//! The crate covers the whole chain: the reflection model that explains
//! how a breathing reflector shows up in the RSS of a radio link
//! ([`rss_model`], [`geometry`]), a multi-channel trace simulator
//! ([`simulator`]), preprocessing ([`dsp`]), three rate estimators
//! ([`estimators`]) and the evaluation metrics ([`evaluation`]).
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the precision for callers that do not care:
//! [`Real`] is `f64`, and the `*32` aliases use `f32`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsp;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod rss_model;
pub mod scalar;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use estimators::{EstimateSeries, Method};
pub use evaluation::MetricsReport;
pub use geometry::{LinkGeometry, Point2, ReflectorMotion};
pub use pipeline::PipelineConfig;
pub use rss_model::{HarmonicModel, ReflectionState, Scale};
pub use scalar::Scalar;
pub use simulator::{RssTrace, ScenarioConfig};

/// Default precision of the file formats and the command-line tool.
pub type Real = f64;

pub type Scenario = ScenarioConfig<Real>;
pub type Trace = RssTrace<Real>;
pub type State = ReflectionState<Real>;
pub type Harmonics = HarmonicModel<Real>;
pub type Estimates = EstimateSeries<Real>;
pub type Pipeline = PipelineConfig<Real>;
pub type Report = MetricsReport<Real>;

pub type Scenario32 = ScenarioConfig<f32>;
pub type Trace32 = RssTrace<f32>;
pub type State32 = ReflectionState<f32>;
pub type Estimates32 = EstimateSeries<f32>;
pub type Pipeline32 = PipelineConfig<f32>;
