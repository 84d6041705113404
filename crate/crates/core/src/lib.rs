//! Capacities, generalized mutual information and Gallager error exponents
//! for coded modulation and bit-interleaved coded modulation (BICM) under
//! matched and mismatched decoding metrics.
//!
//! The core is generic over the real scalar type (`f32` or `f64`); the
//! aliases at the crate root fix it to one of them.
//!
//! ```
//! use bicm::{Alphabet64, Channel64, Constellation, Engine, EngineConfig, Scenario64};
//!
//! let alphabet = Alphabet64::gray(Constellation::qam(16).unwrap()).unwrap();
//! let channel = Channel64::rayleigh(10f64.powf(0.5)).unwrap();
//! let engine = Engine::new(EngineConfig::monte_carlo(2_000, 7)).unwrap();
//! let scenario = Scenario64::new(channel, alphabet, engine).unwrap();
//! let cm = scenario.cm_capacity().unwrap();
//! let bicm = scenario.bicm_capacity().unwrap();
//! assert!(bicm.value <= cm.value + 3.0 * cm.combined_error(&bicm));
//! ```

pub mod channel;
pub mod constellation;
pub mod error;
pub mod exponents;
pub mod measures;
pub mod metrics;
pub mod numerics;
pub mod scalar;
pub mod scenario;
pub mod simulate;

pub use channel::{db_to_linear, linear_to_db, Channel, ChannelKind, Observation};
pub use constellation::{read_alphabet, subset, Alphabet, Constellation, Geometry, Labeling};
pub use error::{Error, Result};
pub use exponents::{CutoffRates, ExponentPoint, GallagerFamily, GallagerValue, SMode};
pub use measures::MeasureResult;
pub use metrics::{draw_extrinsic, DecodingMetric, ExtrinsicModel, ExtrinsicRealization, MetricKind};
pub use numerics::{log_sum_exp, Backend, Engine, EngineConfig, Estimate, SampleSet};
pub use scalar::Scalar;
pub use scenario::{MetricSpec, MetricTable, Scenario};
pub use simulate::{RandomCodeExperiment, SimulationResult};

pub type Alphabet64 = Alphabet<f64>;
pub type Channel64 = Channel<f64>;
pub type Scenario64 = Scenario<f64>;
pub type MetricSpec64 = MetricSpec<f64>;
pub type Family64 = GallagerFamily<f64>;

pub type Alphabet32 = Alphabet<f32>;
pub type Channel32 = Channel<f32>;
pub type Scenario32 = Scenario<f32>;
pub type MetricSpec32 = MetricSpec<f32>;
pub type Family32 = GallagerFamily<f32>;
