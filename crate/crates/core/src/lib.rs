pub mod bayesnet;
pub mod codec;
pub mod delta;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod schema;
pub mod squid;
pub mod storage;
mod wire;

pub use error::{Error, Result};
pub use schema::{closeness_check, Dataset, Schema, Tuple, Value};
pub use storage::{compress, Archive, CompressOptions};

/// Interval over `f64`, the default scalar.
pub type Interval = codec::ProbabilityInterval<f64>;
