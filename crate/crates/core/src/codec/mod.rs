//! Finite-precision arithmetic coding.
//!
//! The encoder folds branch intervals into a working interval with the
//! deterministic product, emitting every bit as soon as it is settled; the
//! decoder replays the same products to identify each branch from the bits.

mod bits;
mod decoder;
mod encoder;
mod fixed;
mod interval;

pub use bits::{BitBuf, BitReader, BitSource};
pub use decoder::DecoderState;
pub use encoder::{encode, terminal_code, EncoderState};
pub use fixed::{cumulative_intervals, det_product, ApproxConfig, FixedInterval, Renormalized};
pub use interval::{interval_product, IntervalScalar, ProbabilityInterval};
