//! Loudness-compensating hearing-loss simulation and its inverse.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod audiogram;
pub mod corpus;
pub mod error;
pub mod gain;
pub mod loudness;
pub mod spectrum;
pub mod stoi;
pub mod stream;
pub mod synth;
pub mod wav;
pub mod waveform;

pub use audiogram::Audiogram;
pub use error::{Error, Result};
pub use gain::{build_table, Direction, GainTable, TableSpec};
pub use loudness::EarModel;
pub use stream::{process, process_sliding, ProcessorConfig, StreamProcessor};
pub use waveform::Waveform;
