//! Movable-antenna toolkit: far-field multipath channel synthesis, antenna
//! position optimisation, flexible beam synthesis for reconfigurable linear
//! arrays, MIMO capacity with sequential antenna placement, and sparse
//! field-response estimation from positional measurements.
//!
//! All positions are in wavelengths. Every type is generic over
//! [`Scalar`] (`f32` or `f64`); the `*64` aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod fixtures;
pub mod gain_map;
pub mod linalg;
pub mod mimo;
pub mod positioning;
pub mod scalar;

pub use channel::{
    channel_gain, channel_gain_pair, evaluate_on_grid, sample_stochastic_channel,
    sample_stochastic_channel_with, trial_rng, ChannelRecord, ChannelSpec, Direction,
    DirectionLaw, Grid, PathRecord, PathSpec, Position, Region, StochasticOptions,
};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub use num_complex::Complex;

pub type Complex64 = Complex<f64>;
pub type Position64 = Position<f64>;
pub type Direction64 = Direction<f64>;
pub type PathSpec64 = PathSpec<f64>;
pub type ChannelSpec64 = ChannelSpec<f64>;
pub type Region64 = Region<f64>;
pub type GainMap64 = gain_map::GainMap<f64>;
pub type SearchConfig64 = positioning::SearchConfig<f64>;
pub type InterferenceScenario64 = positioning::InterferenceScenario<f64>;
pub type ArrayLayout64 = beam::ArrayLayout<f64>;
pub type Weights64 = beam::Weights<f64>;
pub type BeamPattern64 = beam::BeamPattern<f64>;
pub type CMatrix64 = linalg::CMatrix<f64>;
pub type MimoChannelSpec64 = mimo::MimoChannelSpec<f64>;
pub type RxPlacement64 = mimo::RxPlacement<f64>;
pub type MeasurementSet64 = estimation::MeasurementSet<f64>;
pub type AngleDictionary64 = estimation::AngleDictionary<f64>;
pub type FriEstimate64 = estimation::FriEstimate<f64>;
