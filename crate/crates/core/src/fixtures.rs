//! Reference channels used by tests, experiments and sample configs.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelSpec, Direction, PathSpec};
use crate::scalar::Scalar;

/// Seed behind [`four_path`].
pub const FOUR_PATH_SEED: u64 = 4;

/// Two unit-power paths with distinct arrival directions.
pub fn two_path<T: Scalar>() -> ChannelSpec<T> {
    let one = Complex::new(T::one(), T::zero());
    ChannelSpec::new(vec![
        PathSpec::rx_only(
            Direction::from_angles(T::lit(PI / 6.0), T::zero()).expect("valid angles"),
            one,
        ),
        PathSpec::rx_only(
            Direction::from_angles(T::lit(PI / 3.0), T::lit(0.75 * PI)).expect("valid angles"),
            one,
        ),
    ])
    .expect("nonempty")
}

/// Four unit-power paths with directions drawn uniformly over the upper
/// hemisphere and uniformly random phases, from [`FOUR_PATH_SEED`].
pub fn four_path<T: Scalar>() -> ChannelSpec<T> {
    unit_power_paths(4, FOUR_PATH_SEED)
}

/// `count` unit-magnitude paths with random directions and phases.
pub fn unit_power_paths<T: Scalar>(count: usize, seed: u64) -> ChannelSpec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = (0..count)
        .map(|_| {
            let cos_theta: f64 = rng.random();
            let phi: f64 = rng.random::<f64>() * 2.0 * PI;
            let phase: f64 = rng.random::<f64>() * 2.0 * PI;
            PathSpec::rx_only(
                Direction::from_angles(T::lit(cos_theta.acos()), T::lit(phi)).expect("valid"),
                Complex::new(T::lit(phase.cos()), T::lit(phase.sin())),
            )
        })
        .collect();
    ChannelSpec::new(paths).expect("nonempty")
}
