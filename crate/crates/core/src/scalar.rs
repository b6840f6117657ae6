use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar used throughout the toolkit.
///
/// Implemented for `f32` and `f64`. Every model, optimiser and estimator in
/// this crate is generic over `Scalar`; the `*64` aliases at the crate root
/// pick `f64`, which is what the experiment harness uses.
pub trait Scalar:
    'static
    + Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Default
    + Send
    + Sync
    + Debug
    + Display
    + LowerExp
{
    /// Converts an `f64` literal, panicking only if the value is not
    /// representable (never the case for finite inputs with f32/f64).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `exp(j * phase)`.
#[inline]
pub fn phasor<T: Scalar>(phase: T) -> Complex<T> {
    let (s, c) = phase.sin_cos();
    Complex::new(c, s)
}

/// Power in dB, with values below `floor_db` (including exact zeros) clamped
/// to `floor_db`.
#[inline]
pub fn power_db<T: Scalar>(power: T, floor_db: T) -> T {
    if power <= T::zero() {
        return floor_db;
    }
    let db = T::lit(10.0) * power.log10();
    if db < floor_db {
        floor_db
    } else {
        db
    }
}

#[inline]
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[inline]
pub fn linear_to_db<T: Scalar>(x: T) -> T {
    T::lit(10.0) * x.log10()
}
