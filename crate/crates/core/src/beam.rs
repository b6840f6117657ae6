//! Linear arrays with arbitrary element positions: steering vectors, array
//! gain, two-beam forming, zero-forcing null steering, and uniform spacing
//! search.
//!
//! Directions are in the cosine domain `u in [-1, 1]`; element `n` at
//! position `x_n` (wavelengths) has steering phase `2 pi x_n u`.

use std::io::{self, Write};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{phasor, power_db, Scalar};

/// Minimum adjacent element spacing, in wavelengths.
pub const MIN_SPACING: f64 = 0.5;

/// Phase grid size for [`two_beam_weights_fpa`].
pub const TWO_BEAM_PHASE_POINTS: usize = 1024;

/// Pattern export resolution.
pub const PATTERN_POINTS: usize = 2001;

const SPACING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout<T> {
    positions: Vec<T>,
}

impl<T: Scalar> ArrayLayout<T> {
    /// Strictly increasing positions with adjacent spacing of at least half
    /// a wavelength.
    pub fn new(positions: Vec<T>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidLayout("no elements".into()));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidLayout("non-finite element position".into()));
        }
        for (i, w) in positions.windows(2).enumerate() {
            if !(w[1] - w[0] >= T::lit(MIN_SPACING - SPACING_SLACK)) {
                return Err(Error::InvalidLayout(format!(
                    "elements {i} and {} are {} lambda apart (minimum {MIN_SPACING})",
                    i + 1,
                    w[1] - w[0]
                )));
            }
        }
        Ok(ArrayLayout { positions })
    }

    /// `n` elements at `0, d, 2d, ...`.
    pub fn uniform(n: usize, spacing: T) -> Result<Self> {
        Self::new((0..n).map(|i| T::of_usize(i) * spacing).collect())
    }

    /// Conventional half-wavelength uniform linear array.
    pub fn half_wavelength(n: usize) -> Result<Self> {
        Self::uniform(n, T::lit(0.5))
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Beamforming weights; never all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<T> {
    w: Vec<Complex<T>>,
}

impl<T: Scalar> Weights<T> {
    pub fn new(w: Vec<Complex<T>>) -> Result<Self> {
        if w.iter().all(|z| z.is_zero()) {
            return Err(Error::ZeroWeights);
        }
        Ok(Weights { w })
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn norm_sqr(&self) -> T {
        self.w.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }
}

fn check_cosine<T: Scalar>(u: T) -> Result<()> {
    if !(u >= -T::one() && u <= T::one()) {
        return Err(Error::CosineOutOfRange(u.to_f64_lossy()));
    }
    Ok(())
}

fn steer_unchecked<T: Scalar>(layout: &ArrayLayout<T>, u: T) -> Vec<Complex<T>> {
    layout
        .positions
        .iter()
        .map(|x| phasor(T::two_pi() * *x * u))
        .collect()
}

/// `a(u)_n = exp(j 2 pi x_n u)`.
pub fn steering_vector<T: Scalar>(layout: &ArrayLayout<T>, u: T) -> Result<Vec<Complex<T>>> {
    check_cosine(u)?;
    Ok(steer_unchecked(layout, u))
}

fn inner<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * y)
}

/// `|w^H a(u)|^2 / ||w||^2`, in `[0, N]`.
pub fn array_gain<T: Scalar>(layout: &ArrayLayout<T>, w: &Weights<T>, u: T) -> Result<T> {
    if w.len() != layout.len() {
        return Err(Error::WeightLength {
            expected: layout.len(),
            actual: w.len(),
        });
    }
    check_cosine(u)?;
    Ok(gain_unchecked(layout, w, u))
}

fn gain_unchecked<T: Scalar>(layout: &ArrayLayout<T>, w: &Weights<T>, u: T) -> T {
    let a = steer_unchecked(layout, u);
    inner(&w.w, &a).norm_sqr() / w.norm_sqr()
}

/// Matched-filter weights `w = a(u)`.
pub fn matched_weights<T: Scalar>(layout: &ArrayLayout<T>, u: T) -> Result<Weights<T>> {
    Weights::new(steering_vector(layout, u)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoBeam<T> {
    pub weights: Weights<T>,
    pub gain_u1: T,
    pub gain_u2: T,
    pub min_gain: T,
    /// Set when `u1 == u2`; the weights are then the matched filter.
    pub degenerate: bool,
}

/// Two-beam combiner `a(u1) + exp(j psi) a(u2)` with `psi` chosen on a
/// 1024-point grid over `[0, 2 pi)` to maximise the smaller of the two
/// beam gains. Ties keep the smallest `psi`.
pub fn two_beam_weights_fpa<T: Scalar>(layout: &ArrayLayout<T>, u1: T, u2: T) -> Result<TwoBeam<T>> {
    check_cosine(u1)?;
    check_cosine(u2)?;
    let a1 = steer_unchecked(layout, u1);
    if u1 == u2 {
        let weights = Weights::new(a1)?;
        let g = gain_unchecked(layout, &weights, u1);
        return Ok(TwoBeam {
            weights,
            gain_u1: g,
            gain_u2: g,
            min_gain: g,
            degenerate: true,
        });
    }
    let a2 = steer_unchecked(layout, u2);
    // With w = a1 + e a2 and c = a1^H a2: w^H a1 = N + conj(e c),
    // w^H a2 = c + conj(e) N and ||w||^2 = 2N + 2 Re(e c).
    let n = T::of_usize(layout.len());
    let c = inner(&a1, &a2);
    let mut best: Option<(T, Complex<T>)> = None;
    for k in 0..TWO_BEAM_PHASE_POINTS {
        let psi = T::two_pi() * T::of_usize(k) / T::of_usize(TWO_BEAM_PHASE_POINTS);
        let e = phasor(psi);
        let norm = n + n + T::lit(2.0) * (e * c).re;
        if !(norm > T::zero()) {
            continue;
        }
        let g1 = (Complex::new(n, T::zero()) + (e * c).conj()).norm_sqr() / norm;
        let g2 = (c + e.conj() * n).norm_sqr() / norm;
        let m = g1.min(g2);
        if best.is_none_or(|(b, _)| m > b) {
            best = Some((m, e));
        }
    }
    let (_, e) = best.ok_or(Error::ZeroWeights)?;
    let weights = Weights::new(a1.iter().zip(&a2).map(|(x, y)| *x + e * y).collect())?;
    let gain_u1 = gain_unchecked(layout, &weights, u1);
    let gain_u2 = gain_unchecked(layout, &weights, u2);
    Ok(TwoBeam {
        weights,
        gain_u1,
        gain_u2,
        min_gain: gain_u1.min(gain_u2),
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullSteer<T> {
    pub weights: Weights<T>,
    pub signal_gain: T,
    pub interference_gain: T,
    /// `a(u_int)^H a(u_sig) / N`.
    pub correlation: Complex<T>,
}

/// Zero forcing: projection of `a(u_sig)` onto the orthogonal complement
/// of `a(u_int)`.
pub fn null_steer_weights<T: Scalar>(
    layout: &ArrayLayout<T>,
    u_sig: T,
    u_int: T,
) -> Result<NullSteer<T>> {
    check_cosine(u_sig)?;
    check_cosine(u_int)?;
    let a_s = steer_unchecked(layout, u_sig);
    let a_i = steer_unchecked(layout, u_int);
    let n = T::of_usize(layout.len());
    let rho = inner(&a_i, &a_s) / n;
    if rho.norm() > T::one() - T::lit(1e-9) {
        return Err(Error::CollinearSteering(rho.norm().to_f64_lossy()));
    }
    let w: Vec<Complex<T>> = a_s.iter().zip(&a_i).map(|(s, i)| *s - rho * i).collect();
    let weights = Weights::new(w)?;
    Ok(NullSteer {
        signal_gain: gain_unchecked(layout, &weights, u_sig),
        interference_gain: gain_unchecked(layout, &weights, u_int),
        weights,
        correlation: rho,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpacingObjective<T> {
    /// Smaller of the two beam gains under [`two_beam_weights_fpa`].
    TwoBeam { u1: T, u2: T },
    /// Signal gain after zero forcing toward `u_int`; collinear geometries
    /// score zero.
    NullSteer { u_sig: T, u_int: T },
}

impl<T: Scalar> SpacingObjective<T> {
    pub fn evaluate(&self, layout: &ArrayLayout<T>) -> Result<T> {
        match *self {
            SpacingObjective::TwoBeam { u1, u2 } => {
                Ok(two_beam_weights_fpa(layout, u1, u2)?.min_gain)
            }
            SpacingObjective::NullSteer { u_sig, u_int } => {
                match null_steer_weights(layout, u_sig, u_int) {
                    Ok(ns) => Ok(ns.signal_gain),
                    Err(Error::CollinearSteering(_)) => Ok(T::zero()),
                    Err(e) => Err(e),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacingSearch<T> {
    pub best_spacing: T,
    pub best_objective: T,
    /// `(spacing, objective)` for every candidate, ascending in spacing.
    pub trace: Vec<(T, T)>,
}

impl<T: Scalar> SpacingSearch<T> {
    /// `d_lambda,objective` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "d_lambda,objective")?;
        for (d, v) in &self.trace {
            writeln!(w, "{d},{v}")?;
        }
        Ok(())
    }
}

/// Grid search over uniform spacings `d_min, d_min + step, ... <= d_max`.
/// Only strict improvements replace the incumbent, so ties go to the
/// smaller spacing.
pub fn optimize_uniform_spacing<T: Scalar>(
    n: usize,
    objective: &SpacingObjective<T>,
    d_range: (T, T),
    d_step: T,
) -> Result<SpacingSearch<T>> {
    let (lo, hi) = d_range;
    if !(d_step > T::zero()) {
        return Err(Error::NonPositiveStep(d_step.to_f64_lossy()));
    }
    if !(lo >= T::lit(MIN_SPACING - SPACING_SLACK) && hi >= lo && hi.is_finite()) {
        return Err(Error::EmptySpacingRange);
    }
    let count = ((hi - lo) / d_step + T::lit(1e-9))
        .floor()
        .to_usize()
        .ok_or(Error::EmptySpacingRange)?
        + 1;
    let mut trace = Vec::with_capacity(count);
    let mut best: Option<(T, T)> = None;
    for k in 0..count {
        let d = lo + T::of_usize(k) * d_step;
        let layout = ArrayLayout::uniform(n, d)?;
        let v = objective.evaluate(&layout)?;
        trace.push((d, v));
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((d, v));
        }
    }
    let (best_spacing, best_objective) = best.ok_or(Error::EmptySpacingRange)?;
    Ok(SpacingSearch {
        best_spacing,
        best_objective,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern<T> {
    pub u: Vec<T>,
    pub gain: Vec<T>,
}

impl<T: Scalar> BeamPattern<T> {
    /// `u,gain_linear,gain_db` rows, dB floored at -120.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "u,gain_linear,gain_db")?;
        let floor = T::lit(crate::gain_map::DB_FLOOR);
        for (u, g) in self.u.iter().zip(&self.gain) {
            writeln!(w, "{u},{g},{}", power_db(*g, floor))?;
        }
        Ok(())
    }

    pub fn peak(&self) -> (T, T) {
        let mut best = 0;
        for (i, g) in self.gain.iter().enumerate() {
            if *g > self.gain[best] {
                best = i;
            }
        }
        (self.u[best], self.gain[best])
    }
}

/// Array gain on a uniform grid of `grid_points` over `[-1, 1]`.
pub fn beam_pattern<T: Scalar>(
    layout: &ArrayLayout<T>,
    w: &Weights<T>,
    grid_points: usize,
) -> Result<BeamPattern<T>> {
    if grid_points < 2 {
        return Err(Error::TooFewPatternPoints);
    }
    if w.len() != layout.len() {
        return Err(Error::WeightLength {
            expected: layout.len(),
            actual: w.len(),
        });
    }
    let last = T::of_usize(grid_points - 1);
    let u: Vec<T> = (0..grid_points)
        .map(|k| (-T::one() + T::lit(2.0) * T::of_usize(k) / last).max(-T::one()).min(T::one()))
        .collect();
    let gain = u.iter().map(|&x| gain_unchecked(layout, w, x)).collect();
    Ok(BeamPattern { u, gain })
}
