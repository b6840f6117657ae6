//! Far-field multipath field-response channel model.
//!
//! Positions are measured in wavelengths, so the phase of a path with unit
//! direction `k` at position `r` is simply `2*pi*<k, r>`. The sign convention
//! is `+j` in the exponent on both the receive and the transmit side:
//!
//! ```text
//! h(r) = sum_l coeff_l * exp(+j * 2*pi * <rx_dir_l, r>)
//! ```

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{phasor, Scalar};

/// A point in space, in units of wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position<T>(pub [T; 3]);

impl<T: Scalar> Position<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Position([x, y, z])
    }

    pub fn planar(x: T, y: T) -> Self {
        Position([x, y, T::zero()])
    }

    pub fn origin() -> Self {
        Position([T::zero(); 3])
    }

    pub fn x(&self) -> T {
        self.0[0]
    }

    pub fn y(&self) -> T {
        self.0[1]
    }

    pub fn z(&self) -> T {
        self.0[2]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &[T; 3]) -> T {
        self.0[0] * other[0] + self.0[1] * other[1] + self.0[2] * other[2]
    }

    pub fn norm(&self) -> T {
        self.dot(&self.0).sqrt()
    }

    pub fn distance(&self, other: &Position<T>) -> T {
        (*self - *other).norm()
    }

    pub fn scaled(&self, s: T) -> Self {
        Position([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl<T: Scalar> Add for Position<T> {
    type Output = Position<T>;
    fn add(self, rhs: Self) -> Self {
        Position([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl<T: Scalar> Sub for Position<T> {
    type Output = Position<T>;
    fn sub(self, rhs: Self) -> Self {
        Position([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl<T: Scalar> Mul<T> for Position<T> {
    type Output = Position<T>;
    fn mul(self, rhs: T) -> Self {
        self.scaled(rhs)
    }
}

/// Unit propagation direction.
///
/// Built from elevation `theta` (from +z) and azimuth `phi` as
/// `(sin(theta) cos(phi), sin(theta) sin(phi), cos(theta))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<T> {
    v: [T; 3],
}

impl<T: Scalar> Direction<T> {
    pub fn from_angles(theta: T, phi: T) -> Result<Self> {
        if !(theta >= T::zero() && theta <= T::PI()) || !phi.is_finite() {
            return Err(Error::ElevationOutOfRange(theta.to_f64_lossy()));
        }
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Ok(Direction {
            v: [st * cp, st * sp, ct],
        })
    }

    /// Normalises an arbitrary nonzero vector.
    pub fn from_vector(v: [T; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        Ok(Direction {
            v: [v[0] / n, v[1] / n, v[2] / n],
        })
    }

    /// Direction in the upper hemisphere with in-plane cosines `(ux, uy)`.
    pub fn from_planar_cosines(ux: T, uy: T) -> Result<Self> {
        let rho2 = ux * ux + uy * uy;
        if !(rho2 <= T::one()) {
            return Err(Error::CosineOutOfRange(rho2.sqrt().to_f64_lossy()));
        }
        Ok(Direction {
            v: [ux, uy, (T::one() - rho2).sqrt()],
        })
    }

    pub fn as_array(&self) -> &[T; 3] {
        &self.v
    }

    pub fn theta(&self) -> T {
        self.v[2].max(-T::one()).min(T::one()).acos()
    }

    /// Azimuth in `[0, 2*pi)`.
    pub fn phi(&self) -> T {
        let p = self.v[1].atan2(self.v[0]);
        if p < T::zero() {
            p + T::two_pi()
        } else {
            p
        }
    }

    pub fn norm(&self) -> T {
        (self.v[0] * self.v[0] + self.v[1] * self.v[1] + self.v[2] * self.v[2]).sqrt()
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec<T> {
    pub rx_dir: Direction<T>,
    pub tx_dir: Option<Direction<T>>,
    pub coeff: Complex<T>,
}

impl<T: Scalar> PathSpec<T> {
    pub fn rx_only(rx_dir: Direction<T>, coeff: Complex<T>) -> Self {
        PathSpec {
            rx_dir,
            tx_dir: None,
            coeff,
        }
    }

    pub fn with_tx(rx_dir: Direction<T>, tx_dir: Direction<T>, coeff: Complex<T>) -> Self {
        PathSpec {
            rx_dir,
            tx_dir: Some(tx_dir),
            coeff,
        }
    }

    /// Contribution of this path at receive position `r`.
    #[inline]
    pub fn term(&self, r: &Position<T>) -> Complex<T> {
        self.coeff * phasor(T::two_pi() * r.dot(self.rx_dir.as_array()))
    }
}

/// Ordered list of paths defining the channel field over the Rx (and
/// optionally Tx) region.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec<T> {
    paths: Vec<PathSpec<T>>,
}

impl<T: Scalar> ChannelSpec<T> {
    pub fn new(paths: Vec<PathSpec<T>>) -> Result<Self> {
        let first = paths.first().ok_or(Error::NoPaths)?;
        let has_tx = first.tx_dir.is_some();
        for (l, p) in paths.iter().enumerate() {
            if !(p.coeff.re.is_finite() && p.coeff.im.is_finite()) {
                return Err(Error::NonFiniteCoefficient(l));
            }
            if p.tx_dir.is_some() != has_tx {
                return Err(Error::MixedTxPresence(l));
            }
        }
        Ok(ChannelSpec { paths })
    }

    pub fn paths(&self) -> &[PathSpec<T>] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn has_tx(&self) -> bool {
        self.paths[0].tx_dir.is_some()
    }

    /// Sum of coefficient magnitudes; upper bound on `|h(r)|`.
    pub fn amplitude_bound(&self) -> T {
        self.paths.iter().fold(T::zero(), |acc, p| acc + p.coeff.norm())
    }

    /// Total power `sum_l |coeff_l|^2`.
    pub fn total_power(&self) -> T {
        self.paths.iter().fold(T::zero(), |acc, p| acc + p.coeff.norm_sqr())
    }

    /// Copy with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: Complex<T>) -> Self {
        ChannelSpec {
            paths: self
                .paths
                .iter()
                .map(|p| PathSpec {
                    coeff: p.coeff * s,
                    ..*p
                })
                .collect(),
        }
    }

    pub fn to_record(&self) -> ChannelRecord {
        ChannelRecord {
            paths: self
                .paths
                .iter()
                .map(|p| PathRecord {
                    theta: p.rx_dir.theta().to_f64_lossy(),
                    phi: p.rx_dir.phi().to_f64_lossy(),
                    tx_theta: p.tx_dir.map(|d| d.theta().to_f64_lossy()),
                    tx_phi: p.tx_dir.map(|d| d.phi().to_f64_lossy()),
                    re: p.coeff.re.to_f64_lossy(),
                    im: p.coeff.im.to_f64_lossy(),
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &ChannelRecord) -> Result<Self> {
        let paths = rec
            .paths
            .iter()
            .map(|p| {
                let rx = Direction::from_angles(T::lit(p.theta), T::lit(p.phi))?;
                let tx = match (p.tx_theta, p.tx_phi) {
                    (Some(t), Some(f)) => Some(Direction::from_angles(T::lit(t), T::lit(f))?),
                    _ => None,
                };
                Ok(PathSpec {
                    rx_dir: rx,
                    tx_dir: tx,
                    coeff: Complex::new(T::lit(p.re), T::lit(p.im)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelSpec::new(paths)
    }
}

/// Serialisable form of a [`ChannelSpec`]: angles in radians, coefficient as
/// a real/imaginary pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub theta: f64,
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_phi: Option<f64>,
    pub re: f64,
    pub im: f64,
}

/// Channel response at receive position `r`.
pub fn channel_gain<T: Scalar>(spec: &ChannelSpec<T>, r: &Position<T>) -> Complex<T> {
    spec.paths
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, p| acc + p.term(r))
}

/// Channel response between transmit position `t` and receive position `r`.
/// Paths without a transmit direction contribute no transmit-side phase.
pub fn channel_gain_pair<T: Scalar>(
    spec: &ChannelSpec<T>,
    t: &Position<T>,
    r: &Position<T>,
) -> Complex<T> {
    spec.paths.iter().fold(Complex::new(T::zero(), T::zero()), |acc, p| {
        let tx_phase = p
            .tx_dir
            .map(|d| T::two_pi() * t.dot(d.as_array()))
            .unwrap_or_else(T::zero);
        acc + p.coeff * phasor(T::two_pi() * r.dot(p.rx_dir.as_array()) + tx_phase)
    })
}

/// Axis-aligned movement region. A zero extent collapses that dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region<T> {
    origin: Position<T>,
    extents: [T; 3],
    reference_point: Position<T>,
}

impl<T: Scalar> Region<T> {
    /// Region with the reference point at its center.
    pub fn new(origin: Position<T>, extents: [T; 3]) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::NonFinitePosition);
        }
        if extents.iter().any(|e| !(e.is_finite() && *e >= T::zero())) {
            return Err(Error::InvalidRegion(
                "extents must be finite and nonnegative".into(),
            ));
        }
        let half = T::lit(0.5);
        let center = Position([
            origin.0[0] + extents[0] * half,
            origin.0[1] + extents[1] * half,
            origin.0[2] + extents[2] * half,
        ]);
        Ok(Region {
            origin,
            extents,
            reference_point: center,
        })
    }

    pub fn with_reference(mut self, reference_point: Position<T>) -> Result<Self> {
        if !self.contains(&reference_point) {
            return Err(Error::InvalidRegion(
                "reference point lies outside the region".into(),
            ));
        }
        self.reference_point = reference_point;
        Ok(self)
    }

    /// `size x size` square in the xy-plane centered at the coordinate
    /// origin, which is also the reference point.
    pub fn square(size: T) -> Result<Self> {
        Self::rectangle(size, size)
    }

    pub fn rectangle(width: T, height: T) -> Result<Self> {
        let half = T::lit(0.5);
        Region::new(
            Position::new(-width * half, -height * half, T::zero()),
            [width, height, T::zero()],
        )
    }

    pub fn translated(&self, delta: &Position<T>) -> Self {
        Region {
            origin: self.origin + *delta,
            extents: self.extents,
            reference_point: self.reference_point + *delta,
        }
    }

    pub fn origin(&self) -> Position<T> {
        self.origin
    }

    pub fn extents(&self) -> [T; 3] {
        self.extents
    }

    pub fn reference_point(&self) -> Position<T> {
        self.reference_point
    }

    pub fn center(&self) -> Position<T> {
        let half = T::lit(0.5);
        Position([
            self.origin.0[0] + self.extents[0] * half,
            self.origin.0[1] + self.extents[1] * half,
            self.origin.0[2] + self.extents[2] * half,
        ])
    }

    /// Axes with nonzero extent, in increasing order.
    pub fn active_axes(&self) -> Vec<usize> {
        (0..3).filter(|&a| self.extents[a] > T::zero()).collect()
    }

    /// Axis with the largest extent (first on ties).
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for a in 1..3 {
            if self.extents[a] > self.extents[best] {
                best = a;
            }
        }
        best
    }

    /// Membership test with a small absolute slack for rounding.
    pub fn contains(&self, p: &Position<T>) -> bool {
        let slack = T::lit(1e-9);
        (0..3).all(|a| {
            let lo = self.origin.0[a];
            let hi = lo + self.extents[a];
            p.0[a] >= lo - slack && p.0[a] <= hi + slack
        })
    }

    /// Projection onto the region box.
    pub fn clamp(&self, p: &Position<T>) -> Position<T> {
        let mut out = *p;
        for a in 0..3 {
            let lo = self.origin.0[a];
            let hi = lo + self.extents[a];
            out.0[a] = p.0[a].max(lo).min(hi);
        }
        out
    }

    /// Regular lattice with spacing `step` starting at the origin corner.
    pub fn grid(&self, step: T) -> Result<Grid<T>> {
        if !(step > T::zero() && step.is_finite()) {
            return Err(Error::NonPositiveStep(step.to_f64_lossy()));
        }
        let mut counts = [1usize; 3];
        for (c, e) in counts.iter_mut().zip(&self.extents) {
            let n = (*e / step + T::lit(1e-9)).floor();
            *c = n.to_usize().ok_or_else(|| {
                Error::InvalidRegion("grid too large for the chosen step".into())
            })? + 1;
        }
        Ok(Grid {
            origin: self.origin,
            step,
            counts,
        })
    }
}

/// Regular lattice over a region. Points are enumerated row-major with the
/// x index varying fastest, then y, then z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    pub origin: Position<T>,
    pub step: T,
    pub counts: [usize; 3],
}

impl<T: Scalar> Grid<T> {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> T {
        self.origin.0[axis] + T::of_usize(i) * self.step
    }

    pub fn point(&self, index: usize) -> Position<T> {
        let [nx, ny, _] = self.counts;
        let i = index % nx;
        let j = (index / nx) % ny;
        let k = index / (nx * ny);
        Position([
            self.coordinate(0, i),
            self.coordinate(1, j),
            self.coordinate(2, k),
        ])
    }

    pub fn points(&self) -> impl Iterator<Item = Position<T>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Channel response at every grid point, in grid order.
///
/// Uses the separability of each plane wave over the lattice axes, so the
/// cost is one complex multiply per path and point instead of one `sin_cos`.
pub fn evaluate_on_grid<T: Scalar>(spec: &ChannelSpec<T>, grid: &Grid<T>) -> Vec<Complex<T>> {
    let [nx, ny, nz] = grid.counts;
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; grid.len()];
    let mut px = vec![zero; nx];
    let mut py = vec![zero; ny];
    let mut pz = vec![zero; nz];
    for path in spec.paths() {
        let k = path.rx_dir.as_array();
        let axis_phasors = |axis: usize, buf: &mut [Complex<T>]| {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = phasor(T::two_pi() * k[axis] * grid.coordinate(axis, i));
            }
        };
        axis_phasors(0, &mut px);
        axis_phasors(1, &mut py);
        axis_phasors(2, &mut pz);
        let mut idx = 0;
        for z in &pz {
            let cz = path.coeff * z;
            for y in &py {
                let cyz = cz * y;
                for x in &px {
                    out[idx] += cyz * x;
                    idx += 1;
                }
            }
        }
    }
    out
}

/// Law used to draw path directions in [`sample_stochastic_channel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionLaw {
    /// Uniform in solid angle over the upper (z >= 0) hemisphere.
    #[default]
    UpperHemisphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StochasticOptions {
    /// Also draw a transmit direction for every path.
    pub with_tx: bool,
    pub directions: DirectionLaw,
}

/// Per-trial generator derived from `(seed, trial)`: the base seed picks
/// the key and the trial index picks an independent ChaCha stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Circularly symmetric complex Gaussian with total variance `variance`.
pub fn sample_cscg<T: Scalar, R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex<T> {
    let s = (variance * 0.5).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re * s), T::lit(im * s))
}

fn sample_direction<T: Scalar, R: Rng + ?Sized>(rng: &mut R, law: DirectionLaw) -> Direction<T> {
    match law {
        DirectionLaw::UpperHemisphere => {
            let cos_theta: f64 = rng.random::<f64>();
            let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
            Direction {
                v: [
                    T::lit(sin_theta * phi.cos()),
                    T::lit(sin_theta * phi.sin()),
                    T::lit(cos_theta),
                ],
            }
        }
    }
}

/// Draws an `num_paths`-path channel from a caller-owned generator.
///
/// Coefficients are i.i.d. CSCG with variance `1 / num_paths`, so the
/// expected power at any point is 1.
pub fn sample_stochastic_channel_with<T: Scalar, R: Rng + ?Sized>(
    num_paths: usize,
    rng: &mut R,
    options: &StochasticOptions,
) -> Result<ChannelSpec<T>> {
    if num_paths == 0 {
        return Err(Error::NoPaths);
    }
    let variance = 1.0 / num_paths as f64;
    let paths = (0..num_paths)
        .map(|_| {
            let rx_dir = sample_direction(rng, options.directions);
            let tx_dir = options
                .with_tx
                .then(|| sample_direction(rng, options.directions));
            let coeff = sample_cscg(rng, variance);
            PathSpec {
                rx_dir,
                tx_dir,
                coeff,
            }
        })
        .collect();
    ChannelSpec::new(paths)
}

/// Seeded variant of [`sample_stochastic_channel_with`].
pub fn sample_stochastic_channel<T: Scalar>(
    num_paths: usize,
    seed: u64,
    options: &StochasticOptions,
) -> Result<ChannelSpec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_stochastic_channel_with(num_paths, &mut rng, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit_path(theta: f64, phi: f64, coeff: Complex<f64>) -> PathSpec<f64> {
        PathSpec::rx_only(Direction::from_angles(theta, phi).unwrap(), coeff)
    }

    #[test]
    fn angle_convention() {
        let close = |d: Direction<f64>, e: [f64; 3]| {
            d.as_array()
                .iter()
                .zip(e.iter())
                .all(|(a, b)| (a - b).abs() < 1e-15)
        };
        assert!(close(Direction::from_angles(0.0, 0.0).unwrap(), [0.0, 0.0, 1.0]));
        assert!(close(
            Direction::from_angles(FRAC_PI_2, 0.0).unwrap(),
            [1.0, 0.0, 0.0]
        ));
        assert!(close(
            Direction::from_angles(FRAC_PI_2, FRAC_PI_2).unwrap(),
            [0.0, 1.0, 0.0]
        ));
    }

    #[test]
    fn elevation_out_of_range_rejected() {
        assert!(matches!(
            Direction::from_angles(-0.1, 0.0),
            Err(Error::ElevationOutOfRange(_))
        ));
        assert!(Direction::from_angles(PI + 1e-9, 0.0).is_err());
        assert!(Direction::from_angles(PI, 0.0).is_ok());
    }

    #[test]
    fn angles_round_trip() {
        let d = Direction::<f64>::from_angles(1.1, 4.0).unwrap();
        assert!((d.theta() - 1.1).abs() < 1e-12);
        assert!((d.phi() - 4.0).abs() < 1e-12);
        assert!((d.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_unit_path_has_constant_envelope() {
        let spec = ChannelSpec::new(vec![unit_path(0.7, 2.0, Complex::new(1.0, 0.0))]).unwrap();
        for r in [
            Position::new(0.0, 0.0, 0.0),
            Position::new(0.37, -2.1, 0.0),
            Position::new(10.0, 3.3, 1.2),
        ] {
            assert!((channel_gain(&spec, &r).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_and_cancelling_pairs() {
        let one = Complex::new(1.0, 0.0);
        let coherent =
            ChannelSpec::new(vec![unit_path(0.3, 0.0, one), unit_path(1.2, 2.0, one)]).unwrap();
        assert!((channel_gain(&coherent, &Position::origin()).norm_sqr() - 4.0).abs() < 1e-12);

        let cancel =
            ChannelSpec::new(vec![unit_path(0.3, 0.0, one), unit_path(1.2, 2.0, -one)]).unwrap();
        assert!(channel_gain(&cancel, &Position::origin()).norm() < 1e-15);
    }

    #[test]
    fn channel_spec_validation() {
        assert_eq!(ChannelSpec::<f64>::new(vec![]), Err(Error::NoPaths));
        let d = Direction::from_angles(0.1, 0.2).unwrap();
        let bad = PathSpec::rx_only(d, Complex::new(f64::NAN, 0.0));
        assert_eq!(
            ChannelSpec::new(vec![bad]),
            Err(Error::NonFiniteCoefficient(0))
        );
        let mixed = vec![
            PathSpec::rx_only(d, Complex::new(1.0, 0.0)),
            PathSpec::with_tx(d, d, Complex::new(1.0, 0.0)),
        ];
        assert_eq!(ChannelSpec::new(mixed), Err(Error::MixedTxPresence(1)));
    }

    #[test]
    fn stochastic_channel_is_reproducible() {
        let opts = StochasticOptions::default();
        let a = sample_stochastic_channel::<f64>(4, 7, &opts).unwrap();
        let b = sample_stochastic_channel::<f64>(4, 7, &opts).unwrap();
        assert_eq!(a, b);
        let c = sample_stochastic_channel::<f64>(4, 8, &opts).unwrap();
        assert_ne!(a, c);
        assert_eq!(
            sample_stochastic_channel::<f64>(0, 7, &opts),
            Err(Error::NoPaths)
        );
    }

    #[test]
    fn stochastic_directions_in_upper_hemisphere() {
        let opts = StochasticOptions {
            with_tx: true,
            ..Default::default()
        };
        let spec = sample_stochastic_channel::<f64>(64, 3, &opts).unwrap();
        for p in spec.paths() {
            assert!(p.rx_dir.as_array()[2] >= 0.0);
            assert!((p.rx_dir.norm() - 1.0).abs() < 1e-12);
            let tx = p.tx_dir.unwrap();
            assert!(tx.as_array()[2] >= 0.0);
        }
    }

    #[test]
    fn region_reference_defaults_to_center() {
        let r = Region::new(Position::new(1.0, 2.0, 0.0), [2.0, 4.0, 0.0]).unwrap();
        assert_eq!(r.reference_point(), Position::new(2.0, 4.0, 0.0));
        assert!(r.with_reference(Position::new(5.0, 0.0, 0.0)).is_err());
        assert!(Region::new(Position::origin(), [-1.0, 1.0, 0.0]).is_err());
        assert_eq!(Region::square(3.0).unwrap().active_axes(), vec![0, 1]);
    }

    #[test]
    fn grid_counts_follow_floor_rule() {
        let r = Region::square(4.0).unwrap();
        let g = r.grid(0.02).unwrap();
        assert_eq!(g.counts, [201, 201, 1]);
        let g = r.grid(0.3).unwrap();
        assert_eq!(g.counts, [14, 14, 1]);
        assert!(r.grid(0.0).is_err());
        assert_eq!(Region::square(0.0).unwrap().grid(0.1).unwrap().len(), 1);
    }

    #[test]
    fn grid_evaluation_matches_pointwise() {
        let spec = sample_stochastic_channel::<f64>(5, 11, &StochasticOptions::default()).unwrap();
        let region = Region::new(Position::new(-1.0, 0.5, 0.2), [1.3, 0.7, 0.4]).unwrap();
        let grid = region.grid(0.1).unwrap();
        let fast = evaluate_on_grid(&spec, &grid);
        for (i, v) in fast.iter().enumerate() {
            let direct = channel_gain(&spec, &grid.point(i));
            assert!((v - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn record_round_trip() {
        let opts = StochasticOptions {
            with_tx: true,
            ..Default::default()
        };
        let spec = sample_stochastic_channel::<f64>(3, 5, &opts).unwrap();
        let back = ChannelSpec::<f64>::from_record(&spec.to_record()).unwrap();
        for (a, b) in spec.paths().iter().zip(back.paths()) {
            assert!((a.coeff - b.coeff).norm() < 1e-15);
            let (da, db) = (a.rx_dir.as_array(), b.rx_dir.as_array());
            assert!((0..3).all(|i| (da[i] - db[i]).abs() < 1e-12));
        }
    }

    #[test]
    fn works_in_single_precision() {
        let d = Direction::<f32>::from_angles(0.4, 1.0).unwrap();
        let spec = ChannelSpec::new(vec![PathSpec::rx_only(d, Complex::new(1.0f32, 0.0))]).unwrap();
        let h = channel_gain(&spec, &Position::new(1.5f32, -0.25, 0.0));
        assert!((h.norm() - 1.0).abs() < 1e-5);
    }
}
