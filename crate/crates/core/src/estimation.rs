//! Field-response estimation: recover path directions and coefficients from
//! channel samples at a handful of antenna positions.
//!
//! The location-domain samples and the angle-domain path responses are
//! related by a Fourier-type map, so a dictionary of candidate directions
//! turns estimation into sparse recovery; orthogonal matching pursuit
//! solves it. With the directions known, coefficients alone can be refit by
//! least squares from fresh samples.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    channel_gain, evaluate_on_grid, sample_cscg, ChannelSpec, Direction, PathSpec, Position,
    Region,
};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, CMatrix};
use crate::scalar::{phasor, Scalar};

/// Default cosine-grid resolution per axis.
pub const DEFAULT_DICTIONARY_GRID: usize = 64;

/// Smallest lattice pitch used by [`MeasurementStrategy::Grid`], in lambda.
pub const MIN_LATTICE_PITCH: f64 = 0.5;

const RCOND_MIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementStrategy {
    UniformRandom,
    Grid,
}

/// Measurement positions inside `region`.
///
/// `UniformRandom` draws each coordinate uniformly over the region from a
/// ChaCha stream seeded with `seed`. `Grid` places a lattice with corners on
/// the region boundary, using the most nearly square factorisation of
/// `count` whose pitch is at least [`MIN_LATTICE_PITCH`].
pub fn plan_measurement_positions<T: Scalar>(
    region: &Region<T>,
    count: usize,
    strategy: MeasurementStrategy,
    seed: u64,
) -> Result<Vec<Position<T>>> {
    if count == 0 {
        return Err(Error::NoMeasurements);
    }
    match strategy {
        MeasurementStrategy::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let origin = region.origin();
            let ext = region.extents();
            Ok((0..count)
                .map(|_| {
                    let mut p = origin;
                    for (c, e) in p.0.iter_mut().zip(&ext) {
                        let u: f64 = rng.random();
                        *c += T::lit(u) * *e;
                    }
                    p
                })
                .collect())
        }
        MeasurementStrategy::Grid => grid_positions(region, count),
    }
}

fn axis_capacity<T: Scalar>(extent: T) -> usize {
    (extent / T::lit(MIN_LATTICE_PITCH) + T::lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0)
        + 1
}

fn lattice_line<T: Scalar>(lo: T, extent: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo + extent * T::lit(0.5)];
    }
    (0..n)
        .map(|i| lo + extent * T::of_usize(i) / T::of_usize(n - 1))
        .collect()
}

fn grid_positions<T: Scalar>(region: &Region<T>, count: usize) -> Result<Vec<Position<T>>> {
    let axes = region.active_axes();
    let ext = region.extents();
    let origin = region.origin();
    let center = region.center();
    let capacity: usize = axes.iter().map(|&a| axis_capacity(ext[a])).product();
    let too_many = Error::GridCapacity {
        requested: count,
        capacity,
    };
    match axes.len() {
        0 => {
            if count > 1 {
                return Err(too_many);
            }
            Ok(vec![center])
        }
        1 => {
            let a = axes[0];
            if count > axis_capacity(ext[a]) {
                return Err(too_many);
            }
            Ok(lattice_line(origin.0[a], ext[a], count)
                .into_iter()
                .map(|v| {
                    let mut p = center;
                    p.0[a] = v;
                    p
                })
                .collect())
        }
        2 => {
            let (a, b) = (axes[0], axes[1]);
            let (cap_a, cap_b) = (axis_capacity(ext[a]), axis_capacity(ext[b]));
            // Most nearly square feasible factorisation, larger factor first.
            let mut best: Option<(usize, usize)> = None;
            for na in 1..=count {
                if !count.is_multiple_of(na) {
                    continue;
                }
                let nb = count / na;
                let feasible = na <= cap_a && nb <= cap_b;
                let better = best.is_none_or(|(ba, bb)| {
                    na.abs_diff(nb) < ba.abs_diff(bb) || (na.abs_diff(nb) == ba.abs_diff(bb) && na > ba)
                });
                if feasible && better {
                    best = Some((na, nb));
                }
            }
            let (na, nb) = best.ok_or(too_many)?;
            let xs = lattice_line(origin.0[a], ext[a], na);
            let ys = lattice_line(origin.0[b], ext[b], nb);
            let mut out = Vec::with_capacity(count);
            for y in &ys {
                for x in &xs {
                    let mut p = center;
                    p.0[a] = *x;
                    p.0[b] = *y;
                    out.push(p);
                }
            }
            Ok(out)
        }
        _ => Err(Error::InvalidRegion(
            "grid measurement plans need at most two nonzero extents".into(),
        )),
    }
}

/// Channel samples at known positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T> {
    pub positions: Vec<Position<T>>,
    pub samples: Vec<Complex<T>>,
    pub noise_var: T,
}

impl<T: Scalar> MeasurementSet<T> {
    pub fn new(positions: Vec<Position<T>>, samples: Vec<Complex<T>>, noise_var: T) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::NoMeasurements);
        }
        if positions.len() != samples.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions, {} samples",
                positions.len(),
                samples.len()
            )));
        }
        if !(noise_var >= T::zero()) {
            return Err(Error::NegativeNoiseVariance(noise_var.to_f64_lossy()));
        }
        Ok(MeasurementSet {
            positions,
            samples,
            noise_var,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn sample_norm(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }
}

/// `y_k = h(r_k) + n_k` with CSCG noise of variance `noise_var`.
pub fn simulate_measurements<T: Scalar>(
    spec: &ChannelSpec<T>,
    positions: &[Position<T>],
    noise_var: T,
    seed: u64,
) -> Result<MeasurementSet<T>> {
    if !(noise_var >= T::zero()) {
        return Err(Error::NegativeNoiseVariance(noise_var.to_f64_lossy()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = noise_var.to_f64_lossy();
    let samples = positions
        .iter()
        .map(|r| {
            let h = channel_gain(spec, r);
            if nv > 0.0 {
                h + sample_cscg::<T, _>(&mut rng, nv)
            } else {
                h
            }
        })
        .collect();
    MeasurementSet::new(positions.to_vec(), samples, noise_var)
}

/// Candidate arrival directions; atom `g` at position `r` is
/// `exp(j 2 pi <dir_g, r>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleDictionary<T> {
    directions: Vec<Direction<T>>,
}

impl<T: Scalar> AngleDictionary<T> {
    pub fn new(directions: Vec<Direction<T>>) -> Self {
        AngleDictionary { directions }
    }

    /// Cell centers `u = -1 + (2i + 1) / n` of an `n x n` grid over the
    /// in-plane cosines, restricted to the open unit disk. Suited to regions
    /// in the xy-plane.
    pub fn cosine_grid(n: usize) -> Self {
        let u = |i: usize| -T::one() + T::of_usize(2 * i + 1) / T::of_usize(n);
        let mut directions = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (ux, uy) = (u(i), u(j));
                if ux * ux + uy * uy < T::one() {
                    directions.push(Direction::from_planar_cosines(ux, uy).expect("inside disk"));
                }
            }
        }
        AngleDictionary { directions }
    }

    /// Elevation/azimuth grid over the upper hemisphere.
    pub fn hemisphere(n_theta: usize, n_phi: usize) -> Self {
        let mut directions = Vec::with_capacity(n_theta * n_phi);
        for i in 0..n_theta {
            let theta = T::FRAC_PI_2() * (T::of_usize(i) + T::lit(0.5)) / T::of_usize(n_theta);
            for j in 0..n_phi {
                let phi = T::two_pi() * T::of_usize(j) / T::of_usize(n_phi);
                directions.push(Direction::from_angles(theta, phi).expect("valid angles"));
            }
        }
        AngleDictionary { directions }
    }

    pub fn directions(&self) -> &[Direction<T>] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn atom(&self, g: usize, positions: &[Position<T>]) -> Vec<Complex<T>> {
        atom_for(&self.directions[g], positions)
    }

    /// `K x G` measurement matrix.
    pub fn matrix(&self, positions: &[Position<T>]) -> CMatrix<T> {
        CMatrix::from_fn(positions.len(), self.directions.len(), |k, g| {
            phasor(T::two_pi() * positions[k].dot(self.directions[g].as_array()))
        })
    }

    /// Channel built from dictionary atoms.
    pub fn channel(&self, indices: &[usize], coeffs: &[Complex<T>]) -> Result<ChannelSpec<T>> {
        ChannelSpec::new(
            indices
                .iter()
                .zip(coeffs)
                .map(|(&g, &c)| PathSpec::rx_only(self.directions[g], c))
                .collect(),
        )
    }
}

/// Channel on `num_paths` distinct dictionary atoms, drawn uniformly, with
/// i.i.d. CSCG coefficients of variance `1 / num_paths`. Returns the atom
/// indices in draw order alongside the channel.
pub fn sample_on_grid_channel<T: Scalar, R: Rng + ?Sized>(
    dict: &AngleDictionary<T>,
    num_paths: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, ChannelSpec<T>)> {
    if num_paths == 0 {
        return Err(Error::NoPaths);
    }
    if dict.len() < num_paths {
        return Err(Error::DictionaryTooSmall {
            size: dict.len(),
            sparsity: num_paths,
        });
    }
    let indices = rand::seq::index::sample(rng, dict.len(), num_paths).into_vec();
    let variance = 1.0 / num_paths as f64;
    let coeffs: Vec<Complex<T>> = (0..num_paths).map(|_| sample_cscg(rng, variance)).collect();
    let spec = dict.channel(&indices, &coeffs)?;
    Ok((indices, spec))
}

fn atom_for<T: Scalar>(dir: &Direction<T>, positions: &[Position<T>]) -> Vec<Complex<T>> {
    positions
        .iter()
        .map(|r| phasor(T::two_pi() * r.dot(dir.as_array())))
        .collect()
}

/// Largest normalised inner product `|a_g^H a_h| / K` over distinct atoms.
pub fn mutual_coherence<T: Scalar>(dict: &AngleDictionary<T>, positions: &[Position<T>]) -> T {
    let a = dict.matrix(positions);
    let (k, g) = (a.rows(), a.cols());
    let cols: Vec<Vec<Complex<T>>> = (0..g).map(|j| (0..k).map(|i| a[(i, j)]).collect()).collect();
    let mut best = T::zero();
    for i in 0..g {
        for j in (i + 1)..g {
            let ip = cols[i]
                .iter()
                .zip(&cols[j])
                .fold(Complex::zero(), |acc: Complex<T>, (x, y)| acc + x.conj() * y);
            best = best.max(ip.norm());
        }
    }
    best / T::of_usize(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriEstimate<T> {
    /// Selected dictionary indices, in selection order.
    pub indices: Vec<usize>,
    pub directions: Vec<Direction<T>>,
    pub coefficients: Vec<Complex<T>>,
    pub residual_norm: T,
    /// Residual norm before the first and after every selection.
    pub residual_history: Vec<T>,
}

impl<T: Scalar> FriEstimate<T> {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Reconstructed channel, or `None` for an empty estimate.
    pub fn to_channel(&self) -> Option<ChannelSpec<T>> {
        ChannelSpec::new(
            self.directions
                .iter()
                .zip(&self.coefficients)
                .map(|(d, c)| PathSpec::rx_only(*d, *c))
                .collect(),
        )
        .ok()
    }

    pub fn report(&self, meas: &MeasurementSet<T>, max_paths: usize, nmse: Option<T>) -> EstimationReport {
        EstimationReport {
            measurements: meas.len(),
            max_paths,
            noise_var: meas.noise_var.to_f64_lossy(),
            residual_norm: self.residual_norm.to_f64_lossy(),
            nmse: nmse.map(|v| v.to_f64_lossy()),
            recovered: self
                .indices
                .iter()
                .zip(&self.directions)
                .zip(&self.coefficients)
                .map(|((&index, d), c)| RecoveredPath {
                    index,
                    theta: d.theta().to_f64_lossy(),
                    phi: d.phi().to_f64_lossy(),
                    ux: d.as_array()[0].to_f64_lossy(),
                    uy: d.as_array()[1].to_f64_lossy(),
                    re: c.re.to_f64_lossy(),
                    im: c.im.to_f64_lossy(),
                })
                .collect(),
        }
    }
}

/// Serialisable summary of one estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub measurements: usize,
    pub max_paths: usize,
    pub noise_var: f64,
    pub residual_norm: f64,
    pub nmse: Option<f64>,
    pub recovered: Vec<RecoveredPath>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredPath {
    pub index: usize,
    pub theta: f64,
    pub phi: f64,
    pub ux: f64,
    pub uy: f64,
    pub re: f64,
    pub im: f64,
}

fn column_subset<T: Scalar>(a: &CMatrix<T>, cols: &[usize]) -> CMatrix<T> {
    CMatrix::from_fn(a.rows(), cols.len(), |i, j| a[(i, cols[j])])
}

/// Orthogonal matching pursuit over `dict`.
///
/// Each iteration adds the unselected atom most correlated with the
/// residual (lowest index on ties) and refits all selected coefficients by
/// least squares. Stops after `max_paths` atoms, once the residual norm is
/// at most `eps_residual`, or when no further atom can be added without a
/// rank-deficient fit.
pub fn omp_estimate<T: Scalar>(
    meas: &MeasurementSet<T>,
    dict: &AngleDictionary<T>,
    max_paths: usize,
    eps_residual: T,
) -> Result<FriEstimate<T>> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    if dict.len() < max_paths {
        return Err(Error::DictionaryTooSmall {
            size: dict.len(),
            sparsity: max_paths,
        });
    }
    if meas.len() < max_paths {
        return Err(Error::Underdetermined {
            measurements: meas.len(),
            unknowns: max_paths,
        });
    }
    let a = dict.matrix(&meas.positions);
    let mut residual = meas.samples.clone();
    let mut residual_norm = meas.sample_norm();
    let mut history = vec![residual_norm];
    let mut support: Vec<usize> = Vec::new();
    let mut coefficients: Vec<Complex<T>> = Vec::new();

    while support.len() < max_paths && residual_norm > eps_residual {
        let corr = a.adjoint_mul_vec(&residual);
        let mut pick: Option<(usize, T)> = None;
        for (g, c) in corr.iter().enumerate() {
            if support.contains(&g) {
                continue;
            }
            let m = c.norm();
            if pick.is_none_or(|(_, b)| m > b) {
                pick = Some((g, m));
            }
        }
        let Some((g, m)) = pick else { break };
        if !(m > T::zero()) {
            break;
        }
        let mut trial = support.clone();
        trial.push(g);
        let fit = match least_squares(&column_subset(&a, &trial), &meas.samples, T::lit(RCOND_MIN)) {
            Ok(fit) => fit,
            Err(Error::RankDeficient { .. }) => break,
            Err(e) => return Err(e),
        };
        support = trial;
        coefficients = fit.solution;
        residual = fit.residual;
        residual_norm = fit.residual_norm.min(residual_norm);
        history.push(residual_norm);
    }

    Ok(FriEstimate {
        directions: support.iter().map(|&g| dict.directions[g]).collect(),
        indices: support,
        coefficients,
        residual_norm,
        residual_history: history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refit<T> {
    pub coefficients: Vec<Complex<T>>,
    pub residual: Vec<Complex<T>>,
    pub residual_norm: T,
    pub rcond: T,
}

/// Least-squares coefficients for known directions.
pub fn refit_coefficients<T: Scalar>(
    meas: &MeasurementSet<T>,
    directions: &[Direction<T>],
) -> Result<Refit<T>> {
    if meas.len() < directions.len() {
        return Err(Error::Underdetermined {
            measurements: meas.len(),
            unknowns: directions.len(),
        });
    }
    let a = AngleDictionary::new(directions.to_vec()).matrix(&meas.positions);
    let fit = least_squares(&a, &meas.samples, T::lit(RCOND_MIN))?;
    Ok(Refit {
        coefficients: fit.solution,
        residual: fit.residual,
        residual_norm: fit.residual_norm,
        rcond: fit.rcond,
    })
}

/// `sum |h_hat - h|^2 / sum |h|^2` over the region lattice.
pub fn reconstruct_and_score<T: Scalar>(
    estimate: &FriEstimate<T>,
    truth: &ChannelSpec<T>,
    region: &Region<T>,
    step: T,
) -> Result<T> {
    let grid = region.grid(step)?;
    let h = evaluate_on_grid(truth, &grid);
    let energy = h.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    if !(energy > T::zero()) {
        return Err(Error::ZeroEnergyTruth);
    }
    let err = match estimate.to_channel() {
        Some(est) => evaluate_on_grid(&est, &grid)
            .iter()
            .zip(&h)
            .fold(T::zero(), |acc, (a, b)| acc + (a - b).norm_sqr()),
        None => energy,
    };
    Ok(err / energy)
}
