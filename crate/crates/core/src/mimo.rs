//! MIMO channel matrices from path geometry, capacity under identity and
//! water-filling transmit covariance, and sequential placement of the
//! receive antennas.

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;

use crate::channel::{
    sample_stochastic_channel_with, ChannelSpec, Position, Region, StochasticOptions,
};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_logdet, singular_values, CMatrix};
use crate::scalar::{phasor, Scalar};

/// Minimum distance between any two antennas on the same side, in lambda.
pub const MIN_ANTENNA_DISTANCE: f64 = 0.5;

const DISTANCE_SLACK: f64 = 1e-9;

/// Channel whose paths all carry a transmit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannelSpec<T>(ChannelSpec<T>);

impl<T: Scalar> MimoChannelSpec<T> {
    pub fn new(spec: ChannelSpec<T>) -> Result<Self> {
        if !spec.has_tx() {
            return Err(Error::DimensionMismatch(
                "MIMO channel paths need transmit directions".into(),
            ));
        }
        Ok(MimoChannelSpec(spec))
    }

    /// `num_paths` i.i.d. paths with coefficient variance `1 / num_paths`,
    /// so every antenna pair has unit average power.
    pub fn sample<R: Rng + ?Sized>(num_paths: usize, rng: &mut R) -> Result<Self> {
        let opts = StochasticOptions {
            with_tx: true,
            ..Default::default()
        };
        Ok(MimoChannelSpec(sample_stochastic_channel_with(
            num_paths, rng, &opts,
        )?))
    }

    pub fn spec(&self) -> &ChannelSpec<T> {
        &self.0
    }
}

fn check_spacing<T: Scalar>(positions: &[Position<T>]) -> Result<()> {
    let min = T::lit(MIN_ANTENNA_DISTANCE - DISTANCE_SLACK);
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let d = positions[i].distance(&positions[j]);
            if !(d >= min) {
                return Err(Error::SpacingViolation(i, j, d.to_f64_lossy()));
            }
        }
    }
    Ok(())
}

/// Receive antenna positions with pairwise distance of at least lambda/2.
#[derive(Debug, Clone, PartialEq)]
pub struct RxPlacement<T> {
    positions: Vec<Position<T>>,
}

impl<T: Scalar> RxPlacement<T> {
    pub fn new(positions: Vec<Position<T>>) -> Result<Self> {
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinitePosition);
        }
        check_spacing(&positions)?;
        Ok(RxPlacement { positions })
    }

    pub fn positions(&self) -> &[Position<T>] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn min_distance(&self) -> Option<T> {
        let mut best: Option<T> = None;
        for i in 0..self.positions.len() {
            for j in (i + 1)..self.positions.len() {
                let d = self.positions[i].distance(&self.positions[j]);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }
}

/// `count` half-wavelength-spaced positions along x, centered at the origin.
pub fn half_wavelength_ula<T: Scalar>(count: usize) -> Vec<Position<T>> {
    let half = T::lit(MIN_ANTENNA_DISTANCE);
    let offset = T::of_usize(count.saturating_sub(1)) * half * T::lit(0.5);
    (0..count)
        .map(|i| Position::new(T::of_usize(i) * half - offset, T::zero(), T::zero()))
        .collect()
}

/// Fixed-position receive array: a half-wavelength ULA along the region's
/// longest axis, centered on the region.
pub fn fpa_placement<T: Scalar>(region: &Region<T>, count: usize) -> Result<RxPlacement<T>> {
    let axis = region.longest_axis();
    let extent = region.extents()[axis];
    let span = T::of_usize(count.saturating_sub(1)) * T::lit(MIN_ANTENNA_DISTANCE);
    if span > extent + T::lit(1e-12) {
        return Err(Error::RegionTooSmall {
            antennas: count,
            extent: extent.to_f64_lossy(),
        });
    }
    let center = region.center();
    let positions = (0..count)
        .map(|i| {
            let mut p = center;
            p.0[axis] += T::of_usize(i) * T::lit(MIN_ANTENNA_DISTANCE) - span * T::lit(0.5);
            region.clamp(&p)
        })
        .collect();
    RxPlacement::new(positions)
}

/// Per-path transmit factors `coeff_l * exp(j 2 pi <tx_l, t_n>)`, path-major.
fn tx_factors<T: Scalar>(spec: &ChannelSpec<T>, tx: &[Position<T>]) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(spec.len() * tx.len());
    for p in spec.paths() {
        let k = p.tx_dir.expect("validated MIMO spec");
        for t in tx {
            out.push(p.coeff * phasor(T::two_pi() * t.dot(k.as_array())));
        }
    }
    out
}

fn fill_row<T: Scalar>(
    spec: &ChannelSpec<T>,
    factors: &[Complex<T>],
    n_tx: usize,
    r: &Position<T>,
    row: &mut [Complex<T>],
) {
    row.iter_mut().for_each(|z| *z = Complex::zero());
    for (l, p) in spec.paths().iter().enumerate() {
        let a = phasor(T::two_pi() * r.dot(p.rx_dir.as_array()));
        for (n, z) in row.iter_mut().enumerate() {
            *z += a * factors[l * n_tx + n];
        }
    }
}

/// `H[m][n] = sum_l coeff_l exp(j 2 pi <rx_l, r_m>) exp(j 2 pi <tx_l, t_n>)`.
pub fn build_channel_matrix<T: Scalar>(
    spec: &MimoChannelSpec<T>,
    tx_positions: &[Position<T>],
    rx: &RxPlacement<T>,
) -> Result<CMatrix<T>> {
    check_spacing(tx_positions)?;
    let n_tx = tx_positions.len();
    let factors = tx_factors(spec.spec(), tx_positions);
    let mut h = CMatrix::zeros(rx.len(), n_tx);
    for (m, r) in rx.positions().iter().enumerate() {
        fill_row(spec.spec(), &factors, n_tx, r, h.row_mut(m));
    }
    Ok(h)
}

/// `log2 det(I + (rho / N) H H^H)`, evaluated through Cholesky on the
/// smaller Gram matrix.
pub fn capacity_identity_cov<T: Scalar>(h: &CMatrix<T>, rho: T, n_tx: usize) -> Result<T> {
    if !(rho >= T::zero()) {
        return Err(Error::NegativeSnr(rho.to_f64_lossy()));
    }
    if n_tx == 0 {
        return Err(Error::DimensionMismatch("zero transmit antennas".into()));
    }
    if rho == T::zero() {
        return Ok(T::zero());
    }
    let scale = rho / T::of_usize(n_tx);
    let mut g = h.compact_gram();
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            g[(i, j)] *= scale;
        }
        g[(i, i)] += Complex::new(T::one(), T::zero());
    }
    let logdet = hermitian_logdet(&g).ok_or_else(|| {
        Error::DimensionMismatch("capacity Gram matrix not positive definite".into())
    })?;
    Ok((logdet / T::LN_2()).max(T::zero()))
}

/// Capacity from singular values: `sum_k log2(1 + (rho / N) sigma_k^2)`.
pub fn capacity_from_singular_values<T: Scalar>(h: &CMatrix<T>, rho: T, n_tx: usize) -> Result<T> {
    if !(rho >= T::zero()) {
        return Err(Error::NegativeSnr(rho.to_f64_lossy()));
    }
    let scale = rho / T::of_usize(n_tx);
    Ok(singular_values(h)
        .into_iter()
        .fold(T::zero(), |acc, s| acc + (T::one() + scale * s * s).log2()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterFilling<T> {
    pub capacity: T,
    /// Eigenchannel gains `sigma_k^2`, descending.
    pub gains: Vec<T>,
    /// Power on each eigenchannel, aligned with `gains`.
    pub powers: Vec<T>,
    pub water_level: T,
}

/// Capacity-optimal power allocation `p_k = (mu - 1/sigma_k^2)^+` with
/// `sum p_k = rho_total` (unit noise).
pub fn capacity_waterfilling<T: Scalar>(h: &CMatrix<T>, rho_total: T) -> Result<WaterFilling<T>> {
    if !(rho_total > T::zero() && rho_total.is_finite()) {
        return Err(Error::NonPositivePower(rho_total.to_f64_lossy()));
    }
    let gains: Vec<T> = hermitian_eigenvalues(&h.compact_gram())
        .into_iter()
        .map(|g| g.max(T::zero()))
        .collect();
    let gmax = gains.first().copied().unwrap_or_else(T::zero);
    if !(gmax > T::zero()) {
        return Err(Error::RankZero);
    }
    let cutoff = gmax * T::lit(1e-12);
    let usable = gains.iter().take_while(|g| **g > cutoff).count();
    let mut active = usable;
    let mut mu = T::zero();
    while active > 0 {
        let inv_sum = gains[..active]
            .iter()
            .fold(T::zero(), |acc, g| acc + T::one() / *g);
        mu = (rho_total + inv_sum) / T::of_usize(active);
        if mu > T::one() / gains[active - 1] {
            break;
        }
        active -= 1;
    }
    let powers: Vec<T> = gains
        .iter()
        .enumerate()
        .map(|(k, g)| {
            if k < active {
                (mu - T::one() / *g).max(T::zero())
            } else {
                T::zero()
            }
        })
        .collect();
    let capacity = gains
        .iter()
        .zip(&powers)
        .fold(T::zero(), |acc, (g, p)| acc + (T::one() + *g * *p).log2());
    Ok(WaterFilling {
        capacity,
        gains,
        powers,
        water_level: mu,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialSearchConfig<T> {
    /// Candidate lattice step, in lambda.
    pub step: T,
    pub max_passes: usize,
    /// A pass improving capacity by less than this (bits/s/Hz) ends the search.
    pub min_pass_gain: T,
}

impl<T: Scalar> Default for SequentialSearchConfig<T> {
    fn default() -> Self {
        SequentialSearchConfig {
            step: T::lit(0.1),
            max_passes: 10,
            min_pass_gain: T::lit(1e-6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialOutcome<T> {
    pub placement: RxPlacement<T>,
    pub capacity: T,
    /// Capacity of the initial (fixed-array) placement.
    pub initial_capacity: T,
    /// Capacity at the start and after every pass.
    pub trace: Vec<T>,
}

/// Sequential per-antenna placement: starting from the half-wavelength
/// array in the region, each antenna in turn moves to the lattice point
/// that maximises identity-covariance capacity with the others fixed.
/// Candidates closer than lambda/2 to another antenna are skipped, and an
/// antenna only moves on strict improvement.
pub fn sequential_position_search<T: Scalar>(
    spec: &MimoChannelSpec<T>,
    region: &Region<T>,
    num_rx: usize,
    tx_positions: &[Position<T>],
    rho: T,
    cfg: &SequentialSearchConfig<T>,
) -> Result<SequentialOutcome<T>> {
    check_spacing(tx_positions)?;
    let init = fpa_placement(region, num_rx)?;
    let n_tx = tx_positions.len();
    let factors = tx_factors(spec.spec(), tx_positions);
    let grid = region.grid(cfg.step)?;
    let candidates: Vec<Position<T>> = grid.points().collect();
    let mut candidate_rows = vec![Complex::zero(); candidates.len() * n_tx];
    for (c, r) in candidates.iter().enumerate() {
        fill_row(
            spec.spec(),
            &factors,
            n_tx,
            r,
            &mut candidate_rows[c * n_tx..(c + 1) * n_tx],
        );
    }

    let mut positions = init.positions().to_vec();
    let mut h = build_channel_matrix(spec, tx_positions, &init)?;
    let initial_capacity = capacity_identity_cov(&h, rho, n_tx)?;
    let mut capacity = initial_capacity;
    let mut trace = vec![capacity];
    let min_dist = T::lit(MIN_ANTENNA_DISTANCE - DISTANCE_SLACK);

    for _pass in 0..cfg.max_passes {
        let pass_start = capacity;
        for m in 0..num_rx {
            let saved: Vec<Complex<T>> = h.row(m).to_vec();
            let mut best: Option<(usize, T)> = None;
            for (c, cand) in candidates.iter().enumerate() {
                let clear = positions
                    .iter()
                    .enumerate()
                    .all(|(k, p)| k == m || cand.distance(p) >= min_dist);
                if !clear {
                    continue;
                }
                h.row_mut(m)
                    .copy_from_slice(&candidate_rows[c * n_tx..(c + 1) * n_tx]);
                let cap = capacity_identity_cov(&h, rho, n_tx)?;
                let incumbent = best.map_or(capacity, |(_, v)| v);
                if cap > incumbent {
                    best = Some((c, cap));
                }
            }
            match best {
                Some((c, cap)) => {
                    positions[m] = candidates[c];
                    h.row_mut(m)
                        .copy_from_slice(&candidate_rows[c * n_tx..(c + 1) * n_tx]);
                    capacity = cap;
                }
                None => h.row_mut(m).copy_from_slice(&saved),
            }
        }
        trace.push(capacity);
        if capacity - pass_start < cfg.min_pass_gain {
            break;
        }
    }
    Ok(SequentialOutcome {
        placement: RxPlacement::new(positions)?,
        capacity,
        initial_capacity,
        trace,
    })
}
