//! Single receive-antenna placement for SNR and SINR, gradient refinement,
//! and the Monte Carlo sweeps over path count and region size.
//!
//! The search is a coarse lattice scan followed by an axis-aligned pattern
//! search with halving steps, started from the best lattice cell. The
//! pattern search only moves on strict improvement, so the refined value
//! never falls below the coarse optimum.

use rayon::prelude::*;

use crate::channel::{
    channel_gain, evaluate_on_grid, sample_stochastic_channel_with, trial_rng, ChannelSpec,
    Position, Region, StochasticOptions,
};
use crate::error::{Error, Result};
use crate::scalar::{db_to_linear, linear_to_db, phasor, Scalar};
use num_complex::Complex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig<T> {
    pub coarse_step: T,
    pub refine: bool,
    pub refine_step_init: T,
    pub refine_tol: T,
    pub max_refine_iters: usize,
}

impl<T: Scalar> SearchConfig<T> {
    pub fn new(
        coarse_step: T,
        refine: bool,
        refine_step_init: T,
        refine_tol: T,
        max_refine_iters: usize,
    ) -> Result<Self> {
        let cfg = SearchConfig {
            coarse_step,
            refine,
            refine_step_init,
            refine_tol,
            max_refine_iters,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Lambda/10 lattice plus refinement, used inside Monte Carlo loops.
    pub fn monte_carlo() -> Self {
        SearchConfig {
            coarse_step: T::lit(0.1),
            refine: true,
            refine_step_init: T::lit(0.05),
            refine_tol: T::lit(1e-4),
            max_refine_iters: 200,
        }
    }

    /// Lambda/20 lattice plus refinement. SINR peaks sit next to narrow
    /// interference nulls, which a lambda/10 start often misses.
    pub fn monte_carlo_sinr() -> Self {
        SearchConfig {
            coarse_step: T::lit(0.05),
            refine: true,
            refine_step_init: T::lit(0.025),
            refine_tol: T::lit(1e-4),
            max_refine_iters: 200,
        }
    }

    /// Lambda/50 lattice plus refinement, for single-realisation studies.
    pub fn fine() -> Self {
        SearchConfig {
            coarse_step: T::lit(0.02),
            refine: true,
            refine_step_init: T::lit(0.01),
            refine_tol: T::lit(1e-6),
            max_refine_iters: 200,
        }
    }

    pub fn coarse_only(step: T) -> Self {
        SearchConfig {
            coarse_step: step,
            refine: false,
            refine_step_init: step * T::lit(0.5),
            refine_tol: step * T::lit(1e-3),
            max_refine_iters: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coarse_step > T::zero() && self.coarse_step.is_finite()) {
            return Err(Error::InvalidSearchConfig("coarse_step must be positive".into()));
        }
        if !(self.refine_tol > T::zero()) {
            return Err(Error::InvalidSearchConfig("refine_tol must be positive".into()));
        }
        if !(self.refine_tol < self.refine_step_init) {
            return Err(Error::InvalidSearchConfig(
                "refine_tol must be smaller than refine_step_init".into(),
            ));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for SearchConfig<T> {
    fn default() -> Self {
        Self::monte_carlo()
    }
}

/// Result of a placement search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement<T> {
    pub position: Position<T>,
    /// Objective at `position` (linear SNR or SINR).
    pub value: T,
    pub coarse_position: Position<T>,
    pub coarse_value: T,
}

/// Desired and interfering channels with their reference-point
/// normalisations.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceScenario<T> {
    pub signal: ChannelSpec<T>,
    pub interference: ChannelSpec<T>,
    pub snr_ref_db: T,
    pub inr_ref_db: T,
    signal_scale: T,
    interference_scale: T,
}

impl<T: Scalar> InterferenceScenario<T> {
    /// Assumes both channels have unit expected power at the reference
    /// point, which holds for [`sample_stochastic_channel_with`] draws.
    pub fn new(
        signal: ChannelSpec<T>,
        interference: ChannelSpec<T>,
        snr_ref_db: T,
        inr_ref_db: T,
    ) -> Self {
        Self::with_mean_powers(signal, interference, snr_ref_db, inr_ref_db, T::one(), T::one())
    }

    /// `signal_mean_power` and `interference_mean_power` are the expected
    /// `|h(ref)|^2` of each channel ensemble.
    pub fn with_mean_powers(
        signal: ChannelSpec<T>,
        interference: ChannelSpec<T>,
        snr_ref_db: T,
        inr_ref_db: T,
        signal_mean_power: T,
        interference_mean_power: T,
    ) -> Self {
        InterferenceScenario {
            signal_scale: db_to_linear(snr_ref_db) / signal_mean_power,
            interference_scale: db_to_linear(inr_ref_db) / interference_mean_power,
            signal,
            interference,
            snr_ref_db,
            inr_ref_db,
        }
    }

    pub fn signal_scale(&self) -> T {
        self.signal_scale
    }

    pub fn interference_scale(&self) -> T {
        self.interference_scale
    }

    pub fn sinr(&self, r: &Position<T>) -> T {
        sinr_value(
            self.signal_scale * channel_gain(&self.signal, r).norm_sqr(),
            self.interference_scale * channel_gain(&self.interference, r).norm_sqr(),
        )
    }
}

#[inline]
fn sinr_value<T: Scalar>(signal: T, interference: T) -> T {
    signal / (interference + T::one())
}

/// Lattice scan then optional pattern search. `coarse` holds the objective
/// at each lattice point in grid order.
fn search<T: Scalar>(
    region: &Region<T>,
    cfg: &SearchConfig<T>,
    coarse_values: impl FnOnce(&crate::channel::Grid<T>) -> Vec<T>,
    objective: impl Fn(&Position<T>) -> T,
) -> Result<Placement<T>> {
    cfg.validate()?;
    let grid = region.grid(cfg.coarse_step)?;
    let values = coarse_values(&grid);
    if values.is_empty() {
        return Err(Error::InvalidRegion("empty search lattice".into()));
    }
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let coarse_position = grid.point(best);
    let coarse_value = values[best];
    let (position, value) = if cfg.refine {
        pattern_search(region, cfg, coarse_position, coarse_value, &objective)
    } else {
        (coarse_position, coarse_value)
    };
    Ok(Placement {
        position,
        value,
        coarse_position,
        coarse_value,
    })
}

fn pattern_search<T: Scalar>(
    region: &Region<T>,
    cfg: &SearchConfig<T>,
    start: Position<T>,
    start_value: T,
    objective: &impl Fn(&Position<T>) -> T,
) -> (Position<T>, T) {
    let axes = region.active_axes();
    let (mut x, mut fx) = (start, start_value);
    let mut step = cfg.refine_step_init;
    let mut iters = 0;
    while step >= cfg.refine_tol && iters < cfg.max_refine_iters {
        iters += 1;
        let mut best: Option<(Position<T>, T)> = None;
        for &a in &axes {
            for sign in [T::one(), -T::one()] {
                let mut cand = x;
                cand.0[a] += sign * step;
                let cand = region.clamp(&cand);
                if cand == x {
                    continue;
                }
                let f = objective(&cand);
                let incumbent = best.map(|(_, v)| v).unwrap_or(fx);
                if f > incumbent {
                    best = Some((cand, f));
                }
            }
        }
        match best {
            Some((p, f)) => {
                x = p;
                fx = f;
            }
            None => step *= T::lit(0.5),
        }
    }
    (x, fx)
}

/// Position maximising `snr_scale * |h(r)|^2` over the region.
pub fn max_snr_position<T: Scalar>(
    spec: &ChannelSpec<T>,
    snr_scale: T,
    region: &Region<T>,
    cfg: &SearchConfig<T>,
) -> Result<Placement<T>> {
    search(
        region,
        cfg,
        |grid| {
            evaluate_on_grid(spec, grid)
                .into_iter()
                .map(|h| snr_scale * h.norm_sqr())
                .collect()
        },
        |r| snr_scale * channel_gain(spec, r).norm_sqr(),
    )
}

/// Position maximising `rho_s |h_s|^2 / (rho_i |h_i|^2 + 1)`.
pub fn max_sinr_position<T: Scalar>(
    scn: &InterferenceScenario<T>,
    region: &Region<T>,
    cfg: &SearchConfig<T>,
) -> Result<Placement<T>> {
    search(
        region,
        cfg,
        |grid| {
            let hs = evaluate_on_grid(&scn.signal, grid);
            let hi = evaluate_on_grid(&scn.interference, grid);
            hs.iter()
                .zip(&hi)
                .map(|(s, i)| {
                    sinr_value(
                        scn.signal_scale * s.norm_sqr(),
                        scn.interference_scale * i.norm_sqr(),
                    )
                })
                .collect()
        },
        |r| scn.sinr(r),
    )
}

/// Gradient of `|h(r)|^2` with respect to all three coordinates:
/// `2 Re[conj(h) * sum_l coeff_l * j 2 pi k_l * exp(j 2 pi <k_l, r>)]`.
pub fn snr_gradient_3d<T: Scalar>(spec: &ChannelSpec<T>, r: &Position<T>) -> [T; 3] {
    let zero = Complex::new(T::zero(), T::zero());
    let mut h = zero;
    let mut dh = [zero; 3];
    for p in spec.paths() {
        let k = p.rx_dir.as_array();
        let term = p.coeff * phasor(T::two_pi() * r.dot(k));
        h += term;
        // d/dr of the term is j 2 pi k * term
        let jterm = Complex::new(-term.im, term.re) * T::two_pi();
        for a in 0..3 {
            dh[a] += jterm * k[a];
        }
    }
    let two = T::lit(2.0);
    let hc = h.conj();
    [
        two * (hc * dh[0]).re,
        two * (hc * dh[1]).re,
        two * (hc * dh[2]).re,
    ]
}

/// In-plane (x, y) gradient of `|h(r)|^2`.
pub fn snr_gradient<T: Scalar>(spec: &ChannelSpec<T>, r: &Position<T>) -> [T; 2] {
    let g = snr_gradient_3d(spec, r);
    [g[0], g[1]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig<T> {
    pub max_iters: usize,
    /// Initial trial step length along the normalised gradient, in lambda.
    pub initial_step: T,
    /// Stop once the accepted step length falls below this.
    pub min_step: T,
    /// Armijo sufficient-increase constant.
    pub armijo: T,
}

impl<T: Scalar> Default for AscentConfig<T> {
    fn default() -> Self {
        AscentConfig {
            max_iters: 500,
            initial_step: T::lit(0.05),
            min_step: T::lit(1e-10),
            armijo: T::lit(1e-4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult<T> {
    pub position: Position<T>,
    pub objective: T,
    /// Objective after every accepted iterate, starting with `r0`.
    pub history: Vec<T>,
}

/// Projected gradient ascent on `|h|^2` with backtracking along the
/// normalised gradient. Each accepted step satisfies an Armijo condition so
/// the objective never decreases.
pub fn gradient_ascent_refine<T: Scalar>(
    spec: &ChannelSpec<T>,
    r0: &Position<T>,
    region: &Region<T>,
    cfg: &AscentConfig<T>,
) -> AscentResult<T> {
    let objective = |r: &Position<T>| channel_gain(spec, r).norm_sqr();
    let axes = region.active_axes();
    let mut x = region.clamp(r0);
    let mut fx = objective(&x);
    let mut history = vec![fx];
    let mut step = cfg.initial_step;
    for _ in 0..cfg.max_iters {
        let g3 = snr_gradient_3d(spec, &x);
        let mut g = [T::zero(); 3];
        for &a in &axes {
            g[a] = g3[a];
        }
        let gnorm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if !(gnorm > T::zero()) {
            break;
        }
        let dir = Position(g).scaled(T::one() / gnorm);
        let mut t = step;
        let mut accepted = None;
        while t >= cfg.min_step {
            let cand = region.clamp(&(x + dir * t));
            let moved = cand - x;
            let predicted = moved.dot(&g);
            let fc = objective(&cand);
            if moved.norm() > T::zero() && fc > fx && fc >= fx + cfg.armijo * predicted {
                accepted = Some((cand, fc, t));
                break;
            }
            t *= T::lit(0.5);
        }
        match accepted {
            Some((cand, fc, t)) => {
                x = cand;
                fx = fc;
                history.push(fx);
                step = (t + t).min(cfg.initial_step);
            }
            None => break,
        }
    }
    AscentResult {
        position: x,
        objective: fx,
        history,
    }
}

/// Monte Carlo sweep settings shared by the SNR and SINR experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig<T> {
    pub search: SearchConfig<T>,
    /// Search used for the SINR objective.
    pub sinr_search: SearchConfig<T>,
    pub snr_ref_db: T,
    pub inr_ref_db: T,
    /// Interference path count; `None` means the same as the signal.
    pub interference_paths: Option<usize>,
}

impl<T: Scalar> Default for MonteCarloConfig<T> {
    fn default() -> Self {
        MonteCarloConfig {
            search: SearchConfig::monte_carlo(),
            sinr_search: SearchConfig::monte_carlo_sinr(),
            snr_ref_db: T::lit(20.0),
            inr_ref_db: T::lit(20.0),
            interference_paths: None,
        }
    }
}

/// Per-realisation outcome of a sweep trial (linear values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome<T> {
    pub snr_at_reference: T,
    pub coarse_max_snr: T,
    pub max_snr: T,
    pub max_sinr: Option<T>,
}

/// Runs `trials` independent realisations on a `size x size` square.
///
/// Trial `i` draws from `trial_rng(seed, i)`: first the signal channel, then
/// (when `with_interference`) the interference channel. Trials run on the
/// ambient rayon pool and results come back in trial order, so the output
/// does not depend on the thread count.
pub fn run_trials<T: Scalar>(
    num_paths: usize,
    size: T,
    trials: usize,
    seed: u64,
    mc: &MonteCarloConfig<T>,
    with_interference: bool,
) -> Result<Vec<TrialOutcome<T>>> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    if num_paths == 0 {
        return Err(Error::NoPaths);
    }
    mc.search.validate()?;
    mc.sinr_search.validate()?;
    let region = Region::square(size)?;
    let opts = StochasticOptions::default();
    let rho_s = db_to_linear(mc.snr_ref_db);
    let interference_paths = mc.interference_paths.unwrap_or(num_paths);
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let signal: ChannelSpec<T> = sample_stochastic_channel_with(num_paths, &mut rng, &opts)?;
            let snr = max_snr_position(&signal, rho_s, &region, &mc.search)?;
            let snr_at_reference =
                rho_s * channel_gain(&signal, &region.reference_point()).norm_sqr();
            let mut max_snr = snr.value;
            let max_sinr = if with_interference {
                let interference =
                    sample_stochastic_channel_with(interference_paths, &mut rng, &opts)?;
                let scn =
                    InterferenceScenario::new(signal, interference, mc.snr_ref_db, mc.inr_ref_db);
                let best = max_sinr_position(&scn, &region, &mc.sinr_search)?;
                // Second SNR start at the SINR optimum keeps max SINR <= max SNR
                // for every trial even when the two searches use different lattices.
                let objective = |r: &Position<T>| rho_s * channel_gain(&scn.signal, r).norm_sqr();
                let at_sinr = objective(&best.position);
                if at_sinr > max_snr {
                    let start = if mc.search.refine {
                        pattern_search(&region, &mc.search, best.position, at_sinr, &objective).1
                    } else {
                        at_sinr
                    };
                    max_snr = start;
                }
                Some(best.value)
            } else {
                None
            };
            Ok(TrialOutcome {
                snr_at_reference,
                coarse_max_snr: snr.coarse_value,
                max_snr,
                max_sinr,
            })
        })
        .collect()
}

/// Mean of linear samples, reported in dB with a standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSummary<T> {
    pub trials: usize,
    pub mean_linear: T,
    pub std_error_linear: T,
    pub mean_db: T,
    /// 95% confidence half-width, propagated to dB.
    pub ci95_half_width_db: T,
}

impl<T: Scalar> MonteCarloSummary<T> {
    /// Samples are reduced in the given order.
    pub fn from_linear(samples: &[T]) -> Self {
        let n = T::of_usize(samples.len());
        let mean = samples.iter().fold(T::zero(), |acc, x| acc + *x) / n;
        let var = if samples.len() > 1 {
            samples
                .iter()
                .fold(T::zero(), |acc, x| acc + (*x - mean) * (*x - mean))
                / (n - T::one())
        } else {
            T::zero()
        };
        let se = (var / n).sqrt();
        let ten_over_ln10 = T::lit(10.0) / T::LN_10();
        MonteCarloSummary {
            trials: samples.len(),
            mean_linear: mean,
            std_error_linear: se,
            mean_db: linear_to_db(mean),
            ci95_half_width_db: T::lit(1.96) * se / mean * ten_over_ln10,
        }
    }
}

/// Expected maximum SNR (dB) of one receive antenna on an `size x size`
/// square, with the reference-point SNR normalised to `mc.snr_ref_db`.
pub fn expected_max_snr<T: Scalar>(
    num_paths: usize,
    size: T,
    trials: usize,
    seed: u64,
    mc: &MonteCarloConfig<T>,
) -> Result<MonteCarloSummary<T>> {
    let outcomes = run_trials(num_paths, size, trials, seed, mc, false)?;
    let snr: Vec<T> = outcomes.iter().map(|o| o.max_snr).collect();
    Ok(MonteCarloSummary::from_linear(&snr))
}

/// Expected maximum SINR (dB) under an independent interfering channel.
pub fn expected_max_sinr<T: Scalar>(
    num_paths: usize,
    size: T,
    trials: usize,
    seed: u64,
    mc: &MonteCarloConfig<T>,
) -> Result<MonteCarloSummary<T>> {
    let outcomes = run_trials(num_paths, size, trials, seed, mc, true)?;
    let sinr: Vec<T> = outcomes
        .iter()
        .map(|o| o.max_sinr.expect("interference requested"))
        .collect();
    Ok(MonteCarloSummary::from_linear(&sinr))
}
