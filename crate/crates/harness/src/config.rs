//! Experiment configuration: TOML schema, overrides and validation.
//!
//! A config file has a top-level `seed`, an optional `output` directory and
//! one `[experiment]` table whose `kind` selects the experiment. Integer
//! counts are read as signed values so that negative entries are reported
//! as named violations instead of parse failures. Every violation is
//! collected before anything runs.

use std::fmt;
use std::path::{Path, PathBuf};

use ma_core::estimation::{MeasurementStrategy, DEFAULT_DICTIONARY_GRID, MIN_LATTICE_PITCH};
use ma_core::mimo::MIN_ANTENNA_DISTANCE;
use ma_core::{ChannelRecord, PathRecord, SearchConfig64};
use serde::Deserialize;

use crate::error::ConfigError;

/// One violated constraint, addressed by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<i64>,
    pub output: Option<PathBuf>,
    pub experiment: RawExperiment,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RawExperiment {
    Gainmap(RawGainMap),
    Snr(RawSweep),
    Sinr(RawSweep),
    Beam(RawBeam),
    Mimo(RawMimo),
    Estimate(RawEstimate),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGainMap {
    /// `two-path`, `four-path`, `random` or `explicit`.
    pub channel: Option<String>,
    pub paths: Option<i64>,
    pub channel_seed: Option<i64>,
    #[serde(default)]
    pub path: Vec<PathRecord>,
    pub region_width: Option<f64>,
    pub region_height: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSearch {
    pub coarse_step: Option<f64>,
    pub refine: Option<bool>,
    pub refine_step_init: Option<f64>,
    pub refine_tol: Option<f64>,
    pub max_refine_iters: Option<i64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub path_counts: Option<Vec<i64>>,
    pub region_sizes: Option<Vec<f64>>,
    pub trials: Option<i64>,
    pub snr_ref_db: Option<f64>,
    pub inr_ref_db: Option<f64>,
    pub interference_paths: Option<i64>,
    pub search: Option<RawSearch>,
    pub sinr_search: Option<RawSearch>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBeam {
    pub elements: Option<i64>,
    pub two_beam: Option<[f64; 2]>,
    pub null_steer: Option<[f64; 2]>,
    pub spacing_min: Option<f64>,
    pub spacing_max: Option<f64>,
    pub two_beam_step: Option<f64>,
    pub null_step: Option<f64>,
    pub pattern_points: Option<i64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMimo {
    pub tx_antennas: Option<i64>,
    pub rx_antennas: Option<i64>,
    pub region_size: Option<f64>,
    pub path_counts: Option<Vec<i64>>,
    pub snr_db: Option<Vec<f64>>,
    pub seeds: Option<i64>,
    pub step: Option<f64>,
    pub max_passes: Option<i64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEstimate {
    pub region_sizes: Option<Vec<f64>>,
    pub path_counts: Option<Vec<i64>>,
    pub measurement_counts: Option<Vec<i64>>,
    pub measurement_factors: Option<Vec<i64>>,
    pub strategy: Option<String>,
    /// `on-grid` or `off-grid`.
    pub truth: Option<String>,
    pub noise_var: Option<f64>,
    pub dictionary_grid: Option<i64>,
    pub trials: Option<i64>,
    pub eps_residual: Option<f64>,
    pub score_step: Option<f64>,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    GainMap(GainMapParams),
    Snr(SweepParams),
    Sinr(SweepParams),
    Beam(BeamParams),
    Mimo(MimoParams),
    Estimate(EstimateParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::GainMap(_) => "gainmap",
            Experiment::Snr(_) => "snr",
            Experiment::Sinr(_) => "sinr",
            Experiment::Beam(_) => "beam",
            Experiment::Mimo(_) => "mimo",
            Experiment::Estimate(_) => "estimate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSource {
    TwoPath,
    FourPath,
    Random { paths: usize, seed: u64 },
    Explicit(ChannelRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainMapParams {
    pub channel: ChannelSource,
    pub width: f64,
    pub height: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub path_counts: Vec<usize>,
    pub region_sizes: Vec<f64>,
    pub trials: usize,
    pub snr_ref_db: f64,
    pub inr_ref_db: f64,
    pub interference_paths: Option<usize>,
    pub search: SearchConfig64,
    pub sinr_search: SearchConfig64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamParams {
    pub elements: usize,
    pub two_beam: [f64; 2],
    pub null_steer: [f64; 2],
    pub spacing_min: f64,
    pub spacing_max: f64,
    pub two_beam_step: f64,
    pub null_step: f64,
    pub pattern_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MimoParams {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub region_size: f64,
    pub path_counts: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub seeds: usize,
    pub step: f64,
    pub max_passes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthModel {
    OnGrid,
    OffGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementRule {
    Count(usize),
    PerPath(usize),
}

impl MeasurementRule {
    pub fn resolve(&self, paths: usize) -> usize {
        match *self {
            MeasurementRule::Count(k) => k,
            MeasurementRule::PerPath(f) => f * paths,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateParams {
    pub region_sizes: Vec<f64>,
    pub path_counts: Vec<usize>,
    pub measurements: Vec<MeasurementRule>,
    pub strategy: MeasurementStrategy,
    pub truth: TruthModel,
    pub noise_var: f64,
    pub dictionary_grid: usize,
    pub trials: usize,
    pub eps_residual: f64,
    pub score_step: f64,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<i64>,
}

pub fn load_raw(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    parse_raw(&text).map_err(|message| ConfigError::Parse {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_raw(text: &str) -> Result<RawConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

/// Reads, overrides and validates a config file.
pub fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let raw = load_raw(path)?;
    validate(apply_overrides(raw, overrides)).map_err(ConfigError::Invalid)
}

pub fn apply_overrides(mut raw: RawConfig, o: &Overrides) -> RawConfig {
    if let Some(seed) = o.seed {
        // Seeds above i64::MAX wrap; validation reinterprets the bits.
        raw.seed = Some(seed as i64);
    }
    if let Some(t) = o.trials {
        match &mut raw.experiment {
            RawExperiment::Snr(s) | RawExperiment::Sinr(s) => s.trials = Some(t),
            RawExperiment::Mimo(m) => m.seeds = Some(t),
            RawExperiment::Estimate(e) => e.trials = Some(t),
            RawExperiment::Gainmap(_) | RawExperiment::Beam(_) => {}
        }
    }
    raw
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn count(&mut self, field: &str, value: Option<i64>, default: i64, min: i64) -> usize {
        let v = value.unwrap_or(default);
        if v < 0 {
            self.fail(field, format!("must not be negative (got {v})"));
            return 0;
        }
        if v < min {
            self.fail(field, format!("must be at least {min} (got {v})"));
        }
        v as usize
    }

    fn positive(&mut self, field: &str, value: Option<f64>, default: f64) -> f64 {
        let v = value.unwrap_or(default);
        if !(v > 0.0 && v.is_finite()) {
            self.fail(field, format!("must be positive and finite (got {v})"));
        }
        v
    }

    fn nonnegative(&mut self, field: &str, value: Option<f64>, default: f64) -> f64 {
        let v = value.unwrap_or(default);
        if !(v >= 0.0 && v.is_finite()) {
            self.fail(field, format!("must be nonnegative and finite (got {v})"));
        }
        v
    }

    fn finite(&mut self, field: &str, value: Option<f64>, default: f64) -> f64 {
        let v = value.unwrap_or(default);
        if !v.is_finite() {
            self.fail(field, format!("must be finite (got {v})"));
        }
        v
    }

    fn counts(&mut self, field: &str, value: Option<Vec<i64>>, default: &[i64], min: i64) -> Vec<usize> {
        let v = value.unwrap_or_else(|| default.to_vec());
        if v.is_empty() {
            self.fail(field, "must list at least one value");
        }
        v.iter()
            .enumerate()
            .map(|(i, x)| self.count(&format!("{field}[{i}]"), Some(*x), 0, min))
            .collect()
    }

    fn sizes(&mut self, field: &str, value: Option<Vec<f64>>, default: &[f64], allow_zero: bool) -> Vec<f64> {
        let v = value.unwrap_or_else(|| default.to_vec());
        if v.is_empty() {
            self.fail(field, "must list at least one value");
        }
        for (i, x) in v.iter().enumerate() {
            let ok = x.is_finite() && (*x > 0.0 || (allow_zero && *x == 0.0));
            if !ok {
                let need = if allow_zero { "nonnegative" } else { "positive" };
                self.fail(&format!("{field}[{i}]"), format!("must be {need} and finite (got {x})"));
            }
        }
        v
    }

    fn cosine(&mut self, field: &str, u: f64) {
        if !(-1.0..=1.0).contains(&u) {
            self.fail(field, format!("direction cosine must lie in [-1, 1] (got {u})"));
        }
    }

    fn search(&mut self, field: &str, raw: Option<RawSearch>, base: SearchConfig64) -> SearchConfig64 {
        let r = raw.unwrap_or_default();
        let cfg = SearchConfig64 {
            coarse_step: self.positive(&format!("{field}.coarse_step"), r.coarse_step, base.coarse_step),
            refine: r.refine.unwrap_or(base.refine),
            refine_step_init: self.positive(
                &format!("{field}.refine_step_init"),
                r.refine_step_init,
                base.refine_step_init,
            ),
            refine_tol: self.positive(&format!("{field}.refine_tol"), r.refine_tol, base.refine_tol),
            max_refine_iters: self.count(
                &format!("{field}.max_refine_iters"),
                r.max_refine_iters,
                base.max_refine_iters as i64,
                0,
            ),
        };
        if !(cfg.refine_tol < cfg.refine_step_init) {
            self.fail(
                &format!("{field}.refine_tol"),
                format!(
                    "must be smaller than refine_step_init ({} >= {})",
                    cfg.refine_tol, cfg.refine_step_init
                ),
            );
        }
        cfg
    }
}

pub fn validate(raw: RawConfig) -> Result<ExperimentConfig, Vec<Violation>> {
    let mut c = Checker {
        violations: Vec::new(),
    };
    let seed = match raw.seed {
        Some(s) => s as u64,
        None => {
            c.fail("seed", "is required");
            0
        }
    };
    let experiment = match raw.experiment {
        RawExperiment::Gainmap(g) => Experiment::GainMap(gain_map(&mut c, g, seed)),
        RawExperiment::Snr(s) => Experiment::Snr(sweep(&mut c, s, false)),
        RawExperiment::Sinr(s) => Experiment::Sinr(sweep(&mut c, s, true)),
        RawExperiment::Beam(b) => Experiment::Beam(beam(&mut c, b)),
        RawExperiment::Mimo(m) => Experiment::Mimo(mimo(&mut c, m)),
        RawExperiment::Estimate(e) => Experiment::Estimate(estimate(&mut c, e)),
    };
    if c.violations.is_empty() {
        Ok(ExperimentConfig {
            seed,
            output: raw.output,
            experiment,
        })
    } else {
        Err(c.violations)
    }
}

fn gain_map(c: &mut Checker, g: RawGainMap, seed: u64) -> GainMapParams {
    let width = c.positive("experiment.region_width", g.region_width, 4.0);
    let height = c.positive("experiment.region_height", g.region_height.or(g.region_width), width);
    let step = c.positive("experiment.step", g.step, ma_core::gain_map::DEFAULT_STEP);
    let name = g.channel.unwrap_or_else(|| "two-path".into());
    let channel = match name.as_str() {
        "two-path" => ChannelSource::TwoPath,
        "four-path" => ChannelSource::FourPath,
        "random" => ChannelSource::Random {
            paths: c.count("experiment.paths", g.paths, 4, 1),
            seed: g.channel_seed.map_or(seed, |s| s as u64),
        },
        "explicit" => {
            if g.path.is_empty() {
                c.fail("experiment.path", "explicit channels need at least one [[experiment.path]]");
            }
            let rec = ChannelRecord { paths: g.path };
            if let Err(e) = ma_core::ChannelSpec64::from_record(&rec) {
                c.fail("experiment.path", e.to_string());
            }
            ChannelSource::Explicit(rec)
        }
        other => {
            c.fail(
                "experiment.channel",
                format!("unknown channel `{other}` (expected two-path, four-path, random or explicit)"),
            );
            ChannelSource::TwoPath
        }
    };
    GainMapParams {
        channel,
        width,
        height,
        step,
    }
}

fn sweep(c: &mut Checker, s: RawSweep, interference: bool) -> SweepParams {
    let path_counts = c.counts("experiment.path_counts", s.path_counts, &[1, 5, 10, 20], 1);
    let region_sizes = c.sizes("experiment.region_sizes", s.region_sizes, &[0.0, 2.0, 5.0, 10.0, 20.0], true);
    let trials = c.count("experiment.trials", s.trials, 2000, 1);
    let snr_ref_db = c.finite("experiment.snr_ref_db", s.snr_ref_db, 20.0);
    let inr_ref_db = c.finite("experiment.inr_ref_db", s.inr_ref_db, 20.0);
    let interference_paths = s
        .interference_paths
        .map(|v| c.count("experiment.interference_paths", Some(v), 0, 1));
    if !interference && (s.inr_ref_db.is_some() || s.interference_paths.is_some() || s.sinr_search.is_some()) {
        c.fail("experiment", "interference settings only apply to kind = \"sinr\"");
    }
    let search = c.search("experiment.search", s.search, SearchConfig64::monte_carlo());
    let sinr_search = c.search("experiment.sinr_search", s.sinr_search, SearchConfig64::monte_carlo_sinr());
    SweepParams {
        path_counts,
        region_sizes,
        trials,
        snr_ref_db,
        inr_ref_db,
        interference_paths,
        search,
        sinr_search,
    }
}

fn beam(c: &mut Checker, b: RawBeam) -> BeamParams {
    let elements = c.count("experiment.elements", b.elements, 8, 2);
    let two_beam = b.two_beam.unwrap_or([0.4, -0.4]);
    let null_steer = b.null_steer.unwrap_or([0.0, 1.0 / 15.0]);
    c.cosine("experiment.two_beam[0]", two_beam[0]);
    c.cosine("experiment.two_beam[1]", two_beam[1]);
    c.cosine("experiment.null_steer[0]", null_steer[0]);
    c.cosine("experiment.null_steer[1]", null_steer[1]);
    if null_steer[0] == null_steer[1] {
        c.fail("experiment.null_steer", "signal and interference directions must differ");
    }
    let spacing_min = c.positive("experiment.spacing_min", b.spacing_min, 0.5);
    let spacing_max = c.positive("experiment.spacing_max", b.spacing_max, 2.0);
    if spacing_min < ma_core::beam::MIN_SPACING {
        c.fail(
            "experiment.spacing_min",
            format!(
                "must be at least the {} lambda minimum element spacing (got {spacing_min})",
                ma_core::beam::MIN_SPACING
            ),
        );
    }
    if spacing_max < spacing_min {
        c.fail("experiment.spacing_max", format!("must not be below spacing_min ({spacing_max} < {spacing_min})"));
    }
    BeamParams {
        elements,
        two_beam,
        null_steer,
        spacing_min,
        spacing_max,
        two_beam_step: c.positive("experiment.two_beam_step", b.two_beam_step, 1.0 / 64.0),
        null_step: c.positive("experiment.null_step", b.null_step, 1.0 / 128.0),
        pattern_points: c.count(
            "experiment.pattern_points",
            b.pattern_points,
            ma_core::beam::PATTERN_POINTS as i64,
            2,
        ),
    }
}

fn mimo(c: &mut Checker, m: RawMimo) -> MimoParams {
    let tx_antennas = c.count("experiment.tx_antennas", m.tx_antennas, 4, 1);
    let rx_antennas = c.count("experiment.rx_antennas", m.rx_antennas, 4, 1);
    let region_size = c.positive("experiment.region_size", m.region_size, 3.0);
    let needed = rx_antennas.saturating_sub(1) as f64 * MIN_ANTENNA_DISTANCE;
    if region_size.is_finite() && needed > region_size + 1e-12 {
        c.fail(
            "experiment.region_size",
            format!(
                "a {region_size} lambda region cannot host {rx_antennas} receive antennas under the \
                 {MIN_ANTENNA_DISTANCE} lambda minimum spacing rule (needs {needed} lambda)"
            ),
        );
    }
    let snr_db = m.snr_db.unwrap_or_else(|| vec![-10.0, 0.0, 10.0, 20.0]);
    if snr_db.is_empty() {
        c.fail("experiment.snr_db", "must list at least one value");
    }
    for (i, s) in snr_db.iter().enumerate() {
        if !s.is_finite() {
            c.fail(&format!("experiment.snr_db[{i}]"), format!("must be finite (got {s})"));
        }
    }
    MimoParams {
        tx_antennas,
        rx_antennas,
        region_size,
        path_counts: c.counts("experiment.path_counts", m.path_counts, &[5, 15], 1),
        snr_db,
        seeds: c.count("experiment.seeds", m.seeds, 200, 1),
        step: c.positive("experiment.step", m.step, 0.1),
        max_passes: c.count("experiment.max_passes", m.max_passes, 10, 1),
    }
}

fn estimate(c: &mut Checker, e: RawEstimate) -> EstimateParams {
    let region_sizes = c.sizes("experiment.region_sizes", e.region_sizes, &[2.0, 8.0], false);
    let path_counts = c.counts("experiment.path_counts", e.path_counts, &[1, 2, 4], 1);
    let measurements: Vec<MeasurementRule> = match (e.measurement_counts, e.measurement_factors) {
        (Some(_), Some(_)) => {
            c.fail("experiment.measurement_counts", "give measurement_counts or measurement_factors, not both");
            Vec::new()
        }
        (Some(k), None) => c
            .counts("experiment.measurement_counts", Some(k), &[], 1)
            .into_iter()
            .map(MeasurementRule::Count)
            .collect(),
        (None, f) => c
            .counts("experiment.measurement_factors", f, &[2, 4, 8], 1)
            .into_iter()
            .map(MeasurementRule::PerPath)
            .collect(),
    };
    let strategy = match e.strategy.as_deref().unwrap_or("uniform-random") {
        "uniform-random" => MeasurementStrategy::UniformRandom,
        "grid" => MeasurementStrategy::Grid,
        other => {
            c.fail(
                "experiment.strategy",
                format!("unknown strategy `{other}` (expected uniform-random or grid)"),
            );
            MeasurementStrategy::UniformRandom
        }
    };
    let truth = match e.truth.as_deref().unwrap_or("on-grid") {
        "on-grid" => TruthModel::OnGrid,
        "off-grid" => TruthModel::OffGrid,
        other => {
            c.fail("experiment.truth", format!("unknown truth model `{other}` (expected on-grid or off-grid)"));
            TruthModel::OnGrid
        }
    };
    if strategy == MeasurementStrategy::Grid {
        let max_paths = path_counts.iter().copied().max().unwrap_or(0);
        for (i, a) in region_sizes.iter().enumerate() {
            let per_axis = (a / MIN_LATTICE_PITCH + 1e-9).floor() as usize + 1;
            let capacity = per_axis * per_axis;
            for m in &measurements {
                let k = m.resolve(max_paths);
                if a.is_finite() && k > capacity {
                    c.fail(
                        &format!("experiment.region_sizes[{i}]"),
                        format!(
                            "grid plan with {k} measurements exceeds the {capacity} lattice sites of a \
                             {a} lambda region at {MIN_LATTICE_PITCH} lambda pitch"
                        ),
                    );
                }
            }
        }
    }
    let dictionary_grid = c.count(
        "experiment.dictionary_grid",
        e.dictionary_grid,
        DEFAULT_DICTIONARY_GRID as i64,
        2,
    );
    let eps_residual = c.nonnegative("experiment.eps_residual", e.eps_residual, 1e-12);
    EstimateParams {
        region_sizes,
        path_counts,
        measurements,
        strategy,
        truth,
        noise_var: c.nonnegative("experiment.noise_var", e.noise_var, 0.0),
        dictionary_grid,
        trials: c.count("experiment.trials", e.trials, 20, 1),
        eps_residual,
        score_step: c.positive("experiment.score_step", e.score_step, 0.05),
    }
}
