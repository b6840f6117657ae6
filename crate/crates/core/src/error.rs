use thiserror::Error;

/// Errors raised by the model, optimisation and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("elevation {0} rad outside [0, pi]")]
    ElevationOutOfRange(f64),
    #[error("direction vector has zero or non-finite norm")]
    DegenerateDirection,
    #[error("channel needs at least one path")]
    NoPaths,
    #[error("path {0}: coefficient is not finite")]
    NonFiniteCoefficient(usize),
    #[error("path {0}: transmit direction presence differs from path 0")]
    MixedTxPresence(usize),
    #[error("position has non-finite components")]
    NonFinitePosition,
    #[error("region: {0}")]
    InvalidRegion(String),
    #[error("step must be positive and finite, got {0}")]
    NonPositiveStep(f64),
    #[error("invalid search configuration: {0}")]
    InvalidSearchConfig(String),
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("cosine-domain direction {0} outside [-1, 1]")]
    CosineOutOfRange(f64),
    #[error("array layout: {0}")]
    InvalidLayout(String),
    #[error("weights must have {expected} entries, got {actual}")]
    WeightLength { expected: usize, actual: usize },
    #[error("weights are all zero")]
    ZeroWeights,
    #[error("signal and interference steering vectors are collinear (|rho| = {0})")]
    CollinearSteering(f64),
    #[error("spacing search range is empty")]
    EmptySpacingRange,
    #[error("pattern needs at least 2 grid points")]
    TooFewPatternPoints,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("antennas {0} and {1} closer than half a wavelength ({2:.6} lambda)")]
    SpacingViolation(usize, usize, f64),
    #[error("region cannot host {antennas} antennas at half-wavelength spacing (longest extent {extent} lambda)")]
    RegionTooSmall { antennas: usize, extent: f64 },
    #[error("SNR must be nonnegative, got {0}")]
    NegativeSnr(f64),
    #[error("channel matrix has rank zero")]
    RankZero,
    #[error("total power must be positive, got {0}")]
    NonPositivePower(f64),
    #[error("measurement count must be at least 1")]
    NoMeasurements,
    #[error("{requested} grid measurements exceed lattice capacity {capacity}")]
    GridCapacity { requested: usize, capacity: usize },
    #[error("noise variance must be nonnegative, got {0}")]
    NegativeNoiseVariance(f64),
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("dictionary size {size} smaller than requested sparsity {sparsity}")]
    DictionaryTooSmall { size: usize, sparsity: usize },
    #[error("{measurements} measurements cannot resolve {unknowns} unknowns")]
    Underdetermined { measurements: usize, unknowns: usize },
    #[error("atom matrix is rank deficient (reciprocal condition estimate {rcond:.3e})")]
    RankDeficient { rcond: f64 },
    #[error("reference channel has zero energy on the scoring grid")]
    ZeroEnergyTruth,
}

pub type Result<T> = std::result::Result<T, Error>;
