use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("stability index {0} outside (0, 2)")]
    IndexOutOfRange(f64),
    #[error("stability index {0} outside the supported range [0.3, 1.9]")]
    UnsupportedIndex(f64),
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),
    #[error("density grid too small: tail correction is {ratio:.3e} of the total (limit 1e-2)")]
    GridInsufficient { ratio: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eigenvalues must be nondecreasing: gamma[{index}] = {value} < previous {previous}")]
    NonMonotone { index: usize, value: f64, previous: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("heat example rejected: {0}")]
    HeatExampleRejected(String),
    #[error("k_t envelope violated at mode {mode}, t = {t}: k_t = {kt:.6e} > envelope {envelope:.6e}")]
    EnvelopeViolation { mode: usize, t: f64, kt: f64, envelope: f64 },
    #[error("G_beta overflow for z = {0}")]
    Overflow(f64),
    #[error("p-th moment infinite for stable index alpha (p = {p}, alpha = {alpha})")]
    InfiniteMoment { p: f64, alpha: f64 },
    #[error("no signal window: fewer than {min} consecutive points above the 3-sigma noise floor")]
    NoSignalWindow { min: usize },
    #[error("model file: {0}")]
    ModelFile(String),
}
