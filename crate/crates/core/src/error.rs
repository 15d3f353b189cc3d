use thiserror::Error;

/// Failure modes shared by every numerical operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sine transform did not converge at omega = {omega} (relative change {change:.3e})")]
    NonIntegrableKernel { omega: f64, change: f64 },
    #[error("round-trip residual {residual:.3e} exceeds {tolerance:.1e}")]
    GridTooCoarse { residual: f64, tolerance: f64 },
    #[error("pole on the imaginary axis near s = {re} + {im}i")]
    PoleOnAxis { re: f64, im: f64 },
    #[error("medium has no absorption (Im eps vanishes on the grid)")]
    NotAbsorptive,
    #[error("root expansion residual {residual:.3e} exceeds {tolerance:.1e}")]
    IllConditioned { residual: f64, tolerance: f64 },
    #[error("poles of the rational function have not been computed")]
    PolesNotComputed,
    #[error("contour inversion at t = {t} changed by {change:.3e} under node doubling")]
    ContourDivergence { t: f64, change: f64 },
    #[error("medium is not strictly dissipative (stability margin {margin:.3e})")]
    NotDissipative { margin: f64 },
    #[error("memory convolution changed by {change:.3e} under step halving")]
    ConvolutionUnderresolved { change: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
