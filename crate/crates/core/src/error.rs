use thiserror::Error;

use crate::fss::FssFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operands act on {left} and {right} sites")]
    LengthMismatch { left: usize, right: usize },

    #[error("site {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("invalid site pair ({0}, {1})")]
    InvalidSitePair(usize, usize),

    #[error("product of anticommuting Pauli strings is not Hermitian")]
    NonHermitianProduct,

    #[error("generators {0} and {1} anticommute")]
    AnticommutingGenerators(usize, usize),

    #[error("generator {0} is dependent on the others")]
    DependentGenerators(usize),

    #[error("generators imply -I")]
    SignContradiction,

    #[error("invalid Clifford images: {0}")]
    InvalidClifford(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("stabilizer invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("records mix different (L, T, p) keys")]
    MixedKeys,

    #[error("dense oracle supports at most {max} sites, got {sites}")]
    OracleTooLarge { sites: usize, max: usize },

    #[error("rescaled series do not overlap")]
    NoOverlap,

    #[error("p_c = {0} lies outside the interpolation range of a series")]
    OutOfInterpolationRange(f64),

    #[error("collapse fit did not converge (best quality {})", .best.quality)]
    NotConverged { best: Box<FssFit> },
}
