use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain where the model is defined.
    #[error("invalid parameter `{name}` = {value}: {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("frequency grid too coarse: spacing {spacing} exceeds {limit}")]
    GridResolution { spacing: f64, limit: f64 },

    #[error("pulse aliasing: {0}")]
    Aliasing(String),

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    /// The dispersion of the ideal square comb diverges on a peak edge.
    #[error("singular response at nu = {nu} (square-comb peak edge)")]
    SingularEdge { nu: f64 },

    #[error("quadrature did not converge: estimated error {estimate:e} > tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("time window overflow: {fraction:e} of the energy sits at the window edge")]
    WindowOverflow { fraction: f64 },

    #[error("pulses overlap: {0}")]
    Overlap(String),

    #[error("interferometer misaligned: {0}")]
    Alignment(String),

    #[error("invalid request: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            constraint,
        }
    }
}
