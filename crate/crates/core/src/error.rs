use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid material parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The top eigenvalue is not separated from the middle one, so the
    /// nearest point on the limit manifold is not well defined.
    #[error("degenerate spectrum: top eigen-gap {gap:.3e} below tolerance {gap_tol:.3e}")]
    DegenerateSpectrum { gap: f64, gap_tol: f64 },

    #[error("input is not tangent to the limit manifold (residual {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("field value at node {node} is not on the limit manifold (residual {residual:.3e})")]
    NotOnManifold { node: usize, residual: f64 },

    #[error("comparability constraint `{which}` violated (value {value:.3e})")]
    ConstraintViolated { which: &'static str, value: f64 },

    #[error("node {index} is a boundary node; stencil needs an interior node")]
    BoundaryNode { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("hedgehog center coincides with grid node {index}")]
    CenterOnNode { index: usize },

    #[error("time step underflow (dt = {dt:.3e}) at iteration {iteration}: bulk term too stiff for this grid")]
    StiffnessFailure { dt: f64, iteration: usize },

    #[error("boundary node {node} is not on the limit manifold (residual {residual:.3e})")]
    NonManifoldBoundary { node: usize, residual: f64 },

    #[error("T is ill-conditioned at node {node} (condition estimate {condition:.3e})")]
    IllConditionedT { node: usize, condition: f64 },

    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("solve failed at L = {l}: {source}")]
    AtElasticConstant {
        l: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
