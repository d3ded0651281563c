use thiserror::Error;

/// Errors raised by metric-space evaluations, solvers and the flow engine.
#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("potential leaves the admissible cone: density {density:.3e} at grid index {index} (floor {floor:.1e})")]
    Positivity {
        index: usize,
        density: f64,
        floor: f64,
    },

    #[error("potential is not band-limited: top-third spectral ratio {ratio:.3e}")]
    BandLimit { ratio: f64 },

    #[error("Legendre inversion lost monotonicity on slice t = {t:.6} at grid index {index}")]
    Monotonicity { t: f64, index: usize },

    #[error("Newton solver failed to converge (residual {residual:.3e}, last good epsilon {last_good_epsilon:?})")]
    NewtonDivergence {
        residual: f64,
        last_good_epsilon: Option<f64>,
    },

    #[error("matrix is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("at geodesic parameter {s:.6}: {source}")]
    AtParameter {
        s: f64,
        #[source]
        source: Box<SpaceError>,
    },

    #[error("distance is zero at the base point; first variation undefined")]
    ZeroDistance,

    #[error("step size {tau:.3e} below floor {floor:.1e}")]
    StepTooSmall { tau: f64, floor: f64 },

    #[error("integrator lost positivity at t = {time:.6e}")]
    PositivityLoss { time: f64 },
}

impl SpaceError {
    pub(crate) fn at(s: f64, err: SpaceError) -> SpaceError {
        SpaceError::AtParameter {
            s,
            source: Box::new(err),
        }
    }
}

pub type Result<T, E = SpaceError> = std::result::Result<T, E>;
