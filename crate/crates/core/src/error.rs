use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("leading triangle is degenerate (|det| = {det:e}, threshold {threshold:e})")]
    SingularTriangle { det: f64, threshold: f64 },

    #[error("time {t} s is outside the waypoint schedule [{start}, {end}]")]
    OutOfSchedule { t: f64, start: f64, end: f64 },

    #[error("invalid waypoint schedule: {0}")]
    InvalidSchedule(String),

    #[error("pitch {theta} rad is within the gimbal guard of +/-pi/2")]
    GimbalLock { theta: f64 },

    #[error("cable endpoints coincide (length {length:e} m)")]
    CoincidentEndpoints { length: f64 },

    #[error("payload load vector vanishes (free fall)")]
    ZeroLoad,

    #[error("cable {cable} is nearly orthogonal to the load direction (cosine {cosine})")]
    DegenerateGeometry { cable: usize, cosine: f64 },

    #[error("desired force balance vanishes (norm {norm:e} N)")]
    DegenerateForce { norm: f64 },

    #[error("desired attitude out of range (asin argument {argument})")]
    AttitudeOutOfRange { argument: f64 },

    #[error("Riccati problem has no stabilizing solution: {0}")]
    NotStabilizable(String),

    #[error("Riccati iteration did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("simulation aborted ({entity}) at t = {time} s: {source}\n  state snapshot: {snapshot}")]
    Aborted {
        entity: String,
        time: f64,
        #[source]
        source: Box<Error>,
        snapshot: String,
    },
}
