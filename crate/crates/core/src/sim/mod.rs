//! Mission configuration, closed-loop simulation, traces and metrics.

pub mod config;
pub mod engine;
pub mod metrics;
pub mod scenario;
pub mod trace;

pub use config::{Flags, GuidanceMode, ScenarioConfig};
pub use engine::run;
pub use metrics::{compute_metrics, containment_check, Containment, MetricsReport};
pub use trace::Trace;
