//! Cooperative payload transport by a quadcopter fleet under continuum
//! deformation guidance with per-vehicle LQG tracking.
//!
//! Three leaders define a moving triangle; followers keep fixed barycentric
//! weights inside it. A point-mass payload hangs from every vehicle by an
//! elastic cable. Each vehicle tracks its desired trajectory with an LQ
//! regulator driven by a Kalman estimate of its deviation state.

pub mod desired;
pub mod dynamics;
pub mod error;
pub mod guidance;
pub mod integrate;
pub mod lqg;
pub mod payload;
pub mod sim;
pub mod tension;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use dynamics::{AgentState, ControlInput, InputVector, QuadParams, StateVector};
pub use error::{Error, Result};
pub use guidance::{BarycentricWeights, HomogeneousMap, LeadingTriangle, WaypointSchedule};
pub use lqg::{GainSet, Innovation, LinearModel, NoiseModel};
pub use payload::{CableSpec, PayloadParams, PayloadState};
pub use sim::{MetricsReport, ScenarioConfig, Trace};
pub use tension::TensionSolution;
