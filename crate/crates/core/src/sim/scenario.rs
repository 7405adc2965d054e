//! Built-in scenarios: the 20-vehicle payload delivery mission and a
//! single-vehicle hover.

use nalgebra::Matrix3;

use super::config::{AgentConfig, Flags, GuidanceMode, PayloadConfig, ScenarioConfig};
use crate::dynamics::QuadParams;
use crate::lqg::NoiseModel;
use crate::payload::PayloadParams;
use crate::Vec3;

/// Initial positions (x, y) at z = 50 m. Agents 1-3 lead.
///
/// Agent 6 is listed at y = -15.58, about 2 cm outside the triangle spanned
/// by the leaders; it is moved to y = -15.68 so that it starts inside.
pub const INITIAL_XY: [[f64; 2]; 20] = [
    [-20.0, -20.0],
    [0.0, 20.0],
    [20.0, -18.0],
    [18.5553, -16.4474],
    [2.9446, 14.0859],
    [18.7505, -15.68],
    [15.8793, -11.5596],
    [14.2071, -7.9219],
    [8.1559, 3.7254],
    [9.0793, 2.5421],
    [16.1245, -10.9749],
    [14.7419, -8.5407],
    [15.3257, -9.5906],
    [13.8798, -7.1498],
    [14.9875, -9.0965],
    [10.9917, -1.7927],
    [10.4800, -0.2296],
    [10.9509, -1.7695],
    [12.8728, -4.8958],
    [14.5688, -7.9380],
];

pub const ALTITUDE: f64 = 50.0;
pub const MISSION_TIME: f64 = 20.0;

/// Leader positions at the end of the mission, in leader order. Each leader
/// keeps its place in the triangle so the orientation never flips.
pub const FINAL_LEADER_XY: [[f64; 2]; 3] = [[-15.0, 0.0], [0.0, 35.0], [15.0, 10.0]];

/// Covariance shared by the payload force disturbance (N^2) and the
/// attachment-point perturbation (m^2).
#[rustfmt::skip]
pub const DISTURBANCE_COV: [[f64; 3]; 3] = [
    [0.9985, 0.0488, 0.0302],
    [0.0488, 0.9906, -0.0390],
    [0.0302, -0.0390, 0.9840],
];

pub const PAYLOAD_MASS: f64 = 10.0;
pub const PAYLOAD_DRAG: f64 = 4.0;
pub const CABLE_STIFFNESS: f64 = 100.0;
/// Initial cable stretch relative to free length. With 20 cables of
/// 100 N/m holding 10 kg this hangs the payload about 49 m below the fleet.
pub const PRETENSION: f64 = 0.001;
pub const DEFAULT_SEED: u64 = 20;

pub fn disturbance_cov() -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| DISTURBANCE_COV[i][j])
}

/// The canonical 20-vehicle, 10 kg payload mission.
pub fn canonical_scenario() -> ScenarioConfig {
    let params = QuadParams::reference();
    let agents = INITIAL_XY
        .iter()
        .map(|&[x, y]| AgentConfig {
            position: Vec3::new(x, y, ALTITUDE),
            params,
        })
        .collect();
    let at = |[x, y]: [f64; 2]| Vec3::new(x, y, ALTITUDE);
    let leader_waypoints = [0, 1, 2].map(|k| vec![at(INITIAL_XY[k]), at(FINAL_LEADER_XY[k])]);
    ScenarioConfig {
        name: "payload-delivery-20".into(),
        seed: DEFAULT_SEED,
        gravity: params.gravity,
        mode: GuidanceMode::Continuum,
        hover_duration: 0.0,
        agents,
        initial_offset: Vec3::zeros(),
        leaders: [0, 1, 2],
        waypoint_times: vec![0.0, MISSION_TIME],
        leader_waypoints,
        payload: Some(PayloadConfig {
            params: PayloadParams {
                mass: PAYLOAD_MASS,
                drag: Vec3::repeat(PAYLOAD_DRAG),
                disturbance_cov: disturbance_cov(),
            },
            position_noise_cov: disturbance_cov(),
            stiffness: CABLE_STIFFNESS,
            pretension: PRETENSION,
        }),
        noise: NoiseModel::reference(),
        noise_enabled: true,
        dt_sim: 5e-4,
        dt_ctrl: 0.01,
        trace_dt: 0.01,
        relinearization_interval: 1.0,
        linearization_time: 10.0,
        flags: Flags::default(),
    }
}

/// One vehicle holding position at `altitude` for `duration` seconds,
/// without payload or noise.
pub fn hover_scenario(duration: f64) -> ScenarioConfig {
    let params = QuadParams::reference();
    ScenarioConfig {
        name: "hover".into(),
        seed: DEFAULT_SEED,
        gravity: params.gravity,
        mode: GuidanceMode::Hover,
        hover_duration: duration,
        agents: vec![AgentConfig {
            position: Vec3::new(0.0, 0.0, ALTITUDE),
            params,
        }],
        initial_offset: Vec3::zeros(),
        leaders: [0, 0, 0],
        waypoint_times: Vec::new(),
        leader_waypoints: [Vec::new(), Vec::new(), Vec::new()],
        payload: None,
        noise: NoiseModel::reference(),
        noise_enabled: false,
        dt_sim: 5e-4,
        dt_ctrl: 0.01,
        trace_dt: 0.01,
        relinearization_interval: 1.0,
        linearization_time: 0.0,
        flags: Flags::default(),
    }
}
