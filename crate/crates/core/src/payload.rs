//! Point-mass payload hanging from elastic cables.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::Vec3;

const MIN_CABLE_LENGTH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadState {
    pub position: Vec3,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableSpec {
    /// N/m
    pub stiffness: f64,
    /// m
    pub free_length: f64,
    /// Index of the attached quadcopter.
    pub agent: usize,
    /// Let a compressed cable push (signed spring law) instead of going slack.
    pub allow_compression: bool,
}

impl CableSpec {
    pub fn new(stiffness: f64, free_length: f64, agent: usize) -> Self {
        Self {
            stiffness,
            free_length,
            agent,
            allow_compression: false,
        }
    }

    pub fn with_compression(mut self, allow: bool) -> Self {
        self.allow_compression = allow;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadParams {
    /// kg
    pub mass: f64,
    /// Linear drag C_px, C_py, C_pz (kg/s).
    pub drag: Vec3,
    /// Covariance of the aerodynamic force disturbance (N^2).
    pub disturbance_cov: Matrix3<f64>,
}

/// Spring force exerted by one cable on the payload, pointing from the
/// payload toward the quadcopter while the cable is stretched.
pub fn cable_force(r_quad: &Vec3, r_payload: &Vec3, spec: &CableSpec) -> Result<Vec3> {
    let span = r_quad - r_payload;
    let length = span.norm();
    if !(length >= MIN_CABLE_LENGTH) {
        return Err(Error::CoincidentEndpoints { length });
    }
    let stretch = length - spec.free_length;
    if stretch <= 0.0 && !spec.allow_compression {
        return Ok(Vec3::zeros());
    }
    Ok(span * (spec.stiffness * stretch / length))
}

/// Forces of every cable on the payload, in `specs` order.
pub fn cable_forces(
    quad_positions: &[Vec3],
    r_payload: &Vec3,
    specs: &[CableSpec],
) -> Result<Vec<Vec3>> {
    if quad_positions.len() != specs.len() {
        return Err(Error::Dimension(format!(
            "{} quadcopter positions for {} cables",
            quad_positions.len(),
            specs.len()
        )));
    }
    quad_positions
        .iter()
        .zip(specs)
        .map(|(q, spec)| cable_force(q, r_payload, spec))
        .collect()
}

/// Payload acceleration given the summed cable force and disturbance.
pub fn payload_acceleration(
    ps: &PayloadState,
    total_cable_force: &Vec3,
    params: &PayloadParams,
    disturbance: &Vec3,
    gravity: f64,
) -> Vec3 {
    let drag = -params.drag.component_mul(&ps.velocity);
    (total_cable_force + drag + disturbance) / params.mass - Vec3::new(0.0, 0.0, gravity)
}

pub fn payload_derivative(
    ps: &PayloadState,
    quad_positions: &[Vec3],
    specs: &[CableSpec],
    params: &PayloadParams,
    disturbance: &Vec3,
    gravity: f64,
) -> Result<Vec3> {
    let total = cable_forces(quad_positions, &ps.position, specs)?
        .iter()
        .fold(Vec3::zeros(), |acc, f| acc + f);
    Ok(payload_acceleration(ps, &total, params, disturbance, gravity))
}
