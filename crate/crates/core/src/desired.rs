//! Back-computation of the full desired state and feedforward input from a
//! desired trajectory and the cable force expected on the vehicle.
//!
//! Thrust magnitude and body z axis follow from the translational force
//! balance. Roll and pitch invert the body-axis expression for a given yaw.
//! Euler-angle rates and body-rate derivatives are backward differences
//! between consecutive assembly instants, and the torques come from Euler's
//! rigid-body equation at the desired rates.

use crate::dynamics::{euler_rate_matrix, AgentState, ControlInput, QuadParams};
use crate::error::{Error, Result};
use crate::Vec3;

const MIN_FORCE: f64 = 1e-9;
const ASIN_SLACK: f64 = 1e-12;

/// Roll and pitch that point the body z axis along the unit vector `b`
/// at yaw `yaw` (3-2-1 sequence).
pub fn roll_pitch_from_body_z(b: &Vec3, yaw: f64) -> Result<(f64, f64)> {
    let (s, c) = yaw.sin_cos();
    let mut argument = b.x * s - b.y * c;
    if argument.abs() > 1.0 {
        if argument.abs() > 1.0 + ASIN_SLACK {
            return Err(Error::AttitudeOutOfRange { argument });
        }
        argument = argument.signum();
    }
    Ok((argument.asin(), (b.x * c + b.y * s).atan2(b.z)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustAttitude {
    pub thrust: f64,
    pub roll: f64,
    pub pitch: f64,
    /// Desired body z axis (unit).
    pub body_z: Vec3,
}

/// Desired thrust and attitude for acceleration `accel_d` at velocity
/// `vel_d` with cable force `f_cord_d` acting on the vehicle.
pub fn desired_thrust_attitude(
    accel_d: &Vec3,
    vel_d: &Vec3,
    f_cord_d: &Vec3,
    params: &QuadParams,
    yaw_d: f64,
) -> Result<ThrustAttitude> {
    let m = params.mass;
    let aero = -params.drag.component_mul(vel_d);
    let balance = accel_d * m + Vec3::new(0.0, 0.0, m * params.gravity) - aero - f_cord_d;
    let thrust = balance.norm();
    if !(thrust >= MIN_FORCE) {
        return Err(Error::DegenerateForce { norm: thrust });
    }
    let b = balance / thrust;
    let (roll, pitch) = roll_pitch_from_body_z(&b, yaw_d)?;
    Ok(ThrustAttitude {
        thrust,
        roll,
        pitch,
        body_z: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub euler_rates: Vec3,
    pub body_rates: Vec3,
}

/// Backward-difference Euler-angle rates between `prev` and `current`
/// (roll, pitch, yaw), mapped to body rates at the current angles.
pub fn finite_difference_rates(prev: &Vec3, current: &Vec3, dt: f64) -> Rates {
    debug_assert!(dt > 0.0);
    let euler_rates = (current - prev) / dt;
    let body_rates = euler_rate_matrix(current.x, current.y) * euler_rates;
    Rates {
        euler_rates,
        body_rates,
    }
}

/// `tau = I omega_dot + omega x (I omega)` for a diagonal inertia.
pub fn desired_torques(rates: &Vec3, rate_derivatives: &Vec3, inertia: &Vec3) -> Vec3 {
    inertia.component_mul(rate_derivatives) + rates.cross(&inertia.component_mul(rates))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredSample {
    pub time: f64,
    pub state: AgentState,
    pub input: ControlInput,
}

/// Per-vehicle assembler that carries the previous sample for the backward
/// differences. The first sample gets zero rates.
#[derive(Debug, Clone)]
pub struct DesiredStateAssembler {
    yaw: f64,
    previous: Option<DesiredSample>,
}

impl DesiredStateAssembler {
    pub fn new(yaw: f64) -> Self {
        Self {
            yaw,
            previous: None,
        }
    }

    pub fn previous(&self) -> Option<&DesiredSample> {
        self.previous.as_ref()
    }

    pub fn assemble(
        &mut self,
        time: f64,
        position: &Vec3,
        velocity: &Vec3,
        accel: &Vec3,
        f_cord: &Vec3,
        params: &QuadParams,
    ) -> Result<DesiredSample> {
        let ta = desired_thrust_attitude(accel, velocity, f_cord, params, self.yaw)?;
        let attitude = Vec3::new(ta.roll, ta.pitch, self.yaw);

        let (body_rates, rate_derivatives) = match &self.previous {
            Some(prev) if time > prev.time => {
                let dt = time - prev.time;
                let rates = finite_difference_rates(&prev.state.attitude, &attitude, dt);
                let derivs = (rates.body_rates - prev.state.body_rates) / dt;
                (rates.body_rates, derivs)
            }
            _ => (Vec3::zeros(), Vec3::zeros()),
        };
        let torque = desired_torques(&body_rates, &rate_derivatives, &params.inertia);

        let sample = DesiredSample {
            time,
            state: AgentState {
                position: *position,
                attitude,
                velocity: *velocity,
                body_rates,
            },
            input: ControlInput::new(ta.thrust, torque),
        };
        sample.state.check_gimbal()?;
        self.previous = Some(sample);
        Ok(sample)
    }
}
