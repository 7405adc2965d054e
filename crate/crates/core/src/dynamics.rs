//! Twelve-state quadcopter model: 3-2-1 Euler attitude, inertial-frame
//! translational velocity, body rates, thrust along the body z axis.

use nalgebra::{Matrix3, SVector, Vector4};

use crate::error::{Error, Result};
use crate::Vec3;

pub type StateVector = SVector<f64, 12>;
pub type InputVector = Vector4<f64>;

/// Pitch must stay this far from +/-pi/2.
pub const THETA_MARGIN: f64 = 1e-3;
const COS_THETA_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Vec3,
    /// Roll, pitch, yaw (rad).
    pub attitude: Vec3,
    /// Inertial-frame velocity (m/s).
    pub velocity: Vec3,
    /// Body rates p, q, r (rad/s).
    pub body_rates: Vec3,
}

impl AgentState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            attitude: Vec3::zeros(),
            velocity: Vec3::zeros(),
            body_rates: Vec3::zeros(),
        }
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.position);
        x.fixed_rows_mut::<3>(3).copy_from(&self.attitude);
        x.fixed_rows_mut::<3>(6).copy_from(&self.velocity);
        x.fixed_rows_mut::<3>(9).copy_from(&self.body_rates);
        x
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            position: x.fixed_rows::<3>(0).into(),
            attitude: x.fixed_rows::<3>(3).into(),
            velocity: x.fixed_rows::<3>(6).into(),
            body_rates: x.fixed_rows::<3>(9).into(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }

    pub fn check_gimbal(&self) -> Result<()> {
        let theta = self.attitude.y;
        if !theta.is_finite() || theta.abs() >= std::f64::consts::FRAC_PI_2 - THETA_MARGIN {
            Err(Error::GimbalLock { theta })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    /// Total thrust (N).
    pub thrust: f64,
    /// Body torques tau_phi, tau_theta, tau_psi (N m).
    pub torque: Vec3,
}

impl ControlInput {
    pub fn new(thrust: f64, torque: Vec3) -> Self {
        Self { thrust, torque }
    }

    pub fn to_vector(&self) -> InputVector {
        Vector4::new(self.thrust, self.torque.x, self.torque.y, self.torque.z)
    }

    pub fn from_vector(u: &InputVector) -> Self {
        Self {
            thrust: u[0],
            torque: Vec3::new(u[1], u[2], u[3]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    /// kg
    pub mass: f64,
    /// Principal inertias I_xx, I_yy, I_zz (kg m^2).
    pub inertia: Vec3,
    /// Linear drag A_x, A_y, A_z (kg/s).
    pub drag: Vec3,
    /// m/s^2
    pub gravity: f64,
}

impl QuadParams {
    /// Small-quadcopter reference parameters (0.468 kg airframe).
    pub fn reference() -> Self {
        Self {
            mass: 0.468,
            inertia: Vec3::new(4.856e-3, 4.856e-3, 8.801e-3),
            drag: Vec3::new(0.25, 0.25, 0.25),
            gravity: 9.81,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if positive(self.mass)
            && self.inertia.iter().all(|&v| positive(v))
            && self.drag.iter().all(|&v| positive(v))
            && positive(self.gravity)
        {
            Ok(())
        } else {
            Err(Error::Config(
                "quadcopter mass, inertias, drag coefficients and gravity must be positive".into(),
            ))
        }
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.inertia)
    }
}

/// Inertial-to-body rotation `R_phi R_theta R_psi`; rows are the body axes
/// expressed in inertial components.
pub fn rotation_321(phi: f64, theta: f64, psi: f64) -> Matrix3<f64> {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    let yaw = Matrix3::new(cp, sp, 0.0, -sp, cp, 0.0, 0.0, 0.0, 1.0);
    let pitch = Matrix3::new(ct, 0.0, -st, 0.0, 1.0, 0.0, st, 0.0, ct);
    let roll = Matrix3::new(1.0, 0.0, 0.0, 0.0, cf, sf, 0.0, -sf, cf);
    roll * pitch * yaw
}

/// Body z axis in inertial components.
pub fn body_z_axis(phi: f64, theta: f64, psi: f64) -> Vec3 {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    Vec3::new(cf * st * cp + sf * sp, cf * st * sp - sf * cp, ct * cf)
}

/// `W_321`, mapping Euler-angle rates to body rates.
pub fn euler_rate_matrix(phi: f64, theta: f64) -> Matrix3<f64> {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    Matrix3::new(1.0, 0.0, -st, 0.0, cf, ct * sf, 0.0, -sf, ct * cf)
}

/// Inverse of [`euler_rate_matrix`], mapping body rates to Euler-angle rates.
pub fn euler_rate_matrix_inverse(phi: f64, theta: f64) -> Result<Matrix3<f64>> {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    if ct.abs() < COS_THETA_MIN {
        return Err(Error::GimbalLock { theta });
    }
    let tt = st / ct;
    Ok(Matrix3::new(
        1.0,
        sf * tt,
        cf * tt,
        0.0,
        cf,
        -sf,
        0.0,
        sf / ct,
        cf / ct,
    ))
}

/// Time derivative of the twelve-state vector. `f_cable` is the cable force
/// acting on the quadcopter.
pub fn state_derivative(
    s: &AgentState,
    u: &ControlInput,
    f_cable: &Vec3,
    params: &QuadParams,
) -> Result<StateVector> {
    s.check_gimbal()?;
    let [phi, theta, psi] = [s.attitude.x, s.attitude.y, s.attitude.z];
    let euler_rates = euler_rate_matrix_inverse(phi, theta)? * s.body_rates;

    let m = params.mass;
    let drag = -params.drag.component_mul(&s.velocity);
    let accel = (f_cable + drag) / m - Vec3::new(0.0, 0.0, params.gravity)
        + body_z_axis(phi, theta, psi) * (u.thrust / m);

    let i = params.inertia;
    let (p, q, r) = (s.body_rates.x, s.body_rates.y, s.body_rates.z);
    let rate_dot = Vec3::new(
        (i.y - i.z) / i.x * q * r + u.torque.x / i.x,
        (i.z - i.x) / i.y * r * p + u.torque.y / i.y,
        (i.x - i.y) / i.z * p * q + u.torque.z / i.z,
    );

    let mut dx = StateVector::zeros();
    dx.fixed_rows_mut::<3>(0).copy_from(&s.velocity);
    dx.fixed_rows_mut::<3>(3).copy_from(&euler_rates);
    dx.fixed_rows_mut::<3>(6).copy_from(&accel);
    dx.fixed_rows_mut::<3>(9).copy_from(&rate_dot);
    Ok(dx)
}
