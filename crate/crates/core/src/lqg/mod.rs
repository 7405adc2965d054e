//! Linear-quadratic Gaussian tracking about the desired trajectory.
//!
//! Each quadcopter is linearized about its desired state, an LQ gain and a
//! Kalman gain are synthesized from the two Riccati equations, and the
//! deviation estimate drives the input correction `dU = K dX_hat`.

pub mod riccati;

use nalgebra::{DMatrix, Matrix4, SMatrix, SVector};

use crate::dynamics::{state_derivative, AgentState, ControlInput, InputVector, QuadParams, StateVector};
use crate::error::{Error, Result};
use crate::Vec3;

pub use riccati::{
    eigenvalues, is_hurwitz, solve_care, solve_fare, solve_lyapunov, spectral_abscissa, CareSolution, FareSolution,
};

pub type Matrix12 = SMatrix<f64, 12, 12>;
pub type Matrix12x4 = SMatrix<f64, 12, 4>;
pub type Matrix4x12 = SMatrix<f64, 4, 12>;

/// Symmetric, diagonally dominant weighting used for the state cost and the
/// noise covariances before scaling by 0.01.
#[rustfmt::skip]
pub const REFERENCE_WEIGHTS: [[f64; 12]; 12] = [
    [98.0, 1.0, -3.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0, -2.0, -7.0, 4.0],
    [1.0, 91.0, -1.0, 0.0, -4.0, 2.0, -1.0, 3.0, -4.0, -2.0, -3.0, 0.0],
    [-3.0, -1.0, 98.0, -4.0, -2.0, 0.0, 0.0, -5.0, -3.0, 5.0, -1.0, 2.0],
    [0.0, 0.0, -4.0, 99.0, 2.0, 3.0, 2.0, 1.0, 0.0, -3.0, -5.0, 2.0],
    [2.0, -4.0, -2.0, 2.0, 90.0, 5.0, -1.0, 1.0, 1.0, 1.0, 3.0, 0.0],
    [0.0, 2.0, 0.0, 3.0, 5.0, 95.0, 1.0, 0.0, 1.0, 0.0, -1.0, -6.0],
    [0.0, -1.0, 0.0, 2.0, -1.0, 1.0, 97.0, 2.0, -2.0, 0.0, -4.0, 4.0],
    [0.0, 3.0, -5.0, 1.0, 1.0, 0.0, 2.0, 97.0, 5.0, -1.0, 0.0, 5.0],
    [3.0, -4.0, -3.0, 0.0, 1.0, 1.0, -2.0, 5.0, 98.0, -2.0, 1.0, 0.0],
    [-2.0, -2.0, 5.0, -3.0, 1.0, 0.0, 0.0, -1.0, -2.0, 96.0, -2.0, -1.0],
    [-7.0, -3.0, -1.0, -5.0, 3.0, -1.0, -4.0, 0.0, 1.0, -2.0, 101.0, -1.0],
    [4.0, 0.0, 2.0, 2.0, 0.0, -6.0, 4.0, 5.0, 0.0, -1.0, -1.0, 97.0],
];

pub fn reference_weight_matrix() -> Matrix12 {
    Matrix12::from_fn(|i, j| REFERENCE_WEIGHTS[i][j])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// State cost / disturbance covariance (12x12, PSD).
    pub e: Matrix12,
    /// Input cost / noise covariance (4x4, PD).
    pub h: Matrix4<f64>,
    /// Process covariance (12x12, PSD).
    pub q: Matrix12,
    /// Measurement covariance (12x12, PD).
    pub r: Matrix12,
}

impl NoiseModel {
    /// `E = Q = R = 0.01 W`, `H = 0.01 I`.
    pub fn reference() -> Self {
        let w = reference_weight_matrix() * 0.01;
        Self {
            e: w,
            h: Matrix4::identity() * 0.01,
            q: w,
            r: w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_symmetric_psd(&self.e, "E", false)?;
        check_symmetric_psd(&self.q, "Q", false)?;
        check_symmetric_psd(&self.r, "R", true)?;
        check_symmetric_psd(&self.h, "H", true)?;
        Ok(())
    }
}

fn check_symmetric_psd<const N: usize>(
    m: &SMatrix<f64, N, N>,
    name: &'static str,
    strict: bool,
) -> Result<()> {
    let scale = 1.0 + m.amax();
    if !m.iter().all(|v| v.is_finite()) || (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite(name));
    }
    let min = to_dynamic(m).symmetric_eigenvalues().min();
    let ok = if strict { min > 0.0 } else { min >= -1e-12 * scale };
    if ok {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub a: Matrix12,
    pub b: Matrix12x4,
    /// Full-state measurement.
    pub c: Matrix12,
    pub valid_from: f64,
    pub valid_to: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    /// LQ gain, `dU = K dX`.
    pub k: Matrix4x12,
    /// Kalman gain.
    pub l: Matrix12,
    pub s: Matrix12,
    pub p: Matrix12,
}

impl GainSet {
    /// All-zero gains: open-loop feedforward flight.
    pub fn zero() -> Self {
        Self {
            k: Matrix4x12::zeros(),
            l: Matrix12::zeros(),
            s: Matrix12::zeros(),
            p: Matrix12::zeros(),
        }
    }
}

/// Central-difference Jacobians of the dynamics about `(x_d, u_d)` with the
/// cable force held at `f_cord`.
pub fn linearize(
    x_d: &AgentState,
    u_d: &ControlInput,
    params: &QuadParams,
    f_cord: &Vec3,
    valid_from: f64,
    valid_to: f64,
) -> Result<LinearModel> {
    x_d.check_gimbal()?;
    let x0 = x_d.to_vector();
    let u0 = u_d.to_vector();
    let f = |x: &StateVector, u: &InputVector| {
        state_derivative(&AgentState::from_vector(x), &ControlInput::from_vector(u), f_cord, params)
    };

    let mut a = Matrix12::zeros();
    for j in 0..12 {
        let h = (1e-6 * x0[j].abs()).max(1e-6);
        let mut plus = x0;
        let mut minus = x0;
        plus[j] += h;
        minus[j] -= h;
        let col = (f(&plus, &u0)? - f(&minus, &u0)?) / (plus[j] - minus[j]);
        a.set_column(j, &col);
    }
    let mut b = Matrix12x4::zeros();
    for j in 0..4 {
        let h = (1e-6 * u0[j].abs()).max(1e-6);
        let mut plus = u0;
        let mut minus = u0;
        plus[j] += h;
        minus[j] -= h;
        let col = (f(&x0, &plus)? - f(&x0, &minus)?) / (plus[j] - minus[j]);
        b.set_column(j, &col);
    }
    Ok(LinearModel {
        a,
        b,
        c: Matrix12::identity(),
        valid_from,
        valid_to,
    })
}

fn to_dynamic<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

fn to_static<const R: usize, const C: usize>(m: &DMatrix<f64>) -> SMatrix<f64, R, C> {
    SMatrix::<f64, R, C>::from_column_slice(m.as_slice())
}

/// LQ and Kalman gains for one linear model.
pub fn synthesize_gains(model: &LinearModel, noise: &NoiseModel) -> Result<GainSet> {
    let a = to_dynamic(&model.a);
    let care = solve_care(&a, &to_dynamic(&model.b), &to_dynamic(&noise.e), &to_dynamic(&noise.h))?;
    let fare = solve_fare(&a, &to_dynamic(&model.c), &to_dynamic(&noise.q), &to_dynamic(&noise.r))?;
    let estimator = &a - &fare.gain * to_dynamic(&model.c);
    if !is_hurwitz(&estimator)? {
        return Err(Error::NotStabilizable(format!(
            "estimator A - L C: {}",
            riccati::unstable_detail(&estimator)
        )));
    }
    Ok(GainSet {
        k: to_static(&care.gain),
        l: to_static(&fare.gain),
        s: to_static(&care.s),
        p: to_static(&fare.p),
    })
}

/// Observer innovation term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Innovation {
    /// `L (dY - C dX_hat)`
    #[default]
    Standard,
    /// `L dY`, without the output prediction. Not a convergent observer;
    /// kept for comparison runs.
    Literal,
}

/// Advances `dX_hat' = A dX_hat + B dU + L(innovation)` over `dt` with one
/// RK4 step, holding `dy` and `du`.
#[allow(clippy::too_many_arguments)]
pub fn estimator_step<const N: usize, const M: usize>(
    estimate: &SVector<f64, N>,
    dy: &SVector<f64, N>,
    du: &SVector<f64, M>,
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    c: &SMatrix<f64, N, N>,
    l: &SMatrix<f64, N, N>,
    dt: f64,
    innovation: Innovation,
) -> SVector<f64, N> {
    let drive = b * du;
    let f = |x: &SVector<f64, N>| -> Result<SVector<f64, N>> {
        let innov = match innovation {
            Innovation::Standard => dy - c * x,
            Innovation::Literal => *dy,
        };
        Ok(a * x + drive + l * innov)
    };
    crate::integrate::rk4_step(f, estimate, dt).expect("linear observer is infallible")
}

/// `dU = K dX_hat`.
pub fn control_update(estimate: &StateVector, k: &Matrix4x12) -> InputVector {
    k * estimate
}

/// `U_d + dU`, with thrust kept non-negative.
pub fn applied_input(u_d: &ControlInput, du: &InputVector) -> ControlInput {
    let mut u = ControlInput::from_vector(&(u_d.to_vector() + du));
    u.thrust = u.thrust.max(0.0);
    u
}
