use nalgebra::allocator::Allocator;
use nalgebra::{DefaultAllocator, Dim, OVector};

use crate::error::Result;

/// One classical fourth-order Runge-Kutta step of `x' = f(x)`.
pub fn rk4_step<D, F>(f: F, x: &OVector<f64, D>, dt: f64) -> Result<OVector<f64, D>>
where
    D: Dim,
    DefaultAllocator: Allocator<D>,
    F: Fn(&OVector<f64, D>) -> Result<OVector<f64, D>>,
{
    let k1 = f(x)?;
    let k2 = f(&(x + &k1 * (0.5 * dt)))?;
    let k3 = f(&(x + &k2 * (0.5 * dt)))?;
    let k4 = f(&(x + &k3 * dt))?;
    Ok(x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DVector, Vector2};

    #[test]
    fn exponential_decay_is_fourth_order() {
        let f = |x: &DVector<f64>| Ok(-x.clone());
        let error = |dt: f64| {
            let mut x = DVector::from_element(1, 1.0);
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                x = rk4_step(f, &x, dt).unwrap();
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let ratio = error(0.1) / error(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn harmonic_oscillator_static_dim() {
        let f = |x: &Vector2<f64>| Ok(Vector2::new(x[1], -x[0]));
        let mut x = Vector2::new(1.0, 0.0);
        let dt = 1e-3;
        for _ in 0..1000 {
            x = rk4_step(f, &x, dt).unwrap();
        }
        assert!((x[0] - 1.0f64.cos()).abs() < 1e-12);
    }
}
