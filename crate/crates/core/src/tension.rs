//! Desired cable tensions from the equal-elongation (parallel spring) rule.
//!
//! Cables of equal stiffness attached to one payload that is displaced along
//! the load direction `n_p` stretch by `d_p / (n_i . n_p)`, so the projected
//! tensions `f_i (n_i . n_p)` are all equal and must add up to the load.

use crate::error::{Error, Result};
use crate::Vec3;

/// Cables whose direction cosine with the load falls below this are rejected.
pub const COS_EPS: f64 = 0.05;
const MIN_SPAN: f64 = 1e-9;
const MIN_LOAD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TensionSolution {
    /// Tension magnitudes (N).
    pub tensions: Vec<f64>,
    /// Unit cable directions, payload to quadcopter.
    pub directions: Vec<Vec3>,
    /// Unit load direction.
    pub load_direction: Vec3,
    /// Load magnitude `|m_p (g K + a_p)|` (N).
    pub load: f64,
}

impl TensionSolution {
    /// Force of cable `i` on the payload.
    pub fn force_on_payload(&self, i: usize) -> Vec3 {
        self.directions[i] * self.tensions[i]
    }

    pub fn resultant(&self) -> Vec3 {
        (0..self.tensions.len()).fold(Vec3::zeros(), |acc, i| acc + self.force_on_payload(i))
    }

    /// Part of the resultant not aligned with the load, `sum f_i n_i - M n_p`.
    /// The projection rule leaves it uncancelled.
    pub fn off_axis_residual(&self) -> Vec3 {
        self.resultant() - self.load_direction * self.load
    }
}

pub fn cable_directions(quad_positions: &[Vec3], r_payload: &Vec3) -> Result<Vec<Vec3>> {
    quad_positions
        .iter()
        .map(|q| {
            let span = q - r_payload;
            let length = span.norm();
            if length < MIN_SPAN || !length.is_finite() {
                Err(Error::CoincidentEndpoints { length })
            } else {
                Ok(span / length)
            }
        })
        .collect()
}

/// Unit direction and magnitude of `m_p (g K + a_p)`.
pub fn load_direction(accel: &Vec3, mass: f64, gravity: f64) -> Result<(Vec3, f64)> {
    let specific = accel + Vec3::new(0.0, 0.0, gravity);
    let norm = specific.norm();
    if !(norm > MIN_LOAD) {
        return Err(Error::ZeroLoad);
    }
    Ok((specific / norm, mass * norm))
}

/// Solves the N x N system whose first N-1 rows are
/// `c_i f_i - c_{i+1} f_{i+1} = 0` and whose last row is `sum c_i f_i = M`,
/// with `c_i = n_i . n_p`.
///
/// The bidiagonal rows are eliminated forward to express every `f_i` as a
/// multiple of `f_1`; the dense last row then fixes `f_1`. O(N).
pub fn allocate_tensions(directions: Vec<Vec3>, n_p: &Vec3, load: f64) -> Result<TensionSolution> {
    if directions.is_empty() {
        return Err(Error::Dimension("no cables to allocate".into()));
    }
    let cosines: Vec<f64> = directions.iter().map(|n| n.dot(n_p)).collect();
    if let Some((cable, &cosine)) = cosines
        .iter()
        .enumerate()
        .find(|(_, &c)| !(c > COS_EPS))
    {
        return Err(Error::DegenerateGeometry { cable, cosine });
    }

    // f_i = ratio_i * f_1
    let mut ratios = Vec::with_capacity(cosines.len());
    ratios.push(1.0);
    for i in 0..cosines.len() - 1 {
        let next = ratios[i] * cosines[i] / cosines[i + 1];
        ratios.push(next);
    }
    let pivot: f64 = cosines.iter().zip(&ratios).map(|(c, r)| c * r).sum();
    let f1 = load / pivot;
    let tensions = ratios.iter().map(|r| r * f1).collect();

    Ok(TensionSolution {
        tensions,
        directions,
        load_direction: *n_p,
        load,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    /// Dense reference: assemble the full N x N system and LU-solve it.
    fn dense_reference(directions: &[Vec3], n_p: &Vec3, load: f64) -> Vec<f64> {
        let n = directions.len();
        let c: Vec<f64> = directions.iter().map(|d| d.dot(n_p)).collect();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for i in 0..n - 1 {
            a[(i, i)] = c[i];
            a[(i, i + 1)] = -c[i + 1];
        }
        for j in 0..n {
            a[(n - 1, j)] = c[j];
        }
        b[n - 1] = load;
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn direction_examples() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        let d = cable_directions(&[p + Vec3::z(), p + Vec3::new(3.0, 4.0, 0.0)], &p).unwrap();
        assert_relative_eq!(d[0], Vec3::z());
        assert_relative_eq!(d[1], Vec3::new(0.6, 0.8, 0.0), epsilon = 1e-15);
        assert!(matches!(
            cable_directions(&[p], &p),
            Err(Error::CoincidentEndpoints { .. })
        ));
    }

    #[test]
    fn load_direction_examples() {
        let (n, m) = load_direction(&Vec3::zeros(), 10.0, 9.81).unwrap();
        assert_eq!(n, Vec3::z());
        assert_relative_eq!(m, 98.1, epsilon = 1e-12);
        assert!(matches!(
            load_direction(&Vec3::new(0.0, 0.0, -9.81), 10.0, 9.81),
            Err(Error::ZeroLoad)
        ));
    }

    #[test]
    fn single_vertical_cable() {
        let s = allocate_tensions(vec![Vec3::z()], &Vec3::z(), 98.1).unwrap();
        assert_relative_eq!(s.tensions[0], 98.1, epsilon = 1e-12);
    }

    #[test]
    fn twenty_identical_cables() {
        let cos = 0.9f64;
        let sin = (1.0 - cos * cos).sqrt();
        let dirs: Vec<Vec3> = (0..20)
            .map(|i| {
                let az = f64::from(i) * 0.3;
                Vec3::new(sin * az.cos(), sin * az.sin(), cos)
            })
            .collect();
        let s = allocate_tensions(dirs, &Vec3::z(), 98.1).unwrap();
        let expected = 98.1 / (20.0 * 0.9);
        assert!((expected - 5.45f64).abs() < 1e-12);
        for f in &s.tensions {
            assert_relative_eq!(*f, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn orthogonal_cable_is_rejected() {
        let r = allocate_tensions(vec![Vec3::z(), Vec3::x()], &Vec3::z(), 10.0);
        assert!(matches!(r, Err(Error::DegenerateGeometry { cable: 1, .. })));
    }

    fn admissible_geometry() -> impl Strategy<Value = (Vec<Vec3>, Vec3, f64)> {
        let dir = (-1.0..1.0f64, -1.0..1.0f64, 0.3..1.0f64)
            .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize());
        (
            proptest::collection::vec(dir, 1..40),
            (-0.2..0.2f64, -0.2..0.2f64),
            1.0..500.0f64,
        )
            .prop_filter_map("admissible cosines", |(dirs, (ax, ay), load)| {
                let n_p = Vec3::new(ax, ay, 1.0).normalize();
                dirs.iter()
                    .all(|d| d.dot(&n_p) > 2.0 * COS_EPS)
                    .then_some((dirs, n_p, load))
            })
    }

    proptest! {
        #[test]
        fn matches_closed_form_and_dense_solve((dirs, n_p, load) in admissible_geometry()) {
            let n = dirs.len() as f64;
            let s = allocate_tensions(dirs.clone(), &n_p, load).unwrap();
            let dense = dense_reference(&dirs, &n_p, load);
            for (i, f) in s.tensions.iter().enumerate() {
                let c = dirs[i].dot(&n_p);
                let closed = load / (n * c);
                prop_assert!(((f - closed) / closed).abs() < 1e-10);
                prop_assert!(((f - dense[i]) / dense[i]).abs() < 1e-9);
                prop_assert!(*f > 0.0);
            }
            let projected: Vec<f64> = s.tensions.iter().zip(&dirs).map(|(f, d)| f * d.dot(&n_p)).collect();
            let total: f64 = projected.iter().sum();
            prop_assert!((total - load).abs() < 1e-9 * load.max(1.0));
            for p in &projected {
                prop_assert!(((p - projected[0]) / projected[0]).abs() < 1e-9);
            }
            prop_assert!((s.resultant().dot(&n_p) - load).abs() < 1e-9 * load.max(1.0));
        }
    }
}
