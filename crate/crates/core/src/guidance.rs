//! Homogeneous (affine) deformation of a planar team driven by three leaders.
//!
//! A team deforms as `r(t) = Q(t) r(t0) + D(t)` where `Q` is spatially
//! constant. In the plane the six free entries of `(Q, D)` are fixed by the
//! three leader positions, and each follower is tied to the leaders by a set
//! of barycentric weights that stay constant under the deformation. A
//! follower therefore needs nothing but the leader waypoints to reconstruct
//! its own desired trajectory.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::Vec3;

/// Relative determinant threshold for a non-degenerate leading triangle.
pub const RANK_EPS: f64 = 1e-9;

/// Three leader positions at a common time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingTriangle {
    pub vertices: [Vec3; 3],
}

impl LeadingTriangle {
    pub fn new(r1: Vec3, r2: Vec3, r3: Vec3) -> Self {
        Self {
            vertices: [r1, r2, r3],
        }
    }

    /// Twice the signed area of the x-y projection.
    pub fn determinant(&self) -> f64 {
        let [r1, r2, r3] = self.vertices;
        let e1 = r2 - r1;
        let e2 = r3 - r1;
        e1.x * e2.y - e1.y * e2.x
    }

    fn rank_threshold(&self) -> f64 {
        let [r1, r2, r3] = self.vertices;
        let edge = |a: Vec3, b: Vec3| (a.xy() - b.xy()).norm();
        let longest = edge(r1, r2).max(edge(r2, r3)).max(edge(r1, r3));
        RANK_EPS * longest * longest
    }

    fn ensure_valid(&self) -> Result<()> {
        let det = self.determinant();
        let threshold = self.rank_threshold();
        if det.is_finite() && det.abs() > threshold {
            Ok(())
        } else {
            Err(Error::SingularTriangle { det, threshold })
        }
    }

    /// Weighted combination of the vertices.
    pub fn combine(&self, weights: &BarycentricWeights) -> Vec3 {
        let [r1, r2, r3] = self.vertices;
        r1 * weights.0[0] + r2 * weights.0[1] + r3 * weights.0[2]
    }
}

/// True iff the x-y edge vectors `r2 - r1` and `r3 - r1` span rank 2.
pub fn check_leading_triangle(tri: &LeadingTriangle) -> bool {
    tri.ensure_valid().is_ok()
}

/// Jacobian `Q` and rigid-body displacement `D` of a planar homogeneous map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousMap {
    pub jacobian: Matrix3<f64>,
    pub displacement: Vec3,
}

impl HomogeneousMap {
    pub fn identity() -> Self {
        Self {
            jacobian: Matrix3::identity(),
            displacement: Vec3::zeros(),
        }
    }

    /// Builds a planar map from its in-plane block and displacement. The
    /// out-of-plane row and column are fixed, never fitted.
    pub fn planar(q11: f64, q12: f64, q21: f64, q22: f64, d1: f64, d2: f64) -> Self {
        Self {
            jacobian: Matrix3::new(q11, q12, 0.0, q21, q22, 0.0, 0.0, 0.0, 1.0),
            displacement: Vector3::new(d1, d2, 0.0),
        }
    }

    pub fn apply(&self, p0: &Vec3) -> Vec3 {
        self.jacobian * p0 + self.displacement
    }
}

pub fn apply_map(map: &HomogeneousMap, p0: &Vec3) -> Vec3 {
    map.apply(p0)
}

/// Solves for `(Q, D)` carrying `tri0` onto `tri_t`.
///
/// The unknowns `[Q11 Q12 Q21 Q22 D1 D2]` satisfy
/// `[I2 (x) L0, I2 (x) 1_3] J = [x1 x2 x3 y1 y2 y3]^T`, with `L0` the 3x2
/// matrix of initial leader x-y coordinates.
pub fn solve_homogeneous_map(
    tri0: &LeadingTriangle,
    tri_t: &LeadingTriangle,
) -> Result<HomogeneousMap> {
    tri0.ensure_valid()?;
    tri_t.ensure_valid()?;

    let mut system = Matrix6::zeros();
    let mut rhs = Vector6::zeros();
    for (k, (r0, rt)) in tri0.vertices.iter().zip(&tri_t.vertices).enumerate() {
        // x rows
        system[(k, 0)] = r0.x;
        system[(k, 1)] = r0.y;
        system[(k, 4)] = 1.0;
        rhs[k] = rt.x;
        // y rows
        system[(k + 3, 2)] = r0.x;
        system[(k + 3, 3)] = r0.y;
        system[(k + 3, 5)] = 1.0;
        rhs[k + 3] = rt.y;
    }
    let j = system.lu().solve(&rhs).ok_or(Error::SingularTriangle {
        det: tri0.determinant(),
        threshold: tri0.rank_threshold(),
    })?;
    Ok(HomogeneousMap::planar(j[0], j[1], j[2], j[3], j[4], j[5]))
}

/// Invariant weights tying one follower to the three leaders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricWeights(pub [f64; 3]);

impl BarycentricWeights {
    pub fn vertex(k: usize) -> Self {
        let mut w = [0.0; 3];
        w[k] = 1.0;
        Self(w)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Barycentric weights of `p0` with respect to `tri0` (x-y plane).
pub fn compute_weights(p0: &Vec3, tri0: &LeadingTriangle) -> Result<BarycentricWeights> {
    tri0.ensure_valid()?;
    let [r1, r2, r3] = tri0.vertices;
    let system = Matrix3::new(r1.x, r2.x, r3.x, r1.y, r2.y, r3.y, 1.0, 1.0, 1.0);
    let alpha = system
        .lu()
        .solve(&Vector3::new(p0.x, p0.y, 1.0))
        .ok_or(Error::SingularTriangle {
            det: tri0.determinant(),
            threshold: tri0.rank_threshold(),
        })?;
    Ok(BarycentricWeights([alpha[0], alpha[1], alpha[2]]))
}

/// Leader positions at strictly increasing sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSchedule {
    times: Vec<f64>,
    triangles: Vec<LeadingTriangle>,
}

impl WaypointSchedule {
    pub fn new(times: Vec<f64>, triangles: Vec<LeadingTriangle>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidSchedule(
                "at least two sample times are required".into(),
            ));
        }
        if times.len() != triangles.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} sample times but {} leader rows",
                times.len(),
                triangles.len()
            )));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSchedule(format!(
                "sample times must increase strictly ({} then {})",
                w[0], w[1]
            )));
        }
        for (t, tri) in times.iter().zip(&triangles) {
            if tri.vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
                return Err(Error::InvalidSchedule(format!(
                    "non-finite leader position at t = {t}"
                )));
            }
            let z = tri.vertices[0].z;
            if tri.vertices.iter().any(|v| v.z != z) {
                return Err(Error::InvalidSchedule(format!(
                    "leaders are not coplanar in z at t = {t}"
                )));
            }
            if let Err(e) = tri.ensure_valid() {
                return Err(Error::InvalidSchedule(format!(
                    "leading triangle at t = {t} is degenerate: {e}"
                )));
            }
        }
        Ok(Self { times, triangles })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn triangles(&self) -> &[LeadingTriangle] {
        &self.triangles
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn initial_triangle(&self) -> &LeadingTriangle {
        &self.triangles[0]
    }

    /// Index `k` of the active interval `[t_k, t_{k+1}]`. Sample times
    /// belong to the interval they open, except the final one.
    pub fn interval(&self, t: f64) -> Result<usize> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(Error::OutOfSchedule {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        let k = self.times.partition_point(|&s| s <= t);
        Ok(k.saturating_sub(1).min(self.times.len() - 2))
    }

    /// Leader triangle at `t` by linear interpolation between samples.
    pub fn triangle_at(&self, t: f64) -> Result<LeadingTriangle> {
        let k = self.interval(t)?;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let s = (t - t0) / (t1 - t0);
        let (a, b) = (&self.triangles[k], &self.triangles[k + 1]);
        let lerp = |i: usize| {
            if s == 0.0 {
                a.vertices[i]
            } else if s == 1.0 {
                b.vertices[i]
            } else {
                a.vertices[i] + (b.vertices[i] - a.vertices[i]) * s
            }
        };
        Ok(LeadingTriangle::new(lerp(0), lerp(1), lerp(2)))
    }
}

/// Desired position and velocity of an agent with weights `w` at time `t`.
///
/// Within `[t_{w,k-1}, t_{w,k}]` the trajectory is the weighted sum of the
/// leaders' linear interpolants, so the velocity is constant per interval.
/// Leaders use unit weights.
pub fn follower_desired_state(
    w: &BarycentricWeights,
    schedule: &WaypointSchedule,
    t: f64,
) -> Result<(Vec3, Vec3)> {
    let k = schedule.interval(t)?;
    let (t0, t1) = (schedule.times[k], schedule.times[k + 1]);
    let start = schedule.triangles[k].combine(w);
    let end = schedule.triangles[k + 1].combine(w);
    let velocity = (end - start) / (t1 - t0);
    let position = if t == t1 {
        end
    } else {
        start + (end - start) * ((t - t0) / (t1 - t0))
    };
    Ok((position, velocity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table2_leaders() -> LeadingTriangle {
        LeadingTriangle::new(
            Vec3::new(-20.0, -20.0, 50.0),
            Vec3::new(0.0, 20.0, 50.0),
            Vec3::new(20.0, -18.0, 50.0),
        )
    }

    fn planar(x: f64, y: f64) -> Vec3 {
        Vec3::new(x, y, 0.0)
    }

    #[test]
    fn triangle_checks() {
        assert!(check_leading_triangle(&table2_leaders()));
        assert!(!check_leading_triangle(&LeadingTriangle::new(
            planar(0.0, 0.0),
            planar(1.0, 1.0),
            planar(2.0, 2.0)
        )));
        assert!(check_leading_triangle(&LeadingTriangle::new(
            planar(0.0, 0.0),
            planar(1.0, 0.0),
            planar(0.0, 1.0)
        )));
    }

    #[test]
    fn weights_of_vertices_and_centroid() {
        let tri = table2_leaders();
        let w = compute_weights(&tri.vertices[0], &tri).unwrap();
        assert_relative_eq!(w.0[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(w.0[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(w.0[2], 0.0, epsilon = 1e-12);

        let centroid = (tri.vertices[0] + tri.vertices[1] + tri.vertices[2]) / 3.0;
        let w = compute_weights(&centroid, &tri).unwrap();
        for a in w.0 {
            assert_relative_eq!(a, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn weights_of_origin_against_table2_leaders() {
        // x-row: -20 a1 + 20 a3 = 0 gives a1 = a3; y-row then gives 3.9 a1 = 1
        // after eliminating a2 = 1 - 2 a1: -20 a1 + 20 (1 - 2 a1) - 18 a1 = 0.
        let w = compute_weights(&Vec3::new(0.0, 0.0, 50.0), &table2_leaders()).unwrap();
        let a1 = 1.0 / 3.9;
        assert_relative_eq!(w.0[0], a1, epsilon = 1e-12);
        assert_relative_eq!(w.0[1], 1.0 - 2.0 * a1, epsilon = 1e-12);
        assert_relative_eq!(w.0[2], a1, epsilon = 1e-12);
        assert!((w.0[0] - 0.25641).abs() < 5e-6);
        assert!((w.0[1] - 0.48718).abs() < 5e-6);
    }

    #[test]
    fn singular_triangle_is_rejected() {
        let tri = LeadingTriangle::new(planar(0.0, 0.0), planar(1.0, 1.0), planar(2.0, 2.0));
        assert!(matches!(
            compute_weights(&planar(0.5, 0.5), &tri),
            Err(Error::SingularTriangle { .. })
        ));
        assert!(matches!(
            solve_homogeneous_map(&tri, &table2_leaders()),
            Err(Error::SingularTriangle { .. })
        ));
    }

    #[test]
    fn map_identity_translation_dilation() {
        let tri0 = table2_leaders();
        let m = solve_homogeneous_map(&tri0, &tri0).unwrap();
        assert_relative_eq!(m.jacobian, Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(m.displacement, Vec3::zeros(), epsilon = 1e-12);

        let shift = Vec3::new(5.0, 0.0, 0.0);
        let moved = LeadingTriangle::new(
            tri0.vertices[0] + shift,
            tri0.vertices[1] + shift,
            tri0.vertices[2] + shift,
        );
        let m = solve_homogeneous_map(&tri0, &moved).unwrap();
        assert_relative_eq!(m.jacobian, Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(m.displacement, shift, epsilon = 1e-12);

        let scale = |v: Vec3| Vec3::new(2.0 * v.x, 2.0 * v.y, v.z);
        let scaled = LeadingTriangle::new(
            scale(tri0.vertices[0]),
            scale(tri0.vertices[1]),
            scale(tri0.vertices[2]),
        );
        let m = solve_homogeneous_map(&tri0, &scaled).unwrap();
        assert_relative_eq!(
            m.jacobian,
            Matrix3::new(2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(m.displacement, Vec3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn apply_examples() {
        let p = Vec3::new(3.0, -1.0, 50.0);
        assert_eq!(apply_map(&HomogeneousMap::identity(), &p), p);
        let m = HomogeneousMap::planar(1.0, 0.0, 0.0, 1.0, 1.0, 2.0);
        assert_eq!(apply_map(&m, &Vec3::new(0.0, 0.0, 50.0)), Vec3::new(1.0, 2.0, 50.0));
        let m = HomogeneousMap::planar(2.0, 0.0, 0.0, 2.0, 0.0, 0.0);
        assert_eq!(apply_map(&m, &p), Vec3::new(6.0, -2.0, 50.0));
    }

    fn translated_schedule() -> WaypointSchedule {
        let tri0 = table2_leaders();
        let shift = Vec3::new(5.0, 0.0, 0.0);
        let tri1 = LeadingTriangle::new(
            tri0.vertices[0] + shift,
            tri0.vertices[1] + shift,
            tri0.vertices[2] + shift,
        );
        WaypointSchedule::new(vec![0.0, 20.0], vec![tri0, tri1]).unwrap()
    }

    #[test]
    fn follower_at_centroid_moves_at_constant_velocity() {
        let schedule = translated_schedule();
        let tri0 = schedule.initial_triangle();
        let centroid = (tri0.vertices[0] + tri0.vertices[1] + tri0.vertices[2]) / 3.0;
        let w = compute_weights(&centroid, tri0).unwrap();
        for t in [0.0, 3.3, 10.0, 19.99, 20.0] {
            let (p, v) = follower_desired_state(&w, &schedule, t).unwrap();
            assert_relative_eq!(v, Vec3::new(0.25, 0.0, 0.0), epsilon = 1e-12);
            assert_relative_eq!(p, centroid + Vec3::new(0.25 * t, 0.0, 0.0), epsilon = 1e-9);
        }
    }

    #[test]
    fn vertex_weight_reproduces_leader_and_endpoint() {
        let schedule = translated_schedule();
        let w = BarycentricWeights::vertex(0);
        let (p, _) = follower_desired_state(&w, &schedule, 7.0).unwrap();
        let tri = schedule.triangle_at(7.0).unwrap();
        assert_relative_eq!(p, tri.vertices[0], epsilon = 1e-12);
        let (p, _) = follower_desired_state(&w, &schedule, 0.0).unwrap();
        assert_eq!(p, schedule.initial_triangle().vertices[0]);
    }

    #[test]
    fn out_of_schedule() {
        let schedule = translated_schedule();
        let w = BarycentricWeights::vertex(1);
        assert!(matches!(
            follower_desired_state(&w, &schedule, -0.1),
            Err(Error::OutOfSchedule { .. })
        ));
        assert!(matches!(
            follower_desired_state(&w, &schedule, 20.5),
            Err(Error::OutOfSchedule { .. })
        ));
    }

    #[test]
    fn schedule_validation() {
        let tri = table2_leaders();
        assert!(WaypointSchedule::new(vec![0.0], vec![tri]).is_err());
        assert!(WaypointSchedule::new(vec![0.0, 0.0], vec![tri, tri]).is_err());
        let flat = LeadingTriangle::new(planar(0.0, 0.0), planar(1.0, 1.0), planar(2.0, 2.0));
        let err = WaypointSchedule::new(vec![0.0, 5.0], vec![tri, flat]).unwrap_err();
        assert!(err.to_string().contains("t = 5"));
    }

    #[test]
    fn interval_lookup() {
        let tri = table2_leaders();
        let s = WaypointSchedule::new(vec![0.0, 1.0, 3.0], vec![tri, tri, tri]).unwrap();
        assert_eq!(s.interval(0.0).unwrap(), 0);
        assert_eq!(s.interval(0.999).unwrap(), 0);
        assert_eq!(s.interval(1.0).unwrap(), 1);
        assert_eq!(s.interval(3.0).unwrap(), 1);
    }
}
