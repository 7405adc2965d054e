//! Tracking statistics over a recorded mission.

use std::fmt::Write as _;

use nalgebra::{DMatrix, Matrix3, SMatrix, Vector3};

use super::trace::{fmt_sci, Trace};
use crate::guidance::{compute_weights, WaypointSchedule};
use crate::lqg::Matrix12;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentMetrics {
    /// Second moment of the position deviation (m^2), mean not removed.
    pub q_pos: Matrix3<f64>,
    /// Second moment of the Euler-angle deviation (rad^2).
    pub q_euler: Matrix3<f64>,
    /// Second moment of the full 12-state deviation.
    pub q_actual: Matrix12,
    /// Eigenvalues of `q_pos`, ascending.
    pub q_pos_eigenvalues: Vector3<f64>,
    /// Matching unit eigenvectors as columns.
    pub q_pos_eigenvectors: Matrix3<f64>,
    /// Eigenvalues of `q_euler`, ascending.
    pub q_euler_eigenvalues: Vector3<f64>,
    pub rms_position_error: f64,
    pub max_position_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    /// Smallest barycentric weight of any follower over the mission.
    pub min_margin: f64,
    /// Largest `|alpha(t) - alpha(t0)|` of any follower.
    pub max_weight_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub samples: usize,
    pub literal_innovation: bool,
    pub agents: Vec<AgentMetrics>,
    pub min_inter_agent_distance: f64,
    pub containment: Option<Containment>,
    pub max_tension: f64,
    pub max_off_axis_residual: f64,
}

/// Eigenpairs sorted ascending; each eigenvector's largest component is
/// made positive so the output is reproducible.
pub fn sorted_eigen<const N: usize>(m: &SMatrix<f64, N, N>) -> (SMatrix<f64, N, 1>, SMatrix<f64, N, N>) {
    let eig = DMatrix::from_column_slice(N, N, m.as_slice()).symmetric_eigen();
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = SMatrix::<f64, N, 1>::from_fn(|i, _| eig.eigenvalues[order[i]]);
    let mut vectors = SMatrix::<f64, N, N>::zeros();
    for (j, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        let lead = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if lead < 0.0 {
            v = -v;
        }
        vectors.set_column(j, &v);
    }
    (values, vectors)
}

fn symmetrize<const N: usize>(m: SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

/// Per-tick follower weights against the desired leading triangle.
pub fn containment_check(trace: &Trace, schedule: &WaypointSchedule) -> Containment {
    let mut min_margin = f64::INFINITY;
    let mut max_weight_drift = 0.0f64;
    let Some(leaders) = trace.leaders else {
        return Containment {
            min_margin,
            max_weight_drift,
        };
    };
    for (tick, t) in trace.times.iter().enumerate() {
        let Ok(tri) = schedule.triangle_at(*t) else {
            continue;
        };
        for (i, a) in trace.agents[tick].iter().enumerate() {
            if leaders.contains(&i) {
                continue;
            }
            let p = a.state.fixed_rows::<3>(0).into_owned();
            match compute_weights(&p, &tri) {
                Ok(w) => {
                    min_margin = min_margin.min(w.min());
                    if let Some(w0) = trace.initial_weights.get(i) {
                        max_weight_drift = max_weight_drift.max(w.max_abs_diff(w0));
                    }
                }
                Err(_) => {
                    min_margin = f64::NEG_INFINITY;
                    max_weight_drift = f64::INFINITY;
                }
            }
        }
    }
    Containment {
        min_margin,
        max_weight_drift,
    }
}

/// Statistics over every sample strictly before the mission end.
pub fn compute_metrics(trace: &Trace, schedule: Option<&WaypointSchedule>) -> MetricsReport {
    let n = trace.agent_count();
    let mut rows: Vec<usize> = (0..trace.times.len())
        .filter(|&k| trace.times[k] < trace.end_time)
        .collect();
    if rows.is_empty() {
        rows = (0..trace.times.len()).collect();
    }
    let count = rows.len().max(1) as f64;

    let agents = (0..n)
        .map(|i| {
            let mut q_actual = Matrix12::zeros();
            let mut max_err = 0.0f64;
            for &k in &rows {
                let s = &trace.agents[k][i];
                let d = s.state - s.desired;
                q_actual += d * d.transpose();
                max_err = max_err.max(d.fixed_rows::<3>(0).norm());
            }
            let q_actual = symmetrize(q_actual / count);
            let q_pos: Matrix3<f64> = q_actual.fixed_view::<3, 3>(0, 0).into_owned();
            let q_euler: Matrix3<f64> = q_actual.fixed_view::<3, 3>(3, 3).into_owned();
            let (q_pos_eigenvalues, q_pos_eigenvectors) = sorted_eigen(&q_pos);
            let (q_euler_eigenvalues, _) = sorted_eigen(&q_euler);
            AgentMetrics {
                rms_position_error: q_pos.trace().max(0.0).sqrt(),
                max_position_error: max_err,
                q_pos,
                q_euler,
                q_actual,
                q_pos_eigenvalues,
                q_pos_eigenvectors,
                q_euler_eigenvalues,
            }
        })
        .collect();

    let mut min_dist = f64::INFINITY;
    for row in &trace.agents {
        for i in 0..n {
            for j in i + 1..n {
                let d = (row[i].state.fixed_rows::<3>(0) - row[j].state.fixed_rows::<3>(0)).norm();
                min_dist = min_dist.min(d);
            }
        }
    }

    let max_tension = trace
        .agents
        .iter()
        .flat_map(|row| row.iter().map(|a| a.tension))
        .fold(0.0, f64::max);
    let max_residual = trace
        .payload
        .iter()
        .flatten()
        .map(|p| p.residual.norm())
        .fold(0.0, f64::max);

    MetricsReport {
        samples: rows.len(),
        literal_innovation: trace.literal_innovation,
        agents,
        min_inter_agent_distance: min_dist,
        containment: schedule.map(|s| containment_check(trace, s)),
        max_tension,
        max_off_axis_residual: max_residual,
    }
}

impl MetricsReport {
    /// `key = value` lines, one per scalar, keys as dotted paths.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("samples", self.samples.to_string());
        kv(
            "observer",
            if self.literal_innovation { "literal" } else { "standard" }.to_string(),
        );
        kv("mission.min_inter_agent_distance", fmt_sci(self.min_inter_agent_distance));
        kv("mission.max_tension", fmt_sci(self.max_tension));
        kv("mission.max_off_axis_residual", fmt_sci(self.max_off_axis_residual));
        if let Some(c) = &self.containment {
            kv("mission.min_containment_margin", fmt_sci(c.min_margin));
            kv("mission.max_weight_drift", fmt_sci(c.max_weight_drift));
        }
        for (i, a) in self.agents.iter().enumerate() {
            let p = format!("agent.{}", i + 1);
            kv(&format!("{p}.rms_position_error"), fmt_sci(a.rms_position_error));
            kv(&format!("{p}.max_position_error"), fmt_sci(a.max_position_error));
            for r in 0..3 {
                for c in 0..3 {
                    kv(&format!("{p}.q_pos.{}{}", r + 1, c + 1), fmt_sci(a.q_pos[(r, c)]));
                }
            }
            for k in 0..3 {
                kv(&format!("{p}.q_pos.eigenvalue.{}", k + 1), fmt_sci(a.q_pos_eigenvalues[k]));
                for c in 0..3 {
                    kv(
                        &format!("{p}.q_pos.eigenvector.{}.{}", k + 1, c + 1),
                        fmt_sci(a.q_pos_eigenvectors[(c, k)]),
                    );
                }
            }
            for r in 0..3 {
                for c in 0..3 {
                    kv(&format!("{p}.q_euler.{}{}", r + 1, c + 1), fmt_sci(a.q_euler[(r, c)]));
                }
            }
            for k in 0..3 {
                kv(&format!("{p}.q_euler.eigenvalue.{}", k + 1), fmt_sci(a.q_euler_eigenvalues[k]));
            }
            for r in 0..12 {
                for c in 0..12 {
                    kv(&format!("{p}.q_actual.{}.{}", r + 1, c + 1), fmt_sci(a.q_actual[(r, c)]));
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{InputVector, StateVector};
    use crate::sim::trace::AgentSample;

    fn synthetic(offset: StateVector, ticks: usize) -> Trace {
        let row = |k: usize| {
            let desired = StateVector::repeat(k as f64);
            vec![AgentSample {
                state: desired + offset,
                estimate: desired,
                desired,
                input: InputVector::zeros(),
                tension: 0.0,
            }]
        };
        Trace {
            times: (0..=ticks).map(|k| k as f64 * 0.01).collect(),
            agents: (0..=ticks).map(row).collect(),
            payload: None,
            end_time: ticks as f64 * 0.01,
            leaders: None,
            initial_weights: Vec::new(),
            literal_innovation: false,
        }
    }

    #[test]
    fn zero_error_trace() {
        let m = compute_metrics(&synthetic(StateVector::zeros(), 100), None);
        assert_eq!(m.samples, 100);
        assert_eq!(m.agents[0].q_actual, Matrix12::zeros());
        assert_eq!(m.agents[0].rms_position_error, 0.0);
    }

    #[test]
    fn constant_vertical_offset() {
        let mut off = StateVector::zeros();
        off[2] = 0.3;
        let m = compute_metrics(&synthetic(off, 50), None);
        let a = &m.agents[0];
        let mut expected = Matrix3::zeros();
        expected[(2, 2)] = 0.09;
        assert!((a.q_pos - expected).amax() < 1e-15);
        assert!((a.q_pos_eigenvalues[2] - 0.09).abs() < 1e-15);
        assert!((a.q_pos_eigenvectors.column(2)[2] - 1.0).abs() < 1e-12);
        assert!(a.q_pos_eigenvalues[0] <= a.q_pos_eigenvalues[1]);
    }

    #[test]
    fn report_lines_parse() {
        let m = compute_metrics(&synthetic(StateVector::zeros(), 10), None);
        for line in m.to_text().lines() {
            assert_eq!(line.split(" = ").count(), 2, "{line}");
        }
    }
}
