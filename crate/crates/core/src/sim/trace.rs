//! Recorded mission output and its CSV form.

use std::io::{self, Write};

use crate::dynamics::{InputVector, StateVector};
use crate::guidance::BarycentricWeights;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSample {
    pub state: StateVector,
    /// Estimated absolute state `X_d + dX_hat`.
    pub estimate: StateVector,
    pub desired: StateVector,
    pub input: InputVector,
    /// Magnitude of the cable force (N), zero without payload.
    pub tension: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadSample {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Off-axis residual of the latest tension allocation (N).
    pub residual: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    /// `agents[tick][agent]`
    pub agents: Vec<Vec<AgentSample>>,
    /// One entry per tick when a payload is carried.
    pub payload: Option<Vec<PayloadSample>>,
    pub end_time: f64,
    /// Leader indices and initial weights of every agent (continuum missions).
    pub leaders: Option<[usize; 3]>,
    pub initial_weights: Vec<BarycentricWeights>,
    pub literal_innovation: bool,
}

const STATE_NAMES: [&str; 12] = ["x", "y", "z", "phi", "theta", "psi", "u", "v", "w", "p", "q", "r"];

/// Column names of the CSV trace.
pub fn csv_header() -> String {
    let mut cols: Vec<String> = vec!["time".into(), "entity".into(), "index".into()];
    cols.extend(STATE_NAMES.iter().map(|s| s.to_string()));
    cols.extend(STATE_NAMES.iter().map(|s| format!("est_{s}")));
    cols.extend(STATE_NAMES.iter().map(|s| format!("des_{s}")));
    cols.extend(
        ["thrust", "tau_phi", "tau_theta", "tau_psi", "tension", "residual_x", "residual_y", "residual_z"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols.join(",")
}

/// 17 significant digits.
pub fn fmt_sci(v: f64) -> String {
    format!("{v:.16e}")
}

impl Trace {
    pub fn agent_count(&self) -> usize {
        self.agents.first().map_or(0, Vec::len)
    }

    /// Writes the header and one row per agent per tick, followed by the
    /// payload row. Agent rows leave the residual empty; payload rows fill
    /// `x..z` with position, `u..w` with velocity and leave the rest empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", csv_header())?;
        let blank12 = [""; 12].join(",");
        for (tick, t) in self.times.iter().enumerate() {
            let time = fmt_sci(*t);
            for (i, a) in self.agents[tick].iter().enumerate() {
                let mut row = vec![time.clone(), "agent".into(), (i + 1).to_string()];
                row.extend(a.state.iter().map(|v| fmt_sci(*v)));
                row.extend(a.estimate.iter().map(|v| fmt_sci(*v)));
                row.extend(a.desired.iter().map(|v| fmt_sci(*v)));
                row.extend(a.input.iter().map(|v| fmt_sci(*v)));
                row.push(fmt_sci(a.tension));
                row.extend(["".to_string(), "".to_string(), "".to_string()]);
                writeln!(out, "{}", row.join(","))?;
            }
            if let Some(p) = self.payload.as_ref().map(|p| &p[tick]) {
                let mut row = vec![time.clone(), "payload".into(), "0".into()];
                row.extend(p.position.iter().map(|v| fmt_sci(*v)));
                row.extend(["".to_string(), "".to_string(), "".to_string()]);
                row.extend(p.velocity.iter().map(|v| fmt_sci(*v)));
                row.extend(["".to_string(), "".to_string(), "".to_string()]);
                row.push(blank12.clone());
                row.push(blank12.clone());
                row.extend(["", "", "", "", ""].iter().map(|s| s.to_string()));
                row.extend(p.residual.iter().map(|v| fmt_sci(*v)));
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_have_header_width() {
        let sample = AgentSample {
            state: StateVector::repeat(1.0),
            estimate: StateVector::zeros(),
            desired: StateVector::zeros(),
            input: InputVector::zeros(),
            tension: 2.0,
        };
        let trace = Trace {
            times: vec![0.0, 0.01],
            agents: vec![vec![sample; 2]; 2],
            payload: Some(vec![
                PayloadSample {
                    position: Vec3::zeros(),
                    velocity: Vec3::zeros(),
                    residual: Vec3::zeros(),
                };
                2
            ]),
            end_time: 0.01,
            leaders: None,
            initial_weights: Vec::new(),
            literal_innovation: false,
        };
        let csv = trace.to_csv_string();
        let width = csv_header().split(',').count();
        assert_eq!(width, 3 + 36 + 4 + 1 + 3);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 3);
        for l in &lines {
            assert_eq!(l.split(',').count(), width, "{l}");
        }
        assert!(lines[1].starts_with("0.0000000000000000e0,agent,1,1.0000000000000000e0"));
    }
}
