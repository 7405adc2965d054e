//! Scenario configuration.
//!
//! The on-disk format is TOML written as flat dotted keys (`sim.dt = 0.01`).
//! All quantities are SI: metres, seconds, kilograms, newtons, radians.
//! Agent ids in files are 1-based; the in-memory config is 0-based.
//!
//! | key | unit | meaning |
//! |---|---|---|
//! | `scenario.name` | | label copied into the metrics |
//! | `scenario.seed` | | RNG seed |
//! | `world.gravity` | m/s^2 | |
//! | `sim.dt` | s | RK4 step |
//! | `sim.control_dt` | s | estimator / feedback tick |
//! | `sim.trace_dt` | s | trace sampling period |
//! | `sim.relinearization_interval` | s | gain and desired-input refresh period |
//! | `sim.noise` | | master switch for all sampled noise |
//! | `guidance.mode` | | `"continuum"` or `"hover"` |
//! | `guidance.duration` | s | hover missions only |
//! | `guidance.leaders` | | three agent ids |
//! | `guidance.waypoint_times` | s | strictly increasing |
//! | `guidance.waypoints.leaderK` | m | one `[x, y, z]` per waypoint time, K = 1..3 |
//! | `quad.mass` | kg | shared vehicle parameters |
//! | `quad.inertia` | kg m^2 | `[Ixx, Iyy, Izz]` |
//! | `quad.drag` | kg/s | `[Ax, Ay, Az]` |
//! | `agents.positions` | m | initial position of each agent |
//! | `agents.initial_offset` | m | added to every vehicle's true starting position |
//! | `payload.enabled` | | |
//! | `payload.mass` | kg | |
//! | `payload.drag` | kg/s | `[Cpx, Cpy, Cpz]` |
//! | `payload.disturbance_cov` | N^2 | 3x3 aerodynamic force disturbance |
//! | `payload.position_noise_cov` | m^2 | 3x3 perturbation of cable attachment points |
//! | `payload.pretension` | | initial cable stretch as a fraction of free length |
//! | `cables.stiffness` | N/m | |
//! | `cables.allow_compression` | | signed spring law |
//! | `lqg.e`, `lqg.q`, `lqg.r` | | 12x12 state cost, process and measurement covariances |
//! | `lqg.h` | | 4x4 input cost |
//! | `lqg.literal_innovation` | | observer without output prediction |
//! | `lqg.single_linearization` | | one set of gains for the whole mission |
//! | `lqg.linearization_time` | s | time used by `single_linearization` |

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Matrix3, SMatrix};

use crate::dynamics::QuadParams;
use crate::error::{Error, Result};
use crate::guidance::{compute_weights, LeadingTriangle, WaypointSchedule};
use crate::lqg::NoiseModel;
use crate::payload::PayloadParams;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuidanceMode {
    /// Leaders fly the waypoint schedule, followers keep their weights.
    Continuum,
    /// Every agent holds its initial position.
    Hover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    pub allow_compression: bool,
    pub literal_innovation: bool,
    pub single_linearization: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub position: Vec3,
    pub params: QuadParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadConfig {
    pub params: PayloadParams,
    /// Covariance of the attachment-point perturbation (m^2).
    pub position_noise_cov: Matrix3<f64>,
    /// N/m, shared by all cables.
    pub stiffness: f64,
    /// Initial stretch of every cable relative to its free length; sets
    /// how far below the fleet centroid the payload starts.
    pub pretension: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub gravity: f64,
    pub mode: GuidanceMode,
    /// Hover missions only; continuum missions end at the last waypoint.
    pub hover_duration: f64,
    pub agents: Vec<AgentConfig>,
    /// Displacement of every vehicle's true starting position from its
    /// desired one.
    pub initial_offset: Vec3,
    /// 0-based agent indices.
    pub leaders: [usize; 3],
    pub waypoint_times: Vec<f64>,
    /// Per leader, one position per waypoint time.
    pub leader_waypoints: [Vec<Vec3>; 3],
    pub payload: Option<PayloadConfig>,
    pub noise: NoiseModel,
    pub noise_enabled: bool,
    pub dt_sim: f64,
    pub dt_ctrl: f64,
    pub trace_dt: f64,
    pub relinearization_interval: f64,
    pub linearization_time: f64,
    pub flags: Flags,
}

fn steps(span: f64, dt: f64) -> Option<usize> {
    let n = span / dt;
    let r = n.round();
    ((n - r).abs() <= 1e-9 * r.max(1.0) && r >= 1.0).then_some(r as usize)
}

impl ScenarioConfig {
    pub fn start_time(&self) -> f64 {
        match self.mode {
            GuidanceMode::Continuum => self.waypoint_times.first().copied().unwrap_or(0.0),
            GuidanceMode::Hover => 0.0,
        }
    }

    pub fn end_time(&self) -> f64 {
        match self.mode {
            GuidanceMode::Continuum => self.waypoint_times.last().copied().unwrap_or(0.0),
            GuidanceMode::Hover => self.hover_duration,
        }
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Leader waypoint schedule (continuum missions).
    pub fn schedule(&self) -> Result<WaypointSchedule> {
        let triangles = (0..self.waypoint_times.len())
            .map(|j| {
                let v = |k: usize| {
                    self.leader_waypoints[k].get(j).copied().ok_or_else(|| {
                        Error::Config(format!(
                            "guidance.waypoints.leader{} has {} entries for {} waypoint times",
                            k + 1,
                            self.leader_waypoints[k].len(),
                            self.waypoint_times.len()
                        ))
                    })
                };
                Ok(LeadingTriangle::new(v(0)?, v(1)?, v(2)?))
            })
            .collect::<Result<Vec<_>>>()?;
        WaypointSchedule::new(self.waypoint_times.clone(), triangles)
    }

    /// Every violated invariant, in a human-readable form. Empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.agents.len();

        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.gravity) {
            out.push(format!("world.gravity must be positive (got {})", self.gravity));
        }
        if !positive(self.dt_sim) {
            out.push(format!("sim.dt must be positive (got {})", self.dt_sim));
        }
        if !positive(self.dt_ctrl) {
            out.push(format!("sim.control_dt must be positive (got {})", self.dt_ctrl));
        }
        if positive(self.dt_sim) && positive(self.dt_ctrl) && steps(self.dt_ctrl, self.dt_sim).is_none() {
            out.push(format!(
                "sim.control_dt ({}) must be a whole multiple of sim.dt ({})",
                self.dt_ctrl, self.dt_sim
            ));
        }
        if positive(self.dt_ctrl) && (!positive(self.trace_dt) || steps(self.trace_dt, self.dt_ctrl).is_none()) {
            out.push(format!(
                "sim.trace_dt ({}) must be a whole multiple of sim.control_dt ({})",
                self.trace_dt, self.dt_ctrl
            ));
        }
        if positive(self.dt_ctrl)
            && (!positive(self.relinearization_interval)
                || steps(self.relinearization_interval, self.dt_ctrl).is_none())
        {
            out.push(format!(
                "sim.relinearization_interval ({}) must be a whole multiple of sim.control_dt ({})",
                self.relinearization_interval, self.dt_ctrl
            ));
        }
        let span = self.end_time() - self.start_time();
        if !(span > 0.0) {
            out.push(format!("mission duration must be positive (got {span} s)"));
        } else if positive(self.dt_ctrl) && steps(span, self.dt_ctrl).is_none() {
            out.push(format!(
                "mission duration ({span} s) must be a whole multiple of sim.control_dt"
            ));
        }

        for (i, a) in self.agents.iter().enumerate() {
            if !a.position.iter().all(|c| c.is_finite()) {
                out.push(format!("agent {} has a non-finite initial position", i + 1));
            }
            if let Err(e) = a.params.validate() {
                out.push(format!("agent {}: {e}", i + 1));
            }
        }

        if let Err(e) = self.noise.validate() {
            out.push(format!("lqg noise model: {e}"));
        }

        match self.mode {
            GuidanceMode::Hover => {
                if n < 1 {
                    out.push("hover missions need at least one agent".into());
                }
                if self.payload.is_some() {
                    out.push("hover missions do not carry a payload (set payload.enabled = false)".into());
                }
            }
            GuidanceMode::Continuum => self.continuum_violations(&mut out),
        }

        if let Some(p) = &self.payload {
            if !positive(p.params.mass) {
                out.push(format!("payload.mass must be positive (got {})", p.params.mass));
            }
            if !p.params.drag.iter().all(|c| c.is_finite() && *c >= 0.0) {
                out.push("payload.drag must be non-negative".into());
            }
            if !positive(p.stiffness) {
                out.push(format!("cables.stiffness must be positive (got {})", p.stiffness));
            }
            if !positive(p.pretension) {
                out.push(format!("payload.pretension must be positive (got {})", p.pretension));
            }
            for (name, m) in [
                ("payload.disturbance_cov", &p.params.disturbance_cov),
                ("payload.position_noise_cov", &p.position_noise_cov),
            ] {
                if !is_symmetric_psd(m) {
                    out.push(format!("{name} must be symmetric positive semidefinite"));
                }
            }
        }
        out
    }

    fn continuum_violations(&self, out: &mut Vec<String>) {
        let n = self.agents.len();
        if n < 4 {
            out.push(format!("continuum missions need at least 4 agents (got {n})"));
        }
        let [a, b, c] = self.leaders;
        if a == b || b == c || a == c {
            out.push(format!("leader ids must be distinct (got {}, {}, {})", a + 1, b + 1, c + 1));
        }
        if let Some(l) = self.leaders.iter().find(|&&l| l >= n) {
            out.push(format!("leader id {} exceeds the agent count {n}", l + 1));
            return;
        }
        let schedule = match self.schedule() {
            Ok(s) => s,
            Err(e) => {
                out.push(e.to_string());
                return;
            }
        };
        let min_gap = schedule
            .times()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if self.dt_ctrl > min_gap {
            out.push(format!(
                "sim.control_dt ({}) exceeds the shortest waypoint interval ({min_gap})",
                self.dt_ctrl
            ));
        }
        if self.dt_sim > self.dt_ctrl {
            out.push(format!("sim.dt ({}) exceeds sim.control_dt ({})", self.dt_sim, self.dt_ctrl));
        }
        let tri0 = schedule.initial_triangle();
        for (k, &l) in self.leaders.iter().enumerate() {
            let d = (self.agents[l].position - tri0.vertices[k]).norm();
            if d > 1e-9 {
                out.push(format!(
                    "leader {} (agent {}) starts {d} m away from its first waypoint",
                    k + 1,
                    l + 1
                ));
            }
        }
        for (i, agent) in self.agents.iter().enumerate() {
            if self.leaders.contains(&i) {
                continue;
            }
            match compute_weights(&agent.position, tri0) {
                Ok(w) if w.min() > 0.0 => {}
                Ok(w) => out.push(format!(
                    "follower {} at ({}, {}) is outside the initial leading triangle (weights {:?})",
                    i + 1,
                    agent.position.x,
                    agent.position.y,
                    w.0
                )),
                Err(e) => out.push(format!("follower {}: {e}", i + 1)),
            }
            if agent.position.z != tri0.vertices[0].z {
                out.push(format!(
                    "follower {} is not in the leaders' plane z = {}",
                    i + 1,
                    tri0.vertices[0].z
                ));
            }
        }
    }

    /// Fails with every violation joined when the config is invalid.
    pub fn check(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `key = value` overrides (values in TOML
    /// syntax) before interpretation.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut fields = Fields::flatten(table);
        for (key, raw) in overrides {
            let value = parse_value(raw)
                .map_err(|e| Error::Config(format!("override {key}: {e}")))?;
            fields.values.insert(key.clone(), value);
        }
        Self::from_fields(&mut fields)
    }

    fn from_fields(f: &mut Fields) -> Result<Self> {
        let mode = match f.string_or("guidance.mode", "continuum")?.as_str() {
            "continuum" => GuidanceMode::Continuum,
            "hover" => GuidanceMode::Hover,
            other => {
                return Err(Error::Config(format!(
                    "guidance.mode: expected \"continuum\" or \"hover\", got {other:?}"
                )))
            }
        };
        let gravity = f.f64_or("world.gravity", 9.81)?;
        let reference = QuadParams::reference();
        let inertia = f.vec3_or("quad.inertia", reference.inertia)?;
        let params = QuadParams {
            mass: f.f64_or("quad.mass", reference.mass)?,
            inertia,
            drag: f.vec3_or("quad.drag", reference.drag)?,
            gravity,
        };
        let positions = f.vec3_list("agents.positions")?;
        let agents = positions
            .into_iter()
            .map(|position| AgentConfig { position, params })
            .collect();

        let (leaders, waypoint_times, leader_waypoints, hover_duration) = match mode {
            GuidanceMode::Continuum => {
                let ids = f.usize_list("guidance.leaders")?;
                if ids.len() != 3 {
                    return Err(Error::Config(format!(
                        "guidance.leaders: exactly three ids required (got {})",
                        ids.len()
                    )));
                }
                if ids.contains(&0) {
                    return Err(Error::Config("guidance.leaders: ids start at 1".into()));
                }
                let times = f.f64_list("guidance.waypoint_times")?;
                let w = [
                    f.vec3_list("guidance.waypoints.leader1")?,
                    f.vec3_list("guidance.waypoints.leader2")?,
                    f.vec3_list("guidance.waypoints.leader3")?,
                ];
                ([ids[0] - 1, ids[1] - 1, ids[2] - 1], times, w, 0.0)
            }
            GuidanceMode::Hover => {
                let d = f.f64("guidance.duration")?;
                ([0, 0, 0], Vec::new(), [Vec::new(), Vec::new(), Vec::new()], d)
            }
        };

        let payload = if f.bool_or("payload.enabled", mode == GuidanceMode::Continuum)? {
            let cov = f.matrix_or::<3, 3>("payload.disturbance_cov", Matrix3::zeros())?;
            Some(PayloadConfig {
                params: PayloadParams {
                    mass: f.f64("payload.mass")?,
                    drag: f.vec3_or("payload.drag", Vec3::zeros())?,
                    disturbance_cov: cov,
                },
                position_noise_cov: f.matrix_or::<3, 3>("payload.position_noise_cov", Matrix3::zeros())?,
                stiffness: f.f64("cables.stiffness")?,
                pretension: f.f64_or("payload.pretension", super::scenario::PRETENSION)?,
            })
        } else {
            None
        };
        let allow_compression = f.bool_or("cables.allow_compression", false)?;

        let reference_noise = NoiseModel::reference();
        let noise = NoiseModel {
            e: f.matrix_or("lqg.e", reference_noise.e)?,
            h: f.matrix_or("lqg.h", reference_noise.h)?,
            q: f.matrix_or("lqg.q", reference_noise.q)?,
            r: f.matrix_or("lqg.r", reference_noise.r)?,
        };

        let config = Self {
            name: f.string_or("scenario.name", "unnamed")?,
            seed: f.u64_or("scenario.seed", 0)?,
            gravity,
            mode,
            hover_duration,
            agents,
            initial_offset: f.vec3_or("agents.initial_offset", Vec3::zeros())?,
            leaders,
            waypoint_times,
            leader_waypoints,
            payload,
            noise,
            noise_enabled: f.bool_or("sim.noise", true)?,
            dt_sim: f.f64_or("sim.dt", 5e-4)?,
            dt_ctrl: f.f64_or("sim.control_dt", 0.01)?,
            trace_dt: f.f64_or("sim.trace_dt", 0.01)?,
            relinearization_interval: f.f64_or("sim.relinearization_interval", 1.0)?,
            linearization_time: f.f64_or("lqg.linearization_time", 10.0)?,
            flags: Flags {
                allow_compression,
                literal_innovation: f.bool_or("lqg.literal_innovation", false)?,
                single_linearization: f.bool_or("lqg.single_linearization", false)?,
            },
        };
        f.reject_unused()?;
        Ok(config)
    }

    /// Serializes to the flat key format accepted by [`Self::from_toml_str`].
    pub fn to_toml_string(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("scenario.name", format!("{:?}", self.name));
        line("scenario.seed", self.seed.to_string());
        line("world.gravity", fmt_f64(self.gravity));
        line("sim.dt", fmt_f64(self.dt_sim));
        line("sim.control_dt", fmt_f64(self.dt_ctrl));
        line("sim.trace_dt", fmt_f64(self.trace_dt));
        line("sim.relinearization_interval", fmt_f64(self.relinearization_interval));
        line("sim.noise", self.noise_enabled.to_string());
        match self.mode {
            GuidanceMode::Continuum => {
                line("guidance.mode", "\"continuum\"".into());
                line(
                    "guidance.leaders",
                    format!("[{}, {}, {}]", self.leaders[0] + 1, self.leaders[1] + 1, self.leaders[2] + 1),
                );
                line("guidance.waypoint_times", fmt_list(&self.waypoint_times));
                for (k, w) in self.leader_waypoints.iter().enumerate() {
                    line(&format!("guidance.waypoints.leader{}", k + 1), fmt_vec3_list(w));
                }
            }
            GuidanceMode::Hover => {
                line("guidance.mode", "\"hover\"".into());
                line("guidance.duration", fmt_f64(self.hover_duration));
            }
        }
        let q = self.agents.first().map(|a| a.params).unwrap_or_else(QuadParams::reference);
        line("quad.mass", fmt_f64(q.mass));
        line("quad.inertia", fmt_vec3(&q.inertia));
        line("quad.drag", fmt_vec3(&q.drag));
        let positions: Vec<Vec3> = self.agents.iter().map(|a| a.position).collect();
        line("agents.positions", fmt_vec3_list(&positions));
        line("agents.initial_offset", fmt_vec3(&self.initial_offset));
        match &self.payload {
            Some(p) => {
                line("payload.enabled", "true".into());
                line("payload.mass", fmt_f64(p.params.mass));
                line("payload.drag", fmt_vec3(&p.params.drag));
                line("payload.disturbance_cov", fmt_matrix(&p.params.disturbance_cov));
                line("payload.position_noise_cov", fmt_matrix(&p.position_noise_cov));
                line("payload.pretension", fmt_f64(p.pretension));
                line("cables.stiffness", fmt_f64(p.stiffness));
            }
            None => line("payload.enabled", "false".into()),
        }
        line("cables.allow_compression", self.flags.allow_compression.to_string());
        line("lqg.e", fmt_matrix(&self.noise.e));
        line("lqg.h", fmt_matrix(&self.noise.h));
        line("lqg.q", fmt_matrix(&self.noise.q));
        line("lqg.r", fmt_matrix(&self.noise.r));
        line("lqg.literal_innovation", self.flags.literal_innovation.to_string());
        line("lqg.single_linearization", self.flags.single_linearization.to_string());
        line("lqg.linearization_time", fmt_f64(self.linearization_time));
        s
    }
}

fn is_symmetric_psd(m: &Matrix3<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
        && (m - m.transpose()).amax() <= 1e-12 * (1.0 + m.amax())
        && m.symmetric_eigenvalues().min() >= -1e-12 * (1.0 + m.amax())
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_vec3(v: &Vec3) -> String {
    fmt_list(v.as_slice())
}

fn fmt_vec3_list(v: &[Vec3]) -> String {
    let items: Vec<String> = v.iter().map(fmt_vec3).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_matrix<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> String {
    let rows: Vec<String> = (0..R)
        .map(|i| {
            let row: Vec<f64> = (0..C).map(|j| m[(i, j)]).collect();
            fmt_list(&row)
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn parse_value(raw: &str) -> std::result::Result<toml::Value, String> {
    let doc: toml::Table = format!("v = {raw}").parse().map_err(|e: toml::de::Error| e.to_string())?;
    doc.get("v").cloned().ok_or_else(|| "missing value".to_string())
}

/// Dotted-path view of a TOML document that tracks which keys were read.
struct Fields {
    values: BTreeMap<String, toml::Value>,
    used: Vec<String>,
}

impl Fields {
    fn flatten(table: toml::Table) -> Self {
        fn walk(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, toml::Value>) {
            for (k, v) in table {
                let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
                match v {
                    toml::Value::Table(t) => walk(&key, t, out),
                    other => {
                        out.insert(key, other);
                    }
                }
            }
        }
        let mut values = BTreeMap::new();
        walk("", table, &mut values);
        Self {
            values,
            used: Vec::new(),
        }
    }

    fn get(&mut self, key: &str) -> Option<toml::Value> {
        self.used.push(key.to_string());
        self.values.get(key).cloned()
    }

    fn require(&mut self, key: &str) -> Result<toml::Value> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("{key}: missing required key")))
    }

    fn reject_unused(&self) -> Result<()> {
        let unknown: Vec<&String> = self.values.keys().filter(|k| !self.used.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "unknown keys: {}",
                unknown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )))
        }
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        as_f64(&v).ok_or_else(|| type_error(key, "a number", &v))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => as_f64(&v).ok_or_else(|| type_error(key, "a number", &v)),
            None => Ok(default),
        }
    }

    fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(toml::Value::Integer(i)) if i >= 0 => Ok(i as u64),
            Some(v) => Err(type_error(key, "a non-negative integer", &v)),
            None => Ok(default),
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            Some(toml::Value::Boolean(b)) => Ok(b),
            Some(v) => Err(type_error(key, "true or false", &v)),
            None => Ok(default),
        }
    }

    fn string_or(&mut self, key: &str, default: &str) -> Result<String> {
        match self.get(key) {
            Some(toml::Value::String(s)) => Ok(s),
            Some(v) => Err(type_error(key, "a string", &v)),
            None => Ok(default.to_string()),
        }
    }

    fn f64_list(&mut self, key: &str) -> Result<Vec<f64>> {
        let v = self.require(key)?;
        numbers(&v).ok_or_else(|| type_error(key, "an array of numbers", &v))
    }

    fn usize_list(&mut self, key: &str) -> Result<Vec<usize>> {
        let v = self.require(key)?;
        v.as_array()
            .and_then(|a| {
                a.iter()
                    .map(|x| x.as_integer().filter(|i| *i >= 0).map(|i| i as usize))
                    .collect::<Option<Vec<_>>>()
            })
            .ok_or_else(|| type_error(key, "an array of integers", &v))
    }

    fn vec3_or(&mut self, key: &str, default: Vec3) -> Result<Vec3> {
        match self.get(key) {
            Some(v) => numbers(&v)
                .filter(|n| n.len() == 3)
                .map(|n| Vec3::new(n[0], n[1], n[2]))
                .ok_or_else(|| type_error(key, "[x, y, z]", &v)),
            None => Ok(default),
        }
    }

    fn vec3_list(&mut self, key: &str) -> Result<Vec<Vec3>> {
        let v = self.require(key)?;
        v.as_array()
            .and_then(|rows| {
                rows.iter()
                    .map(|r| numbers(r).filter(|n| n.len() == 3).map(|n| Vec3::new(n[0], n[1], n[2])))
                    .collect::<Option<Vec<_>>>()
            })
            .ok_or_else(|| type_error(key, "an array of [x, y, z]", &v))
    }

    fn matrix_or<const R: usize, const C: usize>(
        &mut self,
        key: &str,
        default: SMatrix<f64, R, C>,
    ) -> Result<SMatrix<f64, R, C>> {
        let Some(v) = self.get(key) else {
            return Ok(default);
        };
        let rows = v
            .as_array()
            .and_then(|rows| rows.iter().map(numbers).collect::<Option<Vec<_>>>())
            .filter(|rows| rows.len() == R && rows.iter().all(|r| r.len() == C))
            .ok_or_else(|| type_error(key, &format!("a {R}x{C} array of rows"), &v))?;
        Ok(SMatrix::from_fn(|i, j| rows[i][j]))
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn numbers(v: &toml::Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(as_f64).collect()
}

fn type_error(key: &str, expected: &str, got: &toml::Value) -> Error {
    Error::Config(format!("{key}: expected {expected}, got {got}"))
}
