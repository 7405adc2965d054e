//! Closed-loop mission simulation.
//!
//! The integrated state stacks every quadcopter (12 each), every deviation
//! estimate (12 each) and the payload (6). The LQ feedback and the observer
//! run in continuous time inside the RK4 step: the regulator's attitude-rate
//! poles sit near 2000 rad/s, far beyond what a 0.01 s zero-order hold can
//! stabilize. Measurements, the payload disturbance and the attachment-point
//! perturbation are sampled once per control tick and held.
//!
//! On each relinearization boundary every vehicle gets a fresh desired
//! sample (tension allocation plus attitude back-computation), a new linear
//! model and new gains; the deviation estimate is re-based onto the new
//! desired state. Gain synthesis runs in parallel across vehicles.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::{GuidanceMode, ScenarioConfig};
use super::trace::{AgentSample, PayloadSample, Trace};
use crate::desired::{DesiredSample, DesiredStateAssembler};
use crate::dynamics::{state_derivative, AgentState, ControlInput, StateVector};
use crate::error::{Error, Result};
use crate::guidance::{compute_weights, follower_desired_state, BarycentricWeights, WaypointSchedule};
use crate::integrate::rk4_step;
use crate::lqg::{
    applied_input, control_update, linearize, synthesize_gains, GainSet, Innovation,
    LinearModel,
};
use crate::payload::{cable_force, payload_acceleration, CableSpec, PayloadState};
use crate::tension::{allocate_tensions, cable_directions, load_direction, TensionSolution};
use crate::Vec3;

/// Square-root factor `F` with `F F^T = cov`, valid for semidefinite input.
fn sqrt_factor<const N: usize>(cov: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    let eig = DMatrix::from_column_slice(N, N, cov.as_slice()).symmetric_eigen();
    let mut f = eig.eigenvectors.clone();
    for (j, l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    SMatrix::from_column_slice(f.as_slice())
}

fn gaussian<const N: usize>(rng: &mut ChaCha8Rng, factor: &SMatrix<f64, N, N>) -> SVector<f64, N> {
    let z = SVector::<f64, N>::from_fn(|_, _| StandardNormal.sample(rng));
    factor * z
}

/// Noise drawn for one control tick.
struct TickNoise {
    force: Vec3,
    measurement: Vec<StateVector>,
    attachment: Vec<Vec3>,
}

struct NoiseSource {
    rng: ChaCha8Rng,
    enabled: bool,
    force: Matrix3<f64>,
    attachment: Matrix3<f64>,
    measurement: SMatrix<f64, 12, 12>,
}

impl NoiseSource {
    fn new(config: &ScenarioConfig) -> Self {
        let (force, attachment) = match &config.payload {
            Some(p) => (sqrt_factor(&p.params.disturbance_cov), sqrt_factor(&p.position_noise_cov)),
            None => (Matrix3::zeros(), Matrix3::zeros()),
        };
        Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            enabled: config.noise_enabled,
            force,
            attachment,
            measurement: sqrt_factor(&config.noise.r),
        }
    }

    /// Draw order per tick: payload force, then per agent the measurement
    /// noise followed by the attachment perturbation.
    fn draw(&mut self, agents: usize, payload: bool) -> TickNoise {
        if !self.enabled {
            return TickNoise {
                force: Vec3::zeros(),
                measurement: vec![StateVector::zeros(); agents],
                attachment: vec![Vec3::zeros(); agents],
            };
        }
        let force = if payload { gaussian(&mut self.rng, &self.force) } else { Vec3::zeros() };
        let mut measurement = Vec::with_capacity(agents);
        let mut attachment = Vec::with_capacity(agents);
        for _ in 0..agents {
            measurement.push(gaussian(&mut self.rng, &self.measurement));
            attachment.push(if payload {
                gaussian(&mut self.rng, &self.attachment)
            } else {
                Vec3::zeros()
            });
        }
        TickNoise {
            force,
            measurement,
            attachment,
        }
    }
}

/// Source of desired positions and velocities.
enum Reference {
    Hover(Vec<Vec3>),
    Continuum {
        schedule: WaypointSchedule,
        weights: Vec<BarycentricWeights>,
    },
}

impl Reference {
    fn position_velocity(&self, agent: usize, t: f64) -> Result<(Vec3, Vec3)> {
        match self {
            Reference::Hover(p) => Ok((p[agent], Vec3::zeros())),
            Reference::Continuum { schedule, weights } => follower_desired_state(&weights[agent], schedule, t),
        }
    }
}

struct PayloadModel {
    specs: Vec<CableSpec>,
    params: crate::payload::PayloadParams,
}

/// Initial payload position and cable free lengths: every cable stretched
/// by `pretension` of its free length, the payload directly below the
/// centroid of `quads` at the depth where that stretch holds it in static
/// equilibrium.
pub fn equilibrium_free_lengths(
    quads: &[Vec3],
    payload_mass: f64,
    gravity: f64,
    stiffness: f64,
    pretension: f64,
) -> (Vec3, Vec<f64>) {
    let n = quads.len() as f64;
    let centroid = quads.iter().fold(Vec3::zeros(), |a, q| a + q) / n;
    // Each cable's vertical pull is k (l - l0) h / l = k h p / (1 + p),
    // whatever its horizontal offset; horizontal pulls cancel about the
    // centroid.
    let depth = payload_mass * gravity * (1.0 + pretension) / (n * stiffness * pretension);
    let payload = centroid - Vec3::new(0.0, 0.0, depth);
    let lengths = quads.iter().map(|q| (q - payload).norm() / (1.0 + pretension)).collect();
    (payload, lengths)
}

struct World {
    quads: Vec<AgentState>,
    /// Deviation estimates relative to the current desired states.
    estimates: Vec<StateVector>,
    payload: Option<PayloadState>,
}

impl World {
    fn pack(&self) -> DVector<f64> {
        let n = self.quads.len();
        let extra = if self.payload.is_some() { 6 } else { 0 };
        let mut x = DVector::zeros(24 * n + extra);
        for (i, q) in self.quads.iter().enumerate() {
            x.rows_mut(12 * i, 12).copy_from(&q.to_vector());
            x.rows_mut(12 * (n + i), 12).copy_from(&self.estimates[i]);
        }
        if let Some(p) = &self.payload {
            x.rows_mut(24 * n, 3).copy_from(&p.position);
            x.rows_mut(24 * n + 3, 3).copy_from(&p.velocity);
        }
        x
    }

    fn unpack(x: &DVector<f64>, n: usize, payload: bool) -> Self {
        let block = |k: usize| StateVector::from_column_slice(x.rows(12 * k, 12).as_slice());
        let quads = (0..n).map(|i| AgentState::from_vector(&block(i))).collect();
        let estimates = (0..n).map(|i| block(n + i)).collect();
        let payload = payload.then(|| PayloadState {
            position: Vec3::from_column_slice(x.rows(24 * n, 3).as_slice()),
            velocity: Vec3::from_column_slice(x.rows(24 * n + 3, 3).as_slice()),
        });
        Self {
            quads,
            estimates,
            payload,
        }
    }
}

fn snapshot(state: &AgentState) -> String {
    format!(
        "position {:?}, attitude {:?}, velocity {:?}, body rates {:?}",
        state.position.as_slice(),
        state.attitude.as_slice(),
        state.velocity.as_slice(),
        state.body_rates.as_slice()
    )
}

fn abort(entity: String, time: f64, source: Error, snapshot: String) -> Error {
    Error::Aborted {
        entity,
        time,
        source: Box::new(source),
        snapshot,
    }
}

/// Cable forces on the payload with attachment points shifted by `offsets`.
fn cable_forces_on_payload(
    quads: &[Vec3],
    offsets: &[Vec3],
    payload: &Vec3,
    model: &PayloadModel,
) -> std::result::Result<Vec<Vec3>, (usize, Error)> {
    model
        .specs
        .iter()
        .map(|spec| {
            let i = spec.agent;
            cable_force(&(quads[i] + offsets[i]), payload, spec).map_err(|e| (i, e))
        })
        .collect()
}

struct Plant<'a> {
    params: Vec<crate::dynamics::QuadParams>,
    payload: Option<&'a PayloadModel>,
    gravity: f64,
    innovation: Innovation,
}

impl Plant<'_> {
    /// Derivative of the stacked plant, estimator and payload state, with
    /// measurements `dy` and tick noise held.
    fn derivative(
        &self,
        x: &DVector<f64>,
        controllers: &[Controller],
        dy: &[StateVector],
        noise: &TickNoise,
        time: f64,
    ) -> Result<DVector<f64>> {
        let n = controllers.len();
        let world = World::unpack(x, n, self.payload.is_some());
        let mut dx = DVector::zeros(x.len());

        let mut on_quads = vec![Vec3::zeros(); n];
        if let (Some(model), Some(p)) = (self.payload, &world.payload) {
            let positions: Vec<Vec3> = world.quads.iter().map(|q| q.position).collect();
            let forces = cable_forces_on_payload(&positions, &noise.attachment, &p.position, model)
                .map_err(|(i, e)| abort(format!("cable {}", i + 1), time, e, snapshot(&world.quads[i])))?;
            let mut total = Vec3::zeros();
            for (spec, f) in model.specs.iter().zip(&forces) {
                on_quads[spec.agent] -= f;
                total += f;
            }
            let accel = payload_acceleration(p, &total, &model.params, &noise.force, self.gravity);
            dx.rows_mut(24 * n, 3).copy_from(&p.velocity);
            dx.rows_mut(24 * n + 3, 3).copy_from(&accel);
        }

        for (i, (q, c)) in world.quads.iter().zip(controllers).enumerate() {
            let estimate = &world.estimates[i];
            let u = applied_input(&c.sample.input, &control_update(estimate, &c.gains.k));
            let du = u.to_vector() - c.sample.input.to_vector();
            let d = state_derivative(q, &u, &on_quads[i], &self.params[i])
                .map_err(|e| abort(format!("agent {}", i + 1), time, e, snapshot(q)))?;
            dx.rows_mut(12 * i, 12).copy_from(&d);
            let innov = match self.innovation {
                Innovation::Standard => dy[i] - c.model.c * estimate,
                Innovation::Literal => dy[i],
            };
            let de = c.model.a * estimate + c.model.b * du + c.gains.l * innov;
            dx.rows_mut(12 * (n + i), 12).copy_from(&de);
        }
        Ok(dx)
    }
}

/// Per-vehicle controller state.
struct Controller {
    assembler: DesiredStateAssembler,
    sample: DesiredSample,
    f_cord: Vec3,
    model: LinearModel,
    gains: GainSet,
}

/// Desired full state at `t`: guidance position and velocity, attitude and
/// body rates from the latest relinearization sample.
fn desired_state(reference: &Reference, agent: usize, sample: &DesiredSample, t: f64) -> Result<StateVector> {
    let (position, velocity) = reference.position_velocity(agent, t)?;
    Ok(AgentState {
        position,
        velocity,
        ..sample.state
    }
    .to_vector())
}

/// Desired cable forces on every vehicle, from tension allocation with
/// cables drawn to the desired positions and the payload accelerating at
/// `accel`.
fn allocate(desired_positions: &[Vec3], payload: &PayloadState, accel: &Vec3, model: &PayloadModel, gravity: f64) -> Result<TensionSolution> {
    let (n_p, load) = load_direction(accel, model.params.mass, gravity)?;
    let dirs = cable_directions(desired_positions, &payload.position)?;
    allocate_tensions(dirs, &n_p, load)
}

/// Simulated payload acceleration under the tick's noise.
fn simulated_payload_acceleration(
    world: &World,
    model: &PayloadModel,
    noise: &TickNoise,
    gravity: f64,
    time: f64,
) -> Result<Vec3> {
    let Some(p) = &world.payload else {
        return Ok(Vec3::zeros());
    };
    let positions: Vec<Vec3> = world.quads.iter().map(|q| q.position).collect();
    let forces = cable_forces_on_payload(&positions, &noise.attachment, &p.position, model)
        .map_err(|(i, e)| abort(format!("cable {}", i + 1), time, e, snapshot(&world.quads[i])))?;
    let total = forces.iter().fold(Vec3::zeros(), |a, f| a + f);
    Ok(payload_acceleration(p, &total, &model.params, &noise.force, gravity))
}

fn steps(span: f64, dt: f64) -> usize {
    (span / dt).round() as usize
}

/// Runs the mission described by `config`.
pub fn run(config: &ScenarioConfig) -> Result<Trace> {
    config.check()?;
    let n = config.agent_count();
    let start = config.start_time();
    let end = config.end_time();
    let gravity = config.gravity;
    let params: Vec<_> = config.agents.iter().map(|a| a.params).collect();
    let innovation = if config.flags.literal_innovation {
        Innovation::Literal
    } else {
        Innovation::Standard
    };

    let (reference, leaders, initial_weights) = match config.mode {
        GuidanceMode::Hover => (
            Reference::Hover(config.agents.iter().map(|a| a.position).collect()),
            None,
            Vec::new(),
        ),
        GuidanceMode::Continuum => {
            let schedule = config.schedule()?;
            let weights = (0..n)
                .map(|i| match config.leaders.iter().position(|&l| l == i) {
                    Some(k) => Ok(BarycentricWeights::vertex(k)),
                    None => compute_weights(&config.agents[i].position, schedule.initial_triangle()),
                })
                .collect::<Result<Vec<_>>>()?;
            (
                Reference::Continuum {
                    schedule,
                    weights: weights.clone(),
                },
                Some(config.leaders),
                weights,
            )
        }
    };

    // Initial plant state: every vehicle on its desired position and
    // velocity; the payload hangs below the centroid in static equilibrium.
    let mut desired0 = Vec::with_capacity(n);
    for i in 0..n {
        desired0.push(reference.position_velocity(i, start)?);
    }
    let positions0: Vec<Vec3> = desired0.iter().map(|d| d.0).collect();
    let (payload_model, payload_state) = match &config.payload {
        Some(p) => {
            let (position, lengths) =
                equilibrium_free_lengths(&positions0, p.params.mass, gravity, p.stiffness, p.pretension);
            let specs = lengths
                .iter()
                .enumerate()
                .map(|(i, l0)| CableSpec::new(p.stiffness, *l0, i).with_compression(config.flags.allow_compression))
                .collect();
            let velocity = desired0.iter().fold(Vec3::zeros(), |a, d| a + d.1) / n as f64;
            (
                Some(PayloadModel {
                    specs,
                    params: p.params,
                }),
                Some(PayloadState { position, velocity }),
            )
        }
        None => (None, None),
    };

    let mut noise = NoiseSource::new(config);
    let plant = Plant {
        params: params.clone(),
        payload: payload_model.as_ref(),
        gravity,
        innovation,
    };

    let ctrl_steps = steps(end - start, config.dt_ctrl);
    let substeps = steps(config.dt_ctrl, config.dt_sim);
    let trace_every = steps(config.trace_dt, config.dt_ctrl);
    let relin_every = steps(config.relinearization_interval, config.dt_ctrl);
    let dt_sim = config.dt_ctrl / substeps as f64;

    let mut world = World {
        quads: Vec::new(),
        estimates: vec![StateVector::zeros(); n],
        payload: payload_state,
    };
    let mut controllers: Vec<Controller> = Vec::with_capacity(n);
    let mut trace = Trace {
        times: Vec::new(),
        agents: Vec::new(),
        payload: payload_model.as_ref().map(|_| Vec::new()),
        end_time: end,
        leaders,
        initial_weights,
        literal_innovation: config.flags.literal_innovation,
    };
    let mut residual = Vec3::zeros();
    // Payload acceleration from the previous tick, used by the allocation.
    let mut payload_accel = match (&payload_model, &world.payload) {
        (Some(model), Some(p)) => {
            let forces = cable_forces_on_payload(&positions0, &vec![Vec3::zeros(); n], &p.position, model)
                .map_err(|(_, e)| e)?;
            let total = forces.iter().fold(Vec3::zeros(), |a, f| a + f);
            payload_acceleration(p, &total, &model.params, &Vec3::zeros(), gravity)
        }
        _ => Vec3::zeros(),
    };

    for tick in 0..=ctrl_steps {
        let t = start + tick as f64 * config.dt_ctrl;
        let tick_noise = noise.draw(n, payload_model.is_some());

        if tick < ctrl_steps && tick % relin_every == 0 {
            let t_next = (t + config.relinearization_interval).min(end);
            let (samples, solution) = desired_samples(
                config,
                &reference,
                &mut controllers,
                &world,
                payload_model.as_ref(),
                &payload_accel,
                t,
            )?;
            if let Some(s) = &solution {
                residual = s.off_axis_residual();
            }
            if tick == 0 {
                world.quads = samples
                    .iter()
                    .map(|(s, _)| AgentState {
                        position: s.state.position + config.initial_offset,
                        ..s.state
                    })
                    .collect();
            }
            let fresh = !config.flags.single_linearization || tick == 0;
            let models: Vec<Option<(LinearModel, GainSet)>> = if fresh {
                let basis = if config.flags.single_linearization {
                    linearization_basis(config, &reference, payload_model.as_ref(), &world, &params)?
                } else {
                    samples.iter().map(|(s, f)| (s.state, s.input, *f)).collect()
                };
                basis
                    .par_iter()
                    .enumerate()
                    .map(|(i, (x, u, f))| {
                        let model = linearize(x, u, &params[i], f, t, t_next)?;
                        let gains = synthesize_gains(&model, &config.noise)?;
                        Ok(Some((model, gains)))
                    })
                    .collect::<Vec<Result<_>>>()
                    .into_iter()
                    .enumerate()
                    .map(|(i, r)| {
                        r.map_err(|e| abort(format!("agent {}", i + 1), t, e, snapshot(&world.quads[i])))
                    })
                    .collect::<Result<_>>()?
            } else {
                vec![None; n]
            };

            if tick == 0 {
                for (i, ((sample, f_cord), lg)) in samples.into_iter().zip(models).enumerate() {
                    let (model, gains) = lg.expect("gains on the first boundary");
                    let mut assembler = DesiredStateAssembler::new(0.0);
                    // Seed the assembler with the first sample for the
                    // backward differences of later boundaries.
                    let seeded = assembler.assemble(
                        sample.time,
                        &sample.state.position,
                        &sample.state.velocity,
                        &Vec3::zeros(),
                        &f_cord,
                        &params[i],
                    );
                    debug_assert!(seeded.is_ok());
                    controllers.push(Controller {
                        assembler,
                        sample,
                        f_cord,
                        model,
                        gains,
                    });
                }
            } else {
                for (i, ((sample, f_cord), lg)) in samples.into_iter().zip(models).enumerate() {
                    let c = &mut controllers[i];
                    // Keep the estimated absolute state, expressed against
                    // the new desired state.
                    let old = desired_state(&reference, i, &c.sample, t)?;
                    let new = desired_state(&reference, i, &sample, t)?;
                    world.estimates[i] += old - new;
                    c.sample = sample;
                    c.f_cord = f_cord;
                    if let Some((model, gains)) = lg {
                        c.model = model;
                        c.gains = gains;
                    }
                }
            }
        }

        // Measured deviations, held over the tick.
        let mut measured = Vec::with_capacity(n);
        let mut desired_now = Vec::with_capacity(n);
        for (i, c) in controllers.iter().enumerate() {
            let x_d = desired_state(&reference, i, &c.sample, t)?;
            measured.push(world.quads[i].to_vector() + tick_noise.measurement[i] - x_d);
            desired_now.push(x_d);
        }

        if tick % trace_every == 0 {
            let tensions = match (&payload_model, &world.payload) {
                (Some(model), Some(p)) => {
                    let positions: Vec<Vec3> = world.quads.iter().map(|q| q.position).collect();
                    cable_forces_on_payload(&positions, &tick_noise.attachment, &p.position, model)
                        .map_err(|(i, e)| abort(format!("cable {}", i + 1), t, e, snapshot(&world.quads[i])))?
                        .iter()
                        .map(|f| f.norm())
                        .collect()
                }
                _ => vec![0.0; n],
            };
            trace.times.push(t);
            trace.agents.push(
                (0..n)
                    .map(|i| AgentSample {
                        state: world.quads[i].to_vector(),
                        estimate: desired_now[i] + world.estimates[i],
                        desired: desired_now[i],
                        input: applied_input(
                            &controllers[i].sample.input,
                            &control_update(&world.estimates[i], &controllers[i].gains.k),
                        )
                        .to_vector(),
                        tension: tensions[i],
                    })
                    .collect(),
            );
            if let (Some(rows), Some(p)) = (trace.payload.as_mut(), &world.payload) {
                rows.push(PayloadSample {
                    position: p.position,
                    velocity: p.velocity,
                    residual,
                });
            }
        }

        if tick == ctrl_steps {
            break;
        }

        let mut x = world.pack();
        for sub in 0..substeps {
            let ts = t + sub as f64 * dt_sim;
            x = rk4_step(|s| plant.derivative(s, &controllers, &measured, &tick_noise, ts), &x, dt_sim)?;
        }
        world = World::unpack(&x, n, payload_model.is_some());
        if let Some(model) = &payload_model {
            payload_accel = simulated_payload_acceleration(&world, model, &tick_noise, gravity, t + config.dt_ctrl)?;
        }
        let t_next = t + config.dt_ctrl;
        for (i, q) in world.quads.iter().enumerate() {
            if !q.is_finite() {
                return Err(abort(
                    format!("agent {}", i + 1),
                    t_next,
                    Error::Dimension("state is no longer finite".into()),
                    snapshot(q),
                ));
            }
            q.check_gimbal()
                .map_err(|e| abort(format!("agent {}", i + 1), t_next, e, snapshot(q)))?;
        }

    }
    Ok(trace)
}

type Samples = Vec<(DesiredSample, Vec3)>;

/// Desired samples (and cable forces) of every vehicle at a boundary.
fn desired_samples(
    config: &ScenarioConfig,
    reference: &Reference,
    controllers: &mut [Controller],
    world: &World,
    payload: Option<&PayloadModel>,
    payload_accel: &Vec3,
    t: f64,
) -> Result<(Samples, Option<TensionSolution>)> {
    let n = config.agent_count();
    let pv = (0..n)
        .map(|i| reference.position_velocity(i, t))
        .collect::<Result<Vec<_>>>()?;
    let positions: Vec<Vec3> = pv.iter().map(|d| d.0).collect();

    let (cords, solution) = match (payload, &world.payload) {
        (Some(model), Some(p)) => {
            let s = allocate(&positions, p, payload_accel, model, config.gravity)
                .map_err(|e| abort("payload".into(), t, e, format!("payload at {:?}", p.position.as_slice())))?;
            let cords = (0..n).map(|i| -s.force_on_payload(i)).collect();
            (cords, Some(s))
        }
        _ => (vec![Vec3::zeros(); n], None),
    };

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (position, velocity) = pv[i];
        let params = &config.agents[i].params;
        let result = match controllers.get_mut(i) {
            Some(c) => c.assembler.assemble(t, &position, &velocity, &Vec3::zeros(), &cords[i], params),
            None => DesiredStateAssembler::new(0.0).assemble(t, &position, &velocity, &Vec3::zeros(), &cords[i], params),
        };
        let sample = result.map_err(|e| {
            abort(
                format!("agent {}", i + 1),
                t,
                e,
                format!("desired position {:?}, cable force {:?}", position.as_slice(), cords[i].as_slice()),
            )
        })?;
        out.push((sample, cords[i]));
    }
    Ok((out, solution))
}

/// Operating points for the whole-mission linearization: the desired state
/// at `config.linearization_time`, with the payload displaced by the fleet
/// centroid's motion and not accelerating.
fn linearization_basis(
    config: &ScenarioConfig,
    reference: &Reference,
    payload: Option<&PayloadModel>,
    world: &World,
    params: &[crate::dynamics::QuadParams],
) -> Result<Vec<(AgentState, ControlInput, Vec3)>> {
    let n = config.agent_count();
    let t = config
        .linearization_time
        .clamp(config.start_time(), config.end_time());
    let t0 = config.start_time();
    let pv = (0..n)
        .map(|i| reference.position_velocity(i, t))
        .collect::<Result<Vec<_>>>()?;
    let pv0 = (0..n)
        .map(|i| reference.position_velocity(i, t0))
        .collect::<Result<Vec<_>>>()?;
    let positions: Vec<Vec3> = pv.iter().map(|d| d.0).collect();
    let cords: Vec<Vec3> = match (payload, &world.payload) {
        (Some(model), Some(p)) => {
            let shift = pv.iter().zip(&pv0).fold(Vec3::zeros(), |a, (now, then)| a + now.0 - then.0) / n as f64;
            let r_p = p.position + shift;
            let (n_p, load) = load_direction(&Vec3::zeros(), model.params.mass, config.gravity)?;
            let s = allocate_tensions(cable_directions(&positions, &r_p)?, &n_p, load)?;
            (0..n).map(|i| -s.force_on_payload(i)).collect()
        }
        _ => vec![Vec3::zeros(); n],
    };
    (0..n)
        .map(|i| {
            let sample = DesiredStateAssembler::new(0.0).assemble(
                t,
                &pv[i].0,
                &pv[i].1,
                &Vec3::zeros(),
                &cords[i],
                &params[i],
            )?;
            Ok((sample.state, sample.input, cords[i]))
        })
        .collect()
}
