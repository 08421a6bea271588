//! Fixed-step simulation of one serial chain under PID position control.
//!
//! [`spawn`] wires a model and controller set onto a [`Bus`]: it advertises
//! `/<ns>/joint_states` and subscribes `/<ns>/<controller>/command` for each
//! controller. Each [`Simulation::step`] drains the command queues, runs the
//! controllers, integrates every joint by `dt`, and publishes the joint state
//! at the configured rate. Nothing here reads the wall clock.

mod controllers;
mod trace;

use std::collections::BTreeMap;

use thiserror::Error;

pub use controllers::{
    parse_controllers, ControllerConfigError, ControllerSet, PositionController, POSITION_CONTROLLER_TYPE,
    STATE_CONTROLLER_TYPE,
};
pub use trace::{CsvTrace, TraceSink};

use crate::bus::{Bus, BusError, JointStateMsg, MessageKind, Publisher, Subscription};
use crate::control::{gravity_torque, joint_step, pid_step, JointSimState, PidGains, PidState};
use crate::urdf::{movable_chain, validate_model, Chain, Diagnostic, JointLimits, ModelError, RobotModel, Severity};

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointOverride {
    pub inertia: Option<f64>,
    pub damping: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    /// Magnitude of gravity along −z; 0 disables it.
    pub gravity: f64,
    pub overrides: BTreeMap<String, JointOverride>,
    /// Upper bound on the simulated time of a single [`Simulation::run`].
    pub duration_cap: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            gravity: STANDARD_GRAVITY,
            overrides: BTreeMap::new(),
            duration_cap: None,
        }
    }
}

impl SimConfig {
    pub fn without_gravity() -> Self {
        Self {
            gravity: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpawnError {
    #[error("model is invalid: {}", first_error(.0))]
    InvalidModel(Vec<Diagnostic>),
    #[error("joint {0:?} has a controller but no transmission")]
    MissingTransmission(String),
    #[error("controller refers to unknown joint {0:?}")]
    UnknownJoint(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bus(#[from] BusError),
}

fn first_error(diags: &[Diagnostic]) -> String {
    diags.first().map(ToString::to_string).unwrap_or_default()
}

/// Non-fatal findings from [`spawn`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpawnWarning {
    /// The joint has a transmission but no controller; it moves passively.
    MissingController(String),
}

impl std::fmt::Display for SpawnWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpawnWarning::MissingController(j) => {
                write!(f, "joint {j:?} has a transmission but no controller; it will move passively")
            }
        }
    }
}

struct Controller {
    name: String,
    gains: PidGains,
    pid: PidState,
    commands: Subscription,
}

struct SimJoint {
    name: String,
    limits: JointLimits,
    state: JointSimState,
    target: f64,
    controller: Option<Controller>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub steps: u64,
    pub final_state: JointStateMsg,
}

pub struct Simulation {
    model: RobotModel,
    chain: Chain,
    controllers: ControllerSet,
    config: SimConfig,
    joints: Vec<SimJoint>,
    steps: u64,
    publish_every: u64,
    state_pub: Publisher,
    warnings: Vec<SpawnWarning>,
}

pub fn spawn(
    model: RobotModel,
    controllers: ControllerSet,
    config: SimConfig,
    bus: &Bus,
) -> Result<Simulation, SpawnError> {
    let errors: Vec<_> = validate_model(&model)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(SpawnError::InvalidModel(errors));
    }
    let rate = controllers.state_publish_rate;
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(SpawnError::InvalidConfig(format!("dt must be positive, got {}", config.dt)));
    }
    if !(rate > 0.0) || config.dt > (1.0 / rate) * (1.0 + 1e-9) {
        return Err(SpawnError::InvalidConfig(format!(
            "dt {} exceeds the publish period 1/{rate}",
            config.dt
        )));
    }
    if !(config.gravity.is_finite()) {
        return Err(SpawnError::InvalidConfig("gravity must be finite".into()));
    }

    let chain = movable_chain(&model, &model.default_tip())?;
    for c in &controllers.controllers {
        if model.joint(&c.joint).is_none() || !chain.movable().any(|j| j.name == c.joint) {
            return Err(SpawnError::UnknownJoint(c.joint.clone()));
        }
        if model.transmission_for(&c.joint).is_none() {
            return Err(SpawnError::MissingTransmission(c.joint.clone()));
        }
    }

    let mut warnings = Vec::new();
    let mut joints = Vec::with_capacity(chain.dof());
    for joint in chain.movable() {
        let limits = joint.limits.expect("validated revolute joints carry limits");
        let over = config.overrides.get(&joint.name).copied().unwrap_or_default();
        let inertia = over.inertia.unwrap_or(JointSimState::DEFAULT_INERTIA);
        let damping = over.damping.unwrap_or(JointSimState::DEFAULT_DAMPING);
        if !(inertia > 0.0 && damping >= 0.0) {
            return Err(SpawnError::InvalidConfig(format!(
                "joint {}: inertia must be positive and damping non-negative",
                joint.name
            )));
        }
        let q0 = limits.clamp(0.0);
        let controller = match controllers.for_joint(&joint.name) {
            Some(c) => Some(Controller {
                name: c.name.clone(),
                gains: c.gains,
                pid: PidState::for_effort_limit(&c.gains, limits.effort),
                commands: bus.subscribe(&controllers.command_topic(&c.name), MessageKind::ScalarCommand)?,
            }),
            None => {
                if model.transmission_for(&joint.name).is_some() {
                    warnings.push(SpawnWarning::MissingController(joint.name.clone()));
                }
                None
            }
        };
        joints.push(SimJoint {
            name: joint.name.clone(),
            limits,
            state: JointSimState::at_rest(q0, inertia, damping),
            target: q0,
            controller,
        });
    }
    let state_pub = bus.advertise(&controllers.state_topic(), MessageKind::JointStateMsg)?;
    let publish_every = (((1.0 / rate) / config.dt).round() as u64).max(1);

    Ok(Simulation {
        model,
        chain,
        controllers,
        config,
        joints,
        steps: 0,
        publish_every,
        state_pub,
        warnings,
    })
}

impl Simulation {
    pub fn time(&self) -> f64 {
        self.steps as f64 * self.config.dt
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn controllers(&self) -> &ControllerSet {
        &self.controllers
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn warnings(&self) -> &[SpawnWarning] {
        &self.warnings
    }

    /// Steps between two published states.
    pub fn publish_every(&self) -> u64 {
        self.publish_every
    }

    pub fn joint_names(&self) -> Vec<String> {
        self.joints.iter().map(|j| j.name.clone()).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.state.q).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.target).collect()
    }

    pub fn joint_state(&self, joint: &str) -> Option<&JointSimState> {
        self.joints.iter().find(|j| j.name == joint).map(|j| &j.state)
    }

    /// Command topic of the controller driving `joint`, if any.
    pub fn command_topic(&self, joint: &str) -> Option<String> {
        let j = self.joints.iter().find(|j| j.name == joint)?;
        j.controller
            .as_ref()
            .map(|c| self.controllers.command_topic(&c.name))
    }

    pub fn state_msg(&self) -> JointStateMsg {
        JointStateMsg {
            t: self.time(),
            names: self.joint_names(),
            q: self.positions(),
            qd: self.joints.iter().map(|j| j.state.qd).collect(),
            effort: self.joints.iter().map(|j| j.state.last_effort).collect(),
        }
    }

    /// Advances one step; returns the state if this step published one.
    pub fn step(&mut self) -> Option<JointStateMsg> {
        let dt = self.config.dt;
        for joint in &mut self.joints {
            if let Some(c) = &joint.controller {
                let newest = c.commands.drain().into_iter().filter_map(|m| m.as_scalar()).next_back();
                if let Some(cmd) = newest {
                    joint.target = joint.limits.clamp(cmd.value);
                }
            }
        }
        let q = self.positions();
        let gravity = gravity_torque(&self.model, &self.chain, &q, self.config.gravity)
            .expect("positions match the chain");
        for (joint, g) in self.joints.iter_mut().zip(gravity) {
            let effort = match &mut joint.controller {
                Some(c) => pid_step(&c.gains, &mut c.pid, joint.target - joint.state.q, dt),
                None => 0.0,
            };
            joint.state = joint_step(&joint.state, &joint.limits, effort, g, dt);
        }
        self.steps += 1;
        if !self.steps.is_multiple_of(self.publish_every) {
            return None;
        }
        let msg = self.state_msg();
        self.state_pub
            .publish(msg.clone())
            .expect("state messages are well formed and time only moves forward");
        Some(msg)
    }

    /// Runs `floor(duration/dt)` steps, capped by the configured duration cap.
    pub fn run(&mut self, duration: f64, mut trace: Option<&mut dyn TraceSink>) -> TraceSummary {
        let duration = match self.config.duration_cap {
            Some(cap) => duration.min(cap),
            None => duration,
        };
        let steps = steps_for(duration.max(0.0), self.config.dt);
        for _ in 0..steps {
            if let Some(msg) = self.step() {
                if let Some(sink) = trace.as_deref_mut() {
                    sink.record(&msg, &self.targets());
                }
            }
        }
        TraceSummary {
            steps,
            final_state: self.state_msg(),
        }
    }
}

/// `floor(duration/dt)`, tolerant of the rounding in quotients like 1.0/1e-3.
pub fn steps_for(duration: f64, dt: f64) -> u64 {
    (duration / dt * (1.0 + 1e-12)).floor() as u64
}
