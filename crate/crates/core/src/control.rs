//! Effort-based joint position control: a PID loop turns position error into
//! a torque command, and a decoupled single-joint model integrates it.
//!
//! Each joint is a rotor of fixed inertia with viscous damping, driven by the
//! clamped effort minus the generalized gravity torque. Integration is
//! semi-implicit Euler at a fixed step.

use crate::kinematics::{joint_frames, KinematicsError};
use crate::urdf::{Chain, JointLimits, RobotModel};

const MIN_INTEGRAL_GAIN: f64 = 1e-9;
const GRAVITY_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub p: f64,
    pub i: f64,
    pub d: f64,
}

impl PidGains {
    /// Gains must be finite and non-negative.
    pub fn new(p: f64, i: f64, d: f64) -> Option<Self> {
        let ok = [p, i, d].iter().all(|g| g.is_finite() && *g >= 0.0);
        ok.then_some(Self { p, i, d })
    }

    pub const fn zero() -> Self {
        Self {
            p: 0.0,
            i: 0.0,
            d: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
    pub initialized: bool,
    /// Bound on `|integral|`.
    pub integral_clamp: f64,
}

impl PidState {
    pub fn new(integral_clamp: f64) -> Self {
        Self {
            integral: 0.0,
            prev_error: 0.0,
            initialized: false,
            integral_clamp,
        }
    }

    /// Integral bound that lets the integral term alone reach, but not
    /// exceed, the actuator's effort limit: `effort_limit / max(i, ε)`.
    pub fn for_effort_limit(gains: &PidGains, effort_limit: f64) -> Self {
        Self::new(effort_limit / gains.i.max(MIN_INTEGRAL_GAIN))
    }
}

/// One PID update with derivative on error; the first call has no
/// derivative term. The integral accumulates `error·dt` and is clamped
/// before it is used.
pub fn pid_step(gains: &PidGains, state: &mut PidState, error: f64, dt: f64) -> f64 {
    debug_assert!(dt > 0.0 && error.is_finite());
    state.integral = (state.integral + error * dt).clamp(-state.integral_clamp, state.integral_clamp);
    let derivative = if state.initialized {
        (error - state.prev_error) / dt
    } else {
        0.0
    };
    state.prev_error = error;
    state.initialized = true;
    gains.p * error + gains.i * state.integral + gains.d * derivative
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSimState {
    pub q: f64,
    pub qd: f64,
    /// Effort actually applied in the last step, after clamping.
    pub last_effort: f64,
    pub inertia: f64,
    pub damping: f64,
}

impl JointSimState {
    pub const DEFAULT_INERTIA: f64 = 1.0;
    pub const DEFAULT_DAMPING: f64 = 1.0;

    pub fn at_rest(q: f64, inertia: f64, damping: f64) -> Self {
        Self {
            q,
            qd: 0.0,
            last_effort: 0.0,
            inertia,
            damping,
        }
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.inertia * self.qd * self.qd
    }
}

/// Advances one joint by `dt`.
///
/// The command is clamped to `±limits.effort`; acceleration is
/// `(τ − damping·qd − gravity)/inertia`; velocity then position are updated
/// (semi-implicit Euler). Leaving `[lower, upper]` pins the joint at the
/// bound with zero velocity.
pub fn joint_step(
    state: &JointSimState,
    limits: &JointLimits,
    effort_cmd: f64,
    gravity_torque: f64,
    dt: f64,
) -> JointSimState {
    debug_assert!(dt > 0.0);
    let effort = effort_cmd.clamp(-limits.effort, limits.effort);
    let qdd = (effort - state.damping * state.qd - gravity_torque) / state.inertia;
    let mut qd = state.qd + qdd * dt;
    let mut q = state.q + qd * dt;
    if !limits.contains(q) {
        q = limits.clamp(q);
        qd = 0.0;
    }
    JointSimState {
        q,
        qd,
        last_effort: effort,
        ..*state
    }
}

fn potential_energy(model: &RobotModel, chain: &Chain, q: &[f64], g: f64) -> Result<f64, KinematicsError> {
    let frames = joint_frames(chain, q)?;
    Ok(chain
        .joints
        .iter()
        .zip(&frames)
        .filter_map(|(joint, frame)| {
            let link = model.link(&joint.child)?;
            let com = frame.child.transform_point(&link.inertial_origin.xyz);
            Some(link.mass * g * com.z)
        })
        .sum())
}

/// Torque each revolute joint must supply to hold the chain against gravity
/// `g` (acting along −z): the central-difference gradient of the potential
/// energy of every link downstream of the chain's base.
pub fn gravity_torque(
    model: &RobotModel,
    chain: &Chain,
    q: &[f64],
    g: f64,
) -> Result<Vec<f64>, KinematicsError> {
    crate::kinematics::check_dim(chain.dof(), q.len())?;
    if g == 0.0 {
        return Ok(vec![0.0; q.len()]);
    }
    let mut probe = q.to_vec();
    let mut torque = Vec::with_capacity(q.len());
    for i in 0..q.len() {
        probe[i] = q[i] + GRAVITY_STEP;
        let up = potential_energy(model, chain, &probe, g)?;
        probe[i] = q[i] - GRAVITY_STEP;
        let down = potential_energy(model, chain, &probe, g)?;
        probe[i] = q[i];
        torque.push((up - down) / (2.0 * GRAVITY_STEP));
    }
    Ok(torque)
}
