use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use thiserror::Error;

use super::{fk, fk_dh, geometric_jacobian, log_rotation, DhRow, KinematicsError, Transform};
use crate::urdf::{Chain, JointKind, JointLimits};

/// Closed-form solutions must reproduce the target this closely under FK.
pub const IK3_VERIFY_TOLERANCE: f64 = 1e-9;

/// Slack on the reach test before `cos θ₃` is clamped into `[-1, 1]`.
const REACH_SLACK: f64 = 1e-10;
const AXIS_EPS: f64 = 1e-12;
/// Shortest fraction of a DLS step tried before taking it regardless.
const MIN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseBranch {
    Front,
    Back,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElbowBranch {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub base: BaseBranch,
    pub elbow: ElbowBranch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    pub q: Vec<f64>,
    /// Set by the closed-form solver; iterative solutions have no branch.
    pub branch: Option<Branch>,
    /// True only once forward kinematics confirmed the target is reached.
    pub verified: bool,
    /// The target lies on the base axis and the base angle was fixed to 0.
    pub singular: bool,
    pub iterations: usize,
    /// Final error norm (position, or stacked position and rotation).
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IkTarget {
    Position(Vector3<f64>),
    Pose(Transform),
}

impl IkTarget {
    pub fn position(&self) -> Vector3<f64> {
        match self {
            IkTarget::Position(p) => *p,
            IkTarget::Pose(t) => t.translation,
        }
    }
}

impl From<Vector3<f64>> for IkTarget {
    fn from(p: Vector3<f64>) -> Self {
        IkTarget::Position(p)
    }
}

impl From<Transform> for IkTarget {
    fn from(t: Transform) -> Self {
        IkTarget::Pose(t)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IkError {
    #[error("target is outside the reachable workspace")]
    Unreachable,
    #[error("no convergence after {} iterations (residual {})", .best.iterations, .best.residual)]
    NoConvergence { best: Box<IkSolution> },
    #[error("target is not finite")]
    NonFiniteTarget,
    #[error("invalid solver options: {0}")]
    BadOptions(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Dimensions of the three-joint reference arm: base yaw at the origin,
/// shoulder pitch at height `l1`, then an upper arm `l2` and forearm `l3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm3Params {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl Arm3Params {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Option<Self> {
        (l1 > 0.0 && l2 > 0.0 && l3 > 0.0).then_some(Self { l1, l2, l3 })
    }

    pub fn dh_table(&self) -> [DhRow; 3] {
        [
            DhRow::new(0.0, self.l1, 0.0, PI / 2.0, 0),
            DhRow::new(0.0, 0.0, self.l2, 0.0, 1),
            DhRow::new(0.0, 0.0, self.l3, 0.0, 2),
        ]
    }

    /// Tip position through the DH table.
    pub fn forward(&self, q: &[f64; 3]) -> Vector3<f64> {
        fk_dh(&self.dh_table(), q)
            .expect("table is well formed")
            .translation
    }

    /// Recognizes a chain with exactly the reference-arm layout and returns
    /// its dimensions: yaw about +z at the root origin, two pitch joints about
    /// −y, all offsets along the arm, no rotated origins.
    pub fn from_chain(chain: &Chain) -> Option<Self> {
        let close = |a: &Vector3<f64>, b: [f64; 3]| (a - Vector3::from(b)).amax() < 1e-12;
        let revolute: Vec<_> = chain.movable().collect();
        if revolute.len() != 3 || chain.joints.iter().any(|j| j.origin.rpy != Vector3::zeros()) {
            return None;
        }
        let first = chain.joints.iter().position(|j| j.kind == JointKind::Revolute)?;
        if chain.joints[..first].iter().any(|j| j.origin.xyz != Vector3::zeros()) {
            return None;
        }
        let (yaw, shoulder, elbow) = (revolute[0], revolute[1], revolute[2]);
        if !close(&yaw.axis, [0.0, 0.0, 1.0])
            || !close(&yaw.origin.xyz, [0.0, 0.0, 0.0])
            || !close(&shoulder.axis, [0.0, -1.0, 0.0])
            || !close(&elbow.axis, [0.0, -1.0, 0.0])
        {
            return None;
        }
        let l1 = shoulder.origin.xyz.z;
        if !close(&shoulder.origin.xyz, [0.0, 0.0, l1]) {
            return None;
        }
        let l2 = elbow.origin.xyz.x;
        if !close(&elbow.origin.xyz, [l2, 0.0, 0.0]) {
            return None;
        }
        let last = chain.joints.iter().rposition(|j| j.kind == JointKind::Revolute)?;
        let trailing: Vector3<f64> = chain.joints[last + 1..].iter().map(|j| j.origin.xyz).sum();
        let l3 = trailing.x;
        if !close(&trailing, [l3, 0.0, 0.0]) {
            return None;
        }
        Self::new(l1, l2, l3)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Geometric inverse kinematics for the reference arm.
///
/// Enumerates the front/back base branches and the elbow-up/down branches,
/// drops any branch outside `limits` (never clamps), and returns only
/// solutions whose forward kinematics lands within [`IK3_VERIFY_TOLERANCE`].
/// A target on the base axis fixes the base angle to 0 and flags every
/// solution as singular.
pub fn ik_3dof(
    params: &Arm3Params,
    target: &Vector3<f64>,
    limits: Option<&[JointLimits]>,
) -> Result<Vec<IkSolution>, IkError> {
    if !target.iter().all(|v| v.is_finite()) {
        return Err(IkError::NonFiniteTarget);
    }
    let Arm3Params { l1, l2, l3 } = *params;
    let r = target.x.hypot(target.y);
    let s = target.z - l1;
    let cos3 = (r * r + s * s - l2 * l2 - l3 * l3) / (2.0 * l2 * l3);
    if !(-1.0 - REACH_SLACK..=1.0 + REACH_SLACK).contains(&cos3) {
        return Err(IkError::Unreachable);
    }
    // snap boundary values so a fully stretched or folded arm yields one elbow
    let cos3 = if 1.0 - cos3.abs() <= REACH_SLACK {
        cos3.signum()
    } else {
        cos3
    };
    let elbow = cos3.acos();

    let singular = r <= AXIS_EPS;
    // (branch, base angle, horizontal coordinate of the target in the arm plane)
    let bases: Vec<(BaseBranch, f64, f64)> = if singular {
        vec![(BaseBranch::Front, 0.0, 0.0)]
    } else {
        let yaw = target.y.atan2(target.x);
        vec![
            (BaseBranch::Front, yaw, r),
            (BaseBranch::Back, wrap_angle(yaw + PI), -r),
        ]
    };
    let elbows: &[f64] = if elbow == 0.0 || elbow == PI {
        &[1.0]
    } else {
        &[-1.0, 1.0]
    };

    let mut out = Vec::new();
    for &(base, q1, u) in &bases {
        for &sign in elbows {
            let q3 = sign * elbow;
            let q2 = wrap_angle(s.atan2(u) - (l3 * q3.sin()).atan2(l2 + l3 * q3.cos()));
            let q = [q1, q2, q3];
            if let Some(limits) = limits {
                if !q.iter().zip(limits).all(|(v, l)| l.contains(*v)) {
                    continue;
                }
            }
            let residual = (params.forward(&q) - target).norm();
            if residual > IK3_VERIFY_TOLERANCE {
                continue;
            }
            // a negative elbow angle lifts the elbow above the shoulder-tip
            // line; the back branch sees the arm plane mirrored
            let up = (q3 <= 0.0) != (base == BaseBranch::Back);
            out.push(IkSolution {
                q: q.to_vec(),
                branch: Some(Branch {
                    base,
                    elbow: if up { ElbowBranch::Up } else { ElbowBranch::Down },
                }),
                verified: true,
                singular,
                iterations: 0,
                residual,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlsOptions {
    /// Convergence threshold on the error norm (m, or m and rad stacked).
    pub tol: f64,
    pub max_iter: usize,
    /// Damping λ in `Jᵀ(JJᵀ + λ²I)⁻¹e`.
    pub damping: f64,
    /// Scale λ² by `min(1, |e|)` so the damping fades as the error does.
    /// With a constant λ the final approach near a singularity contracts by
    /// only `λ²/(σ² + λ²)` per iteration and can stall short of `tol`.
    pub error_scaled: bool,
    /// Ignore the orientation of pose targets.
    pub position_only: bool,
}

impl Default for DlsOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            damping: 0.1,
            error_scaled: true,
            position_only: true,
        }
    }
}

fn task_error(tip: &Transform, target: &IkTarget, position_only: bool) -> DVector<f64> {
    let dp = target.position() - tip.translation;
    match target {
        IkTarget::Pose(goal) if !position_only => {
            let dr = log_rotation(&(goal.rotation * tip.rotation.transpose()));
            DVector::from_iterator(6, dp.iter().chain(dr.iter()).copied())
        }
        _ => DVector::from_iterator(3, dp.iter().copied()),
    }
}

/// Damped-least-squares inverse kinematics from `q0`.
///
/// Iterates `q ← q + α·Jᵀ(JJᵀ + λ²I)⁻¹e` until `|e| < tol`, where the step
/// length `α` is halved until the error drops. Each iterate is brought back
/// into the joint limits: an angle that left its range is first re-expressed
/// modulo 2π (the same pose, so a joint spanning nearly a full turn is not
/// trapped at its bound), and clamped only if that does not help.
///
/// A converged iterate is FK-verified before it is returned; otherwise the
/// best iterate comes back inside [`IkError::NoConvergence`] with
/// `verified == false`.
pub fn ik_dls(
    chain: &Chain,
    q0: &[f64],
    target: &IkTarget,
    opts: &DlsOptions,
) -> Result<IkSolution, IkError> {
    if !(opts.tol > 0.0) || opts.max_iter < 1 || !(opts.damping >= 0.0) {
        return Err(IkError::BadOptions(format!("{opts:?}")));
    }
    let finite = match target {
        IkTarget::Position(p) => p.iter().all(|v| v.is_finite()),
        IkTarget::Pose(t) => t.translation.iter().chain(t.rotation.iter()).all(|v| v.is_finite()),
    };
    if !finite {
        return Err(IkError::NonFiniteTarget);
    }
    let position_only = opts.position_only || matches!(target, IkTarget::Position(_));
    let limits = chain.limits();

    let mut q = q0.to_vec();
    let mut best: Option<IkSolution> = None;
    for iteration in 0..=opts.max_iter {
        let error = task_error(&fk(chain, &q)?, target, position_only);
        let residual = error.norm();
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(IkSolution {
                q: q.clone(),
                branch: None,
                verified: false,
                singular: false,
                iterations: iteration,
                residual,
            });
        }
        if residual < opts.tol {
            let rot_tol = if position_only { f64::INFINITY } else { opts.tol };
            let verified = verify_ik_with(chain, &q, target, opts.tol, rot_tol)?;
            let mut solution = best.expect("set above");
            solution.verified = verified;
            return if verified {
                Ok(solution)
            } else {
                Err(IkError::NoConvergence {
                    best: Box::new(solution),
                })
            };
        }
        if iteration == opts.max_iter {
            break;
        }

        let full = geometric_jacobian(chain, &q)?;
        let jac = if position_only {
            full.rows(0, 3).into_owned()
        } else {
            full
        };
        let m = jac.nrows();
        let mut lambda2 = opts.damping.powi(2);
        if opts.error_scaled {
            lambda2 *= residual.min(1.0);
        }
        let damped = &jac * jac.transpose() + DMatrix::identity(m, m) * lambda2;
        let Some(y) = damped.lu().solve(&error) else {
            break;
        };
        let step = jac.transpose() * y;
        let mut alpha = 1.0;
        loop {
            let candidate: Vec<f64> = q
                .iter()
                .zip(step.iter())
                .zip(&limits)
                .map(|((qi, di), limit)| into_limits(qi + alpha * di, limit.as_ref()))
                .collect();
            let improved = task_error(&fk(chain, &candidate)?, target, position_only).norm() < residual;
            if improved || alpha < MIN_STEP {
                q = candidate;
                break;
            }
            alpha *= 0.5;
        }
    }
    Err(IkError::NoConvergence {
        best: Box::new(best.expect("at least one iteration ran")),
    })
}

fn into_limits(q: f64, limits: Option<&JointLimits>) -> f64 {
    let Some(l) = limits else { return q };
    if l.contains(q) {
        return q;
    }
    let turn = 2.0 * PI;
    let wrapped = if q > l.upper { q - turn } else { q + turn };
    if l.contains(wrapped) {
        wrapped
    } else {
        l.clamp(q)
    }
}

/// True iff the tip at `q` is within `tol` metres of the target position
/// (and, for pose targets, within `tol` radians of its orientation).
pub fn verify_ik(chain: &Chain, q: &[f64], target: &IkTarget, tol: f64) -> Result<bool, KinematicsError> {
    verify_ik_with(chain, q, target, tol, tol)
}

pub fn verify_ik_with(
    chain: &Chain,
    q: &[f64],
    target: &IkTarget,
    tol: f64,
    rot_tol: f64,
) -> Result<bool, KinematicsError> {
    let tip = fk(chain, q)?;
    let position_ok = (tip.translation - target.position()).norm() <= tol;
    Ok(match target {
        IkTarget::Position(_) => position_ok,
        IkTarget::Pose(goal) => position_ok && tip.rotation_distance(goal) <= rot_tol,
    })
}
