//! Forward kinematics over URDF chains and DH tables, Jacobians, and inverse
//! kinematics (closed-form for the 3-DOF reference arm, damped least squares
//! for anything else). Every IK result is checked with forward kinematics
//! before it is marked verified.

mod dh;
mod ik;
mod jacobian;
mod transform;

use nalgebra::Vector3;
use thiserror::Error;

use crate::urdf::{Chain, Joint, JointKind};

pub use dh::{dh_transform, fk_dh, DhRow};
pub use ik::{
    ik_3dof, ik_dls, verify_ik, verify_ik_with, Arm3Params, BaseBranch, Branch, DlsOptions,
    ElbowBranch, IkError, IkSolution, IkTarget, IK3_VERIFY_TOLERANCE,
};
pub use jacobian::{geometric_jacobian, numeric_jacobian};
pub use transform::{log_rotation, Transform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("expected {expected} joint values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid DH table: {0}")]
    BadDhTable(String),
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<(), KinematicsError> {
    if expected == found {
        Ok(())
    } else {
        Err(KinematicsError::DimensionMismatch { expected, found })
    }
}

/// Pose of the joint's child frame in its parent frame: the fixed origin
/// followed by a rotation of `q` about the joint axis. `q` is ignored for
/// fixed joints.
pub fn joint_transform(joint: &Joint, q: f64) -> Transform {
    let origin = joint.origin.transform();
    match joint.kind {
        JointKind::Fixed => origin,
        JointKind::Revolute => origin * Transform::about_axis(&joint.axis, q),
    }
}

/// World-frame data for one joint of a chain at a given configuration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct JointFrame {
    /// Joint origin in the world frame (before the joint rotation).
    pub origin: Vector3<f64>,
    /// Joint axis in the world frame; zero for fixed joints.
    pub axis: Vector3<f64>,
    /// Child link frame in the world frame.
    pub child: Transform,
}

pub(crate) fn joint_frames(chain: &Chain, q: &[f64]) -> Result<Vec<JointFrame>, KinematicsError> {
    check_dim(chain.dof(), q.len())?;
    let mut values = q.iter();
    let mut current = Transform::identity();
    let mut frames = Vec::with_capacity(chain.joints.len());
    for joint in &chain.joints {
        let at_origin = current * joint.origin.transform();
        let (axis, child) = match joint.kind {
            JointKind::Fixed => (Vector3::zeros(), at_origin),
            JointKind::Revolute => {
                let qi = *values.next().expect("dimension checked");
                let axis = at_origin.rotation * joint.axis.normalize();
                (axis, at_origin * Transform::about_axis(&joint.axis, qi))
            }
        };
        frames.push(JointFrame {
            origin: at_origin.translation,
            axis,
            child,
        });
        current = child;
    }
    Ok(frames)
}

/// Pose of the chain tip in the root frame.
pub fn fk(chain: &Chain, q: &[f64]) -> Result<Transform, KinematicsError> {
    check_dim(chain.dof(), q.len())?;
    let mut values = q.iter();
    Ok(chain.joints.iter().fold(Transform::identity(), |acc, joint| {
        let qi = match joint.kind {
            JointKind::Revolute => *values.next().expect("dimension checked"),
            JointKind::Fixed => 0.0,
        };
        acc * joint_transform(joint, qi)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{reference_arm, reference_chain};
    use crate::urdf::Origin;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: Vector3<f64>, b: [f64; 3], tol: f64) {
        assert!((a - Vector3::from(b)).amax() < tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn joint_transform_at_zero_is_origin() {
        let model = reference_arm();
        for joint in &model.joints {
            let t = joint_transform(joint, 0.0);
            let o = joint.origin.transform();
            assert!((t.rotation - o.rotation).amax() < 1e-15);
            assert_eq!(t.translation, o.translation);
        }
    }

    #[test]
    fn joint_transform_half_turn() {
        let joint = Joint {
            name: "j".into(),
            kind: JointKind::Revolute,
            parent: "a".into(),
            child: "b".into(),
            origin: Origin::from_xyz(0.0, 0.0, 0.5),
            axis: Vector3::z(),
            limits: None,
        };
        let t = joint_transform(&joint, PI);
        close(t.translation, [0.0, 0.0, 0.5], 1e-15);
        assert!((t.rotation - Transform::rot_z(PI).rotation).amax() < 1e-15);

        let plus = joint_transform(&joint, 0.7);
        let minus = joint_transform(&joint, -0.7);
        assert_eq!(plus.translation, minus.translation);
        assert!((plus.rotation * minus.rotation - nalgebra::Matrix3::identity()).amax() < 1e-15);
    }

    #[test]
    fn reference_arm_fk_values() {
        let chain = reference_chain();
        close(fk(&chain, &[0.0, 0.0, 0.0]).unwrap().translation, [0.7, 0.0, 0.5], 1e-15);
        close(fk(&chain, &[0.0, FRAC_PI_2, 0.0]).unwrap().translation, [0.0, 0.0, 1.2], 1e-15);
        close(fk(&chain, &[0.0, 0.0, FRAC_PI_2]).unwrap().translation, [0.4, 0.0, 0.8], 1e-15);
    }

    #[test]
    fn fk_dimension_mismatch() {
        let chain = reference_chain();
        assert_eq!(
            fk(&chain, &[0.0, 0.0]),
            Err(KinematicsError::DimensionMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn frames_end_at_tip() {
        let chain = reference_chain();
        let q = [0.3, -0.2, 1.1];
        let frames = joint_frames(&chain, &q).unwrap();
        let tip = fk(&chain, &q).unwrap();
        assert!((frames.last().unwrap().child.translation - tip.translation).amax() < 1e-15);
        close(frames[0].axis, [0.0, 0.0, 1.0], 1e-15);
    }
}
