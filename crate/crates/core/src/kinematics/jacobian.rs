use nalgebra::{DMatrix, Vector3};

use super::{fk, joint_frames, log_rotation, KinematicsError};
use crate::urdf::{Chain, JointKind};

/// 6×N world-frame Jacobian; rows are linear then angular velocity. Column
/// `i` is `[zᵢ × (p_tip − pᵢ); zᵢ]` for revolute joint `i`.
pub fn geometric_jacobian(chain: &Chain, q: &[f64]) -> Result<DMatrix<f64>, KinematicsError> {
    let frames = joint_frames(chain, q)?;
    let tip = frames
        .last()
        .map_or_else(Vector3::zeros, |f| f.child.translation);
    let mut jac = DMatrix::zeros(6, chain.dof());
    let revolute = chain
        .joints
        .iter()
        .zip(&frames)
        .filter(|(j, _)| j.kind == JointKind::Revolute);
    for (col, (_, frame)) in revolute.enumerate() {
        let linear = frame.axis.cross(&(tip - frame.origin));
        jac.fixed_view_mut::<3, 1>(0, col).copy_from(&linear);
        jac.fixed_view_mut::<3, 1>(3, col).copy_from(&frame.axis);
    }
    Ok(jac)
}

/// Central-difference Jacobian with step `h`. The angular rows come from the
/// rotation vector of `R(q + h·eᵢ) · R(q − h·eᵢ)ᵀ`, which is the world-frame
/// rotation over the step.
pub fn numeric_jacobian(chain: &Chain, q: &[f64], h: f64) -> Result<DMatrix<f64>, KinematicsError> {
    if !(h > 0.0) {
        return Err(KinematicsError::BadStep(h));
    }
    fk(chain, q)?;
    let n = q.len();
    let mut jac = DMatrix::zeros(6, n);
    let mut probe = q.to_vec();
    for col in 0..n {
        probe[col] = q[col] + h;
        let plus = fk(chain, &probe)?;
        probe[col] = q[col] - h;
        let minus = fk(chain, &probe)?;
        probe[col] = q[col];

        let linear = (plus.translation - minus.translation) / (2.0 * h);
        let angular = log_rotation(&(plus.rotation * minus.rotation.transpose())) / (2.0 * h);
        jac.fixed_view_mut::<3, 1>(0, col).copy_from(&linear);
        jac.fixed_view_mut::<3, 1>(3, col).copy_from(&angular);
    }
    Ok(jac)
}
