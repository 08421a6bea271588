use std::collections::HashSet;

use nalgebra::{Matrix3, Vector3};

use super::{check_dim, KinematicsError, Transform};

/// One row of a standard (distal) Denavit-Hartenberg table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub theta_offset: f64,
    pub d: f64,
    pub a: f64,
    pub alpha: f64,
    /// Index into the joint vector that drives this row.
    pub joint_index: usize,
}

impl DhRow {
    pub fn new(theta_offset: f64, d: f64, a: f64, alpha: f64, joint_index: usize) -> Self {
        Self {
            theta_offset,
            d,
            a,
            alpha,
            joint_index,
        }
    }
}

/// `RotZ(q + θ₀) · TransZ(d) · TransX(a) · RotX(α)`.
pub fn dh_transform(row: &DhRow, q: f64) -> Transform {
    let (st, ct) = (q + row.theta_offset).sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    Transform::new(
        Matrix3::new(
            ct, -st * ca, st * sa, //
            st, ct * ca, -ct * sa, //
            0.0, sa, ca,
        ),
        Vector3::new(row.a * ct, row.a * st, row.d),
    )
}

pub fn fk_dh(table: &[DhRow], q: &[f64]) -> Result<Transform, KinematicsError> {
    check_dim(table.len(), q.len())?;
    let mut seen = HashSet::new();
    for row in table {
        if row.joint_index >= q.len() {
            return Err(KinematicsError::BadDhTable(format!(
                "joint_index {} out of range",
                row.joint_index
            )));
        }
        if !seen.insert(row.joint_index) {
            return Err(KinematicsError::BadDhTable(format!(
                "joint_index {} used twice",
                row.joint_index
            )));
        }
    }
    Ok(table
        .iter()
        .fold(Transform::identity(), |acc, row| acc * dh_transform(row, q[row.joint_index])))
}
