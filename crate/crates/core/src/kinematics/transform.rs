use std::ops::Mul;

use nalgebra::{Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};

/// Rigid-body pose: a proper rotation followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Self {
            rotation,
            translation: Vector3::zeros(),
        }
    }

    /// URDF convention: fixed-axis roll about x, then pitch about y, then yaw
    /// about z, i.e. `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_xyz_rpy(xyz: Vector3<f64>, rpy: Vector3<f64>) -> Self {
        let r = Rotation3::from_euler_angles(rpy.x, rpy.y, rpy.z);
        Self::new(r.into_inner(), xyz)
    }

    /// Rotation of `angle` about `axis`. The axis is normalized first.
    pub fn about_axis(axis: &Vector3<f64>, angle: f64) -> Self {
        let axis = Unit::new_normalize(*axis);
        Self::from_rotation(Rotation3::from_axis_angle(&axis, angle).into_inner())
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::about_axis(&Vector3::x(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::about_axis(&Vector3::y(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::about_axis(&Vector3::z(), angle)
    }

    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.transpose();
        Transform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Roll, pitch, yaw matching [`Transform::from_xyz_rpy`].
    pub fn rpy(&self) -> Vector3<f64> {
        let (r, p, y) = Rotation3::from_matrix_unchecked(self.rotation).euler_angles();
        Vector3::new(r, p, y)
    }

    /// Geodesic angle between the two orientations, in `[0, π]`.
    pub fn rotation_distance(&self, other: &Transform) -> f64 {
        Rotation3::from_matrix_unchecked(self.rotation.transpose() * other.rotation).angle()
    }

    /// `RᵀR = I` within `tol` (max-abs entry) and `det R > 0`.
    pub fn is_proper_rotation(&self, tol: f64) -> bool {
        let err = self.rotation.transpose() * self.rotation - Matrix3::identity();
        err.amax() <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

impl Mul for Transform {
    type Output = Transform;

    fn mul(self, rhs: Transform) -> Transform {
        self.compose(&rhs)
    }
}

impl Mul<&Transform> for &Transform {
    type Output = Transform;

    fn mul(self, rhs: &Transform) -> Transform {
        self.compose(rhs)
    }
}

/// Rotation vector (axis times angle) of a rotation matrix, in `[0, π]`.
///
/// Goes through a quaternion and takes the half angle with `atan2`, which
/// stays accurate for the tiny rotations finite differences produce; the
/// trace-and-`acos` route loses about half the significant digits there.
pub fn log_rotation(r: &Matrix3<f64>) -> Vector3<f64> {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
    let (w, v) = if q.w < 0.0 { (-q.w, -q.imag()) } else { (q.w, q.imag()) };
    let s = v.norm();
    if s < 1e-300 {
        return Vector3::zeros();
    }
    v * (2.0 * s.atan2(w) / s)
}
