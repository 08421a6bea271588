//! The three-joint teaching arm used throughout the examples and tests.
//!
//! Base yaw `base_to_00` about +z at the origin, shoulder `00_to_01` about −y
//! at height 0.5 m, elbow `01_to_02` about −y 0.4 m further out, and a fixed
//! tool frame 0.3 m beyond the elbow. At zero configuration the arm points
//! along +x; positive shoulder and elbow angles lift it.

use nalgebra::Vector3;

use crate::kinematics::{Arm3Params, DhRow};
use crate::urdf::{
    movable_chain, Chain, Geometry, HardwareInterface, InertiaTensor, Joint, JointKind,
    JointLimits, Link, Origin, RobotModel, Transmission,
};

pub const REFERENCE_ARM: Arm3Params = Arm3Params {
    l1: 0.5,
    l2: 0.4,
    l3: 0.3,
};

/// The reference arm as a URDF document, with transmissions for all joints.
pub const REFERENCE_URDF: &str = include_str!("../assets/reference_arm.urdf");

/// Controller configuration for the reference arm: one state publisher at
/// 50 Hz and a PID position controller (100, 0.01, 10) on each joint.
pub const REFERENCE_CONTROLLERS: &str = include_str!("../assets/arm_controllers.yaml");

// the model's own limit, not an approximation of π
#[allow(clippy::approx_constant)]
pub const JOINT_LIMITS: JointLimits = JointLimits {
    lower: -3.14,
    upper: 3.14,
    effort: 1000.0,
    velocity: 0.5,
};

fn link(name: &str, mass: f64, inertia: InertiaTensor, com: Origin, geometry: Geometry) -> Link {
    Link {
        name: name.to_string(),
        mass,
        inertia,
        inertial_origin: com,
        visual_origin: com,
        geometry: Some(geometry),
    }
}

fn revolute(name: &str, parent: &str, child: &str, origin: Origin, axis: Vector3<f64>) -> Joint {
    Joint {
        name: name.to_string(),
        kind: JointKind::Revolute,
        parent: parent.to_string(),
        child: child.to_string(),
        origin,
        axis,
        limits: Some(JOINT_LIMITS),
    }
}

pub fn reference_arm() -> RobotModel {
    let Arm3Params { l1, l2, l3 } = REFERENCE_ARM;
    let links = vec![
        link(
            "base_link",
            5.0,
            InertiaTensor::diagonal(0.02, 0.02, 0.03),
            Origin::from_xyz(0.0, 0.0, 0.05),
            Geometry::Box {
                size: Vector3::new(0.2, 0.2, 0.1),
            },
        ),
        link(
            "link_00",
            2.0,
            InertiaTensor::diagonal(0.043, 0.043, 0.0025),
            Origin::from_xyz(0.0, 0.0, l1 / 2.0),
            Geometry::Cylinder {
                radius: 0.05,
                length: l1,
            },
        ),
        link(
            "link_01",
            1.5,
            InertiaTensor::diagonal(0.000625, 0.0203, 0.0203),
            Origin::from_xyz(l2 / 2.0, 0.0, 0.0),
            Geometry::Box {
                size: Vector3::new(l2, 0.05, 0.05),
            },
        ),
        link(
            "link_02",
            1.0,
            InertiaTensor::diagonal(0.00027, 0.0076, 0.0076),
            Origin::from_xyz(l3 / 2.0, 0.0, 0.0),
            Geometry::Box {
                size: Vector3::new(l3, 0.04, 0.04),
            },
        ),
        link(
            "tool",
            0.1,
            InertiaTensor::diagonal(1e-4, 1e-4, 1e-4),
            Origin::default(),
            Geometry::Box {
                size: Vector3::new(0.04, 0.04, 0.04),
            },
        ),
    ];
    let down_y = Vector3::new(0.0, -1.0, 0.0);
    let joints = vec![
        revolute("base_to_00", "base_link", "link_00", Origin::default(), Vector3::z()),
        revolute("00_to_01", "link_00", "link_01", Origin::from_xyz(0.0, 0.0, l1), down_y),
        revolute("01_to_02", "link_01", "link_02", Origin::from_xyz(l2, 0.0, 0.0), down_y),
        Joint {
            name: "02_to_tool".into(),
            kind: JointKind::Fixed,
            parent: "link_02".into(),
            child: "tool".into(),
            origin: Origin::from_xyz(l3, 0.0, 0.0),
            axis: Vector3::x(),
            limits: None,
        },
    ];
    let transmissions = ["base_to_00", "00_to_01", "01_to_02"]
        .iter()
        .map(|j| Transmission {
            name: format!("tran_{j}"),
            joint: j.to_string(),
            interface: HardwareInterface::EffortJointInterface,
        })
        .collect();
    RobotModel {
        name: "arm_model".into(),
        links,
        joints,
        transmissions,
        root: "base_link".into(),
    }
}

/// Chain from `base_link` to `tool`.
pub fn reference_chain() -> Chain {
    movable_chain(&reference_arm(), "tool").expect("reference arm is a valid tree")
}

pub fn reference_limits() -> Vec<JointLimits> {
    vec![JOINT_LIMITS; 3]
}

pub fn reference_dh_table() -> [DhRow; 3] {
    REFERENCE_ARM.dh_table()
}
