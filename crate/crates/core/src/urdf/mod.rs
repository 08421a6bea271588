//! Robot description: the URDF subset used for desk-scale serial arms.
//!
//! Both plain URDF (`link`, `joint`, `transmission`) and the three macro
//! shorthands `m_link_box`, `m_link_mesh` and `m_joint` are accepted; macros
//! are expanded to the plain form while parsing. Mesh files are never loaded,
//! their path and scale are carried verbatim.

mod parse;
mod validate;
mod write;

use std::collections::{HashMap, HashSet};

use nalgebra::Vector3;
use thiserror::Error;

use crate::kinematics::Transform;

pub use parse::{parse_urdf, ParsedUrdf};
pub use validate::{validate_model, Diagnostic, Severity};
pub use write::write_urdf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UrdfError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("<{element}> is missing required {field:?}")]
    MissingField { element: String, field: String },
    #[error("<{element}> {field}={value:?} is not a valid number")]
    BadNumber {
        element: String,
        field: String,
        value: String,
    },
    #[error("joint {joint:?} has unsupported type {kind:?} (only revolute and fixed)")]
    UnsupportedJoint { joint: String, kind: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown link {0:?}")]
    UnknownLink(String),
    #[error("link {0:?} is not reachable from the root")]
    UnreachableLink(String),
}

/// Position plus fixed-axis roll/pitch/yaw, stored as written.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Origin {
    pub xyz: Vector3<f64>,
    pub rpy: Vector3<f64>,
}

impl Origin {
    pub fn new(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        Self {
            xyz: Vector3::from(xyz),
            rpy: Vector3::from(rpy),
        }
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Self {
        Self::new([x, y, z], [0.0; 3])
    }

    pub fn transform(&self) -> Transform {
        Transform::from_xyz_rpy(self.xyz, self.rpy)
    }
}

/// Symmetric inertia tensor, upper triangle only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InertiaTensor {
    pub ixx: f64,
    pub ixy: f64,
    pub ixz: f64,
    pub iyy: f64,
    pub iyz: f64,
    pub izz: f64,
}

impl InertiaTensor {
    pub fn diagonal(ixx: f64, iyy: f64, izz: f64) -> Self {
        Self {
            ixx,
            iyy,
            izz,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Box { size: Vector3<f64> },
    Cylinder { radius: f64, length: f64 },
    Mesh { path: String, scale: Vector3<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: String,
    /// Zero when the link declares no inertial block.
    pub mass: f64,
    pub inertia: InertiaTensor,
    pub inertial_origin: Origin,
    pub visual_origin: Origin,
    pub geometry: Option<Geometry>,
}

impl Link {
    pub fn massless(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            mass: 0.0,
            inertia: InertiaTensor::default(),
            inertial_origin: Origin::default(),
            visual_origin: Origin::default(),
            geometry: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
    pub effort: f64,
    pub velocity: f64,
}

impl JointLimits {
    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, q: f64) -> bool {
        (self.lower..=self.upper).contains(&q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub parent: String,
    pub child: String,
    pub origin: Origin,
    pub axis: Vector3<f64>,
    /// Present for revolute joints.
    pub limits: Option<JointLimits>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardwareInterface {
    EffortJointInterface,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub name: String,
    pub joint: String,
    pub interface: HardwareInterface,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RobotModel {
    pub name: String,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub transmissions: Vec<Transmission>,
    pub root: String,
}

impl RobotModel {
    pub fn link(&self, name: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn joint(&self, name: &str) -> Option<&Joint> {
        self.joints.iter().find(|j| j.name == name)
    }

    pub fn transmission_for(&self, joint: &str) -> Option<&Transmission> {
        self.transmissions.iter().find(|t| t.joint == joint)
    }

    pub fn parent_joint(&self, link: &str) -> Option<&Joint> {
        self.joints.iter().find(|j| j.child == link)
    }

    /// First link (in declaration order) that is no joint's child.
    pub(crate) fn infer_root(links: &[Link], joints: &[Joint]) -> String {
        let children: HashSet<&str> = joints.iter().map(|j| j.child.as_str()).collect();
        links
            .iter()
            .find(|l| !children.contains(l.name.as_str()))
            .or(links.first())
            .map(|l| l.name.clone())
            .unwrap_or_default()
    }

    /// Link with the longest joint path from the root; the first one wins ties.
    /// For a serial arm this is the tool link.
    pub fn default_tip(&self) -> String {
        let mut best = (0usize, self.root.clone());
        for link in &self.links {
            if let Ok(path) = self.path_to(&link.name) {
                if path.len() > best.0 {
                    best = (path.len(), link.name.clone());
                }
            }
        }
        best.1
    }

    fn path_to(&self, tip: &str) -> Result<Vec<&Joint>, ModelError> {
        if self.link(tip).is_none() {
            return Err(ModelError::UnknownLink(tip.to_string()));
        }
        let by_child: HashMap<&str, &Joint> =
            self.joints.iter().map(|j| (j.child.as_str(), j)).collect();
        let mut path = Vec::new();
        let mut current = tip;
        while current != self.root {
            let Some(joint) = by_child.get(current) else {
                return Err(ModelError::UnreachableLink(tip.to_string()));
            };
            if path.len() > self.joints.len() {
                // cycle
                return Err(ModelError::UnreachableLink(tip.to_string()));
            }
            path.push(*joint);
            current = joint.parent.as_str();
        }
        path.reverse();
        Ok(path)
    }
}

/// Joints from the root to a tip link, base first. Fixed joints are kept so
/// that their origins take part in forward kinematics, but only revolute
/// joints consume joint variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub base: String,
    pub tip: String,
    pub joints: Vec<Joint>,
}

impl Chain {
    pub fn dof(&self) -> usize {
        self.movable().count()
    }

    pub fn movable(&self) -> impl Iterator<Item = &Joint> + '_ {
        self.joints.iter().filter(|j| j.kind == JointKind::Revolute)
    }

    pub fn joint_names(&self) -> Vec<String> {
        self.movable().map(|j| j.name.clone()).collect()
    }

    pub fn limits(&self) -> Vec<Option<JointLimits>> {
        self.movable().map(|j| j.limits).collect()
    }
}

/// Kinematic chain from the model root to `tip_link`.
pub fn movable_chain(model: &RobotModel, tip_link: &str) -> Result<Chain, ModelError> {
    let path = model.path_to(tip_link)?;
    Ok(Chain {
        base: model.root.clone(),
        tip: tip_link.to_string(),
        joints: path.into_iter().cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::reference_arm;

    #[test]
    fn chain_to_tool_lists_revolute_joints_base_first() {
        let model = reference_arm();
        let chain = movable_chain(&model, &model.default_tip()).unwrap();
        assert_eq!(chain.joint_names(), ["base_to_00", "00_to_01", "01_to_02"]);
        assert_eq!(chain.joints.len(), 4);
    }

    #[test]
    fn chain_to_root_is_empty() {
        let model = reference_arm();
        let chain = movable_chain(&model, &model.root).unwrap();
        assert_eq!(chain.dof(), 0);
        assert!(chain.joints.is_empty());
    }

    #[test]
    fn unknown_and_unreachable_links() {
        let mut model = reference_arm();
        assert_eq!(
            movable_chain(&model, "nonexistent"),
            Err(ModelError::UnknownLink("nonexistent".into()))
        );
        model.links.push(Link::massless("floating"));
        assert_eq!(
            movable_chain(&model, "floating"),
            Err(ModelError::UnreachableLink("floating".into()))
        );
    }

    #[test]
    fn cyclic_graph_is_unreachable_not_a_hang() {
        let mut model = reference_arm();
        let mut back = model.joints[0].clone();
        back.name = "loop".into();
        back.parent = "link_02".into();
        back.child = "link_00".into();
        model.joints.retain(|j| j.name != "base_to_00");
        model.joints.push(back);
        assert!(matches!(
            movable_chain(&model, "link_02"),
            Err(ModelError::UnreachableLink(_))
        ));
    }
}
