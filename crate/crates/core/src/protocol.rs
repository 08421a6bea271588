//! Documents exchanged with the teaching panel. Every frame is one JSON
//! object whose `kind` field names its variant:
//!
//! ```text
//! {"kind":"ModelDescription","name":"arm_model","root":"base_link",...}
//! {"kind":"State","t":0.02,"names":[..],"q":[..],"qd":[..],"effort":[..],"targets":[..]}
//! {"kind":"Command","joint":"base_to_00","target":0.5}
//! {"kind":"Command","ik_target":[0.4,0.0,0.8]}
//! {"kind":"Error","message":"unreachable"}
//! ```

use serde::{Deserialize, Serialize};

use crate::bus::JointStateMsg;
use crate::urdf::{Chain, Geometry, JointKind, RobotModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GeometryInfo {
    Box { size: [f64; 3] },
    Cylinder { radius: f64, length: f64 },
    Mesh { path: String, scale: [f64; 3] },
}

impl From<&Geometry> for GeometryInfo {
    fn from(g: &Geometry) -> Self {
        match g {
            Geometry::Box { size } => GeometryInfo::Box { size: (*size).into() },
            Geometry::Cylinder { radius, length } => GeometryInfo::Cylinder {
                radius: *radius,
                length: *length,
            },
            Geometry::Mesh { path, scale } => GeometryInfo::Mesh {
                path: path.clone(),
                scale: (*scale).into(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkInfo {
    pub name: String,
    pub geometry: Option<GeometryInfo>,
    pub visual_xyz: [f64; 3],
    pub visual_rpy: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Revolute,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointInfo {
    pub name: String,
    #[serde(rename = "type")]
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    pub origin_xyz: [f64; 3],
    pub origin_rpy: [f64; 3],
    pub axis: [f64; 3],
    /// Limits are present for revolute joints only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
}

/// Everything a client needs to draw the arm and bound its sliders.
/// `joints` lists the simulated chain from base to tip, fixed joints
/// included, in the order State frames use for the revolute ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescription {
    pub name: String,
    pub namespace: String,
    pub root: String,
    pub tip: String,
    pub links: Vec<LinkInfo>,
    pub joints: Vec<JointInfo>,
}

impl ModelDescription {
    pub fn from_model(model: &RobotModel, chain: &Chain, namespace: &str) -> Self {
        let links = model
            .links
            .iter()
            .map(|l| LinkInfo {
                name: l.name.clone(),
                geometry: l.geometry.as_ref().map(GeometryInfo::from),
                visual_xyz: l.visual_origin.xyz.into(),
                visual_rpy: l.visual_origin.rpy.into(),
            })
            .collect();
        let joints = chain
            .joints
            .iter()
            .map(|j| JointInfo {
                name: j.name.clone(),
                joint_type: match j.kind {
                    JointKind::Revolute => JointType::Revolute,
                    JointKind::Fixed => JointType::Fixed,
                },
                parent: j.parent.clone(),
                child: j.child.clone(),
                origin_xyz: j.origin.xyz.into(),
                origin_rpy: j.origin.rpy.into(),
                axis: j.axis.into(),
                lower: j.limits.map(|l| l.lower),
                upper: j.limits.map(|l| l.upper),
                effort: j.limits.map(|l| l.effort),
                velocity: j.limits.map(|l| l.velocity),
            })
            .collect();
        Self {
            name: model.name.clone(),
            namespace: namespace.to_string(),
            root: chain.base.clone(),
            tip: chain.tip.clone(),
            links,
            joints,
        }
    }

    pub fn revolute_joints(&self) -> impl Iterator<Item = &JointInfo> + '_ {
        self.joints.iter().filter(|j| j.joint_type == JointType::Revolute)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub t: f64,
    pub names: Vec<String>,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub effort: Vec<f64>,
    /// Current position target of each joint, same order as `names`.
    pub targets: Vec<f64>,
}

impl StateFrame {
    pub fn new(msg: JointStateMsg, targets: Vec<f64>) -> Self {
        Self {
            t: msg.t,
            names: msg.names,
            q: msg.q,
            qd: msg.qd,
            effort: msg.effort,
            targets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Command {
    Joint { joint: String, target: f64 },
    IkTarget { ik_target: [f64; 3] },
}

impl Command {
    /// Checks the command against the served model: finite numbers and a
    /// known revolute joint.
    pub fn validate(&self, model: &ModelDescription) -> Result<(), String> {
        match self {
            Command::Joint { joint, target } => {
                if !target.is_finite() {
                    return Err(format!("target for {joint} is not finite"));
                }
                if !model.revolute_joints().any(|j| &j.name == joint) {
                    return Err(format!("unknown joint {joint:?}"));
                }
            }
            Command::IkTarget { ik_target } => {
                if !ik_target.iter().all(|v| v.is_finite()) {
                    return Err("ik_target is not finite".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ServeMessage {
    ModelDescription(ModelDescription),
    State(StateFrame),
    Command(Command),
    Error { message: String },
}

impl ServeMessage {
    pub fn error(message: impl Into<String>) -> Self {
        ServeMessage::Error {
            message: message.into(),
        }
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::reference::{reference_arm, reference_chain};
    use serde_json::json;

    fn description() -> ModelDescription {
        ModelDescription::from_model(&reference_arm(), &reference_chain(), "arm_model")
    }

    #[test]
    fn description_of_reference_arm() {
        let d = description();
        assert_eq!(d.root, "base_link");
        assert_eq!(d.tip, "tool");
        assert_eq!(d.joints.len(), 4);
        let revolute: Vec<_> = d.revolute_joints().collect();
        assert_eq!(revolute.len(), 3);
        for j in revolute {
            assert_eq!((j.lower, j.upper), (Some(-3.14), Some(3.14)));
        }
        assert_eq!(d.joints[3].lower, None);
    }

    #[test]
    fn frames_are_tagged_by_kind() {
        let v = serde_json::to_value(ServeMessage::ModelDescription(description())).unwrap();
        assert_eq!(v["kind"], "ModelDescription");
        assert_eq!(v["joints"][1]["type"], "revolute");
        assert_eq!(v["links"][1]["geometry"]["type"], "cylinder");

        let err = serde_json::to_value(ServeMessage::error("unreachable")).unwrap();
        assert_eq!(err, json!({"kind": "Error", "message": "unreachable"}));
    }

    #[test]
    fn commands_parse_in_both_shapes() {
        let joint: ServeMessage =
            serde_json::from_value(json!({"kind": "Command", "joint": "base_to_00", "target": 0.5})).unwrap();
        assert_eq!(
            joint,
            ServeMessage::Command(Command::Joint {
                joint: "base_to_00".into(),
                target: 0.5
            })
        );
        let ik: ServeMessage = serde_json::from_value(json!({"kind": "Command", "ik_target": [2, 0, 0.5]})).unwrap();
        assert_eq!(
            ik,
            ServeMessage::Command(Command::IkTarget {
                ik_target: [2.0, 0.0, 0.5]
            })
        );
        assert!(serde_json::from_value::<ServeMessage>(json!({"kind": "Command", "joint": "x"})).is_err());
        assert!(serde_json::from_value::<ServeMessage>(json!({"kind": "Nope"})).is_err());
    }

    #[test]
    fn command_validation() {
        let d = description();
        let ok = Command::Joint {
            joint: "01_to_02".into(),
            target: 1.0,
        };
        assert!(ok.validate(&d).is_ok());
        let fixed = Command::Joint {
            joint: "02_to_tool".into(),
            target: 1.0,
        };
        assert!(fixed.validate(&d).is_err());
        let nan = Command::IkTarget {
            ik_target: [f64::NAN, 0.0, 0.0],
        };
        assert!(nan.validate(&d).is_err());
    }

    #[test]
    fn state_round_trip() {
        let frame = ServeMessage::State(StateFrame {
            t: 0.02,
            names: vec!["a".into()],
            q: vec![0.1],
            qd: vec![0.0],
            effort: vec![-2.5],
            targets: vec![0.5],
        });
        let text = serde_json::to_string(&frame).unwrap();
        assert_eq!(serde_json::from_str::<ServeMessage>(&text).unwrap(), frame);
    }
}
