use nalgebra::Vector3;
use roxmltree::{Document, Node};

use super::{
    Geometry, HardwareInterface, InertiaTensor, Joint, JointKind, JointLimits, Link, Origin,
    RobotModel, Transmission, UrdfError,
};

/// A parsed model plus the elements and attributes that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedUrdf {
    pub model: RobotModel,
    pub warnings: Vec<String>,
}

pub fn parse_urdf(text: &str) -> Result<ParsedUrdf, UrdfError> {
    let doc = Document::parse(text).map_err(|e| UrdfError::Xml(e.to_string()))?;
    let robot = doc.root_element();
    if robot.tag_name().name() != "robot" {
        return Err(UrdfError::Xml(format!(
            "root element is <{}>, expected <robot>",
            robot.tag_name().name()
        )));
    }
    let mut parser = Parser::default();
    parser.check_attrs(robot, &["name"]);

    let mut links = Vec::new();
    let mut joints = Vec::new();
    let mut transmissions = Vec::new();
    for node in robot.children().filter(Node::is_element) {
        match node.tag_name().name() {
            "link" => links.push(parser.link(node)?),
            "joint" => joints.push(parser.joint(node)?),
            "transmission" => {
                if let Some(t) = parser.transmission(node)? {
                    transmissions.push(t);
                }
            }
            "m_link_box" | "m_link_mesh" => links.push(parser.macro_link(node)?),
            "m_joint" => joints.push(parser.macro_joint(node)?),
            // simulator plugin declarations carry nothing this model needs
            "gazebo" => {}
            other => parser.warn(format!("ignored element <{other}>")),
        }
    }

    let root = RobotModel::infer_root(&links, &joints);
    Ok(ParsedUrdf {
        model: RobotModel {
            name: robot.attribute("name").unwrap_or_default().to_string(),
            links,
            joints,
            transmissions,
            root,
        },
        warnings: parser.warnings,
    })
}

fn element_name(node: Node) -> String {
    node.tag_name().name().to_string()
}

fn required<'a>(node: Node<'a, '_>, field: &str) -> Result<&'a str, UrdfError> {
    node.attribute(field).ok_or_else(|| UrdfError::MissingField {
        element: element_name(node),
        field: field.to_string(),
    })
}

fn number(node: Node, field: &str, text: &str) -> Result<f64, UrdfError> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| UrdfError::BadNumber {
            element: element_name(node),
            field: field.to_string(),
            value: text.to_string(),
        })
}

fn required_number(node: Node, field: &str) -> Result<f64, UrdfError> {
    number(node, field, required(node, field)?)
}

fn vector(node: Node, field: &str, text: &str) -> Result<Vector3<f64>, UrdfError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(UrdfError::BadNumber {
            element: element_name(node),
            field: field.to_string(),
            value: text.to_string(),
        });
    }
    let mut v = Vector3::zeros();
    for (slot, part) in v.iter_mut().zip(parts) {
        *slot = number(node, field, part)?;
    }
    Ok(v)
}

fn optional_vector(node: Node, field: &str, default: Vector3<f64>) -> Result<Vector3<f64>, UrdfError> {
    node.attribute(field)
        .map_or(Ok(default), |text| vector(node, field, text))
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn joint_kind(name: &str, kind: &str) -> Result<JointKind, UrdfError> {
    match kind {
        "revolute" => Ok(JointKind::Revolute),
        "fixed" => Ok(JointKind::Fixed),
        other => Err(UrdfError::UnsupportedJoint {
            joint: name.to_string(),
            kind: other.to_string(),
        }),
    }
}

#[derive(Default)]
struct Parser {
    warnings: Vec<String>,
}

impl Parser {
    fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }

    fn check_attrs(&mut self, node: Node, known: &[&str]) {
        for attr in node.attributes() {
            if !known.contains(&attr.name()) {
                self.warn(format!(
                    "ignored attribute {}=\"{}\" on <{}>",
                    attr.name(),
                    attr.value(),
                    node.tag_name().name()
                ));
            }
        }
    }

    fn check_children(&mut self, node: Node, known: &[&str]) {
        for c in node.children().filter(Node::is_element) {
            if !known.contains(&c.tag_name().name()) {
                self.warn(format!(
                    "ignored element <{}> inside <{}>",
                    c.tag_name().name(),
                    node.tag_name().name()
                ));
            }
        }
    }

    fn origin(&mut self, parent: Node) -> Result<Origin, UrdfError> {
        let Some(node) = child(parent, "origin") else {
            return Ok(Origin::default());
        };
        self.check_attrs(node, &["xyz", "rpy"]);
        Ok(Origin {
            xyz: optional_vector(node, "xyz", Vector3::zeros())?,
            rpy: optional_vector(node, "rpy", Vector3::zeros())?,
        })
    }

    fn inertia_attrs(&mut self, node: Node) -> Result<InertiaTensor, UrdfError> {
        Ok(InertiaTensor {
            ixx: required_number(node, "ixx")?,
            ixy: required_number(node, "ixy")?,
            ixz: required_number(node, "ixz")?,
            iyy: required_number(node, "iyy")?,
            iyz: required_number(node, "iyz")?,
            izz: required_number(node, "izz")?,
        })
    }

    fn link(&mut self, node: Node) -> Result<Link, UrdfError> {
        self.check_attrs(node, &["name"]);
        self.check_children(node, &["inertial", "visual", "collision"]);
        let mut link = Link::massless(required(node, "name")?);

        if let Some(inertial) = child(node, "inertial") {
            self.check_children(inertial, &["origin", "mass", "inertia"]);
            link.inertial_origin = self.origin(inertial)?;
            let mass = child(inertial, "mass").ok_or_else(|| UrdfError::MissingField {
                element: "inertial".into(),
                field: "mass".into(),
            })?;
            link.mass = required_number(mass, "value")?;
            let inertia = child(inertial, "inertia").ok_or_else(|| UrdfError::MissingField {
                element: "inertial".into(),
                field: "inertia".into(),
            })?;
            self.check_attrs(inertia, &["ixx", "ixy", "ixz", "iyy", "iyz", "izz"]);
            link.inertia = self.inertia_attrs(inertia)?;
        }

        let mut visuals = node
            .children()
            .filter(|c| c.is_element() && c.tag_name().name() == "visual");
        if let Some(visual) = visuals.next() {
            self.check_children(visual, &["origin", "geometry", "material"]);
            link.visual_origin = self.origin(visual)?;
            if let Some(geometry) = child(visual, "geometry") {
                link.geometry = self.geometry(geometry)?;
            }
        }
        if visuals.next().is_some() {
            self.warn(format!("link {:?}: only the first <visual> is used", link.name));
        }
        Ok(link)
    }

    fn geometry(&mut self, node: Node) -> Result<Option<Geometry>, UrdfError> {
        let Some(shape) = node.children().find(Node::is_element) else {
            return Ok(None);
        };
        let geometry = match shape.tag_name().name() {
            "box" => {
                self.check_attrs(shape, &["size"]);
                Geometry::Box {
                    size: vector(shape, "size", required(shape, "size")?)?,
                }
            }
            "cylinder" => {
                self.check_attrs(shape, &["radius", "length"]);
                Geometry::Cylinder {
                    radius: required_number(shape, "radius")?,
                    length: required_number(shape, "length")?,
                }
            }
            "mesh" => {
                self.check_attrs(shape, &["filename", "scale"]);
                Geometry::Mesh {
                    path: required(shape, "filename")?.to_string(),
                    scale: optional_vector(shape, "scale", Vector3::repeat(1.0))?,
                }
            }
            other => {
                self.warn(format!("ignored geometry <{other}>"));
                return Ok(None);
            }
        };
        Ok(Some(geometry))
    }

    fn joint(&mut self, node: Node) -> Result<Joint, UrdfError> {
        self.check_attrs(node, &["name", "type"]);
        self.check_children(node, &["origin", "parent", "child", "axis", "limit", "dynamics"]);
        let name = required(node, "name")?.to_string();
        let kind = joint_kind(&name, required(node, "type")?)?;

        let link_ref = |field: &str| -> Result<String, UrdfError> {
            let el = child(node, field).ok_or_else(|| UrdfError::MissingField {
                element: "joint".into(),
                field: field.to_string(),
            })?;
            Ok(required(el, "link")?.to_string())
        };
        let parent = link_ref("parent")?;
        let child_link = link_ref("child")?;

        let axis = match child(node, "axis") {
            Some(a) => vector(a, "xyz", required(a, "xyz")?)?,
            None => Vector3::x(),
        };
        let limits = match (kind, child(node, "limit")) {
            (JointKind::Fixed, _) => None,
            (JointKind::Revolute, None) => {
                return Err(UrdfError::MissingField {
                    element: "joint".into(),
                    field: "limit".into(),
                })
            }
            (JointKind::Revolute, Some(limit)) => {
                self.check_attrs(limit, &["lower", "upper", "effort", "velocity"]);
                Some(JointLimits {
                    lower: required_number(limit, "lower")?,
                    upper: required_number(limit, "upper")?,
                    effort: required_number(limit, "effort")?,
                    velocity: required_number(limit, "velocity")?,
                })
            }
        };

        Ok(Joint {
            name,
            kind,
            parent,
            child: child_link,
            origin: self.origin(node)?,
            axis,
            limits,
        })
    }

    fn transmission(&mut self, node: Node) -> Result<Option<Transmission>, UrdfError> {
        self.check_children(node, &["type", "joint", "actuator"]);
        let name = node.attribute("name").unwrap_or_default().to_string();
        let joint = child(node, "joint").ok_or_else(|| UrdfError::MissingField {
            element: "transmission".into(),
            field: "joint".into(),
        })?;
        let joint_name = required(joint, "name")?.to_string();
        let interface = child(joint, "hardwareInterface")
            .or_else(|| child(node, "actuator").and_then(|a| child(a, "hardwareInterface")))
            .and_then(|n| n.text())
            .map(str::trim)
            .ok_or_else(|| UrdfError::MissingField {
                element: "transmission".into(),
                field: "hardwareInterface".into(),
            })?;
        // both "EffortJointInterface" and "hardware_interface/EffortJointInterface" occur in the wild
        if interface.rsplit('/').next() != Some("EffortJointInterface") {
            self.warn(format!(
                "transmission {name:?}: unsupported interface {interface:?}, skipped"
            ));
            return Ok(None);
        }
        Ok(Some(Transmission {
            name,
            joint: joint_name,
            interface: HardwareInterface::EffortJointInterface,
        }))
    }

    fn macro_origin(&mut self, node: Node) -> Result<Origin, UrdfError> {
        Ok(Origin {
            xyz: optional_vector(node, "origin_xyz", Vector3::zeros())?,
            rpy: optional_vector(node, "origin_rpy", Vector3::zeros())?,
        })
    }

    /// `m_link_box` / `m_link_mesh`: one origin shared by inertial and visual.
    fn macro_link(&mut self, node: Node) -> Result<Link, UrdfError> {
        let is_box = node.tag_name().name() == "m_link_box";
        let shape_attrs: &[&str] = if is_box {
            &["size"]
        } else {
            &["meshfile", "meshscale"]
        };
        let mut known = vec![
            "name", "origin_xyz", "origin_rpy", "mass", "ixx", "ixy", "ixz", "iyy", "iyz", "izz",
        ];
        known.extend_from_slice(shape_attrs);
        self.check_attrs(node, &known);

        let origin = self.macro_origin(node)?;
        let geometry = if is_box {
            Geometry::Box {
                size: vector(node, "size", required(node, "size")?)?,
            }
        } else {
            Geometry::Mesh {
                path: required(node, "meshfile")?.to_string(),
                scale: optional_vector(node, "meshscale", Vector3::repeat(1.0))?,
            }
        };
        Ok(Link {
            name: required(node, "name")?.to_string(),
            mass: required_number(node, "mass")?,
            inertia: self.inertia_attrs(node)?,
            inertial_origin: origin,
            visual_origin: origin,
            geometry: Some(geometry),
        })
    }

    fn macro_joint(&mut self, node: Node) -> Result<Joint, UrdfError> {
        self.check_attrs(
            node,
            &[
                "name", "type", "axis_xyz", "origin_xyz", "origin_rpy", "parent", "child",
                "limit_e", "limit_l", "limit_u", "limit_v",
            ],
        );
        let name = required(node, "name")?.to_string();
        let kind = joint_kind(&name, required(node, "type")?)?;
        let limits = match kind {
            JointKind::Fixed => None,
            JointKind::Revolute => Some(JointLimits {
                lower: required_number(node, "limit_l")?,
                upper: required_number(node, "limit_u")?,
                effort: required_number(node, "limit_e")?,
                velocity: required_number(node, "limit_v")?,
            }),
        };
        Ok(Joint {
            origin: self.macro_origin(node)?,
            axis: optional_vector(node, "axis_xyz", Vector3::x())?,
            parent: required(node, "parent")?.to_string(),
            child: required(node, "child")?.to_string(),
            name,
            kind,
            limits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap(body: &str) -> String {
        format!("<robot name=\"t\">{body}</robot>")
    }

    #[test]
    fn plain_link_with_cylinder() {
        let text = wrap(
            r#"<link name="l">
                 <inertial><origin xyz="0 0 0.1"/><mass value="2"/>
                   <inertia ixx="1" ixy="0" ixz="0" iyy="1" iyz="0" izz="0.5"/></inertial>
                 <visual><geometry><cylinder radius="0.05" length="0.3"/></geometry></visual>
               </link>"#,
        );
        let parsed = parse_urdf(&text).unwrap();
        let link = &parsed.model.links[0];
        assert_eq!(link.mass, 2.0);
        assert_eq!(link.inertial_origin.xyz, Vector3::new(0.0, 0.0, 0.1));
        assert_eq!(
            link.geometry,
            Some(Geometry::Cylinder {
                radius: 0.05,
                length: 0.3
            })
        );
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn malformed_xml() {
        assert!(matches!(parse_urdf("<robot><link>"), Err(UrdfError::Xml(_))));
        assert!(matches!(parse_urdf("<notrobot/>"), Err(UrdfError::Xml(_))));
    }

    #[test]
    fn missing_mass_value() {
        let text = wrap(r#"<link name="l"><inertial><mass/><inertia ixx="1" ixy="0" ixz="0" iyy="1" iyz="0" izz="1"/></inertial></link>"#);
        assert_eq!(
            parse_urdf(&text).unwrap_err(),
            UrdfError::MissingField {
                element: "mass".into(),
                field: "value".into()
            }
        );
    }

    #[test]
    fn bad_numbers() {
        let text = wrap(r#"<m_link_box name="b" mass="heavy" ixx="1" ixy="0" ixz="0" iyy="1" iyz="0" izz="1" size="1 1 1"/>"#);
        assert!(matches!(parse_urdf(&text), Err(UrdfError::BadNumber { .. })));
        let text = wrap(r#"<m_link_box name="b" mass="1" ixx="1" ixy="0" ixz="0" iyy="1" iyz="0" izz="1" size="1 1"/>"#);
        assert!(matches!(parse_urdf(&text), Err(UrdfError::BadNumber { .. })));
    }

    #[test]
    fn unsupported_joint_types() {
        for kind in ["prismatic", "continuous"] {
            let text = wrap(&format!(
                r#"<joint name="j" type="{kind}"><parent link="a"/><child link="b"/></joint>"#
            ));
            assert!(matches!(
                parse_urdf(&text),
                Err(UrdfError::UnsupportedJoint { .. })
            ));
        }
    }

    #[test]
    fn revolute_needs_limits() {
        let text = wrap(r#"<joint name="j" type="revolute"><parent link="a"/><child link="b"/></joint>"#);
        assert!(matches!(parse_urdf(&text), Err(UrdfError::MissingField { .. })));
    }

    #[test]
    fn unknown_things_become_warnings() {
        let text = wrap(
            r#"<material name="blue"/>
               <link name="a" colour="red"><sensor/></link>
               <gazebo><plugin name="gazebo_ros_control"/></gazebo>"#,
        );
        let parsed = parse_urdf(&text).unwrap();
        assert_eq!(parsed.warnings.len(), 3, "{:?}", parsed.warnings);
    }

    #[test]
    fn transmission_interfaces() {
        let tx = |iface: &str| {
            wrap(&format!(
                r#"<transmission name="t1"><type>transmission_interface/SimpleTransmission</type>
                     <joint name="j"><hardwareInterface>{iface}</hardwareInterface></joint>
                     <actuator name="m"><mechanicalReduction>1</mechanicalReduction></actuator>
                   </transmission>"#
            ))
        };
        let parsed = parse_urdf(&tx("hardware_interface/EffortJointInterface")).unwrap();
        assert_eq!(parsed.model.transmissions[0].joint, "j");
        let parsed = parse_urdf(&tx("EffortJointInterface")).unwrap();
        assert_eq!(parsed.model.transmissions.len(), 1);
        let parsed = parse_urdf(&tx("hardware_interface/VelocityJointInterface")).unwrap();
        assert!(parsed.model.transmissions.is_empty());
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn root_is_the_link_without_parent() {
        let text = wrap(
            r#"<link name="child"/><link name="base"/>
               <joint name="j" type="fixed"><parent link="base"/><child link="child"/></joint>"#,
        );
        assert_eq!(parse_urdf(&text).unwrap().model.root, "base");
    }
}
