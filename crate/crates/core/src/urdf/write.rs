use std::fmt::Write;

use nalgebra::Vector3;

use super::{Geometry, JointKind, Origin, RobotModel};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

// `Display` for f64 is the shortest decimal that parses back to the same value.
fn vec3(v: &Vector3<f64>) -> String {
    format!("{} {} {}", v.x, v.y, v.z)
}

fn origin(o: &Origin) -> String {
    format!("<origin xyz=\"{}\" rpy=\"{}\"/>", vec3(&o.xyz), vec3(&o.rpy))
}

/// Plain-URDF serialization of the model. Macro forms are written out in
/// their expanded shape, so parsing the result yields an equal model.
pub fn write_urdf(model: &RobotModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\"?>");
    let _ = writeln!(s, "<robot name=\"{}\">", escape(&model.name));

    for link in &model.links {
        let _ = writeln!(s, "  <link name=\"{}\">", escape(&link.name));
        if link.mass != 0.0 || link.inertia != Default::default() {
            let i = &link.inertia;
            let _ = writeln!(s, "    <inertial>");
            let _ = writeln!(s, "      {}", origin(&link.inertial_origin));
            let _ = writeln!(s, "      <mass value=\"{}\"/>", link.mass);
            let _ = writeln!(
                s,
                "      <inertia ixx=\"{}\" ixy=\"{}\" ixz=\"{}\" iyy=\"{}\" iyz=\"{}\" izz=\"{}\"/>",
                i.ixx, i.ixy, i.ixz, i.iyy, i.iyz, i.izz
            );
            let _ = writeln!(s, "    </inertial>");
        }
        if let Some(geometry) = &link.geometry {
            let shape = match geometry {
                Geometry::Box { size } => format!("<box size=\"{}\"/>", vec3(size)),
                Geometry::Cylinder { radius, length } => {
                    format!("<cylinder radius=\"{radius}\" length=\"{length}\"/>")
                }
                Geometry::Mesh { path, scale } => format!(
                    "<mesh filename=\"{}\" scale=\"{}\"/>",
                    escape(path),
                    vec3(scale)
                ),
            };
            let _ = writeln!(s, "    <visual>");
            let _ = writeln!(s, "      {}", origin(&link.visual_origin));
            let _ = writeln!(s, "      <geometry>{shape}</geometry>");
            let _ = writeln!(s, "    </visual>");
        }
        let _ = writeln!(s, "  </link>");
    }

    for joint in &model.joints {
        let kind = match joint.kind {
            JointKind::Revolute => "revolute",
            JointKind::Fixed => "fixed",
        };
        let _ = writeln!(
            s,
            "  <joint name=\"{}\" type=\"{kind}\">",
            escape(&joint.name)
        );
        let _ = writeln!(s, "    {}", origin(&joint.origin));
        let _ = writeln!(s, "    <parent link=\"{}\"/>", escape(&joint.parent));
        let _ = writeln!(s, "    <child link=\"{}\"/>", escape(&joint.child));
        let _ = writeln!(s, "    <axis xyz=\"{}\"/>", vec3(&joint.axis));
        if let Some(l) = joint.limits {
            let _ = writeln!(
                s,
                "    <limit lower=\"{}\" upper=\"{}\" effort=\"{}\" velocity=\"{}\"/>",
                l.lower, l.upper, l.effort, l.velocity
            );
        }
        let _ = writeln!(s, "  </joint>");
    }

    for tx in &model.transmissions {
        let _ = writeln!(s, "  <transmission name=\"{}\">", escape(&tx.name));
        let _ = writeln!(s, "    <type>transmission_interface/SimpleTransmission</type>");
        let _ = writeln!(s, "    <joint name=\"{}\">", escape(&tx.joint));
        let _ = writeln!(
            s,
            "      <hardwareInterface>hardware_interface/EffortJointInterface</hardwareInterface>"
        );
        let _ = writeln!(s, "    </joint>");
        let _ = writeln!(s, "  </transmission>");
    }

    let _ = writeln!(s, "</robot>");
    s
}
