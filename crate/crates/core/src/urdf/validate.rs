use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{JointKind, RobotModel};

const AXIS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Name of the offending link, joint or transmission.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: {}: {}", self.subject, self.message)
    }
}

fn error(subject: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        severity: Severity::Error,
        subject: subject.to_string(),
        message: message.into(),
    }
}

/// Checks every structural and physical invariant of the model. One
/// diagnostic per violated invariant; an empty list means the model is valid.
pub fn validate_model(model: &RobotModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for link in &model.links {
        if !seen.insert(link.name.as_str()) {
            out.push(error(&link.name, "duplicate link name"));
        }
    }
    let link_names = seen;
    let mut seen = HashSet::new();
    for joint in &model.joints {
        if !seen.insert(joint.name.as_str()) {
            out.push(error(&joint.name, "duplicate joint name"));
        }
    }

    if !link_names.contains(model.root.as_str()) {
        out.push(error(&model.root, "root link does not exist"));
    }

    let mut parent_count: HashMap<&str, usize> = HashMap::new();
    for joint in &model.joints {
        for (role, link) in [("parent", &joint.parent), ("child", &joint.child)] {
            if !link_names.contains(link.as_str()) {
                out.push(error(&joint.name, format!("{role} link {link:?} does not exist")));
            }
        }
        if joint.parent == joint.child {
            out.push(error(&joint.name, "parent and child are the same link"));
        }
        *parent_count.entry(joint.child.as_str()).or_default() += 1;

        if joint.kind == JointKind::Revolute {
            let norm = joint.axis.norm();
            if (norm - 1.0).abs() > AXIS_TOLERANCE {
                out.push(error(&joint.name, format!("axis not unit (|axis| = {norm})")));
            }
            match joint.limits {
                None => out.push(error(&joint.name, "revolute joint without limits")),
                Some(l) => {
                    if l.lower >= l.upper {
                        out.push(error(
                            &joint.name,
                            format!("inverted limits: lower {} >= upper {}", l.lower, l.upper),
                        ));
                    }
                    if l.effort <= 0.0 {
                        out.push(error(&joint.name, "effort limit must be positive"));
                    }
                    if l.velocity <= 0.0 {
                        out.push(error(&joint.name, "velocity limit must be positive"));
                    }
                }
            }
        }
    }

    if parent_count.contains_key(model.root.as_str()) {
        out.push(error(&model.root, "root link has a parent joint"));
    }
    for (link, count) in &parent_count {
        if *count > 1 {
            out.push(error(link, format!("link has {count} parent joints")));
        }
    }
    for link in &model.links {
        if link.name != model.root && !parent_count.contains_key(link.name.as_str()) {
            out.push(error(&link.name, "link is disconnected (no parent joint)"));
        }
    }
    if let Some(cycle_link) = find_cycle(model) {
        out.push(error(cycle_link, "joint graph contains a cycle"));
    }

    let movable: HashSet<&str> = model
        .joints
        .iter()
        .filter(|j| j.kind == JointKind::Revolute)
        .map(|j| j.child.as_str())
        .collect();
    for link in &model.links {
        if movable.contains(link.name.as_str()) && link.mass <= 0.0 {
            out.push(error(&link.name, "movable link needs positive mass"));
        }
        let i = &link.inertia;
        if link.mass > 0.0 && (i.ixx <= 0.0 || i.iyy <= 0.0 || i.izz <= 0.0) {
            out.push(error(&link.name, "inertia diagonal must be positive"));
        }
    }

    for tx in &model.transmissions {
        match model.joint(&tx.joint) {
            None => out.push(error(
                &tx.name,
                format!("transmission references missing joint {:?}", tx.joint),
            )),
            Some(j) if j.kind != JointKind::Revolute => out.push(error(
                &tx.name,
                format!("transmission references non-revolute joint {:?}", tx.joint),
            )),
            Some(_) => {}
        }
    }

    out
}

/// Follows parent links upward from every link; returns a link on a cycle.
fn find_cycle(model: &RobotModel) -> Option<&str> {
    let parent_of: HashMap<&str, &str> = model
        .joints
        .iter()
        .map(|j| (j.child.as_str(), j.parent.as_str()))
        .collect();
    for start in parent_of.keys() {
        let mut current = *start;
        for _ in 0..=parent_of.len() {
            match parent_of.get(current) {
                Some(p) => current = p,
                None => break,
            }
            if current == *start {
                return Some(start);
            }
        }
    }
    None
}
